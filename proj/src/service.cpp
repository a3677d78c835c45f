#include "graphrec/service.hpp"

#include <charconv>
#include <chrono>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "graphrec/graph_export.hpp"
#include "graphrec/rerank.hpp"

namespace graphrec {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::optional<double> parse_real(std::string_view s) {
    // from_chars for double is available, but strtod also accepts the forms people type into config files.
    std::string tmp(s);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) return std::nullopt;
    return v;
}

std::optional<std::size_t> parse_count_or_all(std::string_view s, const char* what) {
    if (s == "all" || s == "unlimited") return std::nullopt;
    auto v = parse_number<std::size_t>(s);
    if (!v || *v < 1) throw ValidationError(std::string(what) + " must be a positive integer or 'all'");
    return v;
}

BackendKind parse_backend(std::string_view s) {
    if (s == "memory") return BackendKind::memory;
    if (s == "file") return BackendKind::file;
    throw ConfigError("backend must be 'memory' or 'file', got '" + std::string(s) + "'");
}

}  // namespace

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw ConfigError("port out of range");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
    try {
        scoring.validate();
        pipeline.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

void parse_listen(std::string_view spec, ServiceConfig& cfg) {
    auto colon = spec.rfind(':');
    if (colon == std::string_view::npos) throw ConfigError("listen address must be host:port");
    auto port = parse_number<int>(spec.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535) throw ConfigError("bad listen port");
    std::string host(spec.substr(0, colon));
    cfg.host = host.empty() ? "0.0.0.0" : host;
    cfg.port = *port;
}

ServiceConfig parse_config(std::istream& in) {
    ServiceConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        auto bad = [&](const std::string& why) {
            return ConfigError("line " + std::to_string(line_no) + " (" + key + "): " + why);
        };
        try {
            if (key == "listen") {
                parse_listen(value, cfg);
            } else if (key == "depth") {
                auto d = parse_number<int>(value);
                if (!d) throw bad("not an integer");
                cfg.scoring.depth = *d;
            } else if (key == "max_usages") {
                cfg.scoring.max_usages = parse_count_or_all(value, "max_usages");
            } else if (key == "max_results") {
                cfg.scoring.max_results = parse_count_or_all(value, "max_results");
            } else if (key == "weighting") {
                auto w = parse_weighting(value);
                if (!w) throw bad("unknown weighting");
                cfg.scoring.weighting = *w;
            } else if (key == "alpha") {
                auto a = parse_real(value);
                if (!a) throw bad("not a number");
                cfg.alpha = *a;
            } else if (key == "event_workers" || key == "recbuild_workers") {
                auto n = parse_number<std::size_t>(value);
                if (!n) throw bad("not a count");
                (key == "event_workers" ? cfg.pipeline.event_workers : cfg.pipeline.recbuild_workers) = *n;
            } else if (key == "queue_backend") {
                cfg.queue_backend = parse_backend(value);
            } else if (key == "cache_backend") {
                cfg.cache_backend = parse_backend(value);
            } else if (key == "state_dir") {
                cfg.state_dir = value;
            } else if (key == "snapshot") {
                cfg.snapshot_path = value;
            } else if (key == "stats_log") {
                cfg.stats_log_path = value;
            } else if (key == "personalization") {
                if (value == "on" || value == "true") cfg.personalization = true;
                else if (value == "off" || value == "false") cfg.personalization = false;
                else throw bad("expected on or off");
            } else {
                throw bad("unknown key");
            }
        } catch (const ValidationError& e) {
            throw bad(e.what());
        }
    }
    cfg.pipeline.scoring = cfg.scoring;
    cfg.validate();
    return cfg;
}

ServiceConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Service

namespace {

HttpReply error_reply(int status, std::string_view message) {
    return HttpReply{status, json{{"error", message}}};
}

// Scoring overrides accepted on query strings and in /rerank bodies.
constexpr std::string_view kOverrideKeys[] = {"as_of", "depth", "max_usages", "weighting"};

bool apply_override(ScoringParams& p, std::string_view key, std::string_view value) {
    if (key == "depth") {
        auto d = parse_number<int>(value);
        if (!d) throw ValidationError("depth must be an integer");
        p.depth = *d;
    } else if (key == "max_usages") {
        p.max_usages = parse_count_or_all(value, "max_usages");
    } else if (key == "weighting") {
        auto w = parse_weighting(value);
        if (!w) throw ValidationError("unknown weighting '" + std::string(value) + "'");
        p.weighting = *w;
    } else if (key == "as_of") {
        auto t = parse_number<Timestamp>(value);
        if (!t || *t < 0) throw ValidationError("as_of must be a non-negative integer");
        p.as_of = *t;
    } else {
        return false;
    }
    return true;
}

std::string json_scalar_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {
    config_.pipeline.scoring = config_.scoring;
    config_.validate();
    std::shared_ptr<QueueBackend> queue;
    std::shared_ptr<CacheBackend> cache;
    if (config_.queue_backend == BackendKind::file) queue = std::make_shared<FileQueue>(config_.state_dir / "queue");
    else queue = std::make_shared<InMemoryQueue>();
    if (config_.cache_backend == BackendKind::file) cache = std::make_shared<FileCache>(config_.state_dir / "cache");
    else cache = std::make_shared<InMemoryCache>();
    pipeline_ = std::make_unique<Pipeline>(store_, std::move(queue), std::move(cache), config_.pipeline);
    personalization_ = config_.personalization;
    if (!config_.stats_log_path.empty()) {
        stats_log_.open(config_.stats_log_path, std::ios::app);
        if (!stats_log_) throw ConfigError("cannot open stats log " + config_.stats_log_path.string());
    }
}

Service::~Service() { pipeline_->stop(); }

RecommendationList Service::live_recommend(std::string_view user, const ScoringParams& params) {
    auto t0 = std::chrono::steady_clock::now();
    RecommendationList list = recommend(store_, user, params);
    auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
    ++live_traversals_;
    live_traversal_nanos_ += static_cast<std::uint64_t>(ns);
    return list;
}

HttpReply Service::post_events(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) return error_reply(400, "body is not valid JSON");
    if (!j.is_object() && !j.is_array()) return error_reply(400, "expected an event object or an array of events");
    json batch = j.is_array() ? std::move(j) : json::array({std::move(j)});

    std::size_t accepted = 0;
    std::size_t rejected = 0;
    try {
        for (const auto& row : batch) {
            InteractionEvent event;
            try {
                event = event_from_json(row);
            } catch (const ValidationError& e) {
                spdlog::debug("POST /events: rejected event: {}", e.what());
                ++rejected;
                continue;
            }
            pipeline_->enqueue_event(event);
            ++accepted;
        }
    } catch (const BackendUnavailable& e) {
        return HttpReply{503, json{{"error", e.what()}, {"accepted", accepted}, {"rejected", rejected}}};
    }
    return HttpReply{202, json{{"accepted", accepted}, {"rejected", rejected}}};
}

HttpReply Service::get_recommendations(std::string_view user, const QueryParams& query) {
    ScoringParams params = config_.scoring;
    bool live = false;
    std::optional<std::size_t> limit;
    try {
        if (auto it = query.find("mode"); it != query.end()) {
            if (it->second == "live") live = true;
            else if (it->second != "cache") throw ValidationError("mode must be cache or live");
        }
        for (std::string_view key : kOverrideKeys)
            if (auto it = query.find(key); it != query.end()) live |= apply_override(params, key, it->second);
        if (auto it = query.find("limit"); it != query.end()) {
            auto n = parse_number<std::size_t>(it->second);
            if (!n || *n < 1) throw ValidationError("limit must be a positive integer");
            limit = n;
            params.max_results = n;
        }
        params.validate();
    } catch (const ValidationError& e) {
        return error_reply(400, e.what());
    }

    RecommendationList list;
    try {
        if (live) {
            list = live_recommend(user, params);
        } else {
            auto cached = pipeline_->get_cached_recommendations(user);
            if (!cached) {
                ++cache_misses_;
                return HttpReply{404, json{{"error", "miss"}, {"user", user}}};
            }
            ++cache_hits_;
            list = *cached;
            if (limit && list.items.size() > *limit) list.items.resize(*limit);
        }
    } catch (const BackendUnavailable& e) {
        return error_reply(503, e.what());
    }
    return HttpReply{200, to_json(list)};
}

HttpReply Service::post_rerank(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return error_reply(400, "body must be a JSON object");

    RerankRequest req;
    ScoringParams params = config_.scoring;
    bool overridden = false;
    try {
        auto user = j.find("user");
        if (user == j.end() || !user->is_string() || user->get<std::string>().empty())
            throw ValidationError("'user' must be a non-empty string");
        req.user = user->get<std::string>();

        auto items = j.find("items");
        if (items == j.end() || !items->is_array()) throw ValidationError("'items' must be an array");
        for (const auto& it : *items) {
            if (!it.is_string()) throw ValidationError("'items' must contain strings");
            req.original.items.push_back(it.get<std::string>());
        }

        req.alpha = config_.alpha;
        if (auto a = j.find("alpha"); a != j.end()) {
            if (!a->is_number()) throw ValidationError("'alpha' must be a number");
            req.alpha = a->get<double>();
        }
        if (!(req.alpha >= 0.0 && req.alpha <= 1.0)) throw ValidationError("alpha must be in [0, 1]");

        if (auto s = j.find("engine_scores"); s != j.end() && !s->is_null()) {
            if (!s->is_array()) throw ValidationError("'engine_scores' must be an array");
            std::vector<double> scores;
            for (const auto& v : *s) {
                if (!v.is_number()) throw ValidationError("'engine_scores' must contain numbers");
                scores.push_back(v.get<double>());
            }
            req.original.engine_scores = std::move(scores);
        }
        for (std::string_view key : kOverrideKeys)
            if (auto it = j.find(key); it != j.end() && !it->is_null())
                overridden |= apply_override(params, key, json_scalar_text(*it));
        params.validate();
        // Validates emptiness, duplicates and engine score length.
        passthrough(req.original);
    } catch (const ValidationError& e) {
        return error_reply(400, e.what());
    }

    ++rerank_calls_;
    if (!personalization_) {
        RerankResult plain = passthrough(req.original);
        return HttpReply{200, json{{"items", plain.items},
                                   {"final_scores", plain.final_scores},
                                   {"degraded", false},
                                   {"disabled", true}}};
    }

    try {
        if (scoring_fault_) throw std::runtime_error("scoring disabled by fault injection");
        CacheBackend::Value cached;
        if (!overridden) {
            cached = pipeline_->get_cached_recommendations(req.user);
            if (cached) ++cache_hits_;
            else ++cache_misses_;
        }
        if (cached) {
            req.recommendations = cached->items;
        } else {
            req.recommendations = live_recommend(req.user, params).items;
        }
        RerankResult result = rerank(req);
        return HttpReply{200, json{{"items", result.items}, {"final_scores", result.final_scores}}};
    } catch (const std::exception& e) {
        spdlog::warn("POST /rerank: scoring failed for user '{}', returning original order: {}", req.user, e.what());
        ++degraded_reranks_;
        RerankResult plain = passthrough(req.original);
        return HttpReply{200, json{{"items", plain.items}, {"final_scores", plain.final_scores}, {"degraded", true}}};
    }
}

HttpReply Service::post_search_log(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) return error_reply(400, "body is not valid JSON");
    eval::SearchLogEntry entry;
    try {
        entry = eval::search_log_from_json(j);
    } catch (const ValidationError& e) {
        return error_reply(400, e.what());
    }
    {
        std::lock_guard lock(clicks_mutex_);
        auto& [sum, count] = clicks_by_method_[entry.method];
        sum += static_cast<double>(entry.click_position);
        ++count;
        if (stats_log_.is_open()) {
            stats_log_ << eval::to_json(entry).dump() << '\n';
            stats_log_.flush();
        }
    }
    return HttpReply{202, json{{"click_position", entry.click_position}}};
}

HttpReply Service::get_stats() const {
    PipelineCounters pc = pipeline_->counters();
    std::uint64_t traversals = pc.traversals + live_traversals_.load();
    std::uint64_t nanos = pc.traversal_nanos + live_traversal_nanos_.load();
    json clicks = json::object();
    {
        std::lock_guard lock(clicks_mutex_);
        for (const auto& [method, agg] : clicks_by_method_)
            clicks[method] = {{"mean", agg.first / static_cast<double>(agg.second)}, {"count", agg.second}};
    }
    json body{{"events_ingested", store_.event_count()},
              {"event_queue_depth", pipeline_->event_queue_depth()},
              {"recbuild_queue_depth", pipeline_->recbuild_queue_depth()},
              {"traversals", traversals},
              {"mean_traversal_ms", traversals ? static_cast<double>(nanos) / 1e6 / static_cast<double>(traversals) : 0.0},
              {"cache_hits", cache_hits_.load()},
              {"cache_misses", cache_misses_.load()},
              {"rerank_calls", rerank_calls_.load()},
              {"degraded_reranks", degraded_reranks_.load()},
              {"event_failures", pc.event_failures},
              {"traversal_failures", pc.traversal_failures},
              {"users", store_.user_count()},
              {"items", store_.item_count()},
              {"edges", store_.edge_count()},
              {"personalization", personalization_.load()},
              {"click_positions", std::move(clicks)}};
    return HttpReply{200, std::move(body)};
}

HttpReply Service::get_graph_export(const QueryParams& query) const {
    std::optional<std::size_t> limit;
    if (auto it = query.find("limit_nodes"); it != query.end()) {
        auto n = parse_number<std::size_t>(it->second);
        if (!n) return error_reply(400, "limit_nodes must be a non-negative integer");
        limit = n;
    }
    return HttpReply{200, store_.read([&](const GraphData& g) { return export_node_link(g, limit); })};
}

HttpReply Service::post_admin_personalization(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("enabled") || !j["enabled"].is_boolean())
        return error_reply(400, "expected {\"enabled\": true|false}");
    personalization_ = j["enabled"].get<bool>();
    spdlog::info("personalization {}", personalization_ ? "enabled" : "disabled");
    return HttpReply{200, json{{"enabled", personalization_.load()}}};
}

void Service::mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    };
    auto guarded = [send](auto handler) {
        return [send, handler](const httplib::Request& req, httplib::Response& res) {
            try {
                send(res, handler(req));
            } catch (const std::exception& e) {
                spdlog::error("{} {}: {}", req.method, req.path, e.what());
                send(res, error_reply(500, e.what()));
            }
        };
    };
    auto query_of = [](const httplib::Request& req) {
        QueryParams q;
        for (const auto& [k, v] : req.params) q.emplace(k, v);
        return q;
    };

    // Small JSON replies otherwise sit behind Nagle and delayed ACKs for ~40 ms.
    server.set_tcp_nodelay(true);

    server.Post("/events", guarded([this](const httplib::Request& req) { return post_events(req.body); }));
    server.Get(R"(/users/([^/]+)/recommendations)", guarded([this, query_of](const httplib::Request& req) {
                   return get_recommendations(req.matches[1].str(), query_of(req));
               }));
    server.Post("/rerank", guarded([this](const httplib::Request& req) { return post_rerank(req.body); }));
    server.Post("/search-log", guarded([this](const httplib::Request& req) { return post_search_log(req.body); }));
    server.Get("/stats", guarded([this](const httplib::Request&) { return get_stats(); }));
    server.Get("/graph/export", guarded([this, query_of](const httplib::Request& req) {
                   return get_graph_export(query_of(req));
               }));
    server.Post("/admin/personalization",
                guarded([this](const httplib::Request& req) { return post_admin_personalization(req.body); }));
}

}  // namespace graphrec
