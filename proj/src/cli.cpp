#include "graphrec/cli.hpp"

#include <atomic>
#include <charconv>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "graphrec/eval.hpp"
#include "graphrec/graph_export.hpp"
#include "graphrec/graph_store.hpp"
#include "graphrec/rerank.hpp"
#include "graphrec/scoring.hpp"
#include "graphrec/service.hpp"

namespace graphrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Usage-level failure detected after parsing (bad parameter values).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

volatile std::sig_atomic_t g_stop_requested = 0;
extern "C" void on_signal(int) { g_stop_requested = 1; }

std::vector<InteractionEvent> read_events(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read events file " + path.string());
    std::vector<InteractionEvent> events;
    std::string line;
    std::size_t line_no = 0;
    std::size_t rejected = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        try {
            if (j.is_discarded()) throw ValidationError("invalid JSON");
            events.push_back(event_from_json(j));
        } catch (const ValidationError& e) {
            spdlog::warn("{}:{}: skipped: {}", path.string(), line_no, e.what());
            ++rejected;
        }
    }
    if (rejected) spdlog::warn("{}: {} malformed lines skipped", path.string(), rejected);
    return events;
}

GraphData build_graph(const std::vector<InteractionEvent>& events) {
    GraphData g;
    for (const auto& e : events) g.upsert(e);
    return g;
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
    if (!f.flush()) throw std::runtime_error("write failed for " + path);
}

struct ScoringFlags {
    int depth = 3;
    std::string max_usages = "all";
    std::string weighting = "constant";
    std::optional<Timestamp> as_of;
    std::optional<std::size_t> limit;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--depth", depth, "Traversal depth (1-8)");
        cmd->add_option("--max-usages", max_usages, "Per-user window of recent usages, or 'all'");
        cmd->add_option("--weighting", weighting, "constant | log | normalized | log_normalized");
        cmd->add_option("--as-of", as_of, "Only use interactions first seen at or before this time");
        cmd->add_option("--limit", limit, "Maximum number of items returned");
    }

    ScoringParams params() const {
        ScoringParams p;
        p.depth = depth;
        if (max_usages != "all") {
            std::size_t n = 0;
            auto [ptr, ec] = std::from_chars(max_usages.data(), max_usages.data() + max_usages.size(), n);
            if (ec != std::errc() || ptr != max_usages.data() + max_usages.size() || n < 1)
                throw UsageError("--max-usages must be a positive integer or 'all'");
            p.max_usages = n;
        }
        auto w = parse_weighting(weighting);
        if (!w) throw UsageError("unknown weighting '" + weighting + "'");
        p.weighting = *w;
        if (as_of && *as_of < 0) throw UsageError("--as-of must be >= 0");
        p.as_of = as_of;
        p.max_results = limit;
        try {
            p.validate();
        } catch (const ValidationError& e) {
            throw UsageError(e.what());
        }
        return p;
    }
};

template <class T>
std::vector<T> parse_list(const std::vector<std::string>& raw, const char* what) {
    std::vector<T> out;
    for (const auto& s : raw) {
        T v{};
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw UsageError(std::string("bad value '") + s + "' for " + what);
        out.push_back(v);
    }
    return out;
}

std::vector<double> parse_reals(const std::vector<std::string>& raw, const char* what) {
    std::vector<double> out;
    for (const auto& s : raw) {
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) throw UsageError(std::string("bad value '") + s + "' for " + what);
        out.push_back(v);
    }
    return out;
}

int serve(const std::string& config_path, const std::string& listen, const std::string& snapshot,
          const std::string& import_path, std::ostream& out) {
    ServiceConfig cfg = load_config(config_path);
    if (!listen.empty()) parse_listen(listen, cfg);
    if (!snapshot.empty()) cfg.snapshot_path = snapshot;

    Service service(cfg);
    if (!cfg.snapshot_path.empty() && fs::exists(cfg.snapshot_path)) {
        service.store().load_snapshot(cfg.snapshot_path);
        spdlog::info("loaded snapshot {} ({} edges)", cfg.snapshot_path.string(), service.store().edge_count());
    }
    if (!import_path.empty()) {
        ImportResult r = service.store().batch_import_file(import_path);
        spdlog::info("imported {} events ({} rejected) from {}", r.imported, r.rejected, import_path);
    }
    for (const auto& user : service.store().snapshot().users) service.pipeline().request_rebuild(user);
    service.pipeline().start();

    httplib::Server server;
    service.mount(server);
    // Port 0 asks the OS for a free port; the line printed below reports it.
    int port = cfg.port == 0 ? server.bind_to_any_port(cfg.host) : (server.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1);
    if (port <= 0) throw std::runtime_error("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    cfg.port = port;
    g_stop_requested = 0;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::jthread watcher([&server](std::stop_token st) {
        while (!st.stop_requested() && !g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    });
    out << "listening on " << cfg.host << ":" << cfg.port << std::endl;
    spdlog::info("listening on {}:{}", cfg.host, cfg.port);
    server.listen_after_bind();
    watcher.request_stop();

    service.pipeline().stop();
    if (!cfg.snapshot_path.empty()) {
        service.store().save_snapshot(cfg.snapshot_path);
        spdlog::info("saved snapshot {}", cfg.snapshot_path.string());
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Graph-based personalization: recommendations and search re-ranking", "graphrec"};
    app.require_subcommand(1);

    // serve
    std::string config_path, listen, snapshot, import_path;
    auto* serve_cmd = app.add_subcommand("serve", "Run the REST service");
    serve_cmd->add_option("--config", config_path, "Config file (key = value lines)")->required();
    serve_cmd->add_option("--listen", listen, "host:port, overrides the config");
    serve_cmd->add_option("--snapshot", snapshot, "Snapshot to load at start and save on shutdown");
    serve_cmd->add_option("--import", import_path, "NDJSON events to import before serving");

    // import
    std::string events_path, out_path;
    auto* import_cmd = app.add_subcommand("import", "Import NDJSON events and write a snapshot");
    import_cmd->add_option("--events", events_path, "NDJSON event file")->required();
    import_cmd->add_option("--snapshot", snapshot, "Snapshot output path");

    // recommend
    std::string user;
    ScoringFlags rec_flags;
    auto* rec_cmd = app.add_subcommand("recommend", "Print recommendations for one user as JSON");
    rec_cmd->add_option("--user", user, "User id")->required();
    rec_cmd->add_option("--events", events_path, "NDJSON event file")->required();
    rec_flags.add_to(rec_cmd);

    // rerank
    double alpha = 0.0;
    ScoringFlags rr_flags;
    auto* rr_cmd = app.add_subcommand("rerank", "Re-rank item ids read from stdin, one per line");
    rr_cmd->add_option("--user", user, "User id")->required();
    rr_cmd->add_option("--alpha", alpha, "Importance factor in [0, 1]")->required();
    rr_cmd->add_option("--events", events_path, "NDJSON event file")->required();
    rr_flags.add_to(rr_cmd);

    // eval-sweep
    std::optional<Timestamp> cut;
    double train_fraction = 0.8;
    std::size_t sample_size = 100;
    std::uint64_t seed = 1;
    std::size_t repetitions = 3;
    std::string mode = "single_cut";
    std::vector<std::string> time_frames{"0"}, usage_windows{"25", "50", "75", "100", "125", "150", "175", "200"},
        depths{"1", "2", "3", "4", "5", "6", "7", "8"},
        weightings{"constant", "log", "normalized", "log_normalized"};
    bool serial = false;
    auto* sweep_cmd = app.add_subcommand("eval-sweep", "Hit-rate sweep over (t, n, d, w); writes CSV");
    sweep_cmd->add_option("--events", events_path, "NDJSON event file")->required();
    sweep_cmd->add_option("--out", out_path, "CSV output file or directory (stdout if omitted)");
    sweep_cmd->add_option("--cut", cut, "Cut timestamp; defaults to the --train-fraction quantile");
    sweep_cmd->add_option("--train-fraction", train_fraction, "Share of events before the cut");
    sweep_cmd->add_option("--sample-size", sample_size, "Users sampled per repetition");
    sweep_cmd->add_option("--seed", seed, "Sampling seed");
    sweep_cmd->add_option("--repetitions", repetitions, "Independent user samples");
    sweep_cmd->add_option("--mode", mode, "single_cut | random_time");
    sweep_cmd->add_option("--time-frames", time_frames, "Training windows in seconds (0 = all)")->delimiter(',');
    sweep_cmd->add_option("--usage-windows", usage_windows, "Per-user usage windows ('all' allowed)")->delimiter(',');
    sweep_cmd->add_option("--depths", depths, "Traversal depths")->delimiter(',');
    sweep_cmd->add_option("--weightings", weightings, "Weighting variants")->delimiter(',');
    sweep_cmd->add_flag("--serial", serial, "Use the single-threaded reference implementation");

    // eval-clicks
    std::string logs_path, group_by = "method";
    std::vector<std::string> factors{"0", "0.3", "0.5", "0.6", "0.9", "1"};
    Timestamp bucket_seconds = 600;
    auto* clicks_cmd = app.add_subcommand("eval-clicks", "Mean click position per method or importance factor");
    clicks_cmd->add_option("--logs", logs_path, "NDJSON search-log file")->required();
    clicks_cmd->add_option("--group-by", group_by, "method | alpha");
    clicks_cmd->add_option("--seed", seed, "Schedule seed (alpha grouping)");
    clicks_cmd->add_option("--bucket-seconds", bucket_seconds, "Schedule bucket length");
    clicks_cmd->add_option("--factors", factors, "Schedule factors")->delimiter(',');
    clicks_cmd->add_option("--out", out_path, "CSV output file (stdout if omitted)");

    // gen-synthetic
    eval::SyntheticSpec synth;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "Generate a synthetic community interaction log");
    gen_cmd->add_option("--communities", synth.communities);
    gen_cmd->add_option("--users-per", synth.users_per);
    gen_cmd->add_option("--items-per", synth.items_per);
    gen_cmd->add_option("--interactions", synth.interactions_per_user, "Interactions per user");
    gen_cmd->add_option("--crossover", synth.crossover, "Probability of a foreign-community pick");
    gen_cmd->add_option("--seed", synth.seed);
    gen_cmd->add_option("--start-ts", synth.start_ts);
    gen_cmd->add_option("--out", out_path, "NDJSON output file (stdout if omitted)");

    // export-graph
    std::optional<std::size_t> limit_nodes;
    auto* export_cmd = app.add_subcommand("export-graph", "Write the interaction graph as node-link JSON");
    export_cmd->add_option("--events", events_path, "NDJSON event file")->required();
    export_cmd->add_option("--limit-nodes", limit_nodes, "Keep at most this many nodes");
    export_cmd->add_option("--out", out_path, "Output file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*serve_cmd) return serve(config_path, listen, snapshot, import_path, out);

        if (*import_cmd) {
            GraphStore store;
            ImportResult r = store.batch_import_file(events_path);
            if (!snapshot.empty()) store.save_snapshot(snapshot);
            out << json{{"imported", r.imported},
                        {"rejected", r.rejected},
                        {"users", store.user_count()},
                        {"items", store.item_count()},
                        {"edges", store.edge_count()}}
                       .dump()
                << '\n';
            return kExitOk;
        }

        if (*rec_cmd) {
            ScoringParams params = rec_flags.params();
            GraphData graph = build_graph(read_events(events_path));
            out << to_json(recommend(graph, user, params)).dump() << '\n';
            return kExitOk;
        }

        if (*rr_cmd) {
            if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("--alpha must be in [0, 1]");
            ScoringParams params = rr_flags.params();
            RerankRequest req;
            req.user = user;
            req.alpha = alpha;
            std::string line;
            while (std::getline(in, line)) {
                auto b = line.find_first_not_of(" \t\r");
                if (b == std::string::npos) continue;
                auto e = line.find_last_not_of(" \t\r");
                req.original.items.push_back(line.substr(b, e - b + 1));
            }
            GraphData graph = build_graph(read_events(events_path));
            req.recommendations = recommend(graph, user, params).items;
            RerankResult result = rerank(req);
            for (const auto& item : result.items) out << item << '\n';
            return kExitOk;
        }

        if (*sweep_cmd) {
            auto events = read_events(events_path);
            eval::SplitSpec spec;
            spec.sample_size = sample_size;
            spec.seed = seed;
            spec.repetitions = repetitions;
            if (mode == "single_cut") spec.mode = eval::SplitMode::single_cut;
            else if (mode == "random_time") spec.mode = eval::SplitMode::random_time;
            else throw UsageError("--mode must be single_cut or random_time");
            if (events.empty()) throw std::runtime_error("no events in " + events_path);
            spec.cut_ts = cut ? *cut : eval::quantile_cut(events, train_fraction);

            eval::SweepGrid grid;
            grid.time_frames = parse_list<Timestamp>(time_frames, "--time-frames");
            grid.usage_windows.clear();
            for (const auto& s : usage_windows) {
                if (s == "all") grid.usage_windows.emplace_back(std::nullopt);
                else grid.usage_windows.emplace_back(parse_list<std::size_t>({s}, "--usage-windows").front());
            }
            grid.depths = parse_list<int>(depths, "--depths");
            grid.weightings.clear();
            for (const auto& s : weightings) {
                auto w = parse_weighting(s);
                if (!w) throw UsageError("unknown weighting '" + s + "'");
                grid.weightings.push_back(*w);
            }
            try {
                grid.validate();
            } catch (const ValidationError& e) {
                throw UsageError(e.what());
            }
            auto rows = serial ? eval::sweep_serial(events, spec, grid) : eval::sweep(events, spec, grid);
            std::string target = out_path;
            if (!target.empty() && fs::is_directory(target)) target = (fs::path(target) / "sweep.csv").string();
            write_output(target, eval::sweep_csv(rows), out);
            return kExitOk;
        }

        if (*clicks_cmd) {
            eval::ClickGrouping grouping;
            if (group_by == "method") grouping = eval::ClickGrouping::method;
            else if (group_by == "alpha") grouping = eval::ClickGrouping::alpha;
            else throw UsageError("--group-by must be method or alpha");
            eval::ScheduleSpec schedule;
            schedule.factors = parse_reals(factors, "--factors");
            schedule.bucket_seconds = bucket_seconds;
            schedule.seed = seed;
            try {
                schedule.validate();
            } catch (const ValidationError& e) {
                throw UsageError(e.what());
            }

            std::ifstream logs(logs_path);
            if (!logs) throw std::runtime_error("cannot read " + logs_path);
            std::vector<eval::SearchLogEntry> entries;
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(logs, line)) {
                ++line_no;
                if (line.empty() || line[0] == '#') continue;
                json j = json::parse(line, nullptr, false);
                try {
                    if (j.is_discarded()) throw ValidationError("invalid JSON");
                    entries.push_back(eval::search_log_from_json(j));
                } catch (const ValidationError& e) {
                    spdlog::warn("{}:{}: skipped: {}", logs_path, line_no, e.what());
                }
            }
            auto rows = eval::click_position_report(entries, grouping, schedule);
            write_output(out_path, eval::click_report_csv(rows), out);
            return kExitOk;
        }

        if (*gen_cmd) {
            try {
                synth.validate();
            } catch (const ValidationError& e) {
                throw UsageError(e.what());
            }
            std::string buf;
            for (const auto& e : eval::generate_synthetic(synth)) {
                buf += event_to_line(e);
                buf += '\n';
            }
            write_output(out_path, buf, out);
            return kExitOk;
        }

        if (*export_cmd) {
            GraphData graph = build_graph(read_events(events_path));
            write_output(out_path, export_node_link(graph, limit_nodes).dump() + "\n", out);
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace graphrec
