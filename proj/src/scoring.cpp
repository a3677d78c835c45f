#include "graphrec/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace graphrec {

using nlohmann::json;

std::string_view to_string(Weighting w) {
    switch (w) {
        case Weighting::constant: return "constant";
        case Weighting::log: return "log";
        case Weighting::normalized: return "normalized";
        case Weighting::log_normalized: return "log_normalized";
    }
    return "constant";
}

std::optional<Weighting> parse_weighting(std::string_view name) {
    for (Weighting w : kAllWeightings)
        if (to_string(w) == name) return w;
    if (name == "log-normalized") return Weighting::log_normalized;
    return std::nullopt;
}

void ScoringParams::validate() const {
    if (depth < kMinDepth || depth > kMaxDepth)
        throw ValidationError("depth must be in [1, 8], got " + std::to_string(depth));
    if (max_usages && *max_usages < 1) throw ValidationError("max_usages must be >= 1");
    if (max_results && *max_results < 1) throw ValidationError("max_results must be >= 1");
}

namespace {

constexpr int kUnseen = -1;

// Per-traversal view of the edge filter. An edge survives when its first
// interaction is within as_of and it is among its user's max_usages most
// recent as_of-surviving edges.
class EdgeFilter {
public:
    EdgeFilter(const GraphData& g, const ScoringParams& p) : graph_(g), params_(p) {}

    bool allowed(EdgeIndex e) {
        const EdgeRecord& rec = graph_.edge(e);
        if (params_.as_of && rec.first_ts > *params_.as_of) return false;
        if (!params_.max_usages) return true;
        const auto& window = user_window(rec.user);
        return std::binary_search(window.begin(), window.end(), e);
    }

    // Allowed edges of a user, any order.
    std::vector<EdgeIndex> user_edges(NodeIndex u) {
        if (params_.max_usages) return user_window(u);
        std::vector<EdgeIndex> out;
        for (EdgeIndex e : graph_.user_edges(u))
            if (!params_.as_of || graph_.edge(e).first_ts <= *params_.as_of) out.push_back(e);
        return out;
    }

private:
    // Sorted by edge index for binary search.
    const std::vector<EdgeIndex>& user_window(NodeIndex u) {
        auto it = windows_.find(u);
        if (it != windows_.end()) return it->second;
        auto edges = graph_.filtered_user_edges(u, params_.as_of, params_.max_usages);
        std::sort(edges.begin(), edges.end());
        return windows_.emplace(u, std::move(edges)).first->second;
    }

    const GraphData& graph_;
    const ScoringParams& params_;
    std::unordered_map<NodeIndex, std::vector<EdgeIndex>> windows_;
};

struct IndexedInputs {
    NodeIndex item;
    std::uint32_t user_count;
    std::uint64_t distance_sum;
    std::vector<int> distances;
};

std::vector<IndexedInputs> traverse_indexed(const GraphData& graph, std::string_view user,
                                            const ScoringParams& params) {
    auto root = graph.find_user(user);
    if (!root) return {};

    EdgeFilter filter(graph, params);
    std::vector<int> user_dist(graph.user_count(), kUnseen);
    std::vector<int> item_dist(graph.item_count(), kUnseen);
    std::vector<NodeIndex> discovered_items;

    struct Visit {
        NodeKind kind;
        NodeIndex node;
    };
    std::deque<Visit> queue;
    user_dist[*root] = 0;
    queue.push_back({NodeKind::user, *root});

    while (!queue.empty()) {
        Visit v = queue.front();
        queue.pop_front();
        if (v.kind == NodeKind::user) {
            int d = user_dist[v.node];
            if (d >= params.depth) continue;
            for (EdgeIndex e : filter.user_edges(v.node)) {
                NodeIndex item = graph.edge(e).item;
                if (item_dist[item] != kUnseen) continue;
                item_dist[item] = d + 1;
                discovered_items.push_back(item);
                queue.push_back({NodeKind::item, item});
            }
        } else {
            int d = item_dist[v.node];
            if (d >= params.depth) continue;
            for (EdgeIndex e : graph.item_edges(v.node)) {
                NodeIndex u = graph.edge(e).user;
                if (user_dist[u] != kUnseen || !filter.allowed(e)) continue;
                user_dist[u] = d + 1;
                queue.push_back({NodeKind::user, u});
            }
        }
    }

    std::vector<IndexedInputs> out;
    out.reserve(discovered_items.size());
    for (NodeIndex item : discovered_items) {
        IndexedInputs in{item, 0, 0, {}};
        for (EdgeIndex e : graph.item_edges(item)) {
            NodeIndex u = graph.edge(e).user;
            if (user_dist[u] == kUnseen || !filter.allowed(e)) continue;
            in.distances.push_back(user_dist[u]);
            in.distance_sum += static_cast<std::uint64_t>(user_dist[u]);
            ++in.user_count;
        }
        std::sort(in.distances.begin(), in.distances.end());
        out.push_back(std::move(in));
    }
    return out;
}

}  // namespace

std::map<std::string, ScoreInputs> traverse(const GraphData& graph, std::string_view user,
                                            const ScoringParams& params) {
    std::map<std::string, ScoreInputs> out;
    for (auto& in : traverse_indexed(graph, user, params)) {
        const std::string& id = graph.item_id(in.item);
        out.emplace(id, ScoreInputs{id, in.user_count, in.distance_sum, std::move(in.distances)});
    }
    return out;
}

double effective_count(std::uint32_t n, Weighting w, std::uint32_t max_user_count) {
    const double nd = n;
    const double nmax = std::max<std::uint32_t>(max_user_count, 1);
    switch (w) {
        case Weighting::constant: return nd;
        case Weighting::log: return std::log1p(nd);
        case Weighting::normalized: return nd / nmax;
        case Weighting::log_normalized: return std::log1p(nd) / std::log1p(nmax);
    }
    return nd;
}

ScoredItem item_score(const ScoreInputs& inputs, Weighting w, std::uint32_t max_user_count) {
    ScoredItem s;
    s.item = inputs.item;
    s.log_score =
        effective_count(inputs.user_count, w, max_user_count) - std::log1p(static_cast<double>(inputs.distance_sum));
    double raw = std::exp(s.log_score);
    if (std::isfinite(raw)) s.raw_score = raw;
    return s;
}

bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
    if (a.log_score != b.log_score) return a.log_score > b.log_score;
    return a.item < b.item;
}

RecommendationList recommend(const GraphData& graph, std::string_view user, const ScoringParams& params) {
    params.validate();
    RecommendationList list;
    list.user = std::string(user);
    list.params = params;
    list.generated_at = params.as_of.value_or(graph.latest_ts());

    auto inputs = traverse_indexed(graph, user, params);
    std::uint32_t max_count = 0;
    for (const auto& in : inputs) max_count = std::max(max_count, in.user_count);

    list.items.reserve(inputs.size());
    for (auto& in : inputs) {
        ScoreInputs si{graph.item_id(in.item), in.user_count, in.distance_sum, {}};
        list.items.push_back(item_score(si, params.weighting, max_count));
    }
    std::sort(list.items.begin(), list.items.end(), ranks_before);
    if (params.max_results && list.items.size() > *params.max_results) list.items.resize(*params.max_results);
    return list;
}

RecommendationList recommend(const GraphStore& store, std::string_view user, const ScoringParams& params) {
    return store.read([&](const GraphData& g) { return recommend(g, user, params); });
}

std::vector<RecommendationList> recommend_many(const GraphData& graph, std::span<const std::string> users,
                                               const ScoringParams& params) {
    params.validate();
    std::vector<RecommendationList> out(users.size());
    const auto n = static_cast<std::ptrdiff_t>(users.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[k] = recommend(graph, users[k], params);
    return out;
}

std::vector<RecommendationList> recommend_many_serial(const GraphData& graph,
                                                      std::span<const std::string> users,
                                                      const ScoringParams& params) {
    std::vector<RecommendationList> out;
    out.reserve(users.size());
    for (const auto& u : users) out.push_back(recommend(graph, u, params));
    return out;
}

// ---------------------------------------------------------------------------
// JSON

json params_to_json(const ScoringParams& p) {
    json j{{"depth", p.depth}, {"weighting", to_string(p.weighting)}};
    j["max_usages"] = p.max_usages ? json(*p.max_usages) : json(nullptr);
    j["as_of"] = p.as_of ? json(*p.as_of) : json(nullptr);
    j["max_results"] = p.max_results ? json(*p.max_results) : json(nullptr);
    return j;
}

ScoringParams params_from_json(const json& j) {
    ScoringParams p;
    p.depth = j.at("depth").get<int>();
    auto w = parse_weighting(j.at("weighting").get<std::string>());
    if (!w) throw ValidationError("unknown weighting");
    p.weighting = *w;
    if (j.contains("max_usages") && !j["max_usages"].is_null()) p.max_usages = j["max_usages"].get<std::size_t>();
    if (j.contains("as_of") && !j["as_of"].is_null()) p.as_of = j["as_of"].get<Timestamp>();
    if (j.contains("max_results") && !j["max_results"].is_null())
        p.max_results = j["max_results"].get<std::size_t>();
    return p;
}

json to_json(const RecommendationList& list) {
    json items = json::array();
    for (const auto& s : list.items) {
        items.push_back({{"item", s.item},
                         {"log_score", s.log_score},
                         {"raw_score", s.raw_score ? json(*s.raw_score) : json(nullptr)}});
    }
    return json{{"user", list.user},
                {"generated_at", list.generated_at},
                {"params", params_to_json(list.params)},
                {"items", std::move(items)}};
}

RecommendationList recommendation_list_from_json(const json& j) {
    RecommendationList list;
    list.user = j.at("user").get<std::string>();
    list.generated_at = j.at("generated_at").get<Timestamp>();
    list.params = params_from_json(j.at("params"));
    for (const auto& row : j.at("items")) {
        ScoredItem s;
        s.item = row.at("item").get<std::string>();
        s.log_score = row.at("log_score").get<double>();
        if (!row.at("raw_score").is_null()) s.raw_score = row["raw_score"].get<double>();
        list.items.push_back(std::move(s));
    }
    return list;
}

}  // namespace graphrec
