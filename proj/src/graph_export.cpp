#include "graphrec/graph_export.hpp"

#include <algorithm>
#include <deque>
#include <tuple>

namespace graphrec {

using nlohmann::json;

namespace {

struct NodeRef {
    NodeKind kind;
    NodeIndex index;
};

}  // namespace

json export_node_link(const GraphData& graph, std::optional<std::size_t> limit_nodes) {
    const std::size_t users = graph.user_count();
    const std::size_t total = users + graph.item_count();
    auto ref = [&](std::size_t flat) {
        return flat < users ? NodeRef{NodeKind::user, static_cast<NodeIndex>(flat)}
                            : NodeRef{NodeKind::item, static_cast<NodeIndex>(flat - users)};
    };
    auto flat_of = [&](NodeRef r) { return r.kind == NodeKind::user ? r.index : users + r.index; };
    auto degree = [&](NodeRef r) {
        return r.kind == NodeKind::user ? graph.user_edges(r.index).size() : graph.item_edges(r.index).size();
    };
    auto name = [&](NodeRef r) -> const std::string& {
        return r.kind == NodeKind::user ? graph.user_id(r.index) : graph.item_id(r.index);
    };
    auto before = [&](std::size_t a, std::size_t b) {
        NodeRef ra = ref(a);
        NodeRef rb = ref(b);
        return std::make_tuple(ra.kind != NodeKind::user, name(ra)) <
               std::make_tuple(rb.kind != NodeKind::user, name(rb));
    };

    std::vector<std::size_t> selected;
    if (!limit_nodes || *limit_nodes >= total) {
        selected.resize(total);
        for (std::size_t k = 0; k < total; ++k) selected[k] = k;
    } else {
        std::vector<std::size_t> seeds(total);
        for (std::size_t k = 0; k < total; ++k) seeds[k] = k;
        std::sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) {
            std::size_t da = degree(ref(a));
            std::size_t db = degree(ref(b));
            if (da != db) return da > db;
            return before(a, b);
        });
        std::vector<char> taken(total, 0);
        for (std::size_t seed : seeds) {
            if (selected.size() >= *limit_nodes) break;
            if (taken[seed]) continue;
            std::deque<std::size_t> queue{seed};
            taken[seed] = 1;
            while (!queue.empty() && selected.size() < *limit_nodes) {
                std::size_t cur = queue.front();
                queue.pop_front();
                selected.push_back(cur);
                NodeRef r = ref(cur);
                std::vector<EdgeIndex> adj = r.kind == NodeKind::user
                                                 ? graph.filtered_user_edges(r.index, std::nullopt, std::nullopt)
                                                 : graph.filtered_item_edges(r.index, std::nullopt);
                for (EdgeIndex e : adj) {
                    const EdgeRecord& rec = graph.edge(e);
                    std::size_t next = r.kind == NodeKind::user ? flat_of({NodeKind::item, rec.item})
                                                                : flat_of({NodeKind::user, rec.user});
                    if (taken[next]) continue;
                    taken[next] = 1;
                    queue.push_back(next);
                }
            }
        }
    }
    std::sort(selected.begin(), selected.end(), before);

    std::vector<char> in_set(total, 0);
    json nodes = json::array();
    for (std::size_t k : selected) {
        in_set[k] = 1;
        NodeRef r = ref(k);
        const char* kind = r.kind == NodeKind::user ? "user" : "item";
        nodes.push_back({{"id", std::string(kind) + ":" + name(r)},
                         {"kind", kind},
                         {"label", name(r)},
                         {"degree", degree(r)}});
    }

    std::vector<EdgeIndex> kept;
    for (EdgeIndex e = 0; e < graph.edge_count(); ++e) {
        const EdgeRecord& rec = graph.edge(e);
        if (in_set[rec.user] && in_set[users + rec.item]) kept.push_back(e);
    }
    std::sort(kept.begin(), kept.end(), [&](EdgeIndex a, EdgeIndex b) {
        const EdgeRecord& ea = graph.edge(a);
        const EdgeRecord& eb = graph.edge(b);
        return std::tie(graph.user_id(ea.user), graph.item_id(ea.item)) <
               std::tie(graph.user_id(eb.user), graph.item_id(eb.item));
    });
    json links = json::array();
    for (EdgeIndex e : kept) {
        const EdgeRecord& rec = graph.edge(e);
        links.push_back({{"source", "user:" + graph.user_id(rec.user)},
                         {"target", "item:" + graph.item_id(rec.item)},
                         {"count", rec.total_count}});
    }
    return json{{"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

}  // namespace graphrec
