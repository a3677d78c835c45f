#pragma once

#include <optional>

#include <nlohmann/json.hpp>

#include "graphrec/graph_store.hpp"

namespace graphrec {

/// Node-link document for external visualizers:
///   {"nodes": [{"id", "kind", "label", "degree"}], "links": [{"source", "target", "count"}]}
/// Node ids are "user:<id>" / "item:<id>". With a node limit, nodes are taken
/// breadth-first starting from the highest-degree node, and links are kept only
/// between selected nodes.
nlohmann::json export_node_link(const GraphData& graph, std::optional<std::size_t> limit_nodes = std::nullopt);

}  // namespace graphrec
