#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace graphrec {

using Timestamp = std::int64_t;
using NodeIndex = std::uint32_t;
using EdgeIndex = std::uint32_t;

class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when an import stream fails mid-way; events before the failure stay applied.
class ImportAborted : public std::runtime_error {
public:
    ImportAborted(const std::string& what, std::size_t applied)
        : std::runtime_error(what), applied_(applied) {}
    std::size_t applied() const noexcept { return applied_; }

private:
    std::size_t applied_;
};

struct InteractionEvent {
    Timestamp ts = 0;
    std::string user;
    std::string item;
    std::string verb;

    bool operator==(const InteractionEvent&) const = default;
};

// Empty optional when the event is well formed.
std::optional<std::string> validation_error(const InteractionEvent& event);
void validate(const InteractionEvent& event);

// Wire format: {"ts": <int>, "user": "<str>", "item": "<str>", "verb": "<str>"}.
InteractionEvent event_from_json(const nlohmann::json& j);
nlohmann::json event_to_json(const InteractionEvent& event);
std::string event_to_line(const InteractionEvent& event);

struct UsageEdge {
    std::string user;
    std::string item;
    std::map<std::string, std::uint64_t> verb_counts;
    Timestamp first_ts = 0;
    Timestamp last_ts = 0;
    std::uint64_t total_count = 0;

    bool operator==(const UsageEdge&) const = default;
};

enum class EdgeOutcome { created, updated };

enum class NodeKind { user, item };

struct ImportResult {
    std::size_t imported = 0;
    std::size_t rejected = 0;
};

struct GraphSnapshot {
    std::set<std::string> users;
    std::set<std::string> items;
    std::vector<UsageEdge> edges;  // sorted by (user, item)
    std::uint64_t event_count = 0;
};

struct EdgeRecord {
    NodeIndex user = 0;
    NodeIndex item = 0;
    Timestamp first_ts = 0;
    Timestamp last_ts = 0;
    std::uint64_t total_count = 0;
    std::map<std::string, std::uint64_t> verb_counts;
};

/// Unsynchronized bipartite user/item graph. Users and items live in separate
/// index spaces, so the same string may name both a user and an item.
///
/// Adjacency queries return edges in a fixed order: last_ts descending, then the
/// opposite endpoint's id ascending.
class GraphData {
public:
    EdgeOutcome upsert(const InteractionEvent& event);

    std::optional<NodeIndex> find_user(std::string_view id) const;
    std::optional<NodeIndex> find_item(std::string_view id) const;

    const std::string& user_id(NodeIndex u) const { return user_ids_[u]; }
    const std::string& item_id(NodeIndex i) const { return item_ids_[i]; }

    std::size_t user_count() const { return user_ids_.size(); }
    std::size_t item_count() const { return item_ids_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::uint64_t event_count() const { return event_count_; }
    // Largest event timestamp seen, 0 for an empty graph.
    Timestamp latest_ts() const { return latest_ts_; }

    std::span<const EdgeIndex> user_edges(NodeIndex u) const { return user_edges_[u]; }
    std::span<const EdgeIndex> item_edges(NodeIndex i) const { return item_edges_[i]; }
    const EdgeRecord& edge(EdgeIndex e) const { return edges_[e]; }

    // Edges with first_ts <= as_of, ordered, cut to the latest_n most recent.
    std::vector<EdgeIndex> filtered_user_edges(NodeIndex u, std::optional<Timestamp> as_of,
                                               std::optional<std::size_t> latest_n) const;
    std::vector<EdgeIndex> filtered_item_edges(NodeIndex i, std::optional<Timestamp> as_of) const;

    UsageEdge usage_edge(EdgeIndex e) const;
    GraphSnapshot snapshot() const;

    // Replaces edge counters wholesale; used by snapshot loading.
    void restore_edge(const UsageEdge& edge);
    void set_event_count(std::uint64_t n) { event_count_ = n; }

private:
    NodeIndex intern_user(const std::string& id);
    NodeIndex intern_item(const std::string& id);
    static std::uint64_t pair_key(NodeIndex u, NodeIndex i) {
        return (static_cast<std::uint64_t>(u) << 32) | i;
    }

    std::vector<std::string> user_ids_;
    std::vector<std::string> item_ids_;
    std::unordered_map<std::string, NodeIndex> user_index_;
    std::unordered_map<std::string, NodeIndex> item_index_;
    std::vector<std::vector<EdgeIndex>> user_edges_;
    std::vector<std::vector<EdgeIndex>> item_edges_;
    std::vector<EdgeRecord> edges_;
    std::unordered_map<std::uint64_t, EdgeIndex> pair_index_;
    std::uint64_t event_count_ = 0;
    Timestamp latest_ts_ = 0;
};

/// Thread-safe graph store: one writer at a time, concurrent readers, every
/// call observes a consistent edge state.
class GraphStore {
public:
    GraphStore() = default;
    GraphStore(const GraphStore&) = delete;
    GraphStore& operator=(const GraphStore&) = delete;

    // Throws ValidationError on a malformed event, leaving the store unchanged.
    EdgeOutcome upsert_interaction(const InteractionEvent& event);

    ImportResult batch_import(std::span<const InteractionEvent> events);
    // Newline-delimited JSON; blank lines and lines starting with '#' are skipped.
    ImportResult batch_import(std::istream& in);
    ImportResult batch_import_file(const std::filesystem::path& path);

    std::vector<UsageEdge> neighbors(NodeKind kind, std::string_view id,
                                     std::optional<Timestamp> as_of = std::nullopt,
                                     std::optional<std::size_t> latest_n = std::nullopt) const;

    void save_snapshot(const std::filesystem::path& path) const;
    // Throws SnapshotError on a corrupt, truncated or foreign file; the store keeps its state.
    void load_snapshot(const std::filesystem::path& path);

    GraphSnapshot snapshot() const;
    std::size_t user_count() const;
    std::size_t item_count() const;
    std::size_t edge_count() const;
    std::uint64_t event_count() const;

    template <class F>
    decltype(auto) read(F&& fn) const {
        std::shared_lock lock(mutex_);
        return std::forward<F>(fn)(static_cast<const GraphData&>(data_));
    }

private:
    mutable std::shared_mutex mutex_;
    GraphData data_;
};

inline constexpr int kSnapshotVersion = 1;
inline constexpr std::string_view kSnapshotFormat = "graphrec-snapshot";

void write_snapshot(const GraphData& data, std::ostream& out);
GraphData read_snapshot(std::istream& in);

}  // namespace graphrec
