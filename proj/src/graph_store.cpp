#include "graphrec/graph_store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <tuple>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace graphrec {

using nlohmann::json;

std::optional<std::string> validation_error(const InteractionEvent& event) {
    if (event.user.empty()) return "empty user id";
    if (event.item.empty()) return "empty item id";
    if (event.verb.empty()) return "empty verb";
    if (event.ts < 0) return "negative timestamp";
    return std::nullopt;
}

void validate(const InteractionEvent& event) {
    if (auto err = validation_error(event)) throw ValidationError(*err);
}

InteractionEvent event_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("event is not a JSON object");
    auto string_field = [&](const char* name) {
        auto it = j.find(name);
        if (it == j.end() || !it->is_string())
            throw ValidationError(std::string("missing or non-string field '") + name + "'");
        return it->get<std::string>();
    };
    auto ts = j.find("ts");
    if (ts == j.end() || !ts->is_number_integer())
        throw ValidationError("missing or non-integer field 'ts'");
    InteractionEvent event{ts->get<Timestamp>(), string_field("user"), string_field("item"),
                           string_field("verb")};
    validate(event);
    return event;
}

json event_to_json(const InteractionEvent& event) {
    return json{{"ts", event.ts}, {"user", event.user}, {"item", event.item}, {"verb", event.verb}};
}

std::string event_to_line(const InteractionEvent& event) { return event_to_json(event).dump(); }

// ---------------------------------------------------------------------------
// GraphData

NodeIndex GraphData::intern_user(const std::string& id) {
    auto [it, inserted] = user_index_.try_emplace(id, static_cast<NodeIndex>(user_ids_.size()));
    if (inserted) {
        user_ids_.push_back(id);
        user_edges_.emplace_back();
    }
    return it->second;
}

NodeIndex GraphData::intern_item(const std::string& id) {
    auto [it, inserted] = item_index_.try_emplace(id, static_cast<NodeIndex>(item_ids_.size()));
    if (inserted) {
        item_ids_.push_back(id);
        item_edges_.emplace_back();
    }
    return it->second;
}

EdgeOutcome GraphData::upsert(const InteractionEvent& event) {
    validate(event);
    NodeIndex u = intern_user(event.user);
    NodeIndex i = intern_item(event.item);
    ++event_count_;
    latest_ts_ = std::max(latest_ts_, event.ts);

    auto [it, inserted] = pair_index_.try_emplace(pair_key(u, i), static_cast<EdgeIndex>(edges_.size()));
    if (inserted) {
        EdgeRecord rec;
        rec.user = u;
        rec.item = i;
        rec.first_ts = rec.last_ts = event.ts;
        rec.total_count = 1;
        rec.verb_counts.emplace(event.verb, 1);
        edges_.push_back(std::move(rec));
        user_edges_[u].push_back(it->second);
        item_edges_[i].push_back(it->second);
        return EdgeOutcome::created;
    }
    EdgeRecord& rec = edges_[it->second];
    rec.first_ts = std::min(rec.first_ts, event.ts);
    rec.last_ts = std::max(rec.last_ts, event.ts);
    ++rec.total_count;
    ++rec.verb_counts[event.verb];
    return EdgeOutcome::updated;
}

void GraphData::restore_edge(const UsageEdge& edge) {
    if (edge.user.empty() || edge.item.empty()) throw SnapshotError("edge with empty endpoint");
    if (edge.verb_counts.empty() || edge.first_ts > edge.last_ts || edge.first_ts < 0)
        throw SnapshotError("inconsistent edge " + edge.user + " -> " + edge.item);
    std::uint64_t total = 0;
    for (const auto& [verb, count] : edge.verb_counts) {
        if (verb.empty() || count == 0) throw SnapshotError("bad verb count on edge " + edge.user);
        total += count;
    }
    if (total != edge.total_count) throw SnapshotError("total_count mismatch on edge " + edge.user);

    NodeIndex u = intern_user(edge.user);
    NodeIndex i = intern_item(edge.item);
    auto [it, inserted] = pair_index_.try_emplace(pair_key(u, i), static_cast<EdgeIndex>(edges_.size()));
    if (!inserted) throw SnapshotError("duplicate edge " + edge.user + " -> " + edge.item);
    edges_.push_back(EdgeRecord{u, i, edge.first_ts, edge.last_ts, edge.total_count, edge.verb_counts});
    user_edges_[u].push_back(it->second);
    item_edges_[i].push_back(it->second);
    latest_ts_ = std::max(latest_ts_, edge.last_ts);
}

std::optional<NodeIndex> GraphData::find_user(std::string_view id) const {
    auto it = user_index_.find(std::string(id));
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<NodeIndex> GraphData::find_item(std::string_view id) const {
    auto it = item_index_.find(std::string(id));
    if (it == item_index_.end()) return std::nullopt;
    return it->second;
}

std::vector<EdgeIndex> GraphData::filtered_user_edges(NodeIndex u, std::optional<Timestamp> as_of,
                                                      std::optional<std::size_t> latest_n) const {
    std::vector<EdgeIndex> out;
    out.reserve(user_edges_[u].size());
    for (EdgeIndex e : user_edges_[u])
        if (!as_of || edges_[e].first_ts <= *as_of) out.push_back(e);

    auto newer = [this](EdgeIndex a, EdgeIndex b) {
        const EdgeRecord& ea = edges_[a];
        const EdgeRecord& eb = edges_[b];
        if (ea.last_ts != eb.last_ts) return ea.last_ts > eb.last_ts;
        return item_ids_[ea.item] < item_ids_[eb.item];
    };
    if (latest_n && *latest_n < out.size()) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(*latest_n), out.end(), newer);
        out.resize(*latest_n);
    } else {
        std::sort(out.begin(), out.end(), newer);
    }
    return out;
}

std::vector<EdgeIndex> GraphData::filtered_item_edges(NodeIndex i, std::optional<Timestamp> as_of) const {
    std::vector<EdgeIndex> out;
    out.reserve(item_edges_[i].size());
    for (EdgeIndex e : item_edges_[i])
        if (!as_of || edges_[e].first_ts <= *as_of) out.push_back(e);
    std::sort(out.begin(), out.end(), [this](EdgeIndex a, EdgeIndex b) {
        const EdgeRecord& ea = edges_[a];
        const EdgeRecord& eb = edges_[b];
        if (ea.last_ts != eb.last_ts) return ea.last_ts > eb.last_ts;
        return user_ids_[ea.user] < user_ids_[eb.user];
    });
    return out;
}

UsageEdge GraphData::usage_edge(EdgeIndex e) const {
    const EdgeRecord& rec = edges_[e];
    return UsageEdge{user_ids_[rec.user], item_ids_[rec.item], rec.verb_counts,
                     rec.first_ts,        rec.last_ts,         rec.total_count};
}

GraphSnapshot GraphData::snapshot() const {
    GraphSnapshot snap;
    snap.users.insert(user_ids_.begin(), user_ids_.end());
    snap.items.insert(item_ids_.begin(), item_ids_.end());
    snap.edges.reserve(edges_.size());
    for (EdgeIndex e = 0; e < edges_.size(); ++e) snap.edges.push_back(usage_edge(e));
    std::sort(snap.edges.begin(), snap.edges.end(), [](const UsageEdge& a, const UsageEdge& b) {
        return std::tie(a.user, a.item) < std::tie(b.user, b.item);
    });
    snap.event_count = event_count_;
    return snap;
}

// ---------------------------------------------------------------------------
// Snapshot format: line-delimited JSON.
//   {"format":"graphrec-snapshot","version":1,"users":U,"items":I,"edges":E,"events":N}
//   {"u":..,"i":..,"first":..,"last":..,"verbs":{..}}    x E, sorted by (u, i)
//   {"end":true,"edges":E}
// The trailer makes truncation detectable.

void write_snapshot(const GraphData& data, std::ostream& out) {
    GraphSnapshot snap = data.snapshot();
    out << json{{"format", kSnapshotFormat},
                {"version", kSnapshotVersion},
                {"users", snap.users.size()},
                {"items", snap.items.size()},
                {"edges", snap.edges.size()},
                {"events", snap.event_count}}
               .dump()
        << '\n';
    for (const UsageEdge& e : snap.edges) {
        out << json{{"u", e.user}, {"i", e.item}, {"first", e.first_ts}, {"last", e.last_ts},
                    {"verbs", e.verb_counts}}
                   .dump()
            << '\n';
    }
    out << json{{"end", true}, {"edges", snap.edges.size()}}.dump() << '\n';
}

GraphData read_snapshot(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SnapshotError("empty snapshot file");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object() || header.value("format", "") != kSnapshotFormat)
        throw SnapshotError("not a graph snapshot");
    if (header.value("version", -1) != kSnapshotVersion)
        throw SnapshotError("unsupported snapshot version " + header.value("version", json(-1)).dump());

    GraphData data;
    std::size_t expected_edges = 0;
    std::size_t expected_users = 0;
    std::size_t expected_items = 0;
    std::uint64_t events = 0;
    try {
        expected_edges = header.at("edges").get<std::size_t>();
        expected_users = header.at("users").get<std::size_t>();
        expected_items = header.at("items").get<std::size_t>();
        events = header.at("events").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw SnapshotError(std::string("bad snapshot header: ") + e.what());
    }

    bool ended = false;
    while (std::getline(in, line)) {
        if (ended) throw SnapshotError("data after snapshot trailer");
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) throw SnapshotError("corrupt snapshot line");
        if (row.contains("end")) {
            if (row.value("edges", json(-1)) != json(expected_edges))
                throw SnapshotError("snapshot trailer edge count mismatch");
            ended = true;
            continue;
        }
        try {
            UsageEdge edge;
            edge.user = row.at("u").get<std::string>();
            edge.item = row.at("i").get<std::string>();
            edge.first_ts = row.at("first").get<Timestamp>();
            edge.last_ts = row.at("last").get<Timestamp>();
            edge.verb_counts = row.at("verbs").get<std::map<std::string, std::uint64_t>>();
            for (const auto& [verb, count] : edge.verb_counts) edge.total_count += count;
            data.restore_edge(edge);
        } catch (const json::exception& e) {
            throw SnapshotError(std::string("corrupt snapshot edge: ") + e.what());
        }
    }
    if (!ended) throw SnapshotError("snapshot truncated (missing trailer)");
    if (data.edge_count() != expected_edges || data.user_count() != expected_users ||
        data.item_count() != expected_items)
        throw SnapshotError("snapshot counts do not match header");
    data.set_event_count(events);
    return data;
}

// ---------------------------------------------------------------------------
// GraphStore

EdgeOutcome GraphStore::upsert_interaction(const InteractionEvent& event) {
    validate(event);
    std::unique_lock lock(mutex_);
    return data_.upsert(event);
}

ImportResult GraphStore::batch_import(std::span<const InteractionEvent> events) {
    ImportResult result;
    std::unique_lock lock(mutex_);
    for (const InteractionEvent& event : events) {
        if (auto err = validation_error(event)) {
            spdlog::warn("import: rejected event ({}) user='{}' item='{}'", *err, event.user, event.item);
            ++result.rejected;
            continue;
        }
        data_.upsert(event);
        ++result.imported;
    }
    return result;
}

ImportResult GraphStore::batch_import(std::istream& in) {
    constexpr std::size_t kChunk = 4096;
    ImportResult result;
    std::vector<InteractionEvent> chunk;
    chunk.reserve(kChunk);
    auto flush = [&] {
        ImportResult part = batch_import(std::span<const InteractionEvent>(chunk));
        result.imported += part.imported;
        result.rejected += part.rejected;
        chunk.clear();
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        try {
            if (j.is_discarded()) throw ValidationError("invalid JSON");
            chunk.push_back(event_from_json(j));
        } catch (const ValidationError& e) {
            spdlog::warn("import: line {} rejected: {}", line_no, e.what());
            ++result.rejected;
        }
        if (chunk.size() == kChunk) flush();
    }
    flush();
    if (in.bad()) throw ImportAborted("read error after line " + std::to_string(line_no), result.imported);
    return result;
}

ImportResult GraphStore::batch_import_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ImportAborted("cannot open " + path.string(), 0);
    return batch_import(in);
}

std::vector<UsageEdge> GraphStore::neighbors(NodeKind kind, std::string_view id,
                                             std::optional<Timestamp> as_of,
                                             std::optional<std::size_t> latest_n) const {
    std::shared_lock lock(mutex_);
    std::vector<EdgeIndex> idx;
    if (kind == NodeKind::user) {
        auto u = data_.find_user(id);
        if (!u) return {};
        idx = data_.filtered_user_edges(*u, as_of, latest_n);
    } else {
        auto i = data_.find_item(id);
        if (!i) return {};
        idx = data_.filtered_item_edges(*i, as_of);
    }
    std::vector<UsageEdge> out;
    out.reserve(idx.size());
    for (EdgeIndex e : idx) out.push_back(data_.usage_edge(e));
    return out;
}

void GraphStore::save_snapshot(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw SnapshotError("cannot write " + tmp.string());
        std::shared_lock lock(mutex_);
        write_snapshot(data_, out);
        out.flush();
        if (!out) throw SnapshotError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void GraphStore::load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SnapshotError("cannot open " + path.string());
    GraphData loaded = read_snapshot(in);
    std::unique_lock lock(mutex_);
    data_ = std::move(loaded);
}

GraphSnapshot GraphStore::snapshot() const {
    std::shared_lock lock(mutex_);
    return data_.snapshot();
}

std::size_t GraphStore::user_count() const {
    std::shared_lock lock(mutex_);
    return data_.user_count();
}

std::size_t GraphStore::item_count() const {
    std::shared_lock lock(mutex_);
    return data_.item_count();
}

std::size_t GraphStore::edge_count() const {
    std::shared_lock lock(mutex_);
    return data_.edge_count();
}

std::uint64_t GraphStore::event_count() const {
    std::shared_lock lock(mutex_);
    return data_.event_count();
}

}  // namespace graphrec
