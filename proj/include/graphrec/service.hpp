#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "graphrec/eval.hpp"
#include "graphrec/graph_store.hpp"
#include "graphrec/pipeline.hpp"
#include "graphrec/scoring.hpp"

namespace httplib {
class Server;
}

namespace graphrec {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BackendKind { memory, file };

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    ScoringParams scoring{3, std::nullopt, Weighting::constant, std::nullopt, 500};
    double alpha = 0.5;
    PipelineConfig pipeline;  // pipeline.scoring mirrors `scoring`
    BackendKind queue_backend = BackendKind::memory;
    BackendKind cache_backend = BackendKind::memory;
    std::filesystem::path state_dir = "graphrec-state";
    std::filesystem::path snapshot_path;
    std::filesystem::path stats_log_path;
    bool personalization = true;

    void validate() const;
};

// "host:port" or ":port".
void parse_listen(std::string_view spec, ServiceConfig& cfg);

/// Reads `key = value` lines; '#' starts a comment. Keys:
///   listen, depth, max_usages (number or "all"), weighting, max_results (number or "all"),
///   alpha, event_workers, recbuild_workers, queue_backend / cache_backend (memory | file),
///   state_dir, snapshot, stats_log, personalization (on | off)
/// Throws ConfigError on unknown keys, bad values or an unreadable file.
ServiceConfig load_config(const std::filesystem::path& path);
ServiceConfig parse_config(std::istream& in);

struct HttpReply {
    int status = 200;
    nlohmann::json body;
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

/// HTTP-facing service. Handlers are plain member functions returning a status
/// and JSON body so they can be exercised without a socket; mount() binds them
/// to routes.
class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();

    GraphStore& store() { return store_; }
    Pipeline& pipeline() { return *pipeline_; }
    const ServiceConfig& config() const { return config_; }

    HttpReply post_events(std::string_view body);
    HttpReply get_recommendations(std::string_view user, const QueryParams& query);
    HttpReply post_rerank(std::string_view body);
    HttpReply post_search_log(std::string_view body);
    HttpReply get_stats() const;
    HttpReply get_graph_export(const QueryParams& query) const;
    HttpReply post_admin_personalization(std::string_view body);

    void mount(httplib::Server& server);

    // Test hook: when set, every scoring request made by /rerank fails.
    void set_scoring_fault(bool on) { scoring_fault_ = on; }
    void set_personalization(bool on) { personalization_ = on; }
    bool personalization() const { return personalization_; }

private:
    RecommendationList live_recommend(std::string_view user, const ScoringParams& params);

    ServiceConfig config_;
    GraphStore store_;
    std::unique_ptr<Pipeline> pipeline_;

    std::atomic<bool> scoring_fault_{false};
    std::atomic<bool> personalization_{true};

    std::atomic<std::uint64_t> live_traversals_{0};
    std::atomic<std::uint64_t> live_traversal_nanos_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
    std::atomic<std::uint64_t> cache_misses_{0};
    std::atomic<std::uint64_t> rerank_calls_{0};
    std::atomic<std::uint64_t> degraded_reranks_{0};

    mutable std::mutex clicks_mutex_;
    std::map<std::string, std::pair<double, std::uint64_t>> clicks_by_method_;
    std::ofstream stats_log_;
};

}  // namespace graphrec
