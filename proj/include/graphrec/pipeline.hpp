#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "graphrec/graph_store.hpp"
#include "graphrec/scoring.hpp"

namespace graphrec {

class BackendUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kEventQueue = "events";
inline constexpr std::string_view kRecbuildQueue = "recbuild";

std::string cache_key(std::string_view user);

// FIFO per queue name; each popped payload goes to exactly one caller.
class QueueBackend {
public:
    virtual ~QueueBackend() = default;
    virtual void push(std::string_view queue, std::string payload) = 0;
    virtual std::optional<std::string> pop(std::string_view queue) = 0;
    virtual std::size_t depth(std::string_view queue) const = 0;
};

class CacheBackend {
public:
    using Value = std::shared_ptr<const RecommendationList>;
    virtual ~CacheBackend() = default;
    virtual void put(const std::string& key, Value value) = 0;
    // nullptr on miss.
    virtual Value get(const std::string& key) const = 0;
    virtual std::size_t size() const = 0;
};

// Volatile: contents are lost with the process.
class InMemoryQueue final : public QueueBackend {
public:
    void push(std::string_view queue, std::string payload) override;
    std::optional<std::string> pop(std::string_view queue) override;
    std::size_t depth(std::string_view queue) const override;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::deque<std::string>, std::less<>> queues_;
};

/// Durable queue: one append-only log per queue name plus a consumed-count file.
/// Reopening the directory resumes from the first unconsumed payload.
class FileQueue final : public QueueBackend {
public:
    explicit FileQueue(std::filesystem::path dir);

    void push(std::string_view queue, std::string payload) override;
    std::optional<std::string> pop(std::string_view queue) override;
    std::size_t depth(std::string_view queue) const override;

private:
    struct Lane {
        std::deque<std::string> pending;
        std::uint64_t consumed = 0;
        std::uint64_t written = 0;
    };
    Lane& lane(std::string_view queue);
    void load_lane(const std::string& name, Lane& lane);
    void write_offset(const std::string& name, const Lane& lane);
    std::filesystem::path log_path(const std::string& name) const { return dir_ / (name + ".log"); }
    std::filesystem::path offset_path(const std::string& name) const { return dir_ / (name + ".offset"); }

    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::map<std::string, Lane, std::less<>> lanes_;
};

class InMemoryCache final : public CacheBackend {
public:
    void put(const std::string& key, Value value) override;
    Value get(const std::string& key) const override;
    std::size_t size() const override;

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Value> map_;
};

// Write-through cache persisted as one JSON file per key; reads are served from memory.
class FileCache final : public CacheBackend {
public:
    explicit FileCache(std::filesystem::path dir);
    void put(const std::string& key, Value value) override;
    Value get(const std::string& key) const override;
    std::size_t size() const override;

private:
    std::filesystem::path dir_;
    InMemoryCache memory_;
};

struct PipelineConfig {
    std::size_t event_workers = 1;
    std::size_t recbuild_workers = 1;
    ScoringParams scoring;

    void validate() const;
};

struct PipelineCounters {
    std::uint64_t events_ingested = 0;
    std::uint64_t event_failures = 0;
    std::uint64_t traversals = 0;
    std::uint64_t traversal_failures = 0;
    std::uint64_t traversal_nanos = 0;
};

/// Event intake and recommendation pre-computation.
///
/// enqueue_event only appends to the event queue. Event workers pop events,
/// insert them into the graph and queue the user for a rebuild; recbuild
/// workers traverse from the user and store the list under "rec:<user>".
/// Rebuilds wait while events are queued or being inserted, so once the
/// pipeline is idle every cached list reflects the final graph. Delivery is
/// at-least-once: a failed insert or traversal is re-queued at the tail.
class Pipeline {
public:
    using EventHook = std::function<void(const InteractionEvent&)>;
    using UserHook = std::function<void(std::string_view)>;

    Pipeline(GraphStore& store, std::shared_ptr<QueueBackend> queue, std::shared_ptr<CacheBackend> cache,
             PipelineConfig config);
    ~Pipeline();
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    // Throws ValidationError for a malformed event, BackendUnavailable if the queue fails.
    void enqueue_event(const InteractionEvent& event);

    int event_worker_step();
    int recbuild_worker_step();

    // Queues a user for recomputation without a new event, e.g. after a bulk import.
    void request_rebuild(std::string_view user);

    // nullptr on miss; BackendUnavailable if the cache fails.
    CacheBackend::Value get_cached_recommendations(std::string_view user) const;

    // Runs both steps on the calling thread until no work remains.
    void drain();

    void start();
    void stop();
    bool running() const { return !threads_.empty(); }
    // Blocks until queues are empty and no step is in flight, or the timeout passes.
    bool wait_idle(std::chrono::milliseconds timeout = std::chrono::minutes(5)) const;
    bool idle() const;

    std::size_t event_queue_depth() const { return queue_->depth(kEventQueue); }
    std::size_t recbuild_queue_depth() const { return queue_->depth(kRecbuildQueue); }
    PipelineCounters counters() const;
    const PipelineConfig& config() const { return config_; }

    // Fault injection; a hook that throws makes the step fail.
    void set_insert_hook(EventHook hook);
    void set_traversal_hook(UserHook hook);

private:
    void worker_loop(std::stop_token stop, bool events);

    GraphStore& store_;
    std::shared_ptr<QueueBackend> queue_;
    std::shared_ptr<CacheBackend> cache_;
    PipelineConfig config_;

    std::atomic<int> events_in_flight_{0};
    std::atomic<int> recbuilds_in_flight_{0};
    std::atomic<std::uint64_t> events_ingested_{0};
    std::atomic<std::uint64_t> event_failures_{0};
    std::atomic<std::uint64_t> traversals_{0};
    std::atomic<std::uint64_t> traversal_failures_{0};
    std::atomic<std::uint64_t> traversal_nanos_{0};

    std::mutex put_mutex_;
    std::unordered_map<std::string, std::uint64_t> put_versions_;  // graph event count behind each cached list

    mutable std::mutex hook_mutex_;
    EventHook insert_hook_;
    UserHook traversal_hook_;

    std::vector<std::jthread> threads_;
};

}  // namespace graphrec
