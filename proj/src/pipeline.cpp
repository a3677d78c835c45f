#include "graphrec/pipeline.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace graphrec {

using nlohmann::json;

std::string cache_key(std::string_view user) { return "rec:" + std::string(user); }

// ---------------------------------------------------------------------------
// InMemoryQueue

void InMemoryQueue::push(std::string_view queue, std::string payload) {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(queue);
    if (it == queues_.end()) it = queues_.emplace(std::string(queue), std::deque<std::string>{}).first;
    it->second.push_back(std::move(payload));
}

std::optional<std::string> InMemoryQueue::pop(std::string_view queue) {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(queue);
    if (it == queues_.end() || it->second.empty()) return std::nullopt;
    std::string out = std::move(it->second.front());
    it->second.pop_front();
    return out;
}

std::size_t InMemoryQueue::depth(std::string_view queue) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(queue);
    return it == queues_.end() ? 0 : it->second.size();
}

// ---------------------------------------------------------------------------
// FileQueue

namespace {

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        out << content;
        out.flush();
        if (!out) throw BackendUnavailable("cannot write " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw BackendUnavailable("cannot rename " + tmp.string() + ": " + ec.message());
}

bool valid_queue_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

}  // namespace

FileQueue::FileQueue(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
        throw BackendUnavailable("queue directory unavailable: " + dir_.string());
}

void FileQueue::load_lane(const std::string& name, Lane& lane) {
    std::vector<std::string> lines;
    if (std::ifstream in(log_path(name)); in) {
        std::string line;
        while (std::getline(in, line)) lines.push_back(std::move(line));
    }
    lane.written = lines.size();
    if (std::ifstream in(offset_path(name)); in) in >> lane.consumed;
    lane.consumed = std::min(lane.consumed, lane.written);
    for (std::size_t k = lane.consumed; k < lines.size(); ++k) lane.pending.push_back(std::move(lines[k]));
}

FileQueue::Lane& FileQueue::lane(std::string_view queue) {
    auto it = lanes_.find(queue);
    if (it != lanes_.end()) return it->second;
    if (!valid_queue_name(queue)) throw std::invalid_argument("bad queue name");
    std::string name(queue);
    Lane fresh;
    load_lane(name, fresh);
    return lanes_.emplace(name, std::move(fresh)).first->second;
}

void FileQueue::write_offset(const std::string& name, const Lane& lane) {
    write_atomically(offset_path(name), std::to_string(lane.consumed));
}

void FileQueue::push(std::string_view queue, std::string payload) {
    if (payload.find('\n') != std::string::npos) throw std::invalid_argument("queue payload contains a newline");
    std::lock_guard lock(mutex_);
    Lane& l = lane(queue);
    std::ofstream out(log_path(std::string(queue)), std::ios::app | std::ios::binary);
    out << payload << '\n';
    out.flush();
    if (!out) throw BackendUnavailable("cannot append to queue " + std::string(queue));
    ++l.written;
    l.pending.push_back(std::move(payload));
}

std::optional<std::string> FileQueue::pop(std::string_view queue) {
    std::lock_guard lock(mutex_);
    Lane& l = lane(queue);
    if (l.pending.empty()) return std::nullopt;
    std::string name(queue);
    std::string out = std::move(l.pending.front());
    l.pending.pop_front();
    ++l.consumed;
    if (l.consumed == l.written) {
        // Fully consumed: compact. A crash between the two writes leaves
        // consumed > written, which load_lane clamps.
        std::ofstream(log_path(name), std::ios::trunc);
        l.consumed = l.written = 0;
    }
    write_offset(name, l);
    return out;
}

std::size_t FileQueue::depth(std::string_view queue) const {
    std::lock_guard lock(mutex_);
    return const_cast<FileQueue*>(this)->lane(queue).pending.size();
}

// ---------------------------------------------------------------------------
// Caches

void InMemoryCache::put(const std::string& key, Value value) {
    std::lock_guard lock(mutex_);
    map_[key] = std::move(value);
}

CacheBackend::Value InMemoryCache::get(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = map_.find(key);
    return it == map_.end() ? nullptr : it->second;
}

std::size_t InMemoryCache::size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
}

namespace {

std::string hex_encode(std::string_view s) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(s.size() * 2);
    for (unsigned char c : s) {
        out.push_back(kDigits[c >> 4]);
        out.push_back(kDigits[c & 0xf]);
    }
    return out;
}

}  // namespace

FileCache::FileCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
        throw BackendUnavailable("cache directory unavailable: " + dir_.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.contains("key") || !j.contains("value")) {
            spdlog::warn("cache: skipping unreadable entry {}", entry.path().string());
            continue;
        }
        try {
            memory_.put(j["key"].get<std::string>(),
                        std::make_shared<const RecommendationList>(recommendation_list_from_json(j["value"])));
        } catch (const std::exception& e) {
            spdlog::warn("cache: skipping entry {}: {}", entry.path().string(), e.what());
        }
    }
}

void FileCache::put(const std::string& key, Value value) {
    json j{{"key", key}, {"value", to_json(*value)}};
    write_atomically(dir_ / (hex_encode(key) + ".json"), j.dump());
    memory_.put(key, std::move(value));
}

CacheBackend::Value FileCache::get(const std::string& key) const { return memory_.get(key); }

std::size_t FileCache::size() const { return memory_.size(); }

// ---------------------------------------------------------------------------
// Pipeline

void PipelineConfig::validate() const {
    if (event_workers < 1) throw ValidationError("event_workers must be >= 1");
    if (recbuild_workers < 1) throw ValidationError("recbuild_workers must be >= 1");
    scoring.validate();
}

Pipeline::Pipeline(GraphStore& store, std::shared_ptr<QueueBackend> queue, std::shared_ptr<CacheBackend> cache,
                   PipelineConfig config)
    : store_(store), queue_(std::move(queue)), cache_(std::move(cache)), config_(std::move(config)) {
    config_.validate();
    if (!queue_ || !cache_) throw std::invalid_argument("pipeline needs a queue and a cache backend");
}

Pipeline::~Pipeline() { stop(); }

void Pipeline::enqueue_event(const InteractionEvent& event) {
    validate(event);
    try {
        queue_->push(kEventQueue, event_to_line(event));
    } catch (const BackendUnavailable&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendUnavailable(std::string("event queue: ") + e.what());
    }
}

namespace {

// Decrements the counter on scope exit.
struct InFlight {
    explicit InFlight(std::atomic<int>& c) : counter(c) { ++counter; }
    ~InFlight() { --counter; }
    std::atomic<int>& counter;
};

}  // namespace

int Pipeline::event_worker_step() {
    InFlight guard(events_in_flight_);
    auto payload = queue_->pop(kEventQueue);
    if (!payload) return 0;

    InteractionEvent event;
    try {
        event = event_from_json(json::parse(*payload));
    } catch (const std::exception& e) {
        spdlog::error("event worker: dropping unparseable payload: {}", e.what());
        ++event_failures_;
        return 1;
    }

    try {
        EventHook hook;
        {
            std::lock_guard lock(hook_mutex_);
            hook = insert_hook_;
        }
        if (hook) hook(event);
        store_.upsert_interaction(event);
    } catch (const std::exception& e) {
        spdlog::error("event worker: insert failed for user '{}', re-queued: {}", event.user, e.what());
        ++event_failures_;
        queue_->push(kEventQueue, std::move(*payload));
        return 1;
    }
    queue_->push(kRecbuildQueue, json(event.user).dump());
    ++events_ingested_;
    return 1;
}

int Pipeline::recbuild_worker_step() {
    if (events_in_flight_.load() > 0 || queue_->depth(kEventQueue) > 0) return 0;
    InFlight guard(recbuilds_in_flight_);
    auto payload = queue_->pop(kRecbuildQueue);
    if (!payload) return 0;

    std::string user;
    try {
        user = json::parse(*payload).get<std::string>();
    } catch (const std::exception& e) {
        spdlog::error("recbuild worker: dropping unparseable payload: {}", e.what());
        ++traversal_failures_;
        return 1;
    }

    try {
        UserHook hook;
        {
            std::lock_guard lock(hook_mutex_);
            hook = traversal_hook_;
        }
        if (hook) hook(user);
        auto t0 = std::chrono::steady_clock::now();
        std::uint64_t version = 0;
        auto list = store_.read([&](const GraphData& g) {
            version = g.event_count();
            return std::make_shared<const RecommendationList>(recommend(g, user, config_.scoring));
        });
        auto elapsed = std::chrono::steady_clock::now() - t0;
        {
            // A slower worker holding an older graph state must not overwrite a newer list.
            std::lock_guard lock(put_mutex_);
            auto [it, inserted] = put_versions_.try_emplace(user, version);
            if (inserted || it->second <= version) {
                it->second = version;
                cache_->put(cache_key(user), std::move(list));
            }
        }
        ++traversals_;
        traversal_nanos_ += static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count());
    } catch (const std::exception& e) {
        spdlog::error("recbuild worker: traversal failed for user '{}', re-queued: {}", user, e.what());
        ++traversal_failures_;
        queue_->push(kRecbuildQueue, std::move(*payload));
    }
    return 1;
}

void Pipeline::request_rebuild(std::string_view user) { queue_->push(kRecbuildQueue, json(user).dump()); }

CacheBackend::Value Pipeline::get_cached_recommendations(std::string_view user) const {
    try {
        return cache_->get(cache_key(user));
    } catch (const BackendUnavailable&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendUnavailable(std::string("cache: ") + e.what());
    }
}

void Pipeline::drain() {
    while (event_worker_step() + recbuild_worker_step() > 0) {
    }
}

bool Pipeline::idle() const {
    return events_in_flight_.load() == 0 && recbuilds_in_flight_.load() == 0 &&
           queue_->depth(kEventQueue) == 0 && queue_->depth(kRecbuildQueue) == 0;
}

bool Pipeline::wait_idle(std::chrono::milliseconds timeout) const {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    // Two consecutive idle observations, so a step between the checks is not missed.
    int idle_seen = 0;
    while (std::chrono::steady_clock::now() < deadline) {
        idle_seen = idle() ? idle_seen + 1 : 0;
        if (idle_seen >= 2) return true;
        std::this_thread::sleep_for(std::chrono::microseconds(500));
    }
    return false;
}

void Pipeline::worker_loop(std::stop_token stop, bool events) {
    while (!stop.stop_requested()) {
        int n = 0;
        try {
            n = events ? event_worker_step() : recbuild_worker_step();
        } catch (const std::exception& e) {
            spdlog::error("{} worker: {}", events ? "event" : "recbuild", e.what());
        }
        if (n == 0) std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
}

void Pipeline::start() {
    if (!threads_.empty()) return;
    for (std::size_t k = 0; k < config_.event_workers; ++k)
        threads_.emplace_back([this](std::stop_token st) { worker_loop(st, true); });
    for (std::size_t k = 0; k < config_.recbuild_workers; ++k)
        threads_.emplace_back([this](std::stop_token st) { worker_loop(st, false); });
}

void Pipeline::stop() {
    for (auto& t : threads_) t.request_stop();
    threads_.clear();  // joins
}

PipelineCounters Pipeline::counters() const {
    return PipelineCounters{events_ingested_.load(), event_failures_.load(), traversals_.load(),
                            traversal_failures_.load(), traversal_nanos_.load()};
}

void Pipeline::set_insert_hook(EventHook hook) {
    std::lock_guard lock(hook_mutex_);
    insert_hook_ = std::move(hook);
}

void Pipeline::set_traversal_hook(UserHook hook) {
    std::lock_guard lock(hook_mutex_);
    traversal_hook_ = std::move(hook);
}

}  // namespace graphrec
