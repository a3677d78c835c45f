#include "graphrec/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace graphrec::eval {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// First k entries of `pool` become a uniform sample without replacement.
template <class T>
void partial_shuffle(std::vector<T>& pool, std::size_t k, std::mt19937_64& rng) {
    k = std::min(k, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

GraphData build_graph(std::span<const InteractionEvent> events) {
    GraphData g;
    for (const auto& e : events) g.upsert(e);
    return g;
}

void sample_users(std::vector<std::string> eligible, std::size_t k, std::uint64_t seed,
                  std::vector<std::string>& out) {
    std::mt19937_64 rng(seed);
    partial_shuffle(eligible, k, rng);
    out.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.begin(), out.end());
}

[[noreturn]] void shortfall(std::size_t eligible, std::size_t wanted) {
    throw ValidationError("only " + std::to_string(eligible) + " eligible users for a sample of " +
                          std::to_string(wanted) + " (short by " + std::to_string(wanted - eligible) + ")");
}

}  // namespace

void SplitSpec::validate() const {
    if (sample_size < 1) throw ValidationError("sample_size must be >= 1");
    if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
}

EvalSplit split_and_sample(std::span<const InteractionEvent> events, const SplitSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (events.empty()) throw ValidationError("no events to split");
    for (const auto& e : events) validate(e);

    EvalSplit split;
    if (spec.mode == SplitMode::single_cut) {
        auto [lo, hi] = std::minmax_element(events.begin(), events.end(),
                                            [](const auto& a, const auto& b) { return a.ts < b.ts; });
        if (spec.cut_ts < lo->ts || spec.cut_ts > hi->ts)
            throw ValidationError("cut time outside the event time range");
        for (const auto& e : events) (e.ts <= spec.cut_ts ? split.train_events : split.test_events).push_back(e);
        split.train = build_graph(split.train_events);

        std::map<std::string, std::set<std::string>> test_items;
        for (const auto& e : split.test_events) test_items[e.user].insert(e.item);

        std::map<std::string, std::set<std::string>> heldout;
        std::map<std::string, std::set<std::string>> known;
        std::vector<std::string> eligible;
        std::size_t excluded = 0;
        for (auto& [user, items] : test_items) {
            std::set<std::string> have;
            if (auto u = split.train.find_user(user))
                for (EdgeIndex e : split.train.user_edges(*u)) have.insert(split.train.item_id(split.train.edge(e).item));
            std::set<std::string> h;
            std::set_difference(items.begin(), items.end(), have.begin(), have.end(), std::inserter(h, h.end()));
            if (h.empty()) {
                ++excluded;
                continue;
            }
            eligible.push_back(user);
            heldout.emplace(user, std::move(h));
            known.emplace(user, std::move(have));
        }
        if (excluded > 0) spdlog::debug("split: {} test users without new items excluded from sampling", excluded);
        split.eligible_users = eligible.size();
        if (eligible.size() < spec.sample_size) shortfall(eligible.size(), spec.sample_size);
        sample_users(std::move(eligible), spec.sample_size, seed, split.sampled_users);
        for (const auto& u : split.sampled_users) {
            split.heldout[u] = std::move(heldout[u]);
            split.known[u] = std::move(known[u]);
        }
        return split;
    }

    // random_time: the whole log is the graph; each sampled user is evaluated
    // as of a cut drawn from the times at which they first touched an item.
    split.train_events.assign(events.begin(), events.end());
    split.train = build_graph(events);
    std::map<std::string, std::map<std::string, Timestamp>> first_use;
    for (const auto& e : events) {
        auto [it, inserted] = first_use[e.user].try_emplace(e.item, e.ts);
        if (!inserted) it->second = std::min(it->second, e.ts);
    }
    std::map<std::string, std::vector<Timestamp>> cuts;
    std::vector<std::string> eligible;
    for (const auto& [user, items] : first_use) {
        std::set<Timestamp> times;
        for (const auto& [item, ts] : items) times.insert(ts);
        if (times.size() < 2) continue;
        cuts.emplace(user, std::vector<Timestamp>(times.begin(), std::prev(times.end())));
        eligible.push_back(user);
    }
    split.eligible_users = eligible.size();
    if (eligible.size() < spec.sample_size) shortfall(eligible.size(), spec.sample_size);
    sample_users(std::move(eligible), spec.sample_size, seed, split.sampled_users);

    std::mt19937_64 rng(splitmix64(seed));
    for (const auto& u : split.sampled_users) {
        const auto& options = cuts[u];
        std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
        Timestamp cut = options[pick(rng)];
        split.as_of[u] = cut;
        for (const auto& [item, ts] : first_use[u]) (ts <= cut ? split.known[u] : split.heldout[u]).insert(item);
    }
    for (const auto& e : events) {
        auto it = split.as_of.find(e.user);
        if (it != split.as_of.end() && e.ts > it->second) split.test_events.push_back(e);
    }
    return split;
}

// ---------------------------------------------------------------------------
// Metrics

double hit_rate(std::span<const ScoredItem> ranked, const std::set<std::string>& heldout) {
    if (heldout.empty()) return 0.0;
    const std::size_t k = heldout.size();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
        if (heldout.count(ranked[i].item)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(k);
}

double hit_rate(const RecommendationList& list, const std::set<std::string>& heldout) {
    return hit_rate(std::span<const ScoredItem>(list.items), heldout);
}

double heldout_hit_rate(const RecommendationList& list, const std::set<std::string>& heldout,
                        const std::set<std::string>& known) {
    std::vector<ScoredItem> fresh;
    fresh.reserve(std::min(list.items.size(), heldout.size()));
    for (const auto& s : list.items) {
        if (known.count(s.item)) continue;
        fresh.push_back(s);
        if (fresh.size() == heldout.size()) break;
    }
    return hit_rate(std::span<const ScoredItem>(fresh), heldout);
}

double rmse(std::span<const PredictionPair> pairs) {
    if (pairs.empty()) throw ValidationError("rmse of an empty set");
    double sum = 0.0;
    for (const auto& p : pairs) sum += (p.predicted - p.actual) * (p.predicted - p.actual);
    return std::sqrt(sum / static_cast<double>(pairs.size()));
}

double mae(std::span<const PredictionPair> pairs) {
    if (pairs.empty()) throw ValidationError("mae of an empty set");
    double sum = 0.0;
    for (const auto& p : pairs) sum += std::abs(p.predicted - p.actual);
    return sum / static_cast<double>(pairs.size());
}

ConfusionCounts confusion(const std::set<std::string>& recommended, const std::set<std::string>& used,
                          const std::set<std::string>& universe) {
    ConfusionCounts c;
    for (const auto& item : universe) {
        bool r = recommended.count(item) > 0;
        bool u = used.count(item) > 0;
        if (r && u) ++c.tp;
        else if (r) ++c.fp;
        else if (u) ++c.fn;
        else ++c.tn;
    }
    c.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    c.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    return c;
}

// ---------------------------------------------------------------------------
// Sweep

void SweepGrid::validate() const {
    if (time_frames.empty() || usage_windows.empty() || depths.empty() || weightings.empty())
        throw ValidationError("sweep grid axes must be non-empty");
    for (Timestamp t : time_frames)
        if (t < 0) throw ValidationError("time frames must be >= 0");
    for (const auto& n : usage_windows)
        if (n && *n < 1) throw ValidationError("usage windows must be >= 1");
    for (int d : depths)
        if (d < kMinDepth || d > kMaxDepth) throw ValidationError("depths must be in [1, 8]");
}

namespace {

struct Repetition {
    EvalSplit split;
    std::vector<GraphData> windowed;  // one per nonzero time frame, parallel to grid.time_frames
};

struct Task {
    std::size_t rep, t, n, d, w;
};

struct SweepPlan {
    std::vector<Repetition> reps;
    std::vector<Task> tasks;
};

SweepPlan plan_sweep(std::span<const InteractionEvent> events, const SplitSpec& spec, const SweepGrid& grid) {
    spec.validate();
    grid.validate();
    if (spec.mode == SplitMode::random_time &&
        std::any_of(grid.time_frames.begin(), grid.time_frames.end(), [](Timestamp t) { return t != 0; }))
        throw ValidationError("time frames are only supported with a single cut");

    SweepPlan plan;
    plan.reps.resize(spec.repetitions);
    for (std::size_t r = 0; r < spec.repetitions; ++r) {
        Repetition& rep = plan.reps[r];
        rep.split = split_and_sample(events, spec, spec.seed + r);
        rep.windowed.resize(grid.time_frames.size());
        for (std::size_t t = 0; t < grid.time_frames.size(); ++t) {
            Timestamp frame = grid.time_frames[t];
            if (frame == 0) continue;
            std::vector<InteractionEvent> recent;
            for (const auto& e : rep.split.train_events)
                if (e.ts > spec.cut_ts - frame) recent.push_back(e);
            rep.windowed[t] = build_graph(recent);
        }
    }
    for (std::size_t r = 0; r < spec.repetitions; ++r)
        for (std::size_t t = 0; t < grid.time_frames.size(); ++t)
            for (std::size_t n = 0; n < grid.usage_windows.size(); ++n)
                for (std::size_t d = 0; d < grid.depths.size(); ++d)
                    for (std::size_t w = 0; w < grid.weightings.size(); ++w) plan.tasks.push_back({r, t, n, d, w});
    return plan;
}

std::vector<double> run_task(const SweepPlan& plan, const SweepGrid& grid, const Task& task) {
    const Repetition& rep = plan.reps[task.rep];
    const GraphData& graph = grid.time_frames[task.t] == 0 ? rep.split.train : rep.windowed[task.t];
    ScoringParams params;
    params.depth = grid.depths[task.d];
    params.max_usages = grid.usage_windows[task.n];
    params.weighting = grid.weightings[task.w];

    std::vector<double> out;
    out.reserve(rep.split.sampled_users.size());
    for (const auto& user : rep.split.sampled_users) {
        ScoringParams p = params;
        if (auto it = rep.split.as_of.find(user); it != rep.split.as_of.end()) p.as_of = it->second;
        RecommendationList list = recommend(graph, user, p);
        out.push_back(heldout_hit_rate(list, rep.split.heldout.at(user), rep.split.known.at(user)));
    }
    return out;
}

std::vector<SweepRow> assemble(const SweepPlan& plan, const SweepGrid& grid, const SplitSpec& spec,
                               const std::vector<std::vector<double>>& results) {
    const std::size_t points = grid.size();
    std::vector<std::vector<double>> per_point(points);
    for (std::size_t k = 0; k < plan.tasks.size(); ++k) {
        const Task& t = plan.tasks[k];
        std::size_t idx = (((t.t * grid.usage_windows.size()) + t.n) * grid.depths.size() + t.d) *
                              grid.weightings.size() + t.w;
        auto& bucket = per_point[idx];
        bucket.insert(bucket.end(), results[k].begin(), results[k].end());
    }

    std::vector<SweepRow> rows;
    rows.reserve(points);
    std::size_t idx = 0;
    for (std::size_t t = 0; t < grid.time_frames.size(); ++t)
        for (std::size_t n = 0; n < grid.usage_windows.size(); ++n)
            for (std::size_t d = 0; d < grid.depths.size(); ++d)
                for (std::size_t w = 0; w < grid.weightings.size(); ++w, ++idx) {
                    const auto& v = per_point[idx];
                    SweepRow row{grid.time_frames[t], grid.usage_windows[n], grid.depths[d], grid.weightings[w],
                                 0.0, 0.0, spec.sample_size, spec.repetitions};
                    if (!v.empty()) {
                        double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                        double ss = 0.0;
                        for (double x : v) ss += (x - mean) * (x - mean);
                        row.mean_hit_rate = mean;
                        row.stddev = std::sqrt(ss / static_cast<double>(v.size()));
                    }
                    rows.push_back(row);
                }

    auto window_key = [](const std::optional<std::size_t>& n) {
        return n ? *n : std::numeric_limits<std::size_t>::max();
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const SweepRow& a, const SweepRow& b) {
        if (a.mean_hit_rate != b.mean_hit_rate) return a.mean_hit_rate > b.mean_hit_rate;
        if (a.time_frame != b.time_frame) return a.time_frame < b.time_frame;
        if (a.usage_window != b.usage_window) return window_key(a.usage_window) < window_key(b.usage_window);
        if (a.depth != b.depth) return a.depth < b.depth;
        return static_cast<int>(a.weighting) < static_cast<int>(b.weighting);
    });
    return rows;
}

}  // namespace

std::vector<SweepRow> sweep(std::span<const InteractionEvent> events, const SplitSpec& spec,
                            const SweepGrid& grid) {
    SweepPlan plan = plan_sweep(events, spec, grid);
    std::vector<std::vector<double>> results(plan.tasks.size());
    const auto n = static_cast<std::ptrdiff_t>(plan.tasks.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < n; ++k) results[k] = run_task(plan, grid, plan.tasks[k]);
    return assemble(plan, grid, spec, results);
}

std::vector<SweepRow> sweep_serial(std::span<const InteractionEvent> events, const SplitSpec& spec,
                                   const SweepGrid& grid) {
    SweepPlan plan = plan_sweep(events, spec, grid);
    std::vector<std::vector<double>> results;
    results.reserve(plan.tasks.size());
    for (const Task& task : plan.tasks) results.push_back(run_task(plan, grid, task));
    return assemble(plan, grid, spec, results);
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::string out(kSweepCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.time_frame) + ',' + (r.usage_window ? std::to_string(*r.usage_window) : "all") +
               ',' + std::to_string(r.depth) + ',' + std::string(to_string(r.weighting)) + ',' +
               fixed6(r.mean_hit_rate) + ',' + fixed6(r.stddev) + ',' + std::to_string(r.users) + ',' +
               std::to_string(r.repetitions) + '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Schedule and click logs

void ScheduleSpec::validate() const {
    if (factors.empty()) throw ValidationError("schedule needs at least one factor");
    for (double a : factors)
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("schedule factors must be in [0, 1]");
    if (bucket_seconds <= 0) throw ValidationError("bucket_seconds must be > 0");
}

double method_for_bucket(Timestamp ts, const ScheduleSpec& schedule) {
    schedule.validate();
    Timestamp bucket = ts / schedule.bucket_seconds;
    if (ts < 0 && ts % schedule.bucket_seconds != 0) --bucket;
    std::uint64_t h = splitmix64(schedule.seed ^ splitmix64(static_cast<std::uint64_t>(bucket)));
    return schedule.factors[h % schedule.factors.size()];
}

SearchLogEntry search_log_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("search log entry is not an object");
    SearchLogEntry e;
    auto ts = j.find("ts");
    if (ts == j.end() || !ts->is_number_integer()) throw ValidationError("missing or non-integer 'ts'");
    e.ts = ts->get<Timestamp>();
    if (e.ts < 0) throw ValidationError("negative timestamp");
    auto str = [&](const char* name, bool required) -> std::string {
        auto it = j.find(name);
        if (it == j.end()) {
            if (required) throw ValidationError(std::string("missing field '") + name + "'");
            return {};
        }
        if (!it->is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
        return it->get<std::string>();
    };
    e.user = str("user", true);
    if (e.user.empty()) throw ValidationError("empty user id");
    e.query = str("query", false);
    e.clicked = str("clicked", true);
    e.method = str("method", true);
    if (e.method.empty()) throw ValidationError("empty method label");
    auto shown = j.find("shown");
    if (shown == j.end() || !shown->is_array()) throw ValidationError("missing 'shown' array");
    for (const auto& s : *shown) {
        if (!s.is_string()) throw ValidationError("'shown' must contain strings");
        e.shown.push_back(s.get<std::string>());
    }
    auto it = std::find(e.shown.begin(), e.shown.end(), e.clicked);
    if (it == e.shown.end()) throw ValidationError("clicked item was not shown");
    e.click_position = static_cast<std::size_t>(it - e.shown.begin()) + 1;
    return e;
}

json to_json(const SearchLogEntry& e) {
    return json{{"ts", e.ts},           {"user", e.user},       {"query", e.query},
                {"shown", e.shown},     {"clicked", e.clicked}, {"method", e.method},
                {"click_position", e.click_position}};
}

std::vector<ClickRow> click_position_report(std::span<const SearchLogEntry> logs, ClickGrouping grouping,
                                            const ScheduleSpec& schedule) {
    std::map<std::string, std::pair<double, std::size_t>> groups;
    for (const auto& e : logs) {
        if (e.click_position == 0) continue;
        std::string key = grouping == ClickGrouping::method ? e.method
                                                            : format_double(method_for_bucket(e.ts, schedule));
        auto& [sum, count] = groups[key];
        sum += static_cast<double>(e.click_position);
        ++count;
    }
    std::vector<ClickRow> rows;
    for (const auto& [key, agg] : groups)
        rows.push_back(ClickRow{key, agg.first / static_cast<double>(agg.second), agg.second});
    return rows;
}

std::string click_report_csv(std::span<const ClickRow> rows) {
    std::string out = "group,mean_click_position,count\n";
    for (const auto& r : rows) out += r.group + ',' + fixed6(r.mean_position) + ',' + std::to_string(r.count) + '\n';
    return out;
}

ClickSimulation simulate_clicks(std::span<const InteractionEvent> events, const SplitSpec& spec,
                                const ScoringParams& params, double alpha, std::size_t list_size) {
    if (spec.mode != SplitMode::single_cut) throw ValidationError("click simulation needs a single cut");
    if (list_size < 2) throw ValidationError("list_size must be >= 2");
    params.validate();

    // Newest first: items ordered by when they first appeared anywhere in the log.
    std::unordered_map<std::string, Timestamp> first_seen;
    for (const auto& e : events) {
        auto [it, inserted] = first_seen.try_emplace(e.item, e.ts);
        if (!inserted) it->second = std::min(it->second, e.ts);
    }
    std::vector<std::string> universe;
    universe.reserve(first_seen.size());
    for (const auto& [item, ts] : first_seen) universe.push_back(item);
    std::sort(universe.begin(), universe.end());

    double total = 0.0;
    std::size_t clicks = 0;
    for (std::size_t r = 0; r < spec.repetitions; ++r) {
        EvalSplit split = split_and_sample(events, spec, spec.seed + r);
        std::mt19937_64 rng(splitmix64(spec.seed + r) ^ 0x5eedc11c);
        for (const auto& user : split.sampled_users) {
            RecommendationList recs = recommend(split.train, user, params);
            for (const auto& target : split.heldout.at(user)) {
                std::vector<std::string> others;
                others.reserve(universe.size());
                for (const auto& item : universe)
                    if (item != target) others.push_back(item);
                std::size_t extra = std::min(list_size - 1, others.size());
                partial_shuffle(others, extra, rng);
                others.resize(extra);
                others.push_back(target);
                std::sort(others.begin(), others.end(), [&](const std::string& a, const std::string& b) {
                    Timestamp ta = first_seen.at(a);
                    Timestamp tb = first_seen.at(b);
                    if (ta != tb) return ta > tb;
                    return a < b;
                });

                RerankRequest req;
                req.user = user;
                req.original.items = std::move(others);
                req.alpha = alpha;
                req.recommendations = recs.items;
                req.base = BaseScores::positions;
                RerankResult res = rerank(req);
                auto pos = std::find(res.items.begin(), res.items.end(), target) - res.items.begin();
                total += static_cast<double>(pos + 1);
                ++clicks;
            }
        }
    }
    return ClickSimulation{clicks ? total / static_cast<double>(clicks) : 0.0, clicks};
}

// ---------------------------------------------------------------------------
// Synthetic logs

void SyntheticSpec::validate() const {
    if (communities < 1 || users_per < 1 || items_per < 1 || interactions_per_user < 1)
        throw ValidationError("synthetic counts must be >= 1");
    if (!(crossover >= 0.0 && crossover < 1.0)) throw ValidationError("crossover must be in [0, 1)");
    if (step_seconds < 1 || start_ts < 0) throw ValidationError("bad synthetic time base");
}

std::string synthetic_user(std::size_t community, std::size_t index) {
    return "c" + std::to_string(community) + "u" + std::to_string(index);
}

std::string synthetic_item(std::size_t community, std::size_t index) {
    return "c" + std::to_string(community) + "i" + std::to_string(index);
}

std::optional<std::size_t> synthetic_community(std::string_view id) {
    if (id.size() < 3 || id[0] != 'c') return std::nullopt;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), value);
    if (ec != std::errc() || ptr == id.data() + 1 || ptr == id.data() + id.size()) return std::nullopt;
    if (*ptr != 'u' && *ptr != 'i') return std::nullopt;
    return value;
}

std::vector<InteractionEvent> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    // One slot per (user, interaction), shuffled so users interleave in time.
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    slots.reserve(spec.communities * spec.users_per * spec.interactions_per_user);
    for (std::size_t c = 0; c < spec.communities; ++c)
        for (std::size_t u = 0; u < spec.users_per; ++u)
            for (std::size_t k = 0; k < spec.interactions_per_user; ++k) slots.emplace_back(c, u);
    std::shuffle(slots.begin(), slots.end(), rng);

    std::bernoulli_distribution cross(spec.crossover);
    std::bernoulli_distribution download(0.2);
    std::uniform_int_distribution<std::size_t> item_pick(0, spec.items_per - 1);
    std::uniform_int_distribution<std::size_t> other_pick(0, spec.communities > 1 ? spec.communities - 2 : 0);

    std::vector<InteractionEvent> out;
    out.reserve(slots.size());
    Timestamp ts = spec.start_ts;
    for (const auto& [community, user] : slots) {
        std::size_t pool = community;
        if (spec.communities > 1 && cross(rng)) {
            pool = other_pick(rng);
            if (pool >= community) ++pool;
        }
        out.push_back(InteractionEvent{ts, synthetic_user(community, user), synthetic_item(pool, item_pick(rng)),
                                       download(rng) ? "download" : "view"});
        ts += spec.step_seconds;
    }
    return out;
}

Timestamp quantile_cut(std::span<const InteractionEvent> events, double train_fraction) {
    if (events.empty()) throw ValidationError("no events");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train_fraction must be in (0, 1)");
    std::vector<Timestamp> ts;
    ts.reserve(events.size());
    for (const auto& e : events) ts.push_back(e.ts);
    std::sort(ts.begin(), ts.end());
    auto k = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ts.size())));
    k = std::clamp<std::size_t>(k, 1, ts.size()) - 1;
    return ts[k];
}

}  // namespace graphrec::eval
