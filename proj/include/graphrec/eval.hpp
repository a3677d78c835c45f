#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "graphrec/graph_store.hpp"
#include "graphrec/rerank.hpp"
#include "graphrec/scoring.hpp"

namespace graphrec::eval {

// ---------------------------------------------------------------------------
// Train/test splitting

enum class SplitMode {
    single_cut,   // one cut time for everyone: train = ts <= cut_ts, test = ts > cut_ts
    random_time,  // per sampled user, a cut drawn from that user's own action times
};

struct SplitSpec {
    Timestamp cut_ts = 0;
    std::size_t sample_size = 100;
    std::uint64_t seed = 1;
    std::size_t repetitions = 1;
    SplitMode mode = SplitMode::single_cut;

    void validate() const;
};

struct EvalSplit {
    std::vector<InteractionEvent> train_events;
    std::vector<InteractionEvent> test_events;
    GraphData train;
    std::vector<std::string> sampled_users;
    // Per sampled user: distinct test items not linked to the user in training.
    std::map<std::string, std::set<std::string>> heldout;
    // Per sampled user: items already linked in training; never counted as predictions.
    std::map<std::string, std::set<std::string>> known;
    // random_time only: the user's cut, used as the traversal's as_of.
    std::map<std::string, Timestamp> as_of;
    std::size_t eligible_users = 0;
};

/// Splits events and samples users uniformly without replacement among those
/// with a non-empty held-out set. Throws ValidationError when fewer users are
/// eligible than requested.
EvalSplit split_and_sample(std::span<const InteractionEvent> events, const SplitSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics

// Fraction of the held-out items found among the top |heldout| recommendations.
double hit_rate(std::span<const ScoredItem> ranked, const std::set<std::string>& heldout);
double hit_rate(const RecommendationList& list, const std::set<std::string>& heldout);

struct PredictionPair {
    double predicted = 0.0;
    double actual = 0.0;
};

double rmse(std::span<const PredictionPair> pairs);
double mae(std::span<const PredictionPair> pairs);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    double precision = 0.0;
    double recall = 0.0;
};

ConfusionCounts confusion(const std::set<std::string>& recommended, const std::set<std::string>& used,
                          const std::set<std::string>& universe);

// ---------------------------------------------------------------------------
// Parameter sweep

struct SweepGrid {
    std::vector<Timestamp> time_frames{0};  // training window length in seconds; 0 = all history
    std::vector<std::optional<std::size_t>> usage_windows{25, 50, 75, 100, 125, 150, 175, 200};
    std::vector<int> depths{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<Weighting> weightings{std::begin(kAllWeightings), std::end(kAllWeightings)};

    void validate() const;
    std::size_t size() const {
        return time_frames.size() * usage_windows.size() * depths.size() * weightings.size();
    }
};

struct SweepRow {
    Timestamp time_frame = 0;
    std::optional<std::size_t> usage_window;
    int depth = 0;
    Weighting weighting = Weighting::constant;
    double mean_hit_rate = 0.0;
    double stddev = 0.0;
    std::size_t users = 0;
    std::size_t repetitions = 0;
};

// Rows sorted best first. The OpenMP and serial versions produce identical rows.
std::vector<SweepRow> sweep(std::span<const InteractionEvent> events, const SplitSpec& spec,
                            const SweepGrid& grid);
std::vector<SweepRow> sweep_serial(std::span<const InteractionEvent> events, const SplitSpec& spec,
                                   const SweepGrid& grid);

inline constexpr std::string_view kSweepCsvHeader = "t,n,d,w,mean_hit_rate,stddev,users,repetitions";
std::string sweep_csv(std::span<const SweepRow> rows);

// Hit rate of one user's recommendations after dropping items the user already had.
double heldout_hit_rate(const RecommendationList& list, const std::set<std::string>& heldout,
                        const std::set<std::string>& known);

// ---------------------------------------------------------------------------
// Importance-factor schedule and click positions

struct ScheduleSpec {
    std::vector<double> factors{0.0, 0.3, 0.5, 0.6, 0.9, 1.0};
    Timestamp bucket_seconds = 600;
    std::uint64_t seed = 1;

    void validate() const;
};

double method_for_bucket(Timestamp ts, const ScheduleSpec& schedule);

struct SearchLogEntry {
    Timestamp ts = 0;
    std::string user;
    std::string query;
    std::vector<std::string> shown;
    std::string clicked;
    std::string method;
    std::size_t click_position = 0;  // 1-based index of clicked within shown
};

// Validates and fills click_position. Throws ValidationError if clicked is not shown.
SearchLogEntry search_log_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SearchLogEntry& entry);

enum class ClickGrouping { method, alpha };

struct ClickRow {
    std::string group;
    double mean_position = 0.0;
    std::size_t count = 0;
};

// Rows sorted by group label; alpha grouping maps each entry's ts through the schedule.
std::vector<ClickRow> click_position_report(std::span<const SearchLogEntry> logs, ClickGrouping grouping,
                                            const ScheduleSpec& schedule = {});
std::string click_report_csv(std::span<const ClickRow> rows);

/// Offline stand-in for the online click experiment: each held-out item of a
/// sampled user is hidden in a list of random catalogue items ordered newest
/// first, the list is re-ranked with the user's recommendations at `alpha`,
/// and the item's 1-based position is recorded.
struct ClickSimulation {
    double mean_position = 0.0;
    std::size_t clicks = 0;
};

ClickSimulation simulate_clicks(std::span<const InteractionEvent> events, const SplitSpec& spec,
                                const ScoringParams& params, double alpha, std::size_t list_size);

// ---------------------------------------------------------------------------
// Synthetic logs

struct SyntheticSpec {
    std::size_t communities = 2;
    std::size_t users_per = 50;
    std::size_t items_per = 100;
    std::size_t interactions_per_user = 30;
    double crossover = 0.05;
    std::uint64_t seed = 1;
    Timestamp start_ts = 1'420'070'400;  // 2015-01-01
    Timestamp step_seconds = 60;

    void validate() const;
};

std::string synthetic_user(std::size_t community, std::size_t index);
std::string synthetic_item(std::size_t community, std::size_t index);
// Community index encoded in a synthetic id, or nullopt for foreign ids.
std::optional<std::size_t> synthetic_community(std::string_view id);

// Timestamps strictly increase along the stream.
std::vector<InteractionEvent> generate_synthetic(const SyntheticSpec& spec);

// Cut time leaving `train_fraction` of the (time-sorted) events in training.
Timestamp quantile_cut(std::span<const InteractionEvent> events, double train_fraction);

}  // namespace graphrec::eval
