#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "graphrec/graph_store.hpp"

namespace graphrec {

// How an item's discovered-user count n becomes the exponent of its score.
enum class Weighting { constant, log, normalized, log_normalized };

std::string_view to_string(Weighting w);
std::optional<Weighting> parse_weighting(std::string_view name);
inline constexpr Weighting kAllWeightings[] = {Weighting::constant, Weighting::log, Weighting::normalized,
                                               Weighting::log_normalized};

inline constexpr int kMinDepth = 1;
inline constexpr int kMaxDepth = 8;

struct ScoringParams {
    int depth = 3;
    std::optional<std::size_t> max_usages;  // per-user window of most recent edges; empty = all
    Weighting weighting = Weighting::constant;
    std::optional<Timestamp> as_of;         // only edges whose first interaction is <= as_of
    std::optional<std::size_t> max_results;

    // Throws ValidationError.
    void validate() const;
    bool operator==(const ScoringParams&) const = default;
};

struct ScoreInputs {
    std::string item;
    std::uint32_t user_count = 0;    // distinct discovered users adjacent to the item
    std::uint64_t distance_sum = 0;  // sum of those users' BFS distances
    std::vector<int> distances;      // ascending

    bool operator==(const ScoreInputs&) const = default;
};

struct ScoredItem {
    std::string item;
    double log_score = 0.0;            // n_eff - ln(distance_sum + 1)
    std::optional<double> raw_score;   // e^n_eff / (distance_sum + 1), when finite

    bool operator==(const ScoredItem&) const = default;
};

struct RecommendationList {
    std::string user;
    Timestamp generated_at = 0;
    ScoringParams params;
    std::vector<ScoredItem> items;  // log_score descending, item ascending

    bool operator==(const RecommendationList&) const = default;
};

/// Breadth-first search from `user` over edges passing the as_of and per-user
/// max_usages filters, visiting nodes up to params.depth edges away. For each
/// discovered item, collects the discovered users adjacent to it and their
/// distances (the root user sits at 0). Unknown users yield an empty map.
std::map<std::string, ScoreInputs> traverse(const GraphData& graph, std::string_view user,
                                            const ScoringParams& params);

// n_eff = n, ln(1+n), n/n_max or ln(1+n)/ln(1+n_max); max_user_count is n_max.
double effective_count(std::uint32_t n, Weighting w, std::uint32_t max_user_count);
ScoredItem item_score(const ScoreInputs& inputs, Weighting w, std::uint32_t max_user_count);

// Sort order used by every recommendation list.
bool ranks_before(const ScoredItem& a, const ScoredItem& b);

RecommendationList recommend(const GraphData& graph, std::string_view user, const ScoringParams& params);
RecommendationList recommend(const GraphStore& store, std::string_view user, const ScoringParams& params);

// Batch scoring over many users; the OpenMP version must match the serial one exactly.
std::vector<RecommendationList> recommend_many(const GraphData& graph, std::span<const std::string> users,
                                               const ScoringParams& params);
std::vector<RecommendationList> recommend_many_serial(const GraphData& graph,
                                                      std::span<const std::string> users,
                                                      const ScoringParams& params);

nlohmann::json params_to_json(const ScoringParams& p);
ScoringParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RecommendationList& list);
RecommendationList recommendation_list_from_json(const nlohmann::json& j);

}  // namespace graphrec
