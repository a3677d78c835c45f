#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphrec/scoring.hpp"

namespace graphrec {

// The external engine's ranked list, rank 1 first.
struct OriginalResult {
    std::vector<std::string> items;
    std::optional<std::vector<double>> engine_scores;  // parallel to items
};

enum class BaseScores {
    automatic,  // engine scores when supplied, positions otherwise
    positions,
    engine,
};

struct RerankRequest {
    std::string user;
    OriginalResult original;
    double alpha = 0.0;  // importance factor: 0 keeps the original order, 1 ranks by recommendations
    std::vector<ScoredItem> recommendations;
    BaseScores base = BaseScores::automatic;
};

struct RerankResult {
    std::vector<std::string> items;
    std::vector<double> final_scores;  // parallel to items, each in [0, 1]
};

// Linear rank scores: (N-1-i)/(N-1), or 1.0 for a single item. Throws ValidationError on empty input.
std::vector<double> normalize_positions(const OriginalResult& original);

// Min-max scaling to [0, 1]; all-equal inputs map to 1.0.
std::vector<double> min_max_normalize(const std::vector<double>& values);

/// Reorders the original list by (1-alpha)*base + alpha*rec, where rec is the
/// recommendation raw score min-max scaled over the items present in the list
/// (absent items get 0). Ties keep their original relative order, so the output
/// is always a permutation of the input.
RerankResult rerank(const RerankRequest& request);

// Identity result with the position base scores; the fallback when recommendations are unavailable.
RerankResult passthrough(const OriginalResult& original, BaseScores base = BaseScores::automatic);

}  // namespace graphrec
