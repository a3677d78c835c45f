#include "graphrec/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace graphrec {

namespace {

void validate_original(const OriginalResult& original) {
    if (original.items.empty()) throw ValidationError("original result list is empty");
    std::unordered_set<std::string_view> seen;
    for (const auto& item : original.items) {
        if (!seen.insert(item).second) throw ValidationError("duplicate item in original list: " + item);
    }
    if (original.engine_scores) {
        if (original.engine_scores->size() != original.items.size())
            throw ValidationError("engine_scores length does not match items");
        for (double s : *original.engine_scores)
            if (!std::isfinite(s)) throw ValidationError("engine_scores must be finite");
    }
}

std::vector<double> base_scores(const OriginalResult& original, BaseScores mode) {
    bool use_engine = mode == BaseScores::engine || (mode == BaseScores::automatic && original.engine_scores);
    if (!use_engine) return normalize_positions(original);
    if (!original.engine_scores) throw ValidationError("engine base scores requested but none supplied");
    return min_max_normalize(*original.engine_scores);
}

}  // namespace

std::vector<double> normalize_positions(const OriginalResult& original) {
    const std::size_t n = original.items.size();
    if (n == 0) throw ValidationError("original result list is empty");
    if (n == 1) return {1.0};
    std::vector<double> out(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(n - 1 - i) / denom;
    return out;
}

std::vector<double> min_max_normalize(const std::vector<double>& values) {
    if (values.empty()) return {};
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo;
    const double max = *hi;
    std::vector<double> out(values.size(), 1.0);
    if (max == min) return out;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - min) / (max - min);
    return out;
}

RerankResult rerank(const RerankRequest& request) {
    if (!(request.alpha >= 0.0 && request.alpha <= 1.0))
        throw ValidationError("alpha must be in [0, 1]");
    const OriginalResult& original = request.original;
    validate_original(original);
    const std::size_t n = original.items.size();
    std::vector<double> base = base_scores(original, request.base);

    // Recommendation scores are compared as raw scores e^log_score, min-max scaled
    // over the candidates. Scaling is done relative to the max in log space so
    // that large counts do not overflow.
    std::unordered_map<std::string_view, double> rec_log;
    for (const auto& s : request.recommendations) {
        auto [it, inserted] = rec_log.try_emplace(s.item, s.log_score);
        if (!inserted) it->second = std::max(it->second, s.log_score);
    }
    std::vector<std::optional<double>> cand(n);
    double lmin = INFINITY;
    double lmax = -INFINITY;
    for (std::size_t i = 0; i < n; ++i) {
        auto it = rec_log.find(original.items[i]);
        if (it == rec_log.end() || !std::isfinite(it->second)) continue;
        cand[i] = it->second;
        lmin = std::min(lmin, it->second);
        lmax = std::max(lmax, it->second);
    }
    std::vector<double> rec(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!cand[i]) continue;
        if (lmax == lmin) {
            rec[i] = 1.0;
            continue;
        }
        // (e^l - e^lmin) / (e^lmax - e^lmin), divided through by e^lmax.
        const double m = lmin - lmax;
        const double v = std::exp(m) * std::expm1(*cand[i] - lmin) / -std::expm1(m);
        rec[i] = std::clamp(v, 0.0, 1.0);
    }

    std::vector<double> final_score(n);
    for (std::size_t i = 0; i < n; ++i)
        final_score[i] = std::clamp((1.0 - request.alpha) * base[i] + request.alpha * rec[i], 0.0, 1.0);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return final_score[a] > final_score[b]; });

    RerankResult result;
    result.items.reserve(n);
    result.final_scores.reserve(n);
    for (std::size_t k : order) {
        result.items.push_back(original.items[k]);
        result.final_scores.push_back(final_score[k]);
    }
    return result;
}

RerankResult passthrough(const OriginalResult& original, BaseScores base) {
    validate_original(original);
    return RerankResult{original.items, base_scores(original, base)};
}

}  // namespace graphrec
