#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "graphrec/scoring.hpp"
#include "oracles.hpp"

using namespace graphrec;

namespace {

GraphData small_graph() {
    GraphData g;
    g.upsert({1, "U", "A", "view"});
    g.upsert({2, "V", "A", "view"});
    g.upsert({3, "V", "B", "view"});
    return g;
}

ScoreInputs inputs(std::vector<int> distances) {
    ScoreInputs in;
    in.item = "x";
    in.user_count = static_cast<std::uint32_t>(distances.size());
    for (int d : distances) in.distance_sum += static_cast<std::uint64_t>(d);
    in.distances = std::move(distances);
    return in;
}

}  // namespace

TEST_CASE("traverse on U-A, V-A, V-B") {
    auto g = small_graph();
    ScoringParams p;
    p.depth = 3;
    auto m = traverse(g, "U", p);
    REQUIRE(m.size() == 2);
    CHECK(m.at("A").user_count == 2);
    CHECK(m.at("A").distances == std::vector<int>{0, 2});
    CHECK(m.at("B").user_count == 1);
    CHECK(m.at("B").distances == std::vector<int>{2});

    p.depth = 1;
    m = traverse(g, "U", p);
    REQUIRE(m.size() == 1);
    CHECK(m.at("A").user_count == 1);
    CHECK(m.at("A").distances == std::vector<int>{0});

    CHECK(traverse(g, "ghost", p).empty());
}

TEST_CASE("item_score examples") {
    CHECK(std::abs(*item_score(inputs({0, 2, 2}), Weighting::constant, 3).raw_score - 4.01) <= 0.01);
    CHECK(std::abs(*item_score(inputs({2, 2}), Weighting::constant, 2).raw_score - 1.47) <= 0.01);
    CHECK(*item_score(inputs({0}), Weighting::constant, 1).raw_score == doctest::Approx(std::exp(1.0)));
    CHECK(std::abs(*item_score(inputs({6, 8}), Weighting::constant, 2).raw_score - 0.4926) <= 0.0005);
}

TEST_CASE("weighting variants") {
    CHECK(effective_count(3, Weighting::constant, 5) == 3.0);
    CHECK(effective_count(3, Weighting::log, 5) == doctest::Approx(std::log(4.0)));
    CHECK(effective_count(3, Weighting::normalized, 6) == doctest::Approx(0.5));
    CHECK(effective_count(3, Weighting::log_normalized, 7) == doctest::Approx(std::log(4.0) / std::log(8.0)));
    for (auto w : kAllWeightings) {
        CHECK(parse_weighting(to_string(w)) == w);
    }
    CHECK(parse_weighting("log-normalized") == Weighting::log_normalized);
    CHECK_FALSE(parse_weighting("cubic").has_value());
}

TEST_CASE("normalized variants stay within (0, 1]") {
    for (std::uint32_t n_max = 1; n_max <= 50; ++n_max)
        for (std::uint32_t n = 1; n <= n_max; ++n)
            for (auto w : {Weighting::normalized, Weighting::log_normalized}) {
                double v = effective_count(n, w, n_max);
                CHECK(v > 0.0);
                CHECK(v <= 1.0);
            }
}

TEST_CASE("paper score table ordering") {
    // Formula column of the worked example; Item 9 evaluated directly.
    std::vector<std::pair<std::string, std::vector<int>>> rows{
        {"item01", {0, 2, 2}}, {"item02", {0, 2, 2}}, {"item03", {2, 2, 3}}, {"item04", {2, 2}},
        {"item05", {4, 2}},    {"item06", {4, 2}},    {"item07", {4, 6}},    {"item08", {4}},
        {"item09", {6, 8}},    {"item10", {6}},       {"item11", {9}}};
    std::vector<ScoredItem> scored;
    for (auto& [name, d] : rows) {
        auto in = inputs(d);
        in.item = name;
        scored.push_back(item_score(in, Weighting::constant, 3));
    }
    std::sort(scored.begin(), scored.end(), ranks_before);
    std::vector<std::string> order;
    for (const auto& s : scored) order.push_back(s.item);
    CHECK(order == std::vector<std::string>{"item01", "item02", "item03", "item04", "item05", "item06", "item07",
                                            "item08", "item09", "item10", "item11"});
    CHECK(scored[0].log_score == scored[1].log_score);
    CHECK(scored[4].log_score == scored[5].log_score);
}

TEST_CASE("recommend on the small graph") {
    auto g = small_graph();
    ScoringParams p;
    p.depth = 3;
    auto list = recommend(g, "U", p);
    REQUIRE(list.items.size() == 2);
    CHECK(list.items[0].item == "A");
    CHECK(std::abs(*list.items[0].raw_score - 2.463) <= 0.001);
    CHECK(list.items[1].item == "B");
    CHECK(std::abs(*list.items[1].raw_score - 0.906) <= 0.001);
    CHECK(list.generated_at == 3);

    CHECK(recommend(g, "ghost", p).items.empty());

    p.max_results = 1;
    CHECK(recommend(g, "U", p).items.size() == 1);
    p.max_results.reset();
    p.as_of = 100;
    CHECK(recommend(g, "U", p).generated_at == 100);
}

TEST_CASE("params validation") {
    ScoringParams p;
    p.depth = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.depth = 9;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.depth = 8;
    CHECK_NOTHROW(p.validate());
    p.max_usages = 0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("huge counts stay finite in log space") {
    ScoreInputs in;
    in.item = "x";
    in.user_count = 5000;
    in.distance_sum = 5000 * 2;
    in.distances.assign(5000, 2);
    auto s = item_score(in, Weighting::constant, 5000);
    CHECK(std::isfinite(s.log_score));
    CHECK_FALSE(s.raw_score.has_value());
    auto j = to_json(RecommendationList{"u", 0, {}, {s}});
    CHECK(j["items"][0]["raw_score"].is_null());
}

TEST_CASE("property: traversal equals the brute-force oracle") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        std::mt19937_64 rng(seed);
        auto events = oracle::random_events(rng, 12, 18, 60);
        GraphData g;
        for (const auto& e : events) g.upsert(e);
        for (int depth = 1; depth <= 8; ++depth)
            for (std::optional<std::size_t> window : {std::optional<std::size_t>{2}, std::optional<std::size_t>{5},
                                                      std::optional<std::size_t>{}})
                for (std::optional<Timestamp> as_of : {std::optional<Timestamp>{500}, std::optional<Timestamp>{}}) {
                    ScoringParams p;
                    p.depth = depth;
                    p.max_usages = window;
                    p.as_of = as_of;
                    for (int u = 0; u < 12; u += 3) {
                        std::string user = "u" + std::to_string(u);
                        CHECK(traverse(g, user, p) == oracle::score_inputs(events, user, p));
                        ++checked;
                    }
                }
    }
    CHECK(checked > 0);
}

TEST_CASE("property: log-space ordering equals direct evaluation") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> pn(1, 20), pd(0, 8);
    for (int round = 0; round < 200; ++round) {
        std::vector<ScoreInputs> batch(20);
        std::uint32_t n_max = 1;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            int n = pn(rng);
            std::vector<int> d(static_cast<std::size_t>(n));
            for (auto& x : d) x = pd(rng);
            batch[k] = inputs(d);
            batch[k].item = "i" + std::to_string(k);
            n_max = std::max(n_max, batch[k].user_count);
        }
        for (auto w : kAllWeightings)
            for (std::size_t a = 0; a < batch.size(); ++a)
                for (std::size_t b = 0; b < batch.size(); ++b) {
                    double la = item_score(batch[a], w, n_max).log_score;
                    double lb = item_score(batch[b], w, n_max).log_score;
                    double ra = oracle::direct_score(batch[a].user_count, batch[a].distance_sum, w, n_max);
                    double rb = oracle::direct_score(batch[b].user_count, batch[b].distance_sum, w, n_max);
                    if (ra > rb * (1 + 1e-12)) CHECK(la > lb);
                }
    }
}

TEST_CASE("property: monotonicity in n and distance") {
    for (std::uint32_t n = 1; n < 40; ++n)
        for (std::uint64_t d = 0; d < 40; ++d) {
            ScoreInputs a{"x", n, d, {}};
            ScoreInputs more_users{"x", n + 1, d, {}};
            ScoreInputs farther{"x", n, d + 1, {}};
            CHECK(item_score(more_users, Weighting::constant, 50).log_score >
                  item_score(a, Weighting::constant, 50).log_score);
            CHECK(item_score(farther, Weighting::constant, 50).log_score <
                  item_score(a, Weighting::constant, 50).log_score);
        }
}

TEST_CASE("property: deeper traversal never loses items") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        std::mt19937_64 rng(seed);
        auto events = oracle::random_events(rng, 20, 30, 120);
        GraphData g;
        for (const auto& e : events) g.upsert(e);
        for (std::optional<std::size_t> window : {std::optional<std::size_t>{3}, std::optional<std::size_t>{}}) {
            ScoringParams p;
            p.max_usages = window;
            p.as_of = 700;
            for (int depth = 1; depth < 8; ++depth) {
                p.depth = depth;
                auto shallow = traverse(g, "u1", p);
                p.depth = depth + 1;
                auto deep = traverse(g, "u1", p);
                for (const auto& [item, in] : shallow) CHECK(deep.count(item) == 1);
            }
        }
    }
}

TEST_CASE("property: determinism and parallel batch equals serial") {
    std::mt19937_64 rng(3);
    auto events = oracle::random_events(rng, 60, 80, 1500);
    GraphData g;
    for (const auto& e : events) g.upsert(e);
    std::vector<std::string> users;
    for (int u = 0; u < 60; ++u) users.push_back("u" + std::to_string(u));
    users.push_back("ghost");
    for (auto w : kAllWeightings) {
        ScoringParams p;
        p.depth = 4;
        p.weighting = w;
        p.max_usages = 10;
        auto a = recommend_many(g, users, p);
        auto b = recommend_many_serial(g, users, p);
        CHECK(a == b);
        CHECK(to_json(recommend(g, "u5", p)).dump() == to_json(recommend(g, "u5", p)).dump());
    }
}

TEST_CASE("recommendation lists are sorted and unique") {
    std::mt19937_64 rng(11);
    auto events = oracle::random_events(rng, 30, 40, 400);
    GraphData g;
    for (const auto& e : events) g.upsert(e);
    ScoringParams p;
    p.depth = 5;
    for (int u = 0; u < 30; ++u) {
        auto list = recommend(g, "u" + std::to_string(u), p);
        std::set<std::string> seen;
        for (std::size_t k = 0; k < list.items.size(); ++k) {
            CHECK(seen.insert(list.items[k].item).second);
            if (k > 0) CHECK(ranks_before(list.items[k - 1], list.items[k]));
        }
    }
}

TEST_CASE("recommendation list JSON round trip") {
    auto g = small_graph();
    ScoringParams p;
    p.depth = 3;
    p.max_usages = 4;
    p.weighting = Weighting::log;
    p.as_of = 10;
    auto list = recommend(g, "U", p);
    auto back = recommendation_list_from_json(to_json(list));
    CHECK(back.user == list.user);
    CHECK(back.params == list.params);
    REQUIRE(back.items.size() == list.items.size());
    for (std::size_t k = 0; k < list.items.size(); ++k) CHECK(back.items[k].item == list.items[k].item);
    CHECK(params_from_json(params_to_json(p)) == p);
}
