#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "schelling/dynamics.hpp"
#include "schelling/io.hpp"
#include "test_util.hpp"

using namespace schelling;
using testutil::from_string;
using testutil::random_config;

namespace {

bool oracle_matches(const RingEngine& engine) {
    const OracleState o = recompute_oracle(engine.config(), engine.params());
    if (o.harmony != engine.harmony()) return false;
    for (int u = 0; u < engine.params().n; ++u)
        if (o.counts[u] != engine.count_at(u)) return false;
    return o.unhappyAlpha == engine.unhappy_sorted(NodeType::ALPHA) &&
           o.unhappyBeta == engine.unhappy_sorted(NodeType::BETA);
}

int alpha_count(const RingConfig& c) {
    int k = 0;
    for (auto t : c.type) k += t == NodeType::ALPHA ? 1 : 0;
    return k;
}

// Brute-force single-flip acceptance for the simple model: the node keeps at
// least as many same-type neighbours after changing type.
bool flip_accepted_brute(const RingConfig& config, const ModelParams& params, int u) {
    RingConfig post = config;
    post.type[u] = star(post.type[u]);
    return same_type_count(post, u, params.w) >= same_type_count(config, u, params.w);
}

} // namespace

TEST_CASE("init_random is seed determined and balanced") {
    ModelParams params(100000, 10, Rational(2, 5));
    auto a = make_ring_engine(params, ModelKind::STANDARD, 42);
    auto b = make_ring_engine(params, ModelKind::STANDARD, 42);
    a.init_random();
    b.init_random();
    CHECK(a.config().type == b.config().type);

    auto c = make_ring_engine(params, ModelKind::STANDARD, 43);
    c.init_random();
    CHECK(a.config().type != c.config().type);

    double meanFraction = 0.0;
    for (int seed = 0; seed < 100; ++seed) {
        auto e = make_ring_engine(params, ModelKind::STANDARD, 1000 + seed);
        e.init_random();
        meanFraction += static_cast<double>(alpha_count(e.config())) / params.n;
    }
    meanFraction /= 100;
    CHECK(std::abs(meanFraction - 0.5) < 3.0 / (2.0 * std::sqrt(static_cast<double>(params.n))));
}

TEST_CASE("initial unhappy fraction matches the binomial tail") {
    // A node is unhappy iff strictly more than (2w+1)(1-tau) of its neighbourhood
    // is opposite-typed; over iid fair types that tail is b(2w, 1/2) at
    // floor((2w+1)(1-tau)) + 1.
    struct Cell {
        int w;
        Rational tau;
    };
    for (const Cell& cell : {Cell{20, Rational(2, 5)}, Cell{60, Rational(3, 10)}}) {
        const int n = 10000;
        const int seeds = cell.w == 60 ? 500 : 60;  // thin tail at w=60 needs volume
        ModelParams params(n, cell.w, cell.tau);
        const Rational oneMinus = Rational(1, 1) - cell.tau;
        const int h = static_cast<int>(floor_mul(oneMinus, 2 * cell.w + 1)) + 1;
        const double exact = testutil::binom_half_tail(2 * cell.w, h);
        std::int64_t unhappyTotal = 0;
        for (int seed = 0; seed < seeds; ++seed) {
            auto e = make_ring_engine(params, ModelKind::STANDARD, 7000 + seed);
            e.init_random();
            unhappyTotal += e.unhappy_count(NodeType::ALPHA) + e.unhappy_count(NodeType::BETA);
        }
        const double samples = static_cast<double>(seeds) * n;
        const double fraction = unhappyTotal / samples;
        const double sigma = std::sqrt(exact * (1.0 - exact) / samples);
        CHECK(std::abs(fraction - exact) <= 3.0 * sigma);
    }
}

TEST_CASE("legal_swap hand cases") {
    // tau=7/10, w=1: adjacent unhappy opposite pair where each would lose its
    // only same-type neighbour.
    ModelParams params(7, 1, Rational(7, 10));
    RingConfig c = from_string("AABBABA");
    CHECK(same_type_count(c, 1, 1) == 2);  // unhappy (T=3)
    CHECK(same_type_count(c, 2, 1) == 2);  // unhappy
    CHECK_FALSE(legal_swap(c, params, 1, 2));

    // Same shape with the pair far apart is legal.
    RingConfig d = from_string("AABABBB");
    CHECK(legal_swap(d, params, 1, 4));

    CHECK_THROWS_AS(legal_swap(c, params, 2, 1), std::invalid_argument);  // types reversed
    CHECK_THROWS_AS(legal_swap(c, params, 1, 1), std::invalid_argument);
}

TEST_CASE("legal_swap is automatic for tau <= 1/2") {
    SplitMix64 rng(31);
    ModelParams params(50, 2, Rational(2, 5));
    for (int rep = 0; rep < 100; ++rep) {
        RingConfig c = random_config(50, rng);
        const OracleState o = recompute_oracle(c, params);
        for (int u : o.unhappyAlpha)
            for (int v : o.unhappyBeta) CHECK(legal_swap(c, params, u, v));
    }
}

TEST_CASE("count-based legality equals the post-swap reference, exhaustively") {
    // n=9, w=1: every config, every opposite-type pair, several tau.
    for (const Rational& tau : {Rational(2, 5), Rational(1, 2), Rational(7, 10), Rational(1, 1)}) {
        ModelParams params(9, 1, tau);
        for (int mask = 0; mask < (1 << 9); ++mask) {
            RingConfig c;
            for (int i = 0; i < 9; ++i)
                c.type.push_back((mask >> i) & 1 ? NodeType::BETA : NodeType::ALPHA);
            const OracleState o = recompute_oracle(c, params);
            for (int u = 0; u < 9; ++u) {
                if (c.type[u] != NodeType::ALPHA) continue;
                for (int v = 0; v < 9; ++v) {
                    if (c.type[v] != NodeType::BETA) continue;
                    const int d = std::abs(u - v);
                    const int overlap = std::min(d, 9 - d) <= 1 ? 1 : 0;
                    const bool fast = o.counts[u] + o.counts[v] + overlap <= 2 * 1 + 2;
                    CHECK(fast == legal_swap(c, params, u, v));
                }
            }
        }
    }
}

TEST_CASE("standard steps match the full recompute oracle") {
    ModelParams params(1000, 5, Rational(2, 5));
    auto engine = make_ring_engine(params, ModelKind::STANDARD, 777);
    engine.init_random();
    REQUIRE(oracle_matches(engine));
    const int initialAlpha = alpha_count(engine.config());

    std::int64_t lastHarmony = engine.harmony();
    bool terminated = false;
    for (int step = 1; step <= 10000 && !terminated; ++step) {
        const StepResult r = engine.step_standard();
        switch (r.outcome) {
            case StepOutcome::SWAPPED:
                CHECK(engine.harmony() >= lastHarmony + 2);
                lastHarmony = engine.harmony();
                break;
            case StepOutcome::BLOCKED:
                FAIL("tau <= 1/2 must never block");
                break;
            default:
                terminated = true;
                break;
        }
        if (step % 1000 == 0) REQUIRE(oracle_matches(engine));
    }
    REQUIRE(oracle_matches(engine));
    CHECK(alpha_count(engine.config()) == initialAlpha);
}

TEST_CASE("simple steps match the oracle and the brute-force flip rule") {
    ModelParams params(9, 1, Rational(7, 10));
    for (int mask = 0; mask < (1 << 9); ++mask) {
        RingConfig c;
        for (int i = 0; i < 9; ++i)
            c.type.push_back((mask >> i) & 1 ? NodeType::BETA : NodeType::ALPHA);
        const OracleState o = recompute_oracle(c, params);
        for (int u = 0; u < 9; ++u) {
            const bool fast = 2 * params.w + 2 - o.counts[u] >= o.counts[u];
            CHECK(fast == flip_accepted_brute(c, params, u));
        }
    }

    ModelParams big(1000, 3, Rational(2, 5));
    auto engine = make_ring_engine(big, ModelKind::SIMPLE, 888);
    engine.init_random();
    std::int64_t lastHarmony = engine.harmony();
    for (;;) {
        const StepResult r = engine.step_simple();
        if (r.outcome == StepOutcome::NO_UNHAPPY) break;
        REQUIRE(r.outcome == StepOutcome::FLIPPED);  // tau <= 1/2 never blocks
        CHECK(engine.harmony() >= lastHarmony + 2);
        lastHarmony = engine.harmony();
    }
    REQUIRE(oracle_matches(engine));
    CHECK(engine.unhappy_count(NodeType::ALPHA) == 0);
    CHECK(engine.unhappy_count(NodeType::BETA) == 0);
}

TEST_CASE("blocked standard attempts advance the stage and change nothing") {
    ModelParams params(60, 1, Rational(7, 10));
    auto engine = make_ring_engine(params, ModelKind::STANDARD, 2024, true);
    engine.init_random();
    bool sawBlocked = false;
    for (int i = 0; i < 500 && !sawBlocked; ++i) {
        const RingConfig before = engine.config();
        const std::int64_t stageBefore = engine.stage();
        const std::size_t rowsBefore = engine.trace().events.size();
        const StepResult r = engine.step_standard();
        if (r.outcome == StepOutcome::NO_UNHAPPY_PAIR) break;
        CHECK(engine.stage() == stageBefore + 1);
        if (r.outcome == StepOutcome::BLOCKED) {
            sawBlocked = true;
            CHECK(engine.config().type == before.type);
            CHECK(engine.trace().events.size() == rowsBefore);
        } else {
            CHECK(engine.trace().events.size() == rowsBefore + 2);
        }
    }
    CHECK(sawBlocked);
}

TEST_CASE("no unhappy nodes means immediate termination") {
    ModelParams params(200, 2, Rational(1, 100));  // T=1: every node is happy
    auto engine = make_ring_engine(params, ModelKind::STANDARD, 5);
    engine.init_random();
    const StepResult r = engine.step_standard();
    CHECK(r.outcome == StepOutcome::NO_UNHAPPY_PAIR);
    CHECK(engine.stage() == 0);
    const RunResult rr = run(engine, StopCondition{});
    CHECK(rr.reason == StopReason::TERMINATED);
    CHECK(rr.stages == 0);
}

TEST_CASE("run to termination below one half") {
    ModelParams params(2000, 10, Rational(2, 5));
    for (int seed : {1, 2, 3}) {
        auto engine = make_ring_engine(params, ModelKind::STANDARD, seed);
        engine.init_random();
        const RunResult r = run(engine, StopCondition{});
        CHECK(r.reason == StopReason::TERMINATED);
        // Standard termination: no pair can form (one side drained). The other
        // side may legitimately strand a few unhappy nodes.
        CHECK(std::min(engine.unhappy_count(NodeType::ALPHA), engine.unhappy_count(NodeType::BETA)) == 0);
        CHECK(r.events <= static_cast<std::int64_t>(params.n) * params.window());
        REQUIRE(oracle_matches(engine));

        auto simple = make_ring_engine(params, ModelKind::SIMPLE, seed);
        simple.init_random();
        const RunResult rs = run(simple, StopCondition{});
        CHECK(rs.reason == StopReason::TERMINATED);
        // Simple termination is the both-empty condition: zero unhappy nodes.
        CHECK(simple.unhappy_count(NodeType::ALPHA) + simple.unhappy_count(NodeType::BETA) == 0);
        CHECK(rs.events <= static_cast<std::int64_t>(params.n) * params.window());
    }
}

TEST_CASE("simple model above one half reaches a monochrome ring") {
    ModelParams params(500, 10, Rational(3, 5));
    for (int seed : {11, 12}) {
        auto engine = make_ring_engine(params, ModelKind::SIMPLE, seed);
        engine.init_random();
        const RunResult r = run(engine, default_stop(params, ModelKind::SIMPLE));
        REQUIRE(r.reason == StopReason::TERMINATED);
        CHECK(engine.boundary_count() == 0);
    }
}

TEST_CASE("run rejects a stop condition that can never fire") {
    ModelParams params(100, 2, Rational(3, 5));
    auto engine = make_ring_engine(params, ModelKind::STANDARD, 1);
    engine.init_random();
    CHECK_THROWS_AS(run(engine, StopCondition{}), std::domain_error);
}

TEST_CASE("standard model above one half segregates and then rotates") {
    ModelParams params(2000, 10, Rational(3, 5));
    auto engine = make_ring_engine(params, ModelKind::STANDARD, 31);
    engine.init_random();
    const RunResult r = run(engine, default_stop(params));
    REQUIRE(r.reason == StopReason::SEGREGATED);
    REQUIRE(engine.boundary_count() == 2);
    const int alphaTotal = alpha_count(engine.config());

    // Locate the ALPHA interval start: the unique u with type[u-1]=B, type[u]=A.
    const auto alpha_start = [&]() {
        for (int u = 0; u < params.n; ++u)
            if (engine.config().at(u - 1) == NodeType::BETA && engine.config().at(u) == NodeType::ALPHA)
                return u;
        return -1;
    };
    int start = alpha_start();
    REQUIRE(start >= 0);
    for (int probe = 0; probe < 300; ++probe) {
        engine.step_standard();
        CHECK(engine.boundary_count() == 2);  // segregation survives every attempt
        CHECK(alpha_count(engine.config()) == alphaTotal);
        const int now = alpha_start();
        const int d = std::abs(now - start);
        CHECK(std::min(d, params.n - d) <= 1);  // interval shifts by at most one
        start = now;
    }
}

TEST_CASE("recompute oracle on hand configs") {
    ModelParams params(10, 1, Rational(1, 2));
    const OracleState mono = recompute_oracle(from_string("AAAAAAAAAA"), params);
    CHECK(mono.unhappyAlpha.empty());
    CHECK(mono.unhappyBeta.empty());
    CHECK(mono.harmony == 30);

    const OracleState alt = recompute_oracle(from_string("ABABABABAB"), params);
    CHECK(alt.unhappyAlpha.size() == 5);
    CHECK(alt.unhappyBeta.size() == 5);
    CHECK(alt.harmony == 10);
}

TEST_CASE("traces are reproducible and seed sensitive") {
    ModelParams params(300, 4, Rational(2, 5));
    const auto run_trace = [&](std::uint64_t seed) {
        auto engine = make_ring_engine(params, ModelKind::STANDARD, seed, true);
        engine.init_random();
        run(engine, StopCondition{});
        std::ostringstream out;
        trace_write(out, engine.trace());
        return out.str();
    };
    const std::string a = run_trace(1234);
    CHECK(a == run_trace(1234));
    CHECK(a != run_trace(1235));

    std::istringstream in(a);
    const Trace t = trace_read(in);
    CHECK(t.stop == StopReason::TERMINATED);
    for (std::size_t i = 1; i < t.events.size(); ++i)
        CHECK(t.events[i - 1].stage <= t.events[i].stage);
}

TEST_CASE("multi-cycle topology confines neighbourhoods to cycles") {
    MultiCycleTopology topo(24, 6);
    CHECK(topo.node_at(0, -1) == 5);
    CHECK(topo.node_at(5, 1) == 0);
    CHECK(topo.node_at(7, -2) == 11);
    CHECK(topo.node_at(23, 1) == 18);
    CHECK_THROWS_AS(MultiCycleTopology(25, 6), std::domain_error);

    // Engine on disjoint cycles never lets a flip leak across a cycle border.
    ModelParams params(60, 1, Rational(2, 5));
    CycleEngine engine(params, MultiCycleTopology(60, 6), ModelKind::STANDARD, 9);
    engine.init_random();
    RingConfig before = engine.config();
    engine.flip(0);
    int changedCount = 0;
    for (int u = 0; u < 60; ++u) {
        const bool touched = engine.count_at(u) != recompute_oracle(before, params,
                                                    MultiCycleTopology(60, 6)).counts[u] ||
                             engine.config().type[u] != before.type[u];
        if (touched) {
            ++changedCount;
            CHECK(u / 6 == 0);  // all within cycle 0
        }
    }
    CHECK(changedCount >= 1);
    const OracleState o = recompute_oracle(engine.config(), params, MultiCycleTopology(60, 6));
    CHECK(o.harmony == engine.harmony());
    for (int u = 0; u < 60; ++u) CHECK(o.counts[u] == engine.count_at(u));
}
