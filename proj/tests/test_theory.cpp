#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <vector>

#include "schelling/theory.hpp"
#include "test_util.hpp"

using namespace schelling;
using boost::multiprecision::cpp_int;

namespace {

// Exact tail P(X >= h) for X ~ Binomial(N, a/q) as a big-integer fraction,
// evaluated to double. Independent of the log-gamma path under test.
double exact_tail(int N, std::int64_t a, std::int64_t q, int h) {
    if (h <= 0) return 1.0;
    if (h > N) return 0.0;
    const std::int64_t b = q - a;
    cpp_int C = 1;
    for (int i = 0; i < h; ++i) {
        C *= N - i;
        C /= i + 1;
    }
    cpp_int num = 0;
    cpp_int pa = 1, pb = 1;
    for (int i = 0; i < h; ++i) pa *= a;
    for (int i = 0; i < N - h; ++i) pb *= b;
    for (int i = h; i <= N; ++i) {
        num += C * pa * pb;
        if (i < N) {
            C *= N - i;
            C /= i + 1;
            pa *= a;
            pb /= b;
        }
    }
    cpp_int den = 1;
    for (int i = 0; i < N; ++i) den *= q;
    return num.convert_to<double>() / den.convert_to<double>();
}

double rate_bracket_oracle(double t) {
    return (1.0 - 2.0 * t) * std::log(0.5 - t) - (2.0 - 2.0 * t) * std::log(1.0 - t);
}

} // namespace

TEST_CASE("kappa is the bracketed root of the rate function") {
    const double k = kappa(1e-9);
    CHECK(std::abs(k - 0.353092313) <= 1e-6);
    CHECK(k < std::sqrt(2.0) / 4.0);
    CHECK(std::abs(rate_bracket_oracle(k)) < 1e-8);
    CHECK(rate_bracket_oracle(k - 1e-6) < 0);
    CHECK(rate_bracket_oracle(k + 1e-6) > 0);
    CHECK(rate_bracket_oracle(0.25) * rate_bracket_oracle(0.49) < 0);
    CHECK(std::abs(kappa(1e-3) - k) <= 5e-4);
    CHECK_THROWS_AS(kappa(0.0), std::invalid_argument);
}

TEST_CASE("binomial tail log matches hand values and edge cases") {
    CHECK(binom_tail_log(2, Rational(1, 2), 1).value ==
          doctest::Approx(std::log(0.75)).epsilon(1e-12));
    CHECK(binom_tail_log(2, Rational(1, 2), 0).value == 0.0);
    CHECK(binom_tail_log(2, Rational(1, 2), 3).is_zero());
    CHECK_THROWS_AS(binom_tail_log(2, Rational(1, 2), -1), std::invalid_argument);
    CHECK_THROWS_AS(binom_tail_log(2, Rational(1, 2), 4), std::invalid_argument);
    CHECK_THROWS_AS(binom_tail_log(2, Rational(0, 1), 1), std::domain_error);
    CHECK_THROWS_AS(binom_tail_log(2, Rational(1, 1), 1), std::domain_error);
}

TEST_CASE("binomial tail log agrees with the big-integer oracle") {
    const int sizes[] = {1, 2, 3, 5, 8, 13, 21, 34, 55, 64};
    const std::pair<int, int> ps[] = {{1, 2}, {1, 3}, {2, 5}, {9, 10}, {1, 10}};
    for (int N : sizes) {
        for (auto [a, q] : ps) {
            for (int h = 0; h <= N + 1; ++h) {
                const LogProb lt = binom_tail_log(N, Rational(a, q), h);
                if (h == N + 1) {
                    CHECK(lt.is_zero());
                    continue;
                }
                const double lex = std::log(exact_tail(N, a, q, h));
                CHECK(std::abs(lt.value - lex) <= 1e-12 * std::max(1.0, std::abs(lex)));
            }
        }
    }
}

TEST_CASE("stability probability: hand value, floor of one half, Monte Carlo") {
    // w=2, tau=2/5: threshold ceil(5*2/5) - 1 = 1, P(X>=1) over Binomial(2,1/2).
    CHECK(p_stab(2, Rational(2, 5)).value == doctest::Approx(std::log(0.75)).epsilon(1e-12));

    // tau <= 1/4 keeps the threshold at or below the median for every w.
    for (int w = 1; w <= 200; ++w) {
        CHECK(p_stab(w, Rational(1, 4)).value >= std::log(0.5) - 1e-12);
        CHECK(p_stab(w, Rational(1, 5)).value >= std::log(0.5) - 1e-12);
    }

    // Monte Carlo: anchored windows of w fair coins, w=20, tau=2/5.
    const int w = 20, reps = 100000;
    const std::int64_t h = ceil_mul(Rational(2, 5), 2 * w + 1) - 1;
    CHECK(h == 16);
    SplitMix64 rng(2024);
    int hit = 0;
    for (int r = 0; r < reps; ++r) {
        int same = 0;
        for (int i = 0; i < w; ++i) same += rng.coin() ? 1 : 0;
        hit += same >= h ? 1 : 0;
    }
    const double p = p_stab(w, Rational(2, 5)).prob();
    const double freq = static_cast<double>(hit) / reps;
    CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1.0 - p) / reps));

    CHECK_THROWS_AS(p_stab(10, Rational(0, 1)), std::domain_error);
    CHECK_THROWS_AS(p_stab(10, Rational(1, 1)), std::domain_error);
}

TEST_CASE("unhappiness probability: hand value, vanishing limit, Monte Carlo") {
    // w=1, tau=2/5: P(Y >= floor(3*3/5)+1 = 2) over Binomial(2,1/2) = 1/4.
    CHECK(p_unhap(1, Rational(2, 5)).value == doctest::Approx(std::log(0.25)).epsilon(1e-12));

    // Vanishes as w grows at tau=1/4. The integer threshold advances by 1 and 2
    // on alternating steps, so the decrease is monotone along each parity class
    // of w (stepwise monotonicity fails on every other step).
    double prevEven = 0.0, prevOdd = 0.0;
    for (int w = 10; w <= 100; ++w) {
        const double v = p_unhap(w, Rational(1, 4)).value;
        double& prev = w % 2 == 0 ? prevEven : prevOdd;
        if (w > 11) CHECK(v < prev);
        prev = v;
    }
    CHECK(prevEven < std::log(1e-6));
    CHECK(prevOdd < std::log(1e-6));

    // Monte Carlo of the defining event and of the dynamics meaning: a node
    // with 2w fair-coin neighbours is unhappy iff 1 + same < ceil((2w+1)tau).
    const int w = 20, reps = 100000;
    const Rational tau(2, 5);
    const std::int64_t T = happiness_threshold(tau, w);
    SplitMix64 rng(2025);
    int unhappy = 0;
    for (int r = 0; r < reps; ++r) {
        int same = 0;
        for (int i = 0; i < 2 * w; ++i) same += rng.coin() ? 1 : 0;
        unhappy += 1 + same < T ? 1 : 0;
    }
    const double p = p_unhap(w, tau).prob();
    const double freq = static_cast<double>(unhappy) / reps;
    CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1.0 - p) / reps));
}

TEST_CASE("tail probabilities are monotone in tau at fixed w") {
    const int w = 50;
    double prevStab = 1.0, prevUnhap = -1e30;
    for (int i = 1; i <= 99; ++i) {
        const Rational tau(i, 100);
        const double st = p_stab(w, tau).value;
        const double un = p_unhap(w, tau).value;
        if (i > 1) {
            CHECK(st <= prevStab + 1e-12);
            CHECK(un >= prevUnhap - 1e-12);
        }
        prevStab = st;
        prevUnhap = un;
    }
}

TEST_CASE("exact log ratio changes sign across the critical constant") {
    CHECK(ratio_exact(500, Rational(17, 50)) < 0.0);   // tau = 0.34 < kappa
    CHECK(ratio_exact(500, Rational(37, 100)) > 0.0);  // tau = 0.37 > kappa
    const double direct = p_unhap(500, Rational(17, 50)).value -
                          p_stab(500, Rational(17, 50)).value;
    CHECK(ratio_exact(500, Rational(17, 50)) == doctest::Approx(direct));

    // Exponential-in-w behaviour: doubling w roughly doubles the log ratio.
    const double r250 = ratio_exact(250, Rational(17, 50));
    const double r500 = ratio_exact(500, Rational(17, 50));
    CHECK(std::abs(r500 - 2.0 * r250) / 250.0 <= 0.05);
}

TEST_CASE("asymptotic ratio: root at kappa, sign agreement, slope match") {
    const double k = kappa(1e-12);
    const Rational nearK(static_cast<std::int64_t>(std::llround(k * 1e9)), 1000000000);
    CHECK(std::abs(ratio_asymptotic(1000, nearK)) < 1e-5);

    for (int i = 26; i <= 49; ++i) {
        const double t = i / 100.0;
        if (std::abs(t - k) <= 0.005) continue;
        const double ex = ratio_exact(500, Rational(i, 100));
        const double as = ratio_asymptotic(500, Rational(i, 100));
        CHECK(ex * as > 0.0);
    }

    // Finite-difference slope of the exact ratio vs the rate, within 10%.
    const Rational tau(3, 10);
    const double slope = (ratio_exact(2000, tau) - ratio_exact(1000, tau)) / 1000.0;
    const double rate = ratio_asymptotic(1, tau);
    CHECK(std::abs(slope - rate) <= 0.1 * std::abs(rate));

    CHECK_THROWS_AS(ratio_asymptotic(100, Rational(1, 5)), std::domain_error);
    CHECK_THROWS_AS(ratio_asymptotic(100, Rational(1, 2)), std::domain_error);
}

TEST_CASE("decay scale constant") {
    CHECK(d_const(Rational(38, 100)) == doctest::Approx(2.0 / (0.24 * 0.24)));
    CHECK(d_const(Rational(1, 4)) == doctest::Approx(8.0));
    CHECK(d_const(Rational(0, 1)) == doctest::Approx(2.0));
    CHECK_THROWS_AS(d_const(Rational(1, 2)), std::domain_error);
}

TEST_CASE("high-bias concentration bound dominates the exact probability") {
    CHECK(hoeffding_high_bias(60, Rational(3, 10)) ==
          doctest::Approx(2.0 * std::exp(-9.68)).epsilon(1e-12));

    // Exact P(|Theta| > (1-2tau)(2w+1)) = 2 P(X > (2w+1)(1-tau)), X ~ b(2w+1, 1/2).
    for (int w : {10, 30, 60}) {
        const Rational tau(3, 10);
        const int M = 2 * w + 1;
        const std::int64_t h = floor_mul(Rational(1, 1) - tau, M) + 1;
        const double exact = 2.0 * exact_tail(M, 1, 2, static_cast<int>(h));
        CHECK(hoeffding_high_bias(w, tau) >= exact);
    }

    // Against exp(-w/d) the bound vanishes: the ratio is 2 exp(-(1-2tau)^2 (w+1)/2).
    const double d = d_const(Rational(3, 10));
    double prevRatio = 1e300;
    for (int w = 100; w <= 2000; w += 100) {
        const double ratio = hoeffding_high_bias(w, Rational(3, 10)) / std::exp(-w / d);
        CHECK(ratio < prevRatio);
        prevRatio = ratio;
    }
    CHECK(prevRatio < 1e-60);
    CHECK_THROWS_AS(hoeffding_high_bias(10, Rational(1, 2)), std::domain_error);
}

TEST_CASE("geometric tail bracket: hand case, tight case, diagnostics") {
    // N=20, p=1/2, h=14: successive-term ratio at h is (6/15); k=0.45 > 6/14.
    auto [lo, hi] = binom_ratio_bounds(20, Rational(1, 2), 14, 0.45);
    const double tail = exact_tail(20, 1, 2, 14);
    CHECK(std::exp(lo.value) <= tail * (1 + 1e-9));
    CHECK(tail <= std::exp(hi.value) * (1 + 1e-9));

    // h = N: the tail is exactly the point mass, the lower bound is tight.
    auto [lo2, hi2] = binom_ratio_bounds(20, Rational(1, 2), 20, 0.5);
    CHECK(std::exp(lo2.value) == doctest::Approx(exact_tail(20, 1, 2, 20)).epsilon(1e-9));
    CHECK(hi2.value >= lo2.value);

    CHECK_THROWS_AS(binom_ratio_bounds(20, Rational(1, 2), 14, 1.0), std::domain_error);
    CHECK_THROWS_AS(binom_ratio_bounds(20, Rational(1, 2), 14, 0.0), std::domain_error);
    CHECK_THROWS_AS(binom_ratio_bounds(20, Rational(1, 2), 9, 0.45), std::domain_error);
    CHECK_THROWS_AS(binom_ratio_bounds(20, Rational(1, 2), 21, 0.45), std::domain_error);
    CHECK_THROWS_AS(binom_ratio_bounds(20, Rational(1, 2), 11, 0.05), std::domain_error);
    try {
        binom_ratio_bounds(20, Rational(1, 2), 11, 0.05);
        CHECK(false);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("k too small") != std::string::npos);
    }
}

TEST_CASE("geometric tail bracket contains the exact tail on random valid inputs") {
    SplitMix64 rng(31337);
    int accepted = 0, attempts = 0;
    while (accepted < 1000 && attempts < 50000) {
        ++attempts;
        const int N = 2 + static_cast<int>(rng.below(59));
        const int q = 2 + static_cast<int>(rng.below(9));
        const int a = 1 + static_cast<int>(rng.below(q - 1));
        const Rational p(a, q);
        const std::int64_t hmin = floor_mul(p, N) + 1;
        if (hmin > N) continue;
        const int h = static_cast<int>(hmin + rng.below(N - hmin + 1));
        const double pd = static_cast<double>(a) / q;
        const double r0 = (static_cast<double>(N - h) / h) * pd / (1.0 - pd);
        if (r0 >= 0.9) continue;
        const double u = static_cast<double>(rng.below(1000)) / 1000.0;
        const double k = r0 + (1.0 - r0) * (0.05 + 0.9 * u);
        auto [lo, hi] = binom_ratio_bounds(N, p, h, k);
        const double tail = exact_tail(N, a, q, h);
        const double ltail = std::log(tail);
        CHECK(lo.value <= ltail + 1e-9);
        CHECK(ltail <= hi.value + 1e-9);
        ++accepted;
    }
    REQUIRE(accepted == 1000);
}

TEST_CASE("regime classification covers all five regions") {
    CHECK(classify_regime(Rational(3, 10), 60).regime == Regime::BELOW_KAPPA);
    CHECK(classify_regime(Rational(19, 50), 60).regime == Regime::KAPPA_TO_HALF);
    // (w+1)/(2w+1) = 26/51 at w=25: the boundary itself still behaves like 1/2.
    CHECK(classify_regime(Rational(26, 51), 25).regime == Regime::AT_HALF_EQUIV);
    CHECK(classify_regime(Rational(1, 2), 10).regime == Regime::AT_HALF_EQUIV);
    CHECK(classify_regime(Rational(3, 4), 2).regime == Regime::ABOVE_HALF);
    CHECK(classify_regime(Rational(0, 1), 5).regime == Regime::BELOW_KAPPA);
    CHECK(classify_regime(Rational(1, 1), 1).regime == Regime::ABOVE_HALF);

    const double k = kappa(1e-12);
    const Rational nearK(static_cast<std::int64_t>(std::llround(k * 1e9)), 1000000000);
    const RegimeReport rep = classify_regime(nearK, 100);
    CHECK(rep.regime == Regime::AT_KAPPA);
    CHECK(rep.kappaValue == doctest::Approx(0.353092313).epsilon(1e-6));
    CHECK_FALSE(rep.notes.empty());
    CHECK(to_string(rep.regime) == "at_kappa");

    CHECK_THROWS_AS(classify_regime(Rational(-1, 10), 5), std::domain_error);
    CHECK_THROWS_AS(classify_regime(Rational(11, 10), 5), std::domain_error);

    // Every regime string is distinct (used verbatim in machine-readable output).
    std::vector<std::string> names;
    for (Regime r : {Regime::BELOW_KAPPA, Regime::AT_KAPPA, Regime::KAPPA_TO_HALF,
                     Regime::AT_HALF_EQUIV, Regime::ABOVE_HALF})
        names.push_back(to_string(r));
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j) CHECK(names[i] != names[j]);
}
