#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "schelling/rational.hpp"

namespace schelling {

// Natural-log-domain probability; -infinity encodes probability zero so that
// tails for windows in the thousands never underflow.
struct LogProb {
    double value = -std::numeric_limits<double>::infinity();

    bool is_zero() const { return std::isinf(value) && value < 0; }
    double prob() const { return std::exp(value); }
};

inline LogProb log_prob_zero() { return LogProb{}; }

// log P(X >= h) for X ~ Binomial(N, p), via log-gamma summation around the
// largest term. Accurate to ~1e-12 relative error on the probability.
inline LogProb binom_tail_log(int N, const Rational& p, int h) {
    if (N < 0 || h < 0 || h > N + 1) throw std::invalid_argument("binom_tail_log: h out of range");
    if (p.num <= 0 || !(p < Rational(1, 1)))
        throw std::domain_error("binom_tail_log: p must be in (0,1)");
    if (h == 0) return {0.0};
    if (h == N + 1) return log_prob_zero();
    const double lp = std::log(static_cast<double>(p.num)) - std::log(static_cast<double>(p.den));
    const double lq = std::log(static_cast<double>(p.den - p.num)) -
                      std::log(static_cast<double>(p.den));
    const double lgN = std::lgamma(N + 1.0);
    std::vector<double> logs;
    logs.reserve(N - h + 1);
    double maxLog = -std::numeric_limits<double>::infinity();
    for (int i = h; i <= N; ++i) {
        const double lt = lgN - std::lgamma(i + 1.0) - std::lgamma(N - i + 1.0) + i * lp +
                          (N - i) * lq;
        logs.push_back(lt);
        if (lt > maxLog) maxLog = lt;
    }
    double s = 0.0;
    for (double lt : logs) s += std::exp(lt - maxLog);
    return {maxLog + std::log(s)};
}

// Probability that an anchored window stays stable: P(X >= h) for
// X ~ Binomial(w, 1/2), h the smallest integer >= (2w+1)tau - 1, exactly.
inline LogProb p_stab(int w, const Rational& tau) {
    if (w < 1) throw std::domain_error("p_stab: w must be >= 1");
    if (tau.num <= 0 || !(tau < Rational(1, 1))) throw std::domain_error("p_stab: tau in (0,1)");
    std::int64_t h = ceil_mul(tau, 2 * std::int64_t{w} + 1) - 1;  // ceil(x-1) = ceil(x)-1
    if (h > w + 1) h = w + 1;                                     // tail is empty beyond N+1
    return binom_tail_log(w, Rational(1, 2), static_cast<int>(h));
}

// Probability that a node is unhappy in a random configuration: P(Y >= h') for
// Y ~ Binomial(2w, 1/2), h' = floor((2w+1)(1-tau)) + 1, exactly.
inline LogProb p_unhap(int w, const Rational& tau) {
    if (w < 1) throw std::domain_error("p_unhap: w must be >= 1");
    if (tau.num <= 0 || !(tau < Rational(1, 1))) throw std::domain_error("p_unhap: tau in (0,1)");
    const std::int64_t h = floor_mul(Rational(1, 1) - tau, 2 * std::int64_t{w} + 1) + 1;
    return binom_tail_log(2 * w, Rational(1, 2), static_cast<int>(h));
}

// log(P_unhap / P_stab); +infinity when the stability probability vanishes.
inline double ratio_exact(int w, const Rational& tau) {
    const LogProb un = p_unhap(w, tau);
    const LogProb st = p_stab(w, tau);
    if (st.is_zero()) return std::numeric_limits<double>::infinity();
    return un.value - st.value;
}

// The exponential-rate approximation of the same log ratio:
// w * [(1-2tau) ln(1/2-tau) - 2(1-tau) ln(1-tau)].
inline double ratio_asymptotic(int w, const Rational& tau) {
    if (!(tau > Rational(1, 4)) || !(tau < Rational(1, 2)))
        throw std::domain_error("ratio_asymptotic: tau must be in (1/4, 1/2)");
    const double t = static_cast<double>(tau.num) / static_cast<double>(tau.den);
    return w * ((1.0 - 2.0 * t) * std::log(0.5 - t) - 2.0 * (1.0 - t) * std::log(1.0 - t));
}

// The rate function whose unique root in (1/4, 1/2) separates the shrinking
// from the growing ratio regime.
inline double ratio_rate_bracket(double t) {
    return (1.0 - 2.0 * t) * std::log(0.5 - t) - (2.0 - 2.0 * t) * std::log(1.0 - t);
}

// Bisection for the critical tolerance parameter, the root of
// (1-2t) ln(1/2-t) = (2-2t) ln(1-t) in (1/4, 1/2).
inline double kappa(double tolerance) {
    if (!(tolerance > 0)) throw std::invalid_argument("kappa: tolerance must be positive");
    double lo = 0.25, hi = 0.49;
    double flo = ratio_rate_bracket(lo);
    for (int it = 0; it < 200 && hi - lo >= tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = ratio_rate_bracket(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Expected exponential-decay scale of the bias relaxation: d = 2/(1-2tau)^2.
inline double d_const(const Rational& tau) {
    if (!(tau < Rational(1, 2))) throw std::domain_error("d_const: tau must be < 1/2");
    const double oneMinus2t = static_cast<double>(tau.den - 2 * tau.num) /
                              static_cast<double>(tau.den);
    return 2.0 / (oneMinus2t * oneMinus2t);
}

// Concentration bound on high window bias: P(|Theta| > (1-2tau)(2w+1)) is at
// most 2 exp(-(1-2tau)^2 (2w+1)/2).
inline double hoeffding_high_bias(int w, const Rational& tau) {
    if (!(tau < Rational(1, 2))) throw std::domain_error("hoeffding_high_bias: tau < 1/2");
    const double oneMinus2t = static_cast<double>(tau.den - 2 * tau.num) /
                              static_cast<double>(tau.den);
    return 2.0 * std::exp(-oneMinus2t * oneMinus2t * (2.0 * w + 1.0) / 2.0);
}

// Geometric-series bracket for a binomial tail: when successive pmf terms
// shrink by at least a factor k past h, the tail lies between P(X=h) and
// P(X=h)/(1-k). Requires (1 + (1/p - 1)k) h > N >= h > pN > 0 and k in (0,1).
inline std::pair<LogProb, LogProb> binom_ratio_bounds(int N, const Rational& p, int h, double k) {
    if (!(k > 0.0 && k < 1.0))
        throw std::domain_error("binom_ratio_bounds: k must be in (0,1), got " + std::to_string(k));
    if (p.num <= 0 || !(p < Rational(1, 1)))
        throw std::domain_error("binom_ratio_bounds: p must be in (0,1)");
    if (h > N)
        throw std::domain_error("binom_ratio_bounds: need h <= N, got h = " + std::to_string(h));
    if (!(static_cast<std::int64_t>(h) * p.den > p.num * static_cast<std::int64_t>(N)))
        throw std::domain_error("binom_ratio_bounds: need h > p*N for a decreasing tail");
    const double pd = static_cast<double>(p.num) / static_cast<double>(p.den);
    if (!((1.0 + (1.0 / pd - 1.0) * k) * h > static_cast<double>(N)))
        throw std::domain_error(
            "binom_ratio_bounds: k too small, need (1 + (1/p - 1)k) h > N to dominate "
            "the successive-term ratio");
    const double lpmf = std::lgamma(N + 1.0) - std::lgamma(h + 1.0) - std::lgamma(N - h + 1.0) +
                        h * std::log(pd) + (N - h) * std::log1p(-pd);
    return {LogProb{lpmf}, LogProb{lpmf - std::log1p(-k)}};
}

enum class Regime { BELOW_KAPPA, AT_KAPPA, KAPPA_TO_HALF, AT_HALF_EQUIV, ABOVE_HALF };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::BELOW_KAPPA: return "below_kappa";
        case Regime::AT_KAPPA: return "at_kappa";
        case Regime::KAPPA_TO_HALF: return "kappa_to_half";
        case Regime::AT_HALF_EQUIV: return "at_half_equiv";
        case Regime::ABOVE_HALF: return "above_half";
    }
    return "unknown";
}

struct RegimeReport {
    Rational tau;
    Regime regime = Regime::BELOW_KAPPA;
    double kappaValue = 0.0;
    std::string notes;
};

// Tolerance for deciding that a rational tau sits numerically on the critical
// constant (which is irrational, so exact equality is impossible).
inline constexpr double kKappaTolerance = 1e-8;

// Places tau into one of the five qualitative regimes. The happiness threshold
// is constant (w+1) over [1/2, (w+1)/(2w+1)], so that whole interval behaves
// like tau = 1/2 and is reported as one regime.
inline RegimeReport classify_regime(const Rational& tau, int w) {
    if (w < 1) throw std::domain_error("classify_regime: w must be >= 1");
    if (tau.num < 0 || tau > Rational(1, 1))
        throw std::domain_error("classify_regime: tau must be in [0,1]");
    RegimeReport rep;
    rep.tau = tau;
    rep.kappaValue = kappa(1e-9);
    const Rational plateau(w + 1, 2 * w + 1);
    const double t = static_cast<double>(tau.num) / static_cast<double>(tau.den);
    if (tau > plateau) {
        rep.regime = Regime::ABOVE_HALF;
        rep.notes = "threshold exceeds the w+1 plateau; swaps can be blocked and "
                    "complete segregation is reachable";
    } else if (!(tau < Rational(1, 2))) {
        rep.regime = Regime::AT_HALF_EQUIV;
        rep.notes = "happiness threshold equals w+1, identical to tolerance one half";
    } else if (std::abs(t - rep.kappaValue) <= kKappaTolerance) {
        rep.regime = Regime::AT_KAPPA;
        rep.notes = "numerically at the critical constant (tolerance 1e-8)";
    } else if (t < rep.kappaValue) {
        rep.regime = Regime::BELOW_KAPPA;
        rep.notes = "static regime: most nodes start happy and little changes";
    } else {
        rep.regime = Regime::KAPPA_TO_HALF;
        rep.notes = "sorting regime: run lengths grow far beyond the window";
    }
    return rep;
}

} // namespace schelling
