#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "schelling/dynamics.hpp"
#include "schelling/ring.hpp"
#include "schelling/rng.hpp"

namespace schelling {

struct Run {
    int start = 0;
    int length = 0;
    NodeType type = NodeType::ALPHA;
};

using RunList = std::vector<Run>;

// Maximal circular runs, clockwise from the smallest run-start index.
inline RunList runs(const RingConfig& config) {
    const int n = config.n();
    RunList out;
    int s = -1;
    for (int i = 0; i < n; ++i) {
        if (config.type[i] != config.at(i - 1)) {
            s = i;
            break;
        }
    }
    if (s < 0) {
        out.push_back({0, n, config.type[0]});
        return out;
    }
    int covered = 0;
    int cursor = s;
    while (covered < n) {
        int len = 1;
        while (len < n && config.at(cursor + len) == config.at(cursor)) ++len;
        out.push_back({cursor, len, config.at(cursor)});
        cursor = wrap(cursor + len, n);
        covered += len;
    }
    return out;
}

// Length of the maximal run containing u.
inline int run_containing(const RingConfig& config, int u) {
    const int n = config.n();
    if (u < 0 || u >= n) throw std::invalid_argument("run_containing: index out of range");
    const NodeType t = config.type[u];
    int len = 1;
    int left = u;
    while (len < n && config.at(left - 1) == t) {
        --left;
        ++len;
    }
    int right = u;
    while (len < n && config.at(right + 1) == t) {
        ++right;
        ++len;
    }
    return len;
}

// Runs of length at least w+1: long enough that interior nodes of the matching
// type can never become unhappy again.
inline RunList firewalls(const RingConfig& config, int w) {
    RunList all = runs(config);
    RunList out;
    for (const Run& r : all)
        if (r.length >= w + 1) out.push_back(r);
    return out;
}

struct StableInterval {
    int start = 0;
    NodeType type = NodeType::ALPHA;
};

// All starts a such that [a, a+w] holds at least ceil(tauPrime*(2w+1)) nodes of
// one type. A start satisfying both types (possible only for small tauPrime)
// yields two entries, ALPHA first.
inline std::vector<StableInterval> stable_intervals(const RingConfig& config, int w,
                                                    const Rational& tauPrime) {
    if (tauPrime.num <= 0 || tauPrime > Rational(1, 1))
        throw std::domain_error("stable_intervals: tauPrime must be in (0, 1]");
    const int n = config.n();
    if (w + 1 > n) throw std::domain_error("stable_intervals: window exceeds ring");
    const int threshold = static_cast<int>(ceil_mul(tauPrime, 2 * std::int64_t{w} + 1));
    std::vector<StableInterval> out;
    int alpha = 0;
    for (int i = 0; i <= w; ++i) alpha += config.type[i] == NodeType::ALPHA ? 1 : 0;
    for (int a = 0; a < n; ++a) {
        if (alpha >= threshold) out.push_back({a, NodeType::ALPHA});
        if (w + 1 - alpha >= threshold) out.push_back({a, NodeType::BETA});
        alpha -= config.type[a] == NodeType::ALPHA ? 1 : 0;
        alpha += config.at(a + w + 1) == NodeType::ALPHA ? 1 : 0;
    }
    return out;
}

enum class BiasClass { NORMAL, HIGH, BORDERLINE };

// Smallest odd theta strictly above (1-2tau)(2w+1): the minimal attainable
// high-bias modulus (window bias always has the parity of 2w+1).
inline int borderline_bias_theta(const ModelParams& params) {
    if (!(params.tau < Rational(1, 2))) throw std::domain_error("bias classes need tau < 1/2");
    const std::int64_t p = params.tau.num, q = params.tau.den;
    const std::int64_t c = (q - 2 * p) * params.window();  // bound = c/q
    std::int64_t m = c / q + 1;
    if (m % 2 == 0) ++m;
    return static_cast<int>(m);
}

inline BiasClass bias_class_of(int theta, const ModelParams& params) {
    const std::int64_t p = params.tau.num, q = params.tau.den;
    if (!(params.tau < Rational(1, 2))) throw std::domain_error("bias classes need tau < 1/2");
    const std::int64_t mod = theta < 0 ? -theta : theta;
    if (mod * q <= (q - 2 * p) * params.window()) return BiasClass::NORMAL;
    return mod == borderline_bias_theta(params) ? BiasClass::BORDERLINE : BiasClass::HIGH;
}

// Per-node bias classification, sliding window in O(n).
inline std::vector<BiasClass> classify_bias(const RingConfig& config, const ModelParams& params) {
    if (!(params.tau < Rational(1, 2))) throw std::domain_error("classify_bias: tau must be < 1/2");
    const int n = config.n();
    std::vector<BiasClass> out(n);
    int theta = 0;
    for (int d = -params.w; d <= params.w; ++d) theta += type_sign(config.at(d));
    for (int u = 0; u < n; ++u) {
        out[u] = bias_class_of(theta, params);
        theta -= type_sign(config.at(u - params.w));
        theta += type_sign(config.at(u + params.w + 1));
    }
    return out;
}

// The paper's floor-based subinterval split of [a, b] with b-a = length-1:
// I(1:k) = [a, a+floor(D/k)], I(j:k) = [a+floor((j-1)D/k)+1, a+floor(jD/k)];
// fromRight reflects the index: I(j:k)- = I(k-j+1:k).
inline IntervalRef split_interval(const IntervalRef& interval, int j, int k, bool fromRight) {
    if (k < 1 || j < 1 || j > k) throw std::invalid_argument("split_interval: need 1 <= j <= k");
    if (interval.length < k) throw std::invalid_argument("split_interval: interval shorter than k");
    if (fromRight) j = k - j + 1;
    const std::int64_t D = interval.length - 1;
    const std::int64_t lo = j == 1 ? 0 : D * (j - 1) / k + 1;
    const std::int64_t hi = D * j / k;
    return {static_cast<int>(interval.start + lo), static_cast<int>(hi - lo + 1)};
}

namespace detail {

inline int alpha_count_in(const RingConfig& config, const IntervalRef& iv) {
    int k = 0;
    for (int i = 0; i < iv.length; ++i) k += config.at(iv.start + i) == NodeType::ALPHA ? 1 : 0;
    return k;
}

} // namespace detail

// Smooth_{k,eps}(u): the window bias decays linearly toward zero at the probe
// nodes v_{+-j} (clause 1), and the alpha-proportions of the inner subintervals
// stay within eps of the neighbourhood's own proportion (clause 2).
inline bool is_smooth(const RingConfig& config, int u, const ModelParams& params, int k,
                      const Rational& eps) {
    if (k < 2 || k % 2 != 0) throw std::invalid_argument("is_smooth: k must be even and >= 2");
    if (eps.num <= 0) throw std::invalid_argument("is_smooth: eps must be positive");
    const int w = params.w;
    const int M = params.window();
    const int thetaU = bias(config, u, w);
    if (bias_class_of(thetaU, params) == BiasClass::NORMAL)
        throw std::domain_error("is_smooth: node does not have high bias");
    const int s = thetaU < 0 ? -1 : 1;
    const std::int64_t rho = s * static_cast<std::int64_t>(thetaU);

    const IntervalRef left{wrap(u - M, config.n()), M + 1};   // [u-(2w+1), u]
    const IntervalRef right{wrap(u, config.n()), M + 1};      // [u, u+(2w+1)]

    // Clause 1: |Theta(N(v_j)) - s*rho*(k-j)/k| / w < eps, probing both sides.
    for (int j = 1; j <= k; ++j) {
        const IntervalRef rj = split_interval(right, j, k, false);
        const int vPlus = wrap(rj.start + rj.length - 1, config.n());
        const IntervalRef lj = split_interval(left, j, k, true);
        const int vMinus = wrap(lj.start, config.n());
        for (int v : {vPlus, vMinus}) {
            // |theta*k - s*rho*(k-j)| * eps.den < eps.num * w * k, exactly.
            const std::int64_t lhs = static_cast<std::int64_t>(bias(config, v, w)) * k -
                                     s * rho * (k - j);
            const std::int64_t mod = lhs < 0 ? -lhs : lhs;
            if (mod * eps.den >= eps.num * static_cast<std::int64_t>(w) * k) return false;
        }
    }

    // Clause 2: subinterval alpha-proportions within [theta-eps, theta+eps],
    // where theta = alphas(N(u)) / (2w+1).
    const std::int64_t alphaU = (M + thetaU) / 2;
    for (int j = 1; j <= k / 2; ++j) {
        for (const IntervalRef iv : {split_interval(left, j, k, true),
                                     split_interval(right, j, k, false)}) {
            const std::int64_t x = detail::alpha_count_in(config, iv);
            // theta - eps <= x/len <= theta + eps, cross-multiplied by len*M*eps.den.
            const std::int64_t lenM = static_cast<std::int64_t>(iv.length) * M;
            const std::int64_t lhs = x * M * eps.den;
            const std::int64_t center = alphaU * iv.length * eps.den;
            const std::int64_t slack = eps.num * lenM;
            if (lhs < center - slack || lhs > center + slack) return false;
        }
    }
    return true;
}

inline bool is_completely_segregated(const RingConfig& config) { return runs(config).size() <= 2; }

struct RunLengthStats {
    std::vector<int> sorted;  // sampled run lengths, ascending
    double mean = 0.0;

    // Nearest-rank quantile over the sample, q in [0, 1].
    int quantile(double q) const {
        if (sorted.empty()) throw std::logic_error("quantile of empty sample");
        const auto idx = static_cast<std::size_t>(q * (sorted.size() - 1) + 0.5);
        return sorted[std::min(idx, sorted.size() - 1)];
    }

    double tail_fraction(double threshold) const {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), threshold);
        return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
    }
};

// Node-weighted run-length sample: sampling nodes uniformly weights each run by
// its length, matching "u chosen uniformly at random belongs to a run of length...".
inline RunLengthStats run_length_stats(const RingConfig& config, int samples, SplitMix64& rng) {
    if (samples < 1) throw std::invalid_argument("run_length_stats: samples must be >= 1");
    RunLengthStats stats;
    stats.sorted.reserve(samples);
    double total = 0.0;
    for (int i = 0; i < samples; ++i) {
        const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n())));
        const int len = run_containing(config, u);
        stats.sorted.push_back(len);
        total += len;
    }
    std::sort(stats.sorted.begin(), stats.sorted.end());
    stats.mean = total / samples;
    return stats;
}

// Exact node-weighted tail: the probability that a uniform node lies in a run
// strictly longer than the threshold.
inline double node_weighted_tail(const RunList& list, double threshold) {
    std::int64_t n = 0, hit = 0;
    for (const Run& r : list) {
        n += r.length;
        if (r.length > threshold) hit += r.length;
    }
    return static_cast<double>(hit) / static_cast<double>(n);
}

// Exact node-weighted quantile (nearest rank over nodes).
inline int node_weighted_quantile(RunList list, double q) {
    std::sort(list.begin(), list.end(), [](const Run& a, const Run& b) { return a.length < b.length; });
    std::int64_t n = 0;
    for (const Run& r : list) n += r.length;
    const auto rank = static_cast<std::int64_t>(q * (n - 1) + 0.5);
    std::int64_t seen = 0;
    for (const Run& r : list) {
        seen += r.length;
        if (seen > rank) return r.length;
    }
    return list.back().length;
}

} // namespace schelling
