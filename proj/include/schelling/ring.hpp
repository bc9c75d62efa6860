#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "schelling/rational.hpp"

namespace schelling {

enum class NodeType : std::uint8_t { ALPHA = 0, BETA = 1 };

inline NodeType star(NodeType t) { return t == NodeType::ALPHA ? NodeType::BETA : NodeType::ALPHA; }

inline char type_char(NodeType t) { return t == NodeType::ALPHA ? 'A' : 'B'; }

inline NodeType type_from_char(char c) {
    if (c == 'A') return NodeType::ALPHA;
    if (c == 'B') return NodeType::BETA;
    throw std::invalid_argument("node type must be 'A' or 'B'");
}

// +1 for ALPHA, -1 for BETA; the sign convention under which bias counts ALPHA as positive.
inline int type_sign(NodeType t) { return t == NodeType::ALPHA ? 1 : -1; }

inline int wrap(std::int64_t i, int n) {
    const std::int64_t r = i % n;
    return static_cast<int>(r < 0 ? r + n : r);
}

struct RingConfig {
    std::vector<NodeType> type;

    int n() const { return static_cast<int>(type.size()); }
    NodeType at(std::int64_t i) const { return type[wrap(i, n())]; }
};

// Half-open walk of `length` nodes clockwise from `start`; may wrap.
struct IntervalRef {
    int start = 0;
    int length = 0;
};

// T = ceil(tau * (2w+1)): a node is happy iff its neighbourhood holds at least
// tau*(2w+1) nodes of its own type, and the count is an integer.
inline int happiness_threshold(const Rational& tau, int w) {
    if (w < 1) throw std::domain_error("happiness_threshold: w must be >= 1");
    if (tau.num <= 0 || tau > Rational(1, 1)) throw std::domain_error("happiness_threshold: tau must be in (0, 1]");
    return static_cast<int>(ceil_mul(tau, 2 * std::int64_t{w} + 1));
}

struct ModelParams {
    int n = 0;
    int w = 0;
    Rational tau;
    int T = 0;

    ModelParams() = default;

    ModelParams(int n_, int w_, Rational tau_) : n(n_), w(w_), tau(tau_) {
        if (w < 1) throw std::domain_error("ModelParams: w must be >= 1");
        if (n <= 2 * (2 * w + 1)) throw std::domain_error("ModelParams: n must exceed 2*(2w+1)");
        T = happiness_threshold(tau, w);
    }

    int window() const { return 2 * w + 1; }
};

// Theta over [u-w, u+w]: #ALPHA minus #BETA. Always has the parity of 2w+1.
inline int bias(const RingConfig& config, int u, int w) {
    const int n = config.n();
    if (2 * w + 1 > n) throw std::domain_error("bias: window exceeds ring");
    int theta = 0;
    for (int d = -w; d <= w; ++d) theta += type_sign(config.at(u + d));
    return theta;
}

inline int same_type_count(const RingConfig& config, int u, int w) {
    const int n = config.n();
    if (2 * w + 1 > n) throw std::domain_error("same_type_count: window exceeds ring");
    const NodeType own = config.at(u);
    int count = 0;
    for (int d = -w; d <= w; ++d) count += config.at(u + d) == own ? 1 : 0;
    return count;
}

inline bool is_happy(const RingConfig& config, int u, const ModelParams& params) {
    return same_type_count(config, u, params.w) >= params.T;
}

// Sum of same_type_count over all nodes; bounded by n*(2w+1).
inline std::int64_t harmony_index(const RingConfig& config, int w) {
    std::int64_t total = 0;
    for (int u = 0; u < config.n(); ++u) total += same_type_count(config, u, w);
    return total;
}

} // namespace schelling
