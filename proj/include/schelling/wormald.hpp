#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "schelling/dynamics.hpp"
#include "schelling/ring.hpp"
#include "schelling/rng.hpp"

namespace schelling {

// Parameters for the disjoint-cycle graph used by the mean-field analysis:
// the ring is cut into n/L cycles of length L. The census and ODE machinery
// index all 2^L per-cycle states, hence the hard cap on L.
struct MultiCycleParams {
    ModelParams base;
    int L;

    MultiCycleParams(int n, int L, int w, const Rational& tau) : base(n, w, tau), L(L) {
        if (L < 2 * w + 2)
            throw std::invalid_argument("cycle length must exceed the window: L >= 2w+2");
        if (L > 14) throw std::invalid_argument("cycle length capped at 14 (2^L state space)");
        if (n % L != 0) throw std::invalid_argument("cycle length must divide n");
    }

    std::uint32_t states() const { return 1u << L; }
};

// A cycle state seen from a node: bit i is 1 iff the node i steps to the
// right (within the node's own cycle) is of the first type.
inline std::uint32_t rotate_view(std::uint32_t v, int j, int L) {
    if (j == 0) return v;
    const std::uint32_t mask = (1u << L) - 1;
    return ((v >> j) | (v << (L - j))) & mask;
}

inline std::uint32_t node_view(const RingConfig& config, int u, int L) {
    const int base = u - (u % L);
    const int off = u - base;
    std::uint32_t v = 0;
    for (int i = 0; i < L; ++i) {
        const int p = base + (off + i) % L;
        if (config.type[p] == NodeType::ALPHA) v |= 1u << i;
    }
    return v;
}

inline std::string view_string(std::uint32_t v, int L) {
    std::string s(L, '0');
    for (int i = 0; i < L; ++i)
        if ((v >> i) & 1u) s[i] = '1';
    return s;
}

// Happiness of the node at position 0 of a view, using the within-cycle
// window of radius w (well defined because L >= 2w+2).
inline bool view_unhappy(std::uint32_t v, int L, int w, std::int64_t threshold) {
    const std::uint32_t t0 = v & 1u;
    int same = 0;
    for (int d = -w; d <= w; ++d) {
        const int i = ((d % L) + L) % L;
        same += ((v >> i) & 1u) == t0 ? 1 : 0;
    }
    return same < threshold;
}

struct StateCensus {
    int L = 0;
    std::vector<std::int64_t> zeta;
};

inline StateCensus census(const RingConfig& config, int L) {
    if (config.n() % L != 0) throw std::invalid_argument("census: L must divide n");
    StateCensus c;
    c.L = L;
    c.zeta.assign(std::size_t{1} << L, 0);
    for (int base = 0; base < config.n(); base += L) {
        const std::uint32_t v = node_view(config, base, L);
        for (int j = 0; j < L; ++j) ++c.zeta[rotate_view(v, j, L)];
    }
    return c;
}

// Sparse quadratic system for the census densities: for every acting ordered
// pair of views (both unhappy, opposite types at position 0) the entries hold
// the net per-bucket change caused by one cross-cycle swap.
struct OdeSystem {
    struct Block {
        std::uint32_t sp, spp;
        std::uint32_t begin, end;  // half-open range into entries
    };
    struct Entry {
        std::uint32_t sigma;
        int a;
    };

    int L = 0;
    std::vector<Block> blocks;
    std::vector<Entry> entries;
};

inline OdeSystem build_ode(const MultiCycleParams& prm) {
    const int L = prm.L, w = prm.base.w;
    const std::uint32_t S = prm.states();
    std::vector<std::uint8_t> unhappy(S);
    for (std::uint32_t v = 0; v < S; ++v) unhappy[v] = view_unhappy(v, L, w, prm.base.T) ? 1 : 0;

    OdeSystem sys;
    sys.L = L;
    std::vector<int> delta(S, 0);
    std::vector<std::uint32_t> touched;
    touched.reserve(4 * L);
    auto bump = [&](std::uint32_t sigma, int d) {
        if (delta[sigma] == 0) touched.push_back(sigma);
        delta[sigma] += d;
    };
    for (std::uint32_t sp = 0; sp < S; ++sp) {
        if (!unhappy[sp]) continue;
        for (std::uint32_t spp = 0; spp < S; ++spp) {
            if (!unhappy[spp] || ((sp ^ spp) & 1u) == 0) continue;
            // Swap flips the position-0 node of each cycle; every view of both
            // cycles is a rotation, re-bucketed after the flip.
            for (int j = 0; j < L; ++j) {
                bump(rotate_view(sp, j, L), -1);
                bump(rotate_view(sp ^ 1u, j, L), +1);
                bump(rotate_view(spp, j, L), -1);
                bump(rotate_view(spp ^ 1u, j, L), +1);
            }
            const auto begin = static_cast<std::uint32_t>(sys.entries.size());
            for (std::uint32_t t : touched) {
                if (delta[t] != 0) sys.entries.push_back({t, delta[t]});
                delta[t] = 0;
            }
            touched.clear();
            sys.blocks.push_back({sp, spp, begin, static_cast<std::uint32_t>(sys.entries.size())});
        }
    }
    return sys;
}

inline std::vector<double> ode_rhs(const std::vector<double>& z, const OdeSystem& sys) {
    if (z.size() != std::size_t{1} << sys.L)
        throw std::invalid_argument("ode_rhs: state size mismatch");
    for (double v : z)
        if (!std::isfinite(v)) throw std::invalid_argument("ode_rhs: non-finite state");
    std::vector<double> out(z.size(), 0.0);
    for (const OdeSystem::Block& b : sys.blocks) {
        const double c = z[b.sp] * z[b.spp];
        if (c == 0.0) continue;
        for (std::uint32_t i = b.begin; i < b.end; ++i)
            out[sys.entries[i].sigma] += sys.entries[i].a * c;
    }
    return out;
}

// Type-exchange symmetry: permutes components by bitwise complement.
inline std::vector<double> symmetry_map(const std::vector<double>& z, int L) {
    if (z.size() != std::size_t{1} << L) throw std::invalid_argument("symmetry_map: size mismatch");
    const std::uint32_t mask = (1u << L) - 1;
    std::vector<double> out(z.size());
    for (std::uint32_t s = 0; s < z.size(); ++s) out[~s & mask] = z[s];
    return out;
}

// Signed unhappy mass: +z for views whose position-0 node is an unhappy node
// of the first type, -z for the second type.
inline double delta_functional(const std::vector<double>& z, const MultiCycleParams& prm) {
    if (z.size() != prm.states()) throw std::invalid_argument("delta_functional: size mismatch");
    double d = 0.0;
    for (std::uint32_t v = 0; v < z.size(); ++v) {
        if (!view_unhappy(v, prm.L, prm.base.w, prm.base.T)) continue;
        d += (v & 1u) ? z[v] : -z[v];
    }
    return d;
}

struct OdeTrajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    bool anyNegative = false;

    // Piecewise-linear read of the trajectory at time t.
    std::vector<double> at(double t) const {
        if (times.empty()) throw std::logic_error("empty trajectory");
        if (t < times.front() - 1e-12 || t > times.back() + 1e-9)
            throw std::invalid_argument("trajectory read outside the integrated horizon");
        std::size_t k = 1;
        while (k < times.size() && times[k] < t) ++k;
        if (k == times.size()) return states.back();
        const double t0 = times[k - 1], t1 = times[k];
        const double lam = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
        std::vector<double> out(states[k].size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (1.0 - lam) * states[k - 1][i] + lam * states[k][i];
        return out;
    }
};

// Fixed-step classical Runge-Kutta on [0, x]. The rhs conserves the total
// mass identically, so the sum drifts only by rounding.
inline OdeTrajectory integrate(const std::vector<double>& z0, double x, double dt,
                               const OdeSystem& sys) {
    if (!(dt > 0)) throw std::invalid_argument("integrate: dt must be positive");
    if (x < 0) throw std::invalid_argument("integrate: horizon must be nonnegative");
    double total = 0.0;
    for (double v : z0) total += v;
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("integrate: initial state must sum to 1");

    OdeTrajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(z0);
    std::vector<double> z = z0;
    double t = 0.0;
    while (t < x - 1e-15) {
        const double h = std::min(dt, x - t);
        const std::vector<double> k1 = ode_rhs(z, sys);
        std::vector<double> tmp(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
        const std::vector<double> k2 = ode_rhs(tmp, sys);
        for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
        const std::vector<double> k3 = ode_rhs(tmp, sys);
        for (std::size_t i = 0; i < z.size(); ++i) tmp[i] = z[i] + h * k3[i];
        const std::vector<double> k4 = ode_rhs(tmp, sys);
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(z[i])) throw std::runtime_error("integrate: state diverged");
            if (z[i] < -1e-9) traj.anyNegative = true;
        }
        t += h;
        traj.times.push_back(t);
        traj.states.push_back(z);
    }
    return traj;
}

// Nodes whose ring window and cycle window differ: the first and last w
// offsets of every cycle. Everything here starts tainted.
struct TaintSet {
    std::vector<std::uint8_t> tainted;
    std::int64_t count = 0;

    explicit TaintSet(int n) : tainted(n, 0) {}
    bool has(int u) const { return tainted[u] != 0; }
    void add(int u) {
        if (!tainted[u]) {
            tainted[u] = 1;
            ++count;
        }
    }
};

inline TaintSet initial_taint(int n, int L, int w) {
    if (n % L != 0) throw std::invalid_argument("initial_taint: L must divide n");
    if (L < 2 * w + 2) throw std::invalid_argument("initial_taint: need L >= 2w+2");
    TaintSet t(n);
    for (int u = 0; u < n; ++u) {
        const int off = u % L;
        if (off < w || off >= L - w) t.add(u);
    }
    return t;
}

struct CoupledOutcome {
    int u = -1, v = -1;
    bool swappedRing = false, swappedCycles = false;
    std::int64_t taintAdded = 0;
};

namespace detail {

template <class Topo>
bool counting_swap(Engine<Topo>& eng, int u, int v) {
    if (u == v) return false;
    const RingConfig& c = eng.config();
    if (c.type[u] == c.type[v]) return false;
    if (!eng.is_unhappy(u) || !eng.is_unhappy(v)) return false;
    eng.flip(u);
    eng.flip(v);
    return true;
}

} // namespace detail

// One stage of the coupled pair-counting dynamics: a single uniform pair is
// proposed to both graphs, each swapping by its own happiness. While both
// selected nodes are untainted their views agree in the two graphs, so the
// outcomes agree; a tainted selection can diverge, so both nodes' windows in
// both graphs become tainted.
inline CoupledOutcome coupled_step(Engine<RingTopology>& ring, Engine<MultiCycleTopology>& cycles,
                                   TaintSet& taint, SplitMix64& rng) {
    const ModelParams& a = ring.params();
    const ModelParams& b = cycles.params();
    if (a.n != b.n || a.w != b.w || !(a.tau == b.tau))
        throw std::invalid_argument("coupled_step: parameter mismatch between the two graphs");
    if (static_cast<int>(taint.tainted.size()) != a.n)
        throw std::invalid_argument("coupled_step: taint set size mismatch");

    CoupledOutcome out;
    out.u = static_cast<int>(rng.below(static_cast<std::uint64_t>(a.n)));
    out.v = static_cast<int>(rng.below(static_cast<std::uint64_t>(a.n)));
    const bool grow = taint.has(out.u) || taint.has(out.v);
    out.swappedRing = detail::counting_swap(ring, out.u, out.v);
    out.swappedCycles = detail::counting_swap(cycles, out.u, out.v);
    if (grow) {
        const std::int64_t before = taint.count;
        for (int node : {out.u, out.v}) {
            for (int d = -a.w; d <= a.w; ++d) {
                taint.add(ring.topology().node_at(node, d));
                taint.add(cycles.topology().node_at(node, d));
            }
        }
        out.taintAdded = taint.count - before;
    }
    return out;
}

struct CensusTrace {
    int L = 0;
    std::int64_t n = 0;
    std::vector<std::int64_t> stages;
    std::vector<std::vector<std::int64_t>> zetas;
};

// Runs the pair-counting dynamics on the cycle graph for a fixed number of
// stages, maintaining the census incrementally and snapshotting it every
// sampleEvery stages (plus the initial and final states).
inline CensusTrace run_counting(Engine<MultiCycleTopology>& eng, std::int64_t stages,
                                std::int64_t sampleEvery, SplitMix64& rng) {
    const int L = eng.topology().L;
    const int n = eng.params().n;
    CensusTrace trace;
    trace.L = L;
    trace.n = n;
    StateCensus c = census(eng.config(), L);
    std::vector<std::int64_t> zeta = c.zeta;

    auto flipWithCensus = [&](int u) {
        const int base = u - (u % L);
        const std::uint32_t v0 = node_view(eng.config(), base, L);
        for (int j = 0; j < L; ++j) --zeta[rotate_view(v0, j, L)];
        const std::uint32_t v1 = v0 ^ (1u << (u - base));
        for (int j = 0; j < L; ++j) ++zeta[rotate_view(v1, j, L)];
        eng.flip(u);
    };

    trace.stages.push_back(0);
    trace.zetas.push_back(zeta);
    for (std::int64_t s = 1; s <= stages; ++s) {
        const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const RingConfig& cfg = eng.config();
        if (u != v && cfg.type[u] != cfg.type[v] && eng.is_unhappy(u) && eng.is_unhappy(v)) {
            flipWithCensus(u);
            flipWithCensus(v);
        }
        if (s % sampleEvery == 0 || s == stages) {
            trace.stages.push_back(s);
            trace.zetas.push_back(zeta);
        }
    }
    return trace;
}

// Largest pointwise gap between the simulated census densities and the ODE
// trajectory read at the rescaled times s/n.
inline double compare_trajectories(const CensusTrace& trace, const OdeTrajectory& traj) {
    double worst = 0.0;
    for (std::size_t k = 0; k < trace.stages.size(); ++k) {
        const double t = static_cast<double>(trace.stages[k]) / static_cast<double>(trace.n);
        const std::vector<double> z = traj.at(t);
        if (z.size() != trace.zetas[k].size())
            throw std::invalid_argument("compare_trajectories: state size mismatch");
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double dev = std::abs(
                static_cast<double>(trace.zetas[k][i]) / static_cast<double>(trace.n) - z[i]);
            if (dev > worst) worst = dev;
        }
    }
    return worst;
}

inline void trajectory_csv(const OdeTrajectory& traj, int L, std::ostream& out) {
    out << "s,sigma,z\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        for (std::size_t s = 0; s < traj.states[k].size(); ++s)
            out << traj.times[k] << ',' << view_string(static_cast<std::uint32_t>(s), L) << ','
                << traj.states[k][s] << '\n';
}

inline void census_csv(const CensusTrace& trace, std::ostream& out) {
    out << "s,sigma,z\n";
    for (std::size_t k = 0; k < trace.stages.size(); ++k)
        for (std::size_t s = 0; s < trace.zetas[k].size(); ++s)
            out << trace.stages[k] << ',' << view_string(static_cast<std::uint32_t>(s), trace.L)
                << ',' << trace.zetas[k][s] << '\n';
}

} // namespace schelling
