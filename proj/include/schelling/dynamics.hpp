#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "schelling/ring.hpp"
#include "schelling/rng.hpp"

namespace schelling {

// Set of node indices with O(1) insert, erase, and uniform sampling.
// Erase swaps the victim with the back, so iteration order is history-dependent
// but fully deterministic for a fixed operation sequence.
class IndexSet {
public:
    explicit IndexSet(int capacity = 0) : pos_(capacity, -1) {}

    int size() const { return static_cast<int>(items_.size()); }
    bool empty() const { return items_.empty(); }
    bool contains(int x) const { return pos_[x] >= 0; }
    int at(int i) const { return items_[i]; }

    void insert_if_absent(int x) {
        if (pos_[x] >= 0) return;
        pos_[x] = static_cast<int>(items_.size());
        items_.push_back(x);
    }

    void remove_if_present(int x) {
        const int i = pos_[x];
        if (i < 0) return;
        const int last = items_.back();
        items_[i] = last;
        pos_[last] = i;
        items_.pop_back();
        pos_[x] = -1;
    }

    int sample(SplitMix64& rng) const {
        return items_[static_cast<std::size_t>(rng.below(items_.size()))];
    }

    std::vector<int> sorted() const {
        std::vector<int> out = items_;
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<int> items_;
    std::vector<int> pos_;
};

struct RingTopology {
    int n = 0;
    // Pre: |delta| <= n, so one conditional correction suffices.
    int node_at(int u, int delta) const {
        int x = u + delta;
        if (x >= n) x -= n;
        if (x < 0) x += n;
        return x;
    }
};

// Disjoint cycles of length L: u and v are adjacent iff they lie in the same
// block of L consecutive indices and differ by 1 mod L within it.
struct MultiCycleTopology {
    int n = 0;
    int L = 0;

    MultiCycleTopology() = default;
    MultiCycleTopology(int n_, int L_) : n(n_), L(L_) {
        if (L < 2 || n % L != 0) throw std::domain_error("MultiCycleTopology: L must divide n");
    }

    int node_at(int u, int delta) const {
        const int off = u % L;
        int x = off + delta;
        if (x >= L) x -= L;
        if (x < 0) x += L;
        return u - off + x;
    }
};

enum class ModelKind { STANDARD, SIMPLE };

enum class StepOutcome { SWAPPED, FLIPPED, BLOCKED, NO_UNHAPPY_PAIR, NO_UNHAPPY };

struct StepResult {
    StepOutcome outcome;
    int u = -1;
    int v = -1;
};

enum class StopReason { TERMINATED, SEGREGATED, MAX_STAGES };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::TERMINATED: return "terminated";
        case StopReason::SEGREGATED: return "segregated";
        default: return "max_stages";
    }
}

struct TraceEvent {
    std::int64_t stage;
    int node;
    NodeType from;
    NodeType to;
};

struct Trace {
    RingConfig initial;
    ModelParams params;
    ModelKind model = ModelKind::STANDARD;
    std::uint64_t seed = 0;
    std::vector<TraceEvent> events;
    StopReason stop = StopReason::TERMINATED;
    std::int64_t stages = 0;
};

struct StopCondition {
    bool stopOnSegregation = false;
    std::int64_t maxStages = -1;  // -1: unbounded
};

// Default run guard: tau <= 1/2 terminates on its own, so run to termination.
// Above 1/2 the standard model stops on complete segregation; the simple model
// runs to its monochrome terminal state. Both get a 50*n*(2w+1) attempt ceiling.
inline StopCondition default_stop(const ModelParams& params, ModelKind model = ModelKind::STANDARD) {
    StopCondition stop;
    if (params.tau > Rational(1, 2)) {
        stop.stopOnSegregation = model == ModelKind::STANDARD;
        stop.maxStages = 50 * static_cast<std::int64_t>(params.n) * params.window();
    }
    return stop;
}

struct RunResult {
    StopReason reason = StopReason::TERMINATED;
    std::int64_t stages = 0;
    std::int64_t events = 0;
};

// Reference legality check: each member of the pair, evaluated in the fully
// post-swap configuration, keeps at least as many same-type neighbours
// (itself excluded) as it had pre-swap. O(n) copy; the engine's O(1) check is
// tested against this exhaustively.
inline bool legal_swap(const RingConfig& config, const ModelParams& params, int u, int v) {
    if (u == v || config.at(u) != NodeType::ALPHA || config.at(v) != NodeType::BETA)
        throw std::invalid_argument("legal_swap: u must be ALPHA and v BETA, distinct");
    RingConfig post = config;
    post.type[wrap(u, config.n())] = NodeType::BETA;
    post.type[wrap(v, config.n())] = NodeType::ALPHA;
    const auto count_excl = [&](const RingConfig& c, int center, NodeType t) {
        int k = 0;
        for (int d = -params.w; d <= params.w; ++d)
            if (d != 0 && c.at(center + d) == t) ++k;
        return k;
    };
    const int alphaBefore = count_excl(config, u, NodeType::ALPHA);
    const int alphaAfter = count_excl(post, v, NodeType::ALPHA);
    const int betaBefore = count_excl(config, v, NodeType::BETA);
    const int betaAfter = count_excl(post, u, NodeType::BETA);
    return alphaAfter >= alphaBefore && betaAfter >= betaBefore;
}

// Full recomputation of the engine's derived state from the config alone.
struct OracleState {
    std::vector<int> counts;
    std::vector<int> unhappyAlpha;
    std::vector<int> unhappyBeta;
    std::int64_t harmony = 0;
};

template <class Topo>
OracleState recompute_oracle(const RingConfig& config, const ModelParams& params, const Topo& topo) {
    OracleState s;
    s.counts.resize(config.n());
    for (int u = 0; u < config.n(); ++u) {
        int c = 0;
        for (int d = -params.w; d <= params.w; ++d)
            c += config.type[topo.node_at(u, d)] == config.type[u] ? 1 : 0;
        s.counts[u] = c;
        s.harmony += c;
        if (c < params.T)
            (config.type[u] == NodeType::ALPHA ? s.unhappyAlpha : s.unhappyBeta).push_back(u);
    }
    return s;
}

inline OracleState recompute_oracle(const RingConfig& config, const ModelParams& params) {
    return recompute_oracle(config, params, RingTopology{config.n()});
}

// Simulation engine with incremental same-type counts: a type change costs O(w),
// pair selection and legality cost O(1).
template <class Topo>
class Engine {
public:
    Engine(const ModelParams& params, const Topo& topo, ModelKind model, std::uint64_t seed,
           bool recordTrace = false)
        : params_(params), topo_(topo), model_(model), rng_(seed), recordTrace_(recordTrace) {
        if (topo_.n != params_.n) throw std::invalid_argument("Engine: topology size mismatch");
        trace_.params = params_;
        trace_.model = model_;
        trace_.seed = seed;
    }

    // Each node independently ALPHA with probability 1/2, one draw per node.
    void init_random() {
        RingConfig config;
        config.type.resize(params_.n);
        for (int u = 0; u < params_.n; ++u)
            config.type[u] = rng_.coin() ? NodeType::ALPHA : NodeType::BETA;
        set_config(config);
    }

    void set_config(const RingConfig& config) {
        if (config.n() != params_.n) throw std::invalid_argument("Engine: config size mismatch");
        config_ = config;
        rebuild();
        trace_.initial = config_;
        trace_.events.clear();
        stage_ = 0;
    }

    StepResult step() { return model_ == ModelKind::STANDARD ? step_standard() : step_simple(); }

    // One attempted pair swap: independent uniform draws from the unhappy-ALPHA
    // and unhappy-BETA sets (ALPHA drawn first).
    StepResult step_standard() {
        if (unhappy_[0].empty() || unhappy_[1].empty()) return {StepOutcome::NO_UNHAPPY_PAIR};
        ++stage_;
        const int u = unhappy_[0].sample(rng_);
        const int v = unhappy_[1].sample(rng_);
        if (!legal_by_counts(u, v)) return {StepOutcome::BLOCKED, u, v};
        flip(u);
        flip(v);
        return {StepOutcome::SWAPPED, u, v};
    }

    // One attempted single-node flip: uniform draw from the union of unhappy sets.
    StepResult step_simple() {
        const int total = unhappy_[0].size() + unhappy_[1].size();
        if (total == 0) return {StepOutcome::NO_UNHAPPY};
        ++stage_;
        const auto idx = static_cast<int>(rng_.below(static_cast<std::uint64_t>(total)));
        const int u = idx < unhappy_[0].size() ? unhappy_[0].at(idx)
                                               : unhappy_[1].at(idx - unhappy_[0].size());
        // Flip is accepted iff the new same-type count (2w+2 - cnt) is at least the old one.
        if (2 * params_.w + 2 - cnt_[u] < cnt_[u]) return {StepOutcome::BLOCKED, u};
        flip(u);
        return {StepOutcome::FLIPPED, u};
    }

    // Low-level single type change; used by counting-mode drivers and tests.
    void flip(int v) {
        const NodeType from = config_.type[v];
        const NodeType to = star(from);
        for (int d = -params_.w; d <= params_.w; ++d) {
            if (d == 0) continue;
            const int x = topo_.node_at(v, d);
            const int delta = config_.type[x] == from ? -1 : 1;
            cnt_[x] += delta;
            harmony_ += delta;
            refresh_membership(x);
        }
        harmony_ += 2 * params_.w + 2 - 2 * cnt_[v];
        cnt_[v] = 2 * params_.w + 2 - cnt_[v];
        config_.type[v] = to;
        refresh_membership(v);
        everChanged_[v] = 1;
        update_boundary(v);
        ++events_;
        if (recordTrace_) trace_.events.push_back({stage_, v, from, to});
    }

    bool is_unhappy(int u) const { return cnt_[u] < params_.T; }
    ModelKind model() const { return model_; }
    int count_at(int u) const { return cnt_[u]; }
    const RingConfig& config() const { return config_; }
    const ModelParams& params() const { return params_; }
    const Topo& topology() const { return topo_; }
    std::int64_t stage() const { return stage_; }
    std::int64_t events() const { return events_; }
    std::int64_t harmony() const { return harmony_; }
    int unhappy_count(NodeType t) const { return unhappy_[static_cast<int>(t)].size(); }
    std::vector<int> unhappy_sorted(NodeType t) const { return unhappy_[static_cast<int>(t)].sorted(); }
    // Ring-adjacent opposite-type pairs; complete segregation means at most two.
    int boundary_count() const { return boundaries_; }
    const std::vector<std::uint8_t>& ever_changed() const { return everChanged_; }
    Trace& trace() { return trace_; }
    const Trace& trace() const { return trace_; }
    SplitMix64& rng() { return rng_; }

private:
    void rebuild() {
        const int n = params_.n;
        cnt_.assign(n, 0);
        unhappy_[0] = IndexSet(n);
        unhappy_[1] = IndexSet(n);
        everChanged_.assign(n, 0);
        harmony_ = 0;
        events_ = 0;
        boundaries_ = 0;
        for (int u = 0; u < n; ++u) {
            int c = 0;
            for (int d = -params_.w; d <= params_.w; ++d)
                c += config_.type[topo_.node_at(u, d)] == config_.type[u] ? 1 : 0;
            cnt_[u] = c;
            harmony_ += c;
            if (c < params_.T) unhappy_[static_cast<int>(config_.type[u])].insert_if_absent(u);
            boundaries_ += config_.type[u] != config_.type[wrap(u + 1, n)] ? 1 : 0;
        }
    }

    // Legality from cached counts: both post-swap conditions reduce to
    // cnt[u] + cnt[v] + [dist(u,v) <= w] <= 2w+2.
    bool legal_by_counts(int u, int v) const {
        const int d = u < v ? v - u : u - v;
        const int overlap = std::min(d, params_.n - d) <= params_.w ? 1 : 0;
        return cnt_[u] + cnt_[v] + overlap <= 2 * params_.w + 2;
    }

    void refresh_membership(int x) {
        const int t = static_cast<int>(config_.type[x]);
        unhappy_[1 - t].remove_if_present(x);
        if (cnt_[x] < params_.T)
            unhappy_[t].insert_if_absent(x);
        else
            unhappy_[t].remove_if_present(x);
    }

    void update_boundary(int v) {
        // Recount the two ring edges at v; callers flipped config_.type[v] already.
        const int n = params_.n;
        const int left = wrap(v - 1, n), right = wrap(v + 1, n);
        // A flipped node toggles each incident edge's state.
        boundaries_ += config_.type[left] != config_.type[v] ? 1 : -1;
        boundaries_ += config_.type[v] != config_.type[right] ? 1 : -1;
    }

    ModelParams params_;
    Topo topo_;
    ModelKind model_;
    SplitMix64 rng_;
    bool recordTrace_;
    RingConfig config_;
    std::vector<int> cnt_;
    IndexSet unhappy_[2] = {IndexSet(0), IndexSet(0)};
    std::vector<std::uint8_t> everChanged_;
    std::int64_t harmony_ = 0;
    std::int64_t stage_ = 0;
    std::int64_t events_ = 0;
    int boundaries_ = 0;
    Trace trace_;
};

using RingEngine = Engine<RingTopology>;
using CycleEngine = Engine<MultiCycleTopology>;

inline RingEngine make_ring_engine(const ModelParams& params, ModelKind model, std::uint64_t seed,
                                   bool recordTrace = false) {
    return RingEngine(params, RingTopology{params.n}, model, seed, recordTrace);
}

template <class Topo>
RunResult run(Engine<Topo>& engine, const StopCondition& stop) {
    // The standard model above 1/2 keeps swapping forever once segregated, so
    // some stop rule must be able to fire.
    if (engine.params().tau > Rational(1, 2) && engine.model() == ModelKind::STANDARD &&
        !stop.stopOnSegregation && stop.maxStages < 0)
        throw std::domain_error("run: no stop rule could ever fire");
    RunResult result;
    const auto segregated = [&] { return stop.stopOnSegregation && engine.boundary_count() <= 2; };
    if (segregated()) {
        result.reason = StopReason::SEGREGATED;
    } else {
        for (;;) {
            if (stop.maxStages >= 0 && engine.stage() >= stop.maxStages) {
                result.reason = StopReason::MAX_STAGES;
                break;
            }
            const StepResult r = engine.step();
            if (r.outcome == StepOutcome::NO_UNHAPPY_PAIR || r.outcome == StepOutcome::NO_UNHAPPY) {
                result.reason = StopReason::TERMINATED;
                break;
            }
            if ((r.outcome == StepOutcome::SWAPPED || r.outcome == StepOutcome::FLIPPED) && segregated()) {
                result.reason = StopReason::SEGREGATED;
                break;
            }
        }
    }
    result.stages = engine.stage();
    result.events = engine.events();
    engine.trace().stop = result.reason;
    engine.trace().stages = result.stages;
    return result;
}

} // namespace schelling
