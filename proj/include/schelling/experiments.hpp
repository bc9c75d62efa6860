// Replicated statistical experiments over the ring dynamics: grid-driven
// replication with deterministic aggregation, four themed suites probing the
// regime structure (negligible movement below the threshold constant,
// exponential runs in the intermediate band, polynomial runs at one half,
// almost-sure segregation above one half), and Monte Carlo cross-validation
// of the closed-form window probabilities.
//
// Desk-scale defaults (documented per suite) keep every cell within minutes.
// Thresholds marked "pilot-calibrated" were fixed from replicated pilot runs
// and are pinned here as constants.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "schelling/dynamics.hpp"
#include "schelling/io.hpp"
#include "schelling/metrics.hpp"
#include "schelling/rng.hpp"
#include "schelling/theory.hpp"

namespace schelling {

// ---------------------------------------------------------------------------
// Spec files: plain-text key=value, one pair per line, '#' comments.
// Repeated n/w/tau/model keys build the grid; scalar keys may appear once.
// ---------------------------------------------------------------------------

struct ExperimentSpec {
    std::vector<int> ns;
    std::vector<int> ws;
    std::vector<Rational> taus;
    std::vector<ModelKind> models;
    int replicas = 1;
    std::uint64_t seedBase = 1;
    int sampleNodes = 10000;  // 0: enumerate every node
    StopCondition stop;
    bool stopSet = false;  // false: per-cell default_stop
    std::string output;    // empty: caller decides
};

// "seg" | "term" | "max:<k>" | "seg,max:<k>" ("term" must stand alone).
inline StopCondition parse_stop(const std::string& text) {
    StopCondition stop;
    bool sawTerm = false, sawOther = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string tok =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (tok == "seg") {
            stop.stopOnSegregation = true;
            sawOther = true;
        } else if (tok == "term") {
            sawTerm = true;
        } else if (tok.rfind("max:", 0) == 0) {
            std::size_t used = 0;
            const long long k = std::stoll(tok.substr(4), &used);
            if (used != tok.size() - 4 || k <= 0)
                throw std::invalid_argument("parse_stop: max:<k> needs a positive integer");
            stop.maxStages = k;
            sawOther = true;
        } else {
            throw std::invalid_argument("parse_stop: expected seg|term|max:<k>, got '" + tok +
                                        "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (sawTerm && sawOther)
        throw std::invalid_argument("parse_stop: 'term' cannot be combined");
    return stop;
}

inline ExperimentSpec parse_experiment_spec(std::istream& in) {
    ExperimentSpec spec;
    bool sawReplicas = false, sawSeed = false, sawSample = false, sawOutput = false;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("spec line " + std::to_string(lineNo) +
                                        ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        const auto asInt = [&](long long lo, long long hi) {
            std::size_t used = 0;
            const long long v = std::stoll(val, &used);
            if (used != val.size() || v < lo || v > hi)
                throw std::invalid_argument("spec line " + std::to_string(lineNo) +
                                            ": bad integer for " + key);
            return v;
        };
        const auto once = [&](bool& seen) {
            if (seen)
                throw std::invalid_argument("spec line " + std::to_string(lineNo) +
                                            ": duplicate key " + key);
            seen = true;
        };
        if (key == "n") {
            spec.ns.push_back(static_cast<int>(asInt(3, 1000000000)));
        } else if (key == "w") {
            spec.ws.push_back(static_cast<int>(asInt(1, 100000000)));
        } else if (key == "tau") {
            spec.taus.push_back(parse_rational(val));
        } else if (key == "model") {
            spec.models.push_back(model_from_string(val));
        } else if (key == "replicas") {
            once(sawReplicas);
            spec.replicas = static_cast<int>(asInt(1, 1000000));
        } else if (key == "seedBase") {
            once(sawSeed);
            spec.seedBase = static_cast<std::uint64_t>(asInt(0, 4611686018427387904LL));
        } else if (key == "sampleNodes") {
            once(sawSample);
            spec.sampleNodes = static_cast<int>(asInt(0, 1000000000));
        } else if (key == "stop") {
            if (spec.stopSet)
                throw std::invalid_argument("spec line " + std::to_string(lineNo) +
                                            ": duplicate key stop");
            spec.stop = parse_stop(val);
            spec.stopSet = true;
        } else if (key == "output") {
            once(sawOutput);
            spec.output = val;
        } else {
            throw std::invalid_argument("spec line " + std::to_string(lineNo) +
                                        ": unknown key '" + key + "'");
        }
    }
    if (spec.ns.empty() || spec.ws.empty() || spec.taus.empty())
        throw std::invalid_argument("experiment spec: grid needs at least one n, w and tau");
    if (spec.models.empty()) spec.models.push_back(ModelKind::STANDARD);
    return spec;
}

// ---------------------------------------------------------------------------
// Results: one CSV row per (cell, metric). Fractions carry their sample size
// and a binomial 3-sigma half-width; other metrics leave the last column
// empty. The mc suite reports distribution-level rows with n = 0.
// ---------------------------------------------------------------------------

struct MetricRow {
    int n = 0;
    int w = 0;
    Rational tau{1, 2};
    ModelKind model = ModelKind::STANDARD;
    std::string metric;
    double value = 0.0;
    std::int64_t samples = 0;
    double halfwidth3 = -1.0;  // negative: not a fraction
};

struct ExperimentResult {
    std::vector<MetricRow> rows;
};

namespace detail {

inline std::string fmt_g(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double binom_halfwidth3(double f, std::int64_t samples) {
    if (samples <= 0) return 0.0;
    return 3.0 * std::sqrt(std::max(f * (1.0 - f), 0.0) / static_cast<double>(samples));
}

}  // namespace detail

inline void result_csv(const ExperimentResult& result, std::ostream& out) {
    out << "n,w,tau,model,metric,value,samples,halfwidth3\n";
    for (const MetricRow& r : result.rows) {
        out << r.n << ',' << r.w << ',' << to_string(r.tau) << ',' << to_string(r.model) << ','
            << r.metric << ',' << detail::fmt_g(r.value) << ',' << r.samples << ',';
        if (r.halfwidth3 >= 0.0) out << detail::fmt_g(r.halfwidth3);
        out << '\n';
    }
}

// How a check compares its observed value against its bound; recorded so a
// bound can be overridden and the verdict recomputed.
enum class CheckCmp { LT, LE, GT, GE, EQ };

inline bool check_eval(CheckCmp cmp, double observed, double bound) {
    switch (cmp) {
        case CheckCmp::LT: return observed < bound;
        case CheckCmp::LE: return observed <= bound;
        case CheckCmp::GT: return observed > bound;
        case CheckCmp::GE: return observed >= bound;
        case CheckCmp::EQ: return observed == bound;
    }
    return false;
}

struct CheckResult {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double bound = 0.0;
    bool acceptance = false;  // failing one of these should fail the invocation
    std::string note;
    CheckCmp cmp = CheckCmp::GE;
};

inline CheckResult make_check(std::string name, CheckCmp cmp, double observed, double bound,
                              bool acceptance, std::string note) {
    return {std::move(name), check_eval(cmp, observed, bound),
            observed,        bound,
            acceptance,      std::move(note),
            cmp};
}

struct SuiteReport {
    std::string suite;
    ExperimentResult table;
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const CheckResult& c : checks)
            if (!c.pass) return false;
        return true;
    }
    bool acceptance_pass() const {
        for (const CheckResult& c : checks)
            if (c.acceptance && !c.pass) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Replica execution. Replicas run concurrently (SCHELLING_THREADS workers,
// default: hardware concurrency); aggregation merges in replica order, so
// results never depend on the thread count.
// ---------------------------------------------------------------------------

namespace detail {

inline int thread_budget() {
    if (const char* s = std::getenv("SCHELLING_THREADS")) {
        const int v = std::atoi(s);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

template <class Fn>
void parallel_replicas(int count, Fn&& fn) {
    const int threads = std::min(thread_budget(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

// run() with a per-node "ever flipped" record, kept in exact step-for-step
// agreement with run() (same draws, same stop logic).
template <class Topo>
RunResult run_observed(Engine<Topo>& engine, const StopCondition& stop,
                       std::vector<std::uint8_t>& touched) {
    if (engine.params().tau > Rational(1, 2) && engine.model() == ModelKind::STANDARD &&
        !stop.stopOnSegregation && stop.maxStages < 0)
        throw std::domain_error("run_observed: no stop rule could ever fire");
    touched.assign(static_cast<std::size_t>(engine.params().n), 0);
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
            if (r.outcome == StepOutcome::NO_UNHAPPY_PAIR ||
                r.outcome == StepOutcome::NO_UNHAPPY) {
                result.reason = StopReason::TERMINATED;
                break;
            }
            if (r.outcome == StepOutcome::SWAPPED) {
                touched[static_cast<std::size_t>(r.u)] = 1;
                touched[static_cast<std::size_t>(r.v)] = 1;
            } else if (r.outcome == StepOutcome::FLIPPED) {
                touched[static_cast<std::size_t>(r.u)] = 1;
            }
            if ((r.outcome == StepOutcome::SWAPPED || r.outcome == StepOutcome::FLIPPED) &&
                segregated()) {
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

struct ReplicaOutcome {
    StopReason reason = StopReason::TERMINATED;
    std::int64_t stages = 0;
    std::int64_t events = 0;
    std::vector<int> lengths;  // node-weighted run-length sample of the final config
    double fracChanged = 0.0;  // nodes that ever flipped / n
    double fracTouched = 0.0;  // neighbourhoods N(u) containing a flipped node
    bool segregated = false;   // final config has at most 2 runs
    bool monochrome = false;   // final config has exactly 1 run
    bool probed = false;       // post-segregation probe executed
    bool probeIntact = true;   // probe never saw more than 2 runs
};

inline ReplicaOutcome run_replica(const ModelParams& params, ModelKind model,
                                  const StopCondition& stop, std::uint64_t seed, int sampleNodes,
                                  std::int64_t probeStages = 0) {
    RingEngine engine = make_ring_engine(params, model, seed);
    engine.init_random();
    std::vector<std::uint8_t> touched;
    const RunResult rr = run_observed(engine, stop, touched);

    ReplicaOutcome out;
    out.reason = rr.reason;
    out.stages = rr.stages;
    out.events = rr.events;

    const int n = params.n;
    const RunList rl = runs(engine.config());
    out.segregated = rl.size() <= 2;
    out.monochrome = rl.size() == 1;

    // Node-weighted run lengths: either every node once, or sampleNodes
    // uniform draws (with replacement) located via the cumulative node count.
    if (sampleNodes <= 0) {
        out.lengths.reserve(static_cast<std::size_t>(n));
        for (const Run& r : rl)
            for (int i = 0; i < r.length; ++i) out.lengths.push_back(r.length);
    } else {
        std::vector<std::int64_t> cum(rl.size() + 1, 0);
        for (std::size_t i = 0; i < rl.size(); ++i) cum[i + 1] = cum[i] + rl[i].length;
        SplitMix64 lrng(seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
        out.lengths.reserve(static_cast<std::size_t>(sampleNodes));
        for (int i = 0; i < sampleNodes; ++i) {
            const std::int64_t x =
                static_cast<std::int64_t>(lrng.below(static_cast<std::uint64_t>(n)));
            const std::size_t idx = static_cast<std::size_t>(
                std::upper_bound(cum.begin(), cum.end(), x) - cum.begin() - 1);
            out.lengths.push_back(rl[idx].length);
        }
    }

    std::int64_t changed = 0;
    for (std::uint8_t b : touched) changed += b;
    out.fracChanged = static_cast<double>(changed) / n;

    // Neighbourhood coverage via a prefix sum over the touched bitmap.
    std::vector<std::int32_t> prefix(static_cast<std::size_t>(n) + 1, 0);
    for (int u = 0; u < n; ++u) prefix[u + 1] = prefix[u] + touched[static_cast<std::size_t>(u)];
    const auto windowTouched = [&](int u) {
        int lo = u - params.w, hi = u + params.w;  // inclusive, may wrap
        if (hi - lo + 1 >= n) return prefix[n] > 0;
        lo = wrap(lo, n);
        hi = wrap(hi, n);
        const int cnt = lo <= hi ? prefix[hi + 1] - prefix[lo]
                                 : (prefix[n] - prefix[lo]) + prefix[hi + 1];
        return cnt > 0;
    };
    std::int64_t covered = 0;
    if (sampleNodes <= 0) {
        for (int u = 0; u < n; ++u) covered += windowTouched(u);
        out.fracTouched = static_cast<double>(covered) / n;
    } else {
        SplitMix64 trng(seed * 0xBF58476D1CE4E5B9ULL + 0x94D049BB133111EBULL);
        for (int i = 0; i < sampleNodes; ++i)
            covered += windowTouched(
                static_cast<int>(trng.below(static_cast<std::uint64_t>(n))));
        out.fracTouched = static_cast<double>(covered) / sampleNodes;
    }

    // Optional stability probe: keep stepping past segregation and watch the
    // boundary count (swaps may rotate the two blocks, never split them).
    if (probeStages > 0 && rr.reason == StopReason::SEGREGATED) {
        out.probed = true;
        for (std::int64_t s = 0; s < probeStages; ++s) {
            engine.step();
            if (engine.boundary_count() > 2) {
                out.probeIntact = false;
                break;
            }
        }
    }
    return out;
}

// Deterministic per-cell aggregate of `replicas` independent replicas seeded
// seedBase, seedBase+1, ...
struct CellStats {
    int n = 0;
    int w = 0;
    Rational tau{1, 2};
    ModelKind model = ModelKind::STANDARD;
    int replicas = 0;
    std::int64_t lengthSamples = 0;  // per replica: n, or sampleNodes
    std::vector<int> lengths;        // pooled, sorted ascending
    double fracChangedMean = 0.0;
    double fracTouchedMean = 0.0;
    std::int64_t touchSamples = 0;  // per replica: n, or sampleNodes
    int segCount = 0;
    int monoCount = 0;
    int termCount = 0;
    int maxedCount = 0;
    int probedCount = 0;
    int probeIntactCount = 0;
    double stagesMean = 0.0;
    double eventsMean = 0.0;

    // Nearest-rank quantile of the pooled node-weighted lengths.
    double quantile(double q) const {
        if (lengths.empty()) throw std::domain_error("CellStats::quantile: empty pool");
        if (q < 0.0 || q > 1.0) throw std::invalid_argument("CellStats::quantile: q in [0,1]");
        const std::size_t idx = std::min(
            lengths.size() - 1, static_cast<std::size_t>(q * static_cast<double>(lengths.size())));
        return lengths[idx];
    }
    // Fraction of pooled node-weighted lengths >= x.
    double tail_ge(double x) const {
        if (lengths.empty()) throw std::domain_error("CellStats::tail_ge: empty pool");
        const auto it = std::lower_bound(lengths.begin(), lengths.end(), x,
                                         [](int v, double key) { return v < key; });
        return static_cast<double>(lengths.end() - it) / static_cast<double>(lengths.size());
    }
};

inline CellStats run_cell(const ModelParams& params, ModelKind model, const StopCondition& stop,
                          int replicas, std::uint64_t seedBase, int sampleNodes,
                          std::int64_t probeStages = 0) {
    if (replicas < 1) throw std::invalid_argument("run_cell: replicas >= 1");
    std::vector<ReplicaOutcome> outcomes(static_cast<std::size_t>(replicas));
    detail::parallel_replicas(replicas, [&](int r) {
        outcomes[static_cast<std::size_t>(r)] =
            run_replica(params, model, stop, seedBase + static_cast<std::uint64_t>(r),
                        sampleNodes, probeStages);
    });

    CellStats cell;
    cell.n = params.n;
    cell.w = params.w;
    cell.tau = params.tau;
    cell.model = model;
    cell.replicas = replicas;
    cell.lengthSamples = sampleNodes <= 0 ? params.n : sampleNodes;
    cell.touchSamples = sampleNodes <= 0 ? params.n : sampleNodes;
    cell.lengths.reserve(static_cast<std::size_t>(cell.lengthSamples) * replicas);
    for (const ReplicaOutcome& o : outcomes) {
        cell.lengths.insert(cell.lengths.end(), o.lengths.begin(), o.lengths.end());
        cell.fracChangedMean += o.fracChanged;
        cell.fracTouchedMean += o.fracTouched;
        cell.segCount += o.segregated;
        cell.monoCount += o.monochrome;
        cell.termCount += o.reason == StopReason::TERMINATED;
        cell.maxedCount += o.reason == StopReason::MAX_STAGES;
        cell.probedCount += o.probed;
        cell.probeIntactCount += o.probed && o.probeIntact;
        cell.stagesMean += static_cast<double>(o.stages);
        cell.eventsMean += static_cast<double>(o.events);
    }
    cell.fracChangedMean /= replicas;
    cell.fracTouchedMean /= replicas;
    cell.stagesMean /= replicas;
    cell.eventsMean /= replicas;
    std::sort(cell.lengths.begin(), cell.lengths.end());
    return cell;
}

namespace detail {

inline void push_fraction(ExperimentResult& out, const CellStats& c, const std::string& metric,
                          double value, std::int64_t samples) {
    out.rows.push_back(
        {c.n, c.w, c.tau, c.model, metric, value, samples, binom_halfwidth3(value, samples)});
}

inline void push_value(ExperimentResult& out, const CellStats& c, const std::string& metric,
                       double value, std::int64_t samples) {
    out.rows.push_back({c.n, c.w, c.tau, c.model, metric, value, samples, -1.0});
}

inline void push_cell_rows(ExperimentResult& out, const CellStats& c) {
    const std::int64_t pool = static_cast<std::int64_t>(c.lengths.size());
    push_value(out, c, "run_len_q10", c.quantile(0.10), pool);
    push_value(out, c, "run_len_q25", c.quantile(0.25), pool);
    push_value(out, c, "run_len_q50", c.quantile(0.50), pool);
    push_value(out, c, "run_len_q75", c.quantile(0.75), pool);
    push_value(out, c, "run_len_q90", c.quantile(0.90), pool);
    double mean = 0.0;
    for (int v : c.lengths) mean += v;
    push_value(out, c, "run_len_mean", mean / static_cast<double>(pool), pool);
    push_fraction(out, c, "frac_nodes_changed", c.fracChangedMean,
                  static_cast<std::int64_t>(c.replicas) * c.n);
    push_fraction(out, c, "frac_nbhd_touched", c.fracTouchedMean,
                  static_cast<std::int64_t>(c.replicas) * c.touchSamples);
    push_fraction(out, c, "seg_rate", static_cast<double>(c.segCount) / c.replicas, c.replicas);
    push_fraction(out, c, "mono_rate", static_cast<double>(c.monoCount) / c.replicas, c.replicas);
    push_fraction(out, c, "term_rate", static_cast<double>(c.termCount) / c.replicas,
                  c.replicas);
    if (c.probedCount > 0)
        push_fraction(out, c, "probe_intact_rate",
                      static_cast<double>(c.probeIntactCount) / c.probedCount, c.probedCount);
    push_value(out, c, "stages_mean", c.stagesMean, c.replicas);
    push_value(out, c, "events_mean", c.eventsMean, c.replicas);
}

}  // namespace detail

// Full grid sweep: cells iterate n-major, then w, tau, model; replica r of
// cell index k uses seed seedBase + k*replicas + r.
inline ExperimentResult replicate(const ExperimentSpec& spec) {
    if (spec.replicas < 1) throw std::invalid_argument("replicate: replicas >= 1");
    if (spec.ns.empty() || spec.ws.empty() || spec.taus.empty() || spec.models.empty())
        throw std::invalid_argument("replicate: empty grid");
    ExperimentResult out;
    std::uint64_t cellIndex = 0;
    for (int n : spec.ns)
        for (int w : spec.ws)
            for (const Rational& tau : spec.taus)
                for (ModelKind model : spec.models) {
                    const ModelParams params(n, w, tau);
                    const StopCondition stop =
                        spec.stopSet ? spec.stop : default_stop(params, model);
                    const CellStats cell = run_cell(
                        params, model, stop, spec.replicas,
                        spec.seedBase + cellIndex * static_cast<std::uint64_t>(spec.replicas),
                        spec.sampleNodes);
                    detail::push_cell_rows(out, cell);
                    ++cellIndex;
                }
    return out;
}

// ---------------------------------------------------------------------------
// Themed suites. Each validates its regime, runs its cells, and reports
// value rows plus named checks; `acceptance` marks checks whose failure
// should fail the invocation.
// ---------------------------------------------------------------------------

namespace detail {

inline void require_regime(const Rational& tau, int w, Regime want, const char* suite) {
    const RegimeReport rep = classify_regime(tau, w);
    if (rep.regime != want)
        throw std::domain_error(std::string(suite) + ": tau=" + to_string(tau) +
                                " classified as " + to_string(rep.regime) + ", need " +
                                to_string(want));
}

}  // namespace detail

// Below the threshold constant: essentially nobody moves, and final runs stay
// short. Desk defaults: ws={30,60}, n=1e5, tau=3/10, 10 replicas.
inline SuiteReport thm1_suite(const std::vector<int>& ws, int n, const Rational& tau,
                              int replicas, std::uint64_t seedBase = 11000,
                              int sampleNodes = 0) {
    if (ws.empty() || !std::is_sorted(ws.begin(), ws.end()))
        throw std::invalid_argument("thm1_suite: ws must be nonempty ascending");
    for (int w : ws) detail::require_regime(tau, w, Regime::BELOW_KAPPA, "thm1_suite");

    SuiteReport rep;
    rep.suite = "thm1";
    std::vector<double> touched, medians;
    std::uint64_t cellIndex = 0;
    for (int w : ws) {
        const ModelParams params(n, w, tau);
        const CellStats cell =
            run_cell(params, ModelKind::STANDARD, default_stop(params), replicas,
                     seedBase + (cellIndex++) * static_cast<std::uint64_t>(replicas),
                     sampleNodes);
        detail::push_cell_rows(rep.table, cell);
        touched.push_back(cell.fracTouchedMean);
        medians.push_back(cell.quantile(0.5));
    }
    // Pilot-calibrated bound 0.1 at the largest window.
    rep.checks.push_back(make_check("touched_fraction_small", CheckCmp::LT, touched.back(), 0.1,
                                    true,
                                    "mean touched-neighbourhood fraction at w=" +
                                        std::to_string(ws.back())));
    rep.checks.push_back(make_check("touched_fraction_decreasing", CheckCmp::LT, touched.back(),
                                    touched.front(), true,
                                    "w=" + std::to_string(ws.back()) + " vs w=" +
                                        std::to_string(ws.front())));
    const double medRatio = medians.back() / medians.front();
    rep.checks.push_back(make_check("median_run_flat", CheckCmp::LE,
                                    std::max(medRatio, 1.0 / medRatio), 2.0, false,
                                    "worse-direction median run-length ratio across the w range"));
    return rep;
}

// Between the threshold constant and one half: node-weighted runs reach the
// exponential scale e^{w/d}. Desk defaults: ws={30,60}, n=1e5, tau=19/50,
// 10 replicas; the contrast cell reruns the largest w below the threshold.
inline SuiteReport thm3_suite(const std::vector<int>& ws, int n, const Rational& tau,
                              int replicas, std::uint64_t seedBase = 13000, int sampleNodes = 0,
                              const Rational& contrastTau = Rational(3, 10)) {
    if (ws.empty() || !std::is_sorted(ws.begin(), ws.end()))
        throw std::invalid_argument("thm3_suite: ws must be nonempty ascending");
    for (int w : ws) detail::require_regime(tau, w, Regime::KAPPA_TO_HALF, "thm3_suite");
    detail::require_regime(contrastTau, ws.back(), Regime::BELOW_KAPPA, "thm3_suite(contrast)");

    SuiteReport rep;
    rep.suite = "thm3";
    const double d = d_const(tau);
    std::vector<double> medians, expMass;
    std::uint64_t cellIndex = 0;
    for (int w : ws) {
        const ModelParams params(n, w, tau);
        const CellStats cell =
            run_cell(params, ModelKind::STANDARD, default_stop(params), replicas,
                     seedBase + (cellIndex++) * static_cast<std::uint64_t>(replicas),
                     sampleNodes);
        detail::push_cell_rows(rep.table, cell);
        const double thr = std::exp(w / d);
        detail::push_fraction(rep.table, cell, "frac_in_exp_runs", cell.tail_ge(thr),
                              static_cast<std::int64_t>(cell.lengths.size()));
        medians.push_back(cell.quantile(0.5));
        expMass.push_back(cell.tail_ge(thr));
    }
    const ModelParams contrastParams(n, ws.back(), contrastTau);
    const CellStats contrast =
        run_cell(contrastParams, ModelKind::STANDARD, default_stop(contrastParams), replicas,
                 seedBase + cellIndex * static_cast<std::uint64_t>(replicas), sampleNodes);
    detail::push_cell_rows(rep.table, contrast);

    // Pilot-calibrated mass threshold 0.9 at the largest window.
    rep.checks.push_back(make_check("exponential_run_mass", CheckCmp::GE, expMass.back(), 0.9,
                                    false,
                                    "node mass in runs >= e^{w/d} at w=" +
                                        std::to_string(ws.back())));
    double worstGrowth = std::numeric_limits<double>::infinity();
    bool anyPair = false;
    for (std::size_t i = 0; i + 1 < ws.size(); ++i)
        if (ws[i + 1] == 2 * ws[i]) {
            anyPair = true;
            worstGrowth = std::min(worstGrowth, medians[i + 1] / medians[i]);
        }
    rep.checks.push_back(make_check("median_superlinear", CheckCmp::GT,
                                    anyPair ? worstGrowth : 0.0, 2.0, false,
                                    "min median ratio across doubling w pairs"));
    const double contrastRatio = medians.back() / contrast.quantile(0.5);
    rep.checks.push_back(make_check("regime_contrast_10x", CheckCmp::GE, contrastRatio, 10.0,
                                    true,
                                    "median at tau=" + to_string(tau) + " over median at tau=" +
                                        to_string(contrastTau) + ", w=" +
                                        std::to_string(ws.back())));
    return rep;
}

// At one half: runs stay polynomial in w. Desk defaults: ws={20,40,80} with
// n=2000*w, 5 replicas. Reports medians normalized by w^2 and the tail mass
// beyond lambda*w^2 for lambda in 1..4.
inline SuiteReport bk_suite(const std::vector<int>& ws, int replicas,
                            std::uint64_t seedBase = 14000, int nPerW = 2000,
                            int sampleNodes = 0, int contrastW = 60, int contrastN = 100000,
                            const Rational& contrastTau = Rational(19, 50)) {
    if (ws.empty() || !std::is_sorted(ws.begin(), ws.end()))
        throw std::invalid_argument("bk_suite: ws must be nonempty ascending");
    const Rational half(1, 2);
    for (int w : ws) detail::require_regime(half, w, Regime::AT_HALF_EQUIV, "bk_suite");
    detail::require_regime(contrastTau, contrastW, Regime::KAPPA_TO_HALF, "bk_suite(contrast)");

    SuiteReport rep;
    rep.suite = "bk";
    std::vector<double> normMed;
    double worstDecay = 0.0;
    std::uint64_t cellIndex = 0;
    for (int w : ws) {
        const ModelParams params(nPerW * w, w, half);
        const CellStats cell =
            run_cell(params, ModelKind::STANDARD, default_stop(params), replicas,
                     seedBase + (cellIndex++) * static_cast<std::uint64_t>(replicas),
                     sampleNodes);
        detail::push_cell_rows(rep.table, cell);
        const double w2 = static_cast<double>(w) * w;
        normMed.push_back(cell.quantile(0.5) / w2);
        detail::push_value(rep.table, cell, "run_len_q50_over_w2", normMed.back(),
                           static_cast<std::int64_t>(cell.lengths.size()));
        double prev = -1.0;
        for (int lambda = 1; lambda <= 4; ++lambda) {
            const double tail = cell.tail_ge(lambda * w2 + 1.0);  // strictly > lambda*w^2
            detail::push_fraction(rep.table, cell, "tail_lambda_" + std::to_string(lambda), tail,
                                  static_cast<std::int64_t>(cell.lengths.size()));
            if (lambda > 1 && prev > 0.0) worstDecay = std::max(worstDecay, tail / prev);
            prev = tail;
        }
    }
    {
        const ModelParams halfParams(contrastN, contrastW, half);
        const CellStats halfCell =
            run_cell(halfParams, ModelKind::STANDARD, default_stop(halfParams), replicas,
                     seedBase + (cellIndex++) * static_cast<std::uint64_t>(replicas),
                     sampleNodes);
        detail::push_cell_rows(rep.table, halfCell);
        const ModelParams midParams(contrastN, contrastW, contrastTau);
        const CellStats midCell =
            run_cell(midParams, ModelKind::STANDARD, default_stop(midParams), replicas,
                     seedBase + (cellIndex++) * static_cast<std::uint64_t>(replicas),
                     sampleNodes);
        detail::push_cell_rows(rep.table, midCell);
        const double ratio = midCell.quantile(0.5) / halfCell.quantile(0.5);
        rep.checks.push_back(make_check("half_vs_intermediate", CheckCmp::GE, ratio, 5.0, false,
                                        "intermediate-regime median over tau=1/2 median at w=" +
                                            std::to_string(contrastW)));
    }
    const double band = *std::max_element(normMed.begin(), normMed.end()) /
                        *std::min_element(normMed.begin(), normMed.end());
    rep.checks.insert(rep.checks.begin(),
                      {make_check("normalized_median_band", CheckCmp::LE, band, 4.0, true,
                                  "max/min of median/w^2 across the w range"),
                       make_check("tail_geometric_decay", CheckCmp::LE, worstDecay, 0.5, true,
                                  "worst tail(lambda+1)/tail(lambda) over w and lambda")});
    return rep;
}

// Above the equivalence bound (w+1)/(2w+1): the standard model reaches
// complete segregation (checked inside an attempt budget of 50*n*(2w+1)),
// the simple model runs monochrome, and segregation survives further stages.
inline SuiteReport thm5_suite(int n = 5000, int w = 10, const Rational& tau = Rational(3, 5),
                              int replicas = 50, std::uint64_t seedBase = 15000,
                              std::int64_t probeStages = 1000) {
    const RegimeReport reg = classify_regime(tau, w);
    if (reg.regime == Regime::AT_HALF_EQUIV)
        throw std::domain_error(
            "thm5_suite: tau=" + to_string(tau) +
            " is inside the equivalence band, the process matches tau=1/2");
    if (reg.regime != Regime::ABOVE_HALF)
        throw std::domain_error("thm5_suite: tau=" + to_string(tau) + " classified as " +
                                to_string(reg.regime) + ", need above_half");

    SuiteReport rep;
    rep.suite = "thm5";
    const ModelParams params(n, w, tau);
    const std::int64_t budget = 50LL * n * params.window();

    StopCondition segStop;
    segStop.stopOnSegregation = true;
    segStop.maxStages = budget;
    const CellStats std_ =
        run_cell(params, ModelKind::STANDARD, segStop, replicas, seedBase, 0, probeStages);
    detail::push_cell_rows(rep.table, std_);

    // The almost-sure monochrome limit has no stated attempt budget; a
    // generous 100x ceiling only guards against a hung test run.
    StopCondition monoStop;
    monoStop.maxStages = 100 * budget;
    const CellStats simple =
        run_cell(params, ModelKind::SIMPLE, monoStop, replicas,
                 seedBase + static_cast<std::uint64_t>(replicas), 0);
    detail::push_cell_rows(rep.table, simple);

    const double segRate = static_cast<double>(std_.segCount) / replicas;
    rep.checks.push_back(make_check("segregation_within_budget", CheckCmp::GE, segRate, 0.95,
                                    true, "standard model, budget 50*n*(2w+1) attempts"));
    const double monoRate = static_cast<double>(simple.monoCount) / replicas;
    rep.checks.push_back(make_check("simple_monochrome", CheckCmp::EQ, monoRate, 1.0, true,
                                    "simple model, unbounded"));
    rep.checks.push_back(make_check("post_segregation_stable", CheckCmp::EQ,
                                    static_cast<double>(std_.probeIntactCount),
                                    static_cast<double>(std_.probedCount), true,
                                    std::to_string(probeStages) +
                                        " probe stages per segregated replica"));
    return rep;
}

// Monte Carlo over fresh random windows versus the closed-form values:
// anchored stability, own-window unhappiness, and high-bias frequency.
inline SuiteReport mc_initial_stats(int w = 20, const Rational& tau = Rational(2, 5),
                                    std::int64_t samples = 100000, std::uint64_t seed = 16000) {
    if (samples < 1000) throw std::invalid_argument("mc_initial_stats: samples >= 1000");
    const int M = 2 * w + 1;
    const ModelParams params(4 * w + 4, w, tau);  // ring size irrelevant to the window laws
    SplitMix64 rng(seed);

    std::int64_t stabHits = 0, unhapHits = 0, highHits = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
        // Anchored stability: anchor + w further nodes, anchor's type needs
        // ceil(tau*(2w+1)) members in the w+1 window.
        {
            const bool anchor = rng.coin();
            int same = 1;
            for (int j = 0; j < w; ++j) same += rng.coin() == anchor;
            stabHits += same >= params.T;
        }
        // Unhappiness of a fresh node in a fresh window of 2w+1.
        {
            const bool self = rng.coin();
            int same = 1;
            for (int j = 0; j < 2 * w; ++j) same += rng.coin() == self;
            unhapHits += same < params.T;
        }
        // High bias of a fresh window of 2w+1 (borderline modulus included:
        // the class is any |theta| strictly above (1-2tau)(2w+1)).
        {
            int alpha = 0;
            for (int j = 0; j < M; ++j) alpha += rng.coin();
            const int theta = 2 * alpha - M;
            highHits += bias_class_of(theta, params) != BiasClass::NORMAL;
        }
    }
    const double empStab = static_cast<double>(stabHits) / samples;
    const double empUnhap = static_cast<double>(unhapHits) / samples;
    const double empHigh = static_cast<double>(highHits) / samples;
    const double exactStab = p_stab(w, tau).prob();
    const double exactUnhap = p_unhap(w, tau).prob();
    const int hHigh = static_cast<int>(floor_mul(Rational(1, 1) - tau, M)) + 1;
    const double exactHigh = 2.0 * binom_tail_log(M, Rational(1, 2), hHigh).prob();
    const double hoeffding = hoeffding_high_bias(w, tau);

    SuiteReport rep;
    rep.suite = "mc";
    const auto row = [&](const std::string& metric, double value, bool fraction) {
        rep.table.rows.push_back({0, w, tau, ModelKind::STANDARD, metric, value,
                                  fraction ? samples : 0,
                                  fraction ? detail::binom_halfwidth3(value, samples) : -1.0});
    };
    row("p_stab_mc", empStab, true);
    row("p_stab_exact", exactStab, false);
    row("p_unhap_mc", empUnhap, true);
    row("p_unhap_exact", exactUnhap, false);
    row("high_bias_mc", empHigh, true);
    row("high_bias_exact", exactHigh, false);
    row("high_bias_hoeffding_bound", hoeffding, false);

    const auto sigma3 = [&](double p) {
        return 3.0 * std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(samples));
    };
    rep.checks.push_back(make_check("p_stab_mc", CheckCmp::LE, std::abs(empStab - exactStab),
                                    sigma3(exactStab), true,
                                    "empirical vs exact anchored stability"));
    rep.checks.push_back(make_check("p_unhap_mc", CheckCmp::LE, std::abs(empUnhap - exactUnhap),
                                    sigma3(exactUnhap), true, "empirical vs exact unhappiness"));
    rep.checks.push_back(make_check("high_bias_mc", CheckCmp::LE, std::abs(empHigh - exactHigh),
                                    sigma3(exactHigh), true,
                                    "empirical vs exact high-bias rate"));
    rep.checks.push_back(make_check("high_bias_hoeffding", CheckCmp::LE, empHigh, hoeffding,
                                    true, "empirical high-bias rate under the Hoeffding bound"));
    return rep;
}

// Text form of the checks: one line per check, stable and machine-parseable.
inline void checks_text(const SuiteReport& rep, std::ostream& out) {
    for (const CheckResult& c : rep.checks)
        out << "check=" << rep.suite << '.' << c.name << " pass=" << (c.pass ? 1 : 0)
            << " observed=" << detail::fmt_g(c.observed) << " bound=" << detail::fmt_g(c.bound)
            << " acceptance=" << (c.acceptance ? 1 : 0) << " note=\"" << c.note << "\"\n";
}

}  // namespace schelling
