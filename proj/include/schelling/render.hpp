// SVG ring diagrams of a traced simulation: five concentric layers showing
// the initial configuration, the initially unhappy nodes, the initially
// stable anchored intervals, one radial mark per type-change event (radius
// growing with time), and the final configuration.
//
// Output is self-contained SVG 1.1. Rendering is pure string building from
// the trace, so identical inputs give byte-identical documents.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "schelling/dynamics.hpp"
#include "schelling/metrics.hpp"

namespace schelling {

enum class TimeScale {
    LINEAR,      // mark radius proportional to the event's stage
    EVENT_RANK,  // mark radius proportional to the event's rank (uniform density)
};

inline std::string to_string(TimeScale t) {
    return t == TimeScale::LINEAR ? "linear" : "event-rank";
}

inline TimeScale time_scale_from_string(const std::string& s) {
    if (s == "linear") return TimeScale::LINEAR;
    if (s == "event-rank") return TimeScale::EVENT_RANK;
    throw std::invalid_argument("time scale must be linear or event-rank, got '" + s + "'");
}

// Radial band as fractions of the image half-size.
struct RenderBand {
    double lo = 0.0;
    double hi = 0.0;
};

struct RenderOptions {
    int sizePx = 800;
    RenderBand initialBand{0.30, 0.40};  // layer 1: initial configuration
    RenderBand unhappyBand{0.42, 0.46};  // layer 2: initially unhappy nodes
    RenderBand stableBand{0.48, 0.52};   // layer 3: initially stable intervals
    RenderBand eventBand{0.54, 0.86};    // layer 4: one radial mark per event
    RenderBand finalBand{0.88, 0.98};    // layer 5: final configuration
    std::string alphaColor = "#C8C8C8";  // light grey
    std::string betaColor = "#000000";   // black
    std::string background = "#FFFFFF";
    // Per-layer element cap. Rings with more distinct arcs than this are
    // coalesced onto maxArcs equal angular buckets (majority type per
    // bucket); event marks are decimated to every k-th event.
    int maxArcs = 4096;
    TimeScale timeScale = TimeScale::EVENT_RANK;
};

namespace detail {

inline void validate_render_options(const RenderOptions& o) {
    if (o.sizePx < 16) throw std::invalid_argument("render: sizePx must be at least 16");
    if (o.maxArcs < 8) throw std::invalid_argument("render: maxArcs must be at least 8");
    const RenderBand bands[] = {o.initialBand, o.unhappyBand, o.stableBand, o.eventBand,
                                o.finalBand};
    double prev = 0.0;
    for (const RenderBand& b : bands) {
        if (!(b.lo < b.hi))
            throw std::invalid_argument("render: each band needs lo < hi");
        if (b.lo < prev)
            throw std::invalid_argument("render: bands must not overlap and must increase");
        prev = b.hi;
    }
    if (prev > 1.0) throw std::invalid_argument("render: outermost band exceeds the image");
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    // Avoid the two distinct zeros ("-0.00" vs "0.00") so equal geometry
    // always serializes identically.
    if (std::string(buf) == "-0.00") return "0.00";
    return buf;
}

// A paint assigns each node either a type-coloured mark or nothing.
using Paint = std::vector<std::optional<NodeType>>;

struct PaintArc {
    int start = 0;   // first bucket/node index
    int length = 0;  // in buckets/nodes
    NodeType type = NodeType::ALPHA;
};

// Collapse a paint to at most maxArcs arcs: if the ring has more nodes than
// maxArcs, nodes are grouped onto maxArcs equal angular buckets and each
// bucket takes the majority state (ties: marked beats unmarked, ALPHA beats
// BETA); consecutive equal states then merge circularly.
inline std::vector<PaintArc> paint_arcs(const Paint& paint, int maxArcs, int& unitsOut) {
    const int n = static_cast<int>(paint.size());
    Paint cells;
    if (n <= maxArcs) {
        cells = paint;
    } else {
        cells.resize(static_cast<std::size_t>(maxArcs));
        for (int b = 0; b < maxArcs; ++b) {
            const int from = static_cast<int>(static_cast<std::int64_t>(b) * n / maxArcs);
            const int to = static_cast<int>(static_cast<std::int64_t>(b + 1) * n / maxArcs);
            int alpha = 0, beta = 0, none = 0;
            for (int u = from; u < to; ++u) {
                if (!paint[static_cast<std::size_t>(u)].has_value())
                    ++none;
                else if (*paint[static_cast<std::size_t>(u)] == NodeType::ALPHA)
                    ++alpha;
                else
                    ++beta;
            }
            if (none > alpha && none > beta)
                cells[static_cast<std::size_t>(b)] = std::nullopt;
            else
                cells[static_cast<std::size_t>(b)] =
                    alpha >= beta ? NodeType::ALPHA : NodeType::BETA;
        }
    }
    const int m = static_cast<int>(cells.size());
    unitsOut = m;
    std::vector<PaintArc> arcs;
    int first = 0;
    while (first < m && cells[static_cast<std::size_t>(first)] == cells[0]) ++first;
    if (first == m) {  // uniform ring: one full-circle arc, or nothing
        if (cells[0].has_value()) arcs.push_back({0, m, *cells[0]});
        return arcs;
    }
    // Walk one full turn starting at the first state boundary.
    int pos = first;
    for (int covered = 0; covered < m;) {
        const std::optional<NodeType> state = cells[static_cast<std::size_t>(pos % m)];
        int len = 0;
        while (len < m - covered &&
               cells[static_cast<std::size_t>((pos + len) % m)] == state)
            ++len;
        if (state.has_value()) arcs.push_back({pos % m, len, *state});
        pos += len;
        covered += len;
    }
    return arcs;
}

}  // namespace detail

// Renders the trace as a figure-style concentric diagram. `params` governs
// the marker layers (window and tolerance for unhappiness and stability) and
// must match the traced ring size.
inline std::string render_ring(const Trace& trace, const ModelParams& params,
                               const RenderOptions& opts = {}) {
    detail::validate_render_options(opts);
    const int n = params.n;
    if (trace.initial.n() != n)
        throw std::invalid_argument("render_ring: trace ring size differs from params");
    for (const TraceEvent& ev : trace.events) {
        if (ev.node < 0 || ev.node >= n)
            throw std::invalid_argument("render_ring: event node out of range");
        if (ev.stage < 0) throw std::invalid_argument("render_ring: negative event stage");
    }

    const double c = opts.sizePx / 2.0;
    const double kTau = 6.283185307179586;  // full turn
    const auto px = [&](double r, double ang) { return c + c * r * std::cos(ang); };
    const auto py = [&](double r, double ang) { return c + c * r * std::sin(ang); };
    const std::string colA = detail::xml_escape(opts.alphaColor);
    const std::string colB = detail::xml_escape(opts.betaColor);
    const auto colorOf = [&](NodeType t) -> const std::string& {
        return t == NodeType::ALPHA ? colA : colB;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           std::to_string(opts.sizePx) + "\" height=\"" + std::to_string(opts.sizePx) +
           "\" viewBox=\"0 0 " + std::to_string(opts.sizePx) + " " +
           std::to_string(opts.sizePx) + "\">\n";
    svg += "<rect class=\"bg\" width=\"" + std::to_string(opts.sizePx) + "\" height=\"" +
           std::to_string(opts.sizePx) + "\" fill=\"" + detail::xml_escape(opts.background) +
           "\"/>\n";

    // One annulus-sector path (or full circle) per arc of a painted layer.
    const auto emit_layer = [&](const std::string& name, const detail::Paint& paint,
                                const RenderBand& band) {
        int units = 0;
        const std::vector<detail::PaintArc> arcs = detail::paint_arcs(paint, opts.maxArcs, units);
        svg += "<g class=\"" + name + "\">\n";
        for (const detail::PaintArc& arc : arcs) {
            if (arc.length == units) {
                const double rMid = (band.lo + band.hi) / 2.0 * c;
                svg += "<circle class=\"arc\" cx=\"" + detail::fmt2(c) + "\" cy=\"" +
                       detail::fmt2(c) + "\" r=\"" + detail::fmt2(rMid) +
                       "\" fill=\"none\" stroke=\"" + colorOf(arc.type) +
                       "\" stroke-width=\"" + detail::fmt2((band.hi - band.lo) * c) + "\"/>\n";
                continue;
            }
            // Cell k spans angles [(k-1/2), (k+1/2)] * tau/units.
            const double a0 = kTau * (arc.start - 0.5) / units;
            const double a1 = a0 + kTau * arc.length / units;
            const int large = arc.length * 2 > units ? 1 : 0;
            const double ro = band.hi, ri = band.lo;
            svg += "<path class=\"arc\" fill=\"" + colorOf(arc.type) + "\" d=\"M " +
                   detail::fmt2(px(ro, a0)) + " " + detail::fmt2(py(ro, a0)) + " A " +
                   detail::fmt2(ro * c) + " " + detail::fmt2(ro * c) + " 0 " +
                   std::to_string(large) + " 1 " + detail::fmt2(px(ro, a1)) + " " +
                   detail::fmt2(py(ro, a1)) + " L " + detail::fmt2(px(ri, a1)) + " " +
                   detail::fmt2(py(ri, a1)) + " A " + detail::fmt2(ri * c) + " " +
                   detail::fmt2(ri * c) + " 0 " + std::to_string(large) + " 0 " +
                   detail::fmt2(px(ri, a0)) + " " + detail::fmt2(py(ri, a0)) + " Z\"/>\n";
        }
        svg += "</g>\n";
    };

    // Layer 1: the initial configuration.
    detail::Paint initialPaint(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) initialPaint[static_cast<std::size_t>(u)] = trace.initial.type[u];
    emit_layer("initial", initialPaint, opts.initialBand);

    // Layer 2: nodes unhappy in the initial configuration (model-independent
    // predicate), drawn in their own colour.
    {
        RingEngine probe = make_ring_engine(params, ModelKind::STANDARD, 0);
        probe.set_config(trace.initial);
        detail::Paint paint(static_cast<std::size_t>(n));
        for (int u = 0; u < n; ++u)
            if (probe.is_unhappy(u)) paint[static_cast<std::size_t>(u)] = trace.initial.type[u];
        emit_layer("unhappy", paint, opts.unhappyBand);
    }

    // Layer 3: union of the tau-stable anchored intervals [a, a+w], each node
    // drawn in the interval's anchor type (its own type where both types
    // cover it). Empty whenever no window meets the stability threshold,
    // which above the (w+1)/(2w+1) plateau includes monochrome rings.
    {
        detail::Paint paint(static_cast<std::size_t>(n));
        if (params.tau.num > 0) {
            std::vector<std::uint8_t> coverA(static_cast<std::size_t>(n), 0);
            std::vector<std::uint8_t> coverB(static_cast<std::size_t>(n), 0);
            for (const StableInterval& s : stable_intervals(trace.initial, params.w, params.tau)) {
                auto& cover = s.type == NodeType::ALPHA ? coverA : coverB;
                for (int d = 0; d <= params.w; ++d)
                    cover[static_cast<std::size_t>(wrap(s.start + d, n))] = 1;
            }
            for (int u = 0; u < n; ++u) {
                const bool a = coverA[static_cast<std::size_t>(u)];
                const bool b = coverB[static_cast<std::size_t>(u)];
                if (a && b)
                    paint[static_cast<std::size_t>(u)] = trace.initial.type[u];
                else if (a)
                    paint[static_cast<std::size_t>(u)] = NodeType::ALPHA;
                else if (b)
                    paint[static_cast<std::size_t>(u)] = NodeType::BETA;
            }
        }
        emit_layer("stable", paint, opts.stableBand);
    }

    // Layer 4: radial marks, one per type-change event, radius growing with
    // time and coloured by the type the node became. More events than
    // maxArcs are decimated to every k-th (radii keep the original scale).
    {
        svg += "<g class=\"events\">\n";
        const std::int64_t m = static_cast<std::int64_t>(trace.events.size());
        const std::int64_t stride = m <= opts.maxArcs ? 1 : (m + opts.maxArcs - 1) / opts.maxArcs;
        const double span = opts.eventBand.hi - opts.eventBand.lo;
        const double denomStage = trace.stages > 0 ? static_cast<double>(trace.stages) : 1.0;
        for (std::int64_t j = 0; j < m; j += stride) {
            const TraceEvent& ev = trace.events[static_cast<std::size_t>(j)];
            const double t = opts.timeScale == TimeScale::LINEAR
                                 ? std::min(1.0, static_cast<double>(ev.stage) / denomStage)
                                 : (static_cast<double>(j) + 0.5) / static_cast<double>(m);
            const double r = opts.eventBand.lo + t * span;
            const double ang = kTau * ev.node / n;
            const double tick = std::min(0.02, span * 0.05);
            svg += "<line class=\"event\" x1=\"" + detail::fmt2(px(r - tick, ang)) + "\" y1=\"" +
                   detail::fmt2(py(r - tick, ang)) + "\" x2=\"" + detail::fmt2(px(r + tick, ang)) +
                   "\" y2=\"" + detail::fmt2(py(r + tick, ang)) + "\" stroke=\"" +
                   colorOf(ev.to) + "\" stroke-width=\"1\"/>\n";
        }
        svg += "</g>\n";
    }

    // Layer 5: the final configuration (initial with all events applied).
    {
        RingConfig final_ = trace.initial;
        for (const TraceEvent& ev : trace.events) final_.type[ev.node] = ev.to;
        detail::Paint paint(static_cast<std::size_t>(n));
        for (int u = 0; u < n; ++u) paint[static_cast<std::size_t>(u)] = final_.type[u];
        emit_layer("final", paint, opts.finalBand);
    }

    svg += "</svg>\n";
    return svg;
}

}  // namespace schelling
