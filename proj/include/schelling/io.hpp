#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "schelling/dynamics.hpp"
#include "schelling/ring.hpp"

namespace schelling {

inline const char* to_string(ModelKind m) { return m == ModelKind::STANDARD ? "standard" : "simple"; }

inline ModelKind model_from_string(const std::string& s) {
    if (s == "standard") return ModelKind::STANDARD;
    if (s == "simple") return ModelKind::SIMPLE;
    throw std::invalid_argument("model must be 'standard' or 'simple'");
}

inline StopReason stop_from_string(const std::string& s) {
    if (s == "terminated") return StopReason::TERMINATED;
    if (s == "segregated") return StopReason::SEGREGATED;
    if (s == "max_stages") return StopReason::MAX_STAGES;
    throw std::invalid_argument("unknown stop reason '" + s + "'");
}

// Run-length encoding scanned from index 0 (linear, not circular): "A:3,B:2,...".
inline std::string rle_encode(const RingConfig& config) {
    std::string out;
    int i = 0;
    while (i < config.n()) {
        int j = i;
        while (j < config.n() && config.type[j] == config.type[i]) ++j;
        if (!out.empty()) out += ',';
        out += type_char(config.type[i]);
        out += ':';
        out += std::to_string(j - i);
        i = j;
    }
    return out;
}

inline RingConfig rle_decode(const std::string& text) {
    RingConfig config;
    std::size_t i = 0;
    while (i < text.size()) {
        const NodeType t = type_from_char(text[i++]);
        if (i >= text.size() || text[i] != ':') throw std::invalid_argument("snapshot: expected ':'");
        ++i;
        std::int64_t len = 0;
        if (i >= text.size() || text[i] < '0' || text[i] > '9')
            throw std::invalid_argument("snapshot: expected run length");
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            len = len * 10 + (text[i++] - '0');
            if (len > 1'000'000'000) throw std::invalid_argument("snapshot: run length too large");
        }
        if (len == 0) throw std::invalid_argument("snapshot: zero run length");
        config.type.insert(config.type.end(), static_cast<std::size_t>(len), t);
        if (i < text.size()) {
            if (text[i] != ',') throw std::invalid_argument("snapshot: expected ','");
            ++i;
        }
    }
    if (config.type.empty()) throw std::invalid_argument("snapshot: empty config");
    return config;
}

inline void snapshot_write(std::ostream& out, const RingConfig& config, int w) {
    out << "n=" << config.n() << " w=" << w << "\n" << rle_encode(config) << "\n";
}

struct Snapshot {
    RingConfig config;
    int w = 0;
};

inline Snapshot snapshot_read(std::istream& in) {
    std::string header, body;
    if (!std::getline(in, header) || !std::getline(in, body))
        throw std::invalid_argument("snapshot: truncated");
    int n = 0, w = 0;
    if (std::sscanf(header.c_str(), "n=%d w=%d", &n, &w) != 2)
        throw std::invalid_argument("snapshot: bad header '" + header + "'");
    Snapshot s;
    s.config = rle_decode(body);
    s.w = w;
    if (s.config.n() != n) throw std::invalid_argument("snapshot: RLE length disagrees with header");
    return s;
}

// Trace file: two leading comment lines carry the parameters and the initial
// config (the renderer needs both), then the CSV header, one row per type
// change, and a footer comment with the stop summary.
inline void trace_write(std::ostream& out, const Trace& trace) {
    out << "# n=" << trace.params.n << " w=" << trace.params.w << " tau=" << to_string(trace.params.tau)
        << " model=" << to_string(trace.model) << " seed=" << trace.seed << "\n";
    out << "# initial=" << rle_encode(trace.initial) << "\n";
    out << "stage,node,from,to\n";
    for (const TraceEvent& e : trace.events)
        out << e.stage << ',' << e.node << ',' << type_char(e.from) << ',' << type_char(e.to) << "\n";
    out << "# stop=" << to_string(trace.stop) << " stages=" << trace.stages
        << " events=" << trace.events.size() << "\n";
}

inline Trace trace_read(std::istream& in) {
    Trace trace;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("trace: empty file");
    {
        int n = 0, w = 0;
        char tau[64] = {0}, model[16] = {0};
        unsigned long long seed = 0;
        if (std::sscanf(line.c_str(), "# n=%d w=%d tau=%63s model=%15s seed=%llu", &n, &w, tau, model,
                        &seed) != 5)
            throw std::invalid_argument("trace: bad parameter line '" + line + "'");
        trace.params = ModelParams(n, w, parse_rational(tau));
        trace.model = model_from_string(model);
        trace.seed = seed;
    }
    if (!std::getline(in, line) || line.rfind("# initial=", 0) != 0)
        throw std::invalid_argument("trace: missing initial config line");
    trace.initial = rle_decode(line.substr(10));
    if (trace.initial.n() != trace.params.n)
        throw std::invalid_argument("trace: initial config length disagrees with n");
    if (!std::getline(in, line) || line != "stage,node,from,to")
        throw std::invalid_argument("trace: missing CSV header");
    bool sawFooter = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            char stop[16] = {0};
            long long stages = 0, events = 0;
            if (std::sscanf(line.c_str(), "# stop=%15s stages=%lld events=%lld", stop, &stages,
                            &events) != 3)
                throw std::invalid_argument("trace: bad footer '" + line + "'");
            trace.stop = stop_from_string(stop);
            trace.stages = stages;
            if (events != static_cast<long long>(trace.events.size()))
                throw std::invalid_argument("trace: footer event count disagrees with rows");
            sawFooter = true;
            break;
        }
        long long stage = 0;
        int node = 0;
        char from = 0, to = 0;
        if (std::sscanf(line.c_str(), "%lld,%d,%c,%c", &stage, &node, &from, &to) != 4)
            throw std::invalid_argument("trace: bad row '" + line + "'");
        trace.events.push_back({stage, node, type_from_char(from), type_from_char(to)});
    }
    if (!sawFooter) throw std::invalid_argument("trace: missing footer");
    return trace;
}

} // namespace schelling
