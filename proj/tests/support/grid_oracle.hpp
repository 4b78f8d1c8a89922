#pragma once

// Exhaustive integer-twentieth grid oracle with exact arithmetic, shared
// between the risk unit tests and the acceptance run. A sample is predicted
// risky iff
//   sum_k w20_k * min(count_k, cap_k) * (D / cap_k) * 1e6 >= theta_micro * 20 * D
// where D is the product of the caps; ratios compare by cross-multiplication.

#include <cmath>
#include <vector>

#include "argus/risk.hpp"

namespace argus::testsupport {

struct OraclePoint {
    int w[4];
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double f1 = 0.0, fpr = 0.0;
    bool feasible = false;
};

inline std::vector<OraclePoint> oracle_grid(const std::vector<LabeledSample>& samples,
                                            const SignalCaps& caps, double theta,
                                            double fpr_cap) {
    const int64_t caps_v[4] = {caps.config_cap, caps.threat_cap, caps.identity_cap,
                               caps.mitigation_cap};
    __int128 D = 1;
    for (int64_t c : caps_v) D *= c;
    const int64_t theta_micro = llround(theta * 1e6);
    const int64_t cap_micro = llround(fpr_cap * 1e6);
    const __int128 rhs = __int128(theta_micro) * 20 * D;

    std::vector<OraclePoint> grid;
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; a + b <= 20; ++b)
            for (int c = 0; a + b + c <= 20; ++c) {
                OraclePoint g{{a, b, c, 20 - a - b - c}};
                for (const auto& s : samples) {
                    const int64_t counts[4] = {s.counts.config_violations,
                                               s.counts.threat_events,
                                               s.counts.identity_anomalies,
                                               s.counts.missing_mitigations};
                    __int128 sum = 0;
                    for (int k = 0; k < 4; ++k)
                        sum += __int128(g.w[k]) * std::min(counts[k], caps_v[k]) *
                               (D / caps_v[k]);
                    bool predicted = sum * 1000000 >= rhs;
                    if (predicted)
                        (s.risky ? g.tp : g.fp)++;
                    else
                        (s.risky ? g.fn : g.tn)++;
                }
                g.f1 = 2 * g.tp + g.fp + g.fn == 0
                           ? 0.0
                           : double(2 * g.tp) / double(2 * g.tp + g.fp + g.fn);
                g.fpr = g.tp + g.fp == 0 ? 0.0 : double(g.fp) / double(g.tp + g.fp);
                // fp/(tp+fp) <= cap_micro/1e6, cross-multiplied.
                g.feasible = __int128(g.fp) * 1000000 <= __int128(cap_micro) * (g.tp + g.fp);
                grid.push_back(g);
            }
    return grid;
}

/// Winner per the documented rule: max F1 subject to the cap, ties on lower
/// FPR, then lexicographically smallest vector; exact comparisons throughout.
inline const OraclePoint* oracle_winner(const std::vector<OraclePoint>& grid, bool* feasible) {
    auto f1_less = [](const OraclePoint& x, const OraclePoint& y) {
        // 2tp/(2tp+fp+fn) cross-multiplied; empty denominators read 0/1.
        __int128 xn = 2 * x.tp, xd = 2 * x.tp + x.fp + x.fn;
        __int128 yn = 2 * y.tp, yd = 2 * y.tp + y.fp + y.fn;
        if (xd == 0) { xn = 0; xd = 1; }
        if (yd == 0) { yn = 0; yd = 1; }
        return xn * yd < yn * xd;
    };
    auto fpr_less = [](const OraclePoint& x, const OraclePoint& y) {
        __int128 xn = x.fp, xd = x.tp + x.fp;
        __int128 yn = y.fp, yd = y.tp + y.fp;
        if (xd == 0) { xn = 0; xd = 1; }
        if (yd == 0) { yn = 0; yd = 1; }
        return xn * yd < yn * xd;
    };
    const OraclePoint* best = nullptr;
    const OraclePoint* fallback = nullptr;
    for (const auto& g : grid) {
        auto better = [&](const OraclePoint* inc) {
            if (!inc) return true;
            if (f1_less(*inc, g)) return true;
            if (f1_less(g, *inc)) return false;
            return fpr_less(g, *inc);
        };
        if (g.feasible && better(best)) best = &g;
        if (better(fallback)) fallback = &g;
    }
    *feasible = best != nullptr;
    return best ? best : fallback;
}

inline std::vector<LabeledSample> separable_fixture() {
    std::vector<LabeledSample> samples;
    for (int i = 0; i < 10; ++i) samples.push_back({SignalCounts{10, 0, 0, 0}, true});
    for (int i = 0; i < 10; ++i) samples.push_back({SignalCounts{0, 0, 0, 0}, false});
    return samples;
}

} // namespace argus::testsupport
