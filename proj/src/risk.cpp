#include "argus/risk.hpp"

#include <algorithm>
#include <cmath>

#include "argus/evidence_log.hpp" // sha256_hex

namespace argus {

namespace {

constexpr int64_t kMicro = 1'000'000; // resolution for theta and the FPR cap

void check_caps(const SignalCaps& caps) {
    for (int c : {caps.config_cap, caps.threat_cap, caps.identity_cap, caps.mitigation_cap})
        if (c < 1 || c > 100) fail(Errc::bad_config, "signal caps must lie in [1,100]");
}

struct Rational {
    int64_t num = 0;
    int64_t den = 1; // den == 0 inputs are normalized to 0/1
};

Rational make_ratio(int64_t num, int64_t den) {
    if (den == 0) return {0, 1};
    return {num, den};
}

bool ratio_less(const Rational& a, const Rational& b) {
    return a.num * b.den < b.num * a.den;
}

bool ratio_le(const Rational& a, const Rational& b) {
    return a.num * b.den <= b.num * a.den;
}

Rational point_f1(const GridPoint& g) { return make_ratio(2 * g.tp, 2 * g.tp + g.fp + g.fn); }
Rational point_fpr(const GridPoint& g) { return make_ratio(g.fp, g.tp + g.fp); }

struct SampleTerms {
    int64_t n1, n2, n3, n4;
    bool risky;
};

std::vector<SampleTerms> sample_terms(const std::vector<LabeledSample>& samples,
                                      const SignalCaps& caps, int64_t P) {
    std::vector<SampleTerms> terms;
    terms.reserve(samples.size());
    const int64_t d1 = caps.config_cap, d2 = caps.threat_cap, d3 = caps.identity_cap,
                  d4 = caps.mitigation_cap;
    for (const auto& s : samples) {
        for (int c : {s.counts.config_violations, s.counts.threat_events,
                      s.counts.identity_anomalies, s.counts.missing_mitigations})
            if (c < 0) fail(Errc::bad_config, "signal counts must not be negative");
        terms.push_back(SampleTerms{std::min<int64_t>(s.counts.config_violations, d1) * (P / d1),
                                    std::min<int64_t>(s.counts.threat_events, d2) * (P / d2),
                                    std::min<int64_t>(s.counts.identity_anomalies, d3) * (P / d3),
                                    std::min<int64_t>(s.counts.missing_mitigations, d4) * (P / d4),
                                    s.risky});
    }
    return terms;
}

void check_dataset(const std::vector<LabeledSample>& samples, double theta, double fpr_cap) {
    if (samples.empty()) fail(Errc::empty_data, "no calibration samples");
    bool any_pos = false, any_neg = false;
    for (const auto& s : samples) (s.risky ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg)
        fail(Errc::empty_data, "calibration needs both risky and benign samples");
    if (!(theta > 0.0 && theta < 1.0)) fail(Errc::bad_config, "theta must lie in (0,1)");
    if (!(fpr_cap >= 0.0 && fpr_cap <= 1.0)) fail(Errc::bad_config, "fpr cap must lie in [0,1]");
}

} // namespace

NormalizedSignals normalize_counts(const SignalCounts& counts, const SignalCaps& caps) {
    check_caps(caps);
    for (int c : {counts.config_violations, counts.threat_events, counts.identity_anomalies,
                  counts.missing_mitigations})
        if (c < 0) fail(Errc::bad_config, "signal counts must not be negative");
    auto norm = [](int count, int cap) { return std::min(double(count) / cap, 1.0); };
    return NormalizedSignals{norm(counts.config_violations, caps.config_cap),
                             norm(counts.threat_events, caps.threat_cap),
                             norm(counts.identity_anomalies, caps.identity_cap),
                             norm(counts.missing_mitigations, caps.mitigation_cap)};
}

double risk(const WeightVector& w, const NormalizedSignals& s) {
    for (double v : {s.c, s.t, s.i, s.m})
        if (!(v >= 0.0 && v <= 1.0)) fail(Errc::bad_config, "normalized signal outside [0,1]");
    return w.w_c * s.c + w.w_t * s.t + w.w_i * s.i + w.w_m * s.m;
}

double posture_score(const WeightVector& w, const NormalizedSignals& s) {
    return 100.0 * (1.0 - risk(w, s));
}

std::vector<GridPoint> calibration_grid(const std::vector<LabeledSample>& samples,
                                        const SignalCaps& caps, double theta, double fpr_cap) {
    check_caps(caps);
    check_dataset(samples, theta, fpr_cap);

    // Exact per-sample numerators: risk*20*P = sum(w20_k * n_k * P/d_k)
    // where P is the product of the caps. Predict risky when
    //   sum * kMicro >= theta_micro * 20 * P.
    const int64_t P = int64_t(caps.config_cap) * caps.threat_cap * caps.identity_cap *
                      caps.mitigation_cap;
    const int64_t theta_micro = std::llround(theta * kMicro);
    const int64_t cap_micro = std::llround(fpr_cap * kMicro);
    const int64_t rhs = theta_micro * 20 * P;
    const Rational cap_ratio{cap_micro, kMicro};

    std::vector<SampleTerms> terms = sample_terms(samples, caps, P);

    std::vector<GridPoint> grid;
    grid.reserve(1771);
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; a + b <= 20; ++b)
            for (int c = 0; a + b + c <= 20; ++c) {
                int d = 20 - a - b - c;
                GridPoint g;
                g.w20_c = a;
                g.w20_t = b;
                g.w20_i = c;
                g.w20_m = d;
                for (const auto& t : terms) {
                    int64_t num = a * t.n1 + b * t.n2 + c * t.n3 + d * t.n4;
                    bool predicted = num * kMicro >= rhs;
                    if (predicted)
                        (t.risky ? g.tp : g.fp)++;
                    else
                        (t.risky ? g.fn : g.tn)++;
                }
                Rational f1 = point_f1(g), fpr = point_fpr(g);
                g.f1 = double(f1.num) / double(f1.den);
                g.fpr = double(fpr.num) / double(fpr.den);
                g.feasible = ratio_le(fpr, cap_ratio);
                grid.push_back(g);
            }
    return grid;
}

CalibrationResult calibrate_weights(const std::vector<LabeledSample>& samples,
                                    const SignalCaps& caps, double theta, double fpr_cap) {
    std::vector<GridPoint> grid = calibration_grid(samples, caps, theta, fpr_cap);

    auto better = [](const GridPoint& cand, const GridPoint& incumbent) {
        Rational f1c = point_f1(cand), f1i = point_f1(incumbent);
        if (ratio_less(f1i, f1c)) return true;
        if (ratio_less(f1c, f1i)) return false;
        return ratio_less(point_fpr(cand), point_fpr(incumbent));
    };

    // The grid comes in ascending lex order; strict-improvement
    // replacement leaves the lexicographically smallest winner in place.
    const GridPoint* best = nullptr;
    const GridPoint* best_anyway = nullptr;
    for (const auto& g : grid) {
        if (g.feasible && (!best || better(g, *best))) best = &g;
        if (!best_anyway || better(g, *best_anyway)) best_anyway = &g;
    }

    json digest_doc = json::array();
    for (const auto& s : samples)
        digest_doc.push_back(json{{"c", s.counts.config_violations},
                                  {"t", s.counts.threat_events},
                                  {"i", s.counts.identity_anomalies},
                                  {"m", s.counts.missing_mitigations},
                                  {"risky", s.risky}});

    const GridPoint& win = best ? *best : *best_anyway;
    CalibrationResult res;
    res.weights =
        WeightVector::make(win.w20_c / 20.0, win.w20_t / 20.0, win.w20_i / 20.0, win.w20_m / 20.0);
    res.f1 = win.f1;
    res.fpr = win.fpr;
    res.theta = theta;
    res.feasible = best != nullptr;
    res.grid_size = int(grid.size());
    res.dataset_digest = sha256_hex(canonical_line(digest_doc));
    return res;
}

} // namespace argus
