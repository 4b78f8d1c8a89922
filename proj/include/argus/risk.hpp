#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "argus/types.hpp"

namespace argus {

/// Raw per-resource signal counts.
struct SignalCounts {
    int config_violations = 0;
    int threat_events = 0;
    int identity_anomalies = 0;
    int missing_mitigations = 0;
};

/// Normalization caps; each component maps to min(count/cap, 1).
struct SignalCaps {
    int config_cap = 10;
    int threat_cap = 10;
    int identity_cap = 10;
    int mitigation_cap = 10;
};

struct NormalizedSignals {
    double c = 0.0, t = 0.0, i = 0.0, m = 0.0;
};

NormalizedSignals normalize_counts(const SignalCounts& counts, const SignalCaps& caps);

/// Risk = w_c*C' + w_t*T' + w_i*I' + w_m*M', in [0,1].
double risk(const WeightVector& w, const NormalizedSignals& s);

/// Posture score = 100 * (1 - Risk), in [0,100].
double posture_score(const WeightVector& w, const NormalizedSignals& s);

/// Labeled calibration sample. Raw counts are kept (not normalized
/// doubles) so the search can compare exactly in integer arithmetic.
struct LabeledSample {
    SignalCounts counts;
    bool risky = false; // ground truth
};

/// One evaluated grid vector. Weights are integer twentieths.
struct GridPoint {
    int w20_c = 0, w20_t = 0, w20_i = 0, w20_m = 0;
    int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double f1 = 0.0;
    double fpr = 0.0; // FP / (TP + FP); 0 when the denominator is 0
    bool feasible = false;
};

/// Evaluates every integer-twentieth composition (all 1771 of them) in
/// lexicographic (w_c, w_t, w_i, w_m) order. A sample is predicted risky
/// when risk >= theta; the comparison is exact integer cross-multiplication
/// with theta and fpr_cap taken at 1e-6 resolution.
std::vector<GridPoint> calibration_grid(const std::vector<LabeledSample>& samples,
                                        const SignalCaps& caps, double theta = 0.5,
                                        double fpr_cap = 0.05);

struct CalibrationResult {
    WeightVector weights;
    double f1 = 0.0;
    double fpr = 0.0; // FP / (TP + FP)
    double theta = 0.5;
    bool feasible = false; // false when no grid point met the FPR cap
    int grid_size = 0;
    std::string dataset_digest;
};

/// Exhaustive grid search over integer twentieths (w_c+w_t+w_i+w_m = 20/20).
/// Maximizes F1 subject to FPR <= fpr_cap, where FPR = FP/(TP+FP) and
/// both ratios read 0 on an empty denominator; ties break on lower FPR,
/// then lexicographically smallest (w_c, w_t, w_i, w_m). Every comparison
/// is exact, so platform rounding cannot flip a winner. When no grid
/// point meets the cap the best unconstrained F1 is returned with
/// feasible=false. A label class missing from the samples -> empty-data.
CalibrationResult calibrate_weights(const std::vector<LabeledSample>& samples,
                                    const SignalCaps& caps, double theta = 0.5,
                                    double fpr_cap = 0.05);

} // namespace argus
