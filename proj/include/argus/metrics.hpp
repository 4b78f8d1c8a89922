#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "argus/types.hpp"

namespace argus {

/// FP / (TP + FP) * 100. TP+FP == 0 -> undefined-denominator error.
double false_positive_rate_pct(int64_t tp, int64_t fp);

/// (before - after) / before * 100. before == 0 -> zero-baseline error.
double incident_reduction_pct(int64_t before, int64_t after);

/// checked / declared * 100. declared == 0 -> zero-declared error;
/// checked > declared -> checked-exceeds-declared error.
double coverage_pct(int64_t checked, int64_t declared);

/// (reference - actual) / reference * 100. reference == 0 ->
/// zero-reference-cost error.
double cost_reduction_pct(double reference, double actual);

struct SummaryStats {
    double mean = 0.0;
    std::optional<double> sd; // sample standard deviation (n-1); absent when n < 2
    size_t n = 0;
};

/// Empty input -> empty-input error.
SummaryStats summarize(const std::vector<double>& xs);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 0.0; // two-sided
};

/// Welch's unequal-variance t-test with the Welch-Satterthwaite degrees
/// of freedom and a two-sided p from the Student-t distribution.
/// Each sample needs n >= 2 -> insufficient-samples error. When both
/// variances are zero: equal means give t=0, p=1; unequal means give
/// t=+/-inf, p=0; df falls back to na+nb-2.
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

} // namespace argus
