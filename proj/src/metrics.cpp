#include "argus/metrics.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

namespace argus {

double false_positive_rate_pct(int64_t tp, int64_t fp) {
    if (tp < 0 || fp < 0) fail(Errc::bad_config, "counts must not be negative");
    if (tp + fp == 0)
        fail(Errc::undefined_denominator, "no positive detections to rate");
    return double(fp) / double(tp + fp) * 100.0;
}

double incident_reduction_pct(int64_t before, int64_t after) {
    if (before < 0 || after < 0) fail(Errc::bad_config, "counts must not be negative");
    if (before == 0) fail(Errc::zero_baseline, "baseline incident count is zero");
    return double(before - after) / double(before) * 100.0;
}

double coverage_pct(int64_t checked, int64_t declared) {
    if (checked < 0 || declared < 0) fail(Errc::bad_config, "counts must not be negative");
    if (declared == 0) fail(Errc::zero_declared, "no declared control families");
    if (checked > declared)
        fail(Errc::checked_exceeds_declared, "checked families exceed declared families");
    return double(checked) / double(declared) * 100.0;
}

double cost_reduction_pct(double reference, double actual) {
    if (reference == 0.0) fail(Errc::zero_reference_cost, "reference cost is zero");
    return (reference - actual) / reference * 100.0;
}

SummaryStats summarize(const std::vector<double>& xs) {
    if (xs.empty()) fail(Errc::empty_input, "no samples to summarize");
    SummaryStats s;
    s.n = xs.size();
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / double(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / double(s.n - 1));
    }
    return s;
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        fail(Errc::insufficient_samples, "welch test needs n >= 2 per sample");
    SummaryStats sa = summarize(a), sb = summarize(b);
    double na = double(sa.n), nb = double(sb.n);
    double va = *sa.sd * *sa.sd / na, vb = *sb.sd * *sb.sd / nb;

    WelchResult res;
    if (va + vb == 0.0) {
        // Degenerate: both samples are constant.
        res.df = na + nb - 2.0;
        if (sa.mean == sb.mean) {
            res.t = 0.0;
            res.p = 1.0;
        } else {
            res.t = sa.mean > sb.mean ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
            res.p = 0.0;
        }
        return res;
    }
    res.t = (sa.mean - sb.mean) / std::sqrt(va + vb);
    res.df = (va + vb) * (va + vb) /
             (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    boost::math::students_t dist(res.df);
    res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(res.t)));
    return res;
}

} // namespace argus
