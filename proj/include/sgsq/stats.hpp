#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sgsq/common.hpp"

namespace sgsq {

// ---------------------------------------------------------------------------
// basic summaries
// ---------------------------------------------------------------------------

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
}

inline double variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += sq(x - m);
    return s / (v.size() - 1);
}

inline double std_error(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::sqrt(variance(v) / v.size());
}

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    return 0.5 * (hi + v[n / 2 - 1]);
}

// ---------------------------------------------------------------------------
// least squares line fit with standard errors
// ---------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size() || n < 2) throw parameter_error("fit_line: need >= 2 matched points");
    const double xb = mean(x), yb = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += sq(x[i] - xb);
        sxy += (x[i] - xb) * (y[i] - yb);
    }
    if (sxx == 0.0) throw parameter_error("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = yb - f.slope * xb;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) rss += sq(y[i] - f.intercept - f.slope * x[i]);
        const double s2 = rss / (n - 2);
        f.slope_se = std::sqrt(s2 / sxx);
        f.intercept_se = std::sqrt(s2 * (1.0 / n + sq(xb) / sxx));
    }
    return f;
}

// ---------------------------------------------------------------------------
// Monte Carlo scan summary
// ---------------------------------------------------------------------------

// One scan point: a scalar statistic estimated over an ensemble.
struct ScanPoint {
    double abscissa = 0.0;  // N or L, in natural units
    std::size_t samples = 0;
    double mean = 0.0;
    double median = 0.0;
    double ci_half_width = 0.0;  // 1.96 * SE of the mean
};

struct EnsembleStats {
    std::vector<ScanPoint> points;
    LineFit loglog_fit;          // log(statistic) against log(abscissa)
    std::string statistic;       // label for reports
    std::map<std::string, double> extras;

    double max_relative_variation_top_octave() const {
        if (points.size() < 2) throw scan_error("scan has fewer than two points");
        const ScanPoint& lo = points[points.size() - 2];
        const ScanPoint& hi = points.back();
        return std::abs(hi.mean - lo.mean) / std::abs(lo.mean);
    }
};

inline LineFit fit_loglog(const std::vector<ScanPoint>& pts, bool use_median = false) {
    std::vector<double> x, y;
    for (const ScanPoint& p : pts) {
        x.push_back(std::log(p.abscissa));
        y.push_back(std::log(use_median ? p.median : p.mean));
    }
    return fit_line(x, y);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

// asymptotic survival function of the Kolmogorov distribution
inline double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * sq(static_cast<double>(k) * lambda));
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

inline double ks_two_sample_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw parameter_error("ks test: empty sample");
    const double d = ks_statistic_two_sample(a, b);
    const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    const double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    return kolmogorov_q(lam);
}

// one-sample KS against a supplied CDF
inline double ks_one_sample_pvalue(std::vector<double> x,
                                   const std::function<double(double)>& cdf) {
    if (x.empty()) throw parameter_error("ks test: empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
    }
    const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    return kolmogorov_q(lam);
}

inline double normal_cdf(double x, double mu, double sigma) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

// ---------------------------------------------------------------------------
// MCMC diagnostics
// ---------------------------------------------------------------------------

// integrated autocorrelation time with Geyer-style positive-pair truncation
inline double integrated_autocorr_time(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 8) return 1.0;
    const double m = mean(x);
    const double c0 = variance(x);
    if (c0 == 0.0) return 1.0;
    double tau = 1.0;
    for (std::size_t lag = 1; lag < n / 2; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - m) * (x[i + lag] - m);
        c /= (n - lag) * c0;
        if (c < 0.05) break;
        tau += 2.0 * c;
    }
    return tau;
}

inline double effective_sample_size(const std::vector<double>& x) {
    return x.size() / integrated_autocorr_time(x);
}

// split-chain potential scale reduction factor
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        if (c.size() < 4) continue;
        const std::size_t h = c.size() / 2;
        halves.emplace_back(c.begin(), c.begin() + h);
        halves.emplace_back(c.begin() + h, c.begin() + 2 * h);
    }
    if (halves.size() < 2) return 1.0;
    const std::size_t m = halves.size(), n = halves[0].size();
    std::vector<double> cm;
    double w = 0.0;
    for (const auto& h : halves) {
        cm.push_back(mean(h));
        w += variance(h);
    }
    w /= m;
    const double b = n * variance(cm);
    if (w == 0.0) return 1.0;
    return std::sqrt(((n - 1.0) / n * w + b / n) / w);
}

}  // namespace sgsq
