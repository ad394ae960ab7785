#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "sgsq/common.hpp"
#include "sgsq/grid.hpp"
#include "sgsq/grid_fourier.hpp"
#include "sgsq/rng.hpp"

namespace sgsq {

// ---------------------------------------------------------------------------
// Holder-Besov norms via dyadic blocks
// ---------------------------------------------------------------------------

// L^p norm on the grid; sup norms use the grid max. Each dyadic block is
// evaluated on a reduced lattice whose Nyquist is at least twice the block
// band limit (capped at 2x the field grid), so grid sups are read from a
// 2x oversampled trigonometric interpolation of the block.
struct BesovReport {
    double s = 0.0;
    double p = std::numeric_limits<double>::infinity();
    double q = std::numeric_limits<double>::infinity();
    int k_max = 0;
    std::vector<double> block_values;  // 2^{ks} ||P_k f||_{L^p}, index k
    double value = 0.0;
};

namespace detail {

inline int pow2_at_least(double x) {
    int m = 8;
    while (m < x) m *= 2;
    return m;
}

inline double grid_lp_norm(const std::vector<double>& abs_vals, double p, double cell_area) {
    if (std::isinf(p)) {
        double mx = 0.0;
        for (double v : abs_vals) mx = std::max(mx, v);
        return mx;
    }
    double acc = 0.0;
    for (double v : abs_vals) acc += std::pow(v, p);
    return std::pow(acc * cell_area, 1.0 / p);
}

inline std::vector<double> physical_abs(const SpectralField& f) {
    std::vector<double> out(f.grid.size());
    if (f.is_real) {
        const std::vector<double> v = to_physical_real(f);
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
    } else {
        const std::vector<cplx> v = to_physical(f);
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
    }
    return out;
}

}  // namespace detail

inline BesovReport besov_norm(const SpectralField& f, double s, double p = INFINITY,
                              double q = INFINITY) {
    BesovReport rep;
    rep.s = s;
    rep.p = p;
    rep.q = q;
    rep.k_max = lp_kmax(f.grid);
    const int M = f.grid.n_side;
    // blocks entirely above the field's band contribute exactly zero
    double field_band = 0.0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            if (f.at(a, b) != cplx(0.0, 0.0))
                field_band = std::max(field_band, f.grid.freq_abs(a, b));
    for (int k = 0; k <= rep.k_max; ++k) {
        if (k >= 1 && field_band <= 1.25 * std::ldexp(1.0, k - 1)) {
            rep.block_values.push_back(0.0);
            continue;
        }
        const double band = 1.6 * std::ldexp(1.0, k);
        const int m_eval = std::min(detail::pow2_at_least(4.0 * band * f.grid.L), 2 * M);
        SpectralField reduced = resample_to(f, m_eval);
        reduced = apply_multiplier(reduced, MultiplierSpec::lp_block(k));
        const std::vector<double> av = detail::physical_abs(reduced);
        const double lp = detail::grid_lp_norm(av, p, sq(reduced.grid.spacing()));
        rep.block_values.push_back(std::pow(2.0, k * s) * lp);
    }
    if (std::isinf(q)) {
        rep.value = *std::max_element(rep.block_values.begin(), rep.block_values.end());
    } else {
        double acc = 0.0;
        for (double b : rep.block_values) acc += std::pow(b, q);
        rep.value = std::pow(acc, 1.0 / q);
    }
    return rep;
}

inline double holder_norm(const SpectralField& f, double s) { return besov_norm(f, s).value; }

// spectral Sobolev norm ||<grad>^s f||_{L^2}
inline double sobolev_norm(const SpectralField& f, double s) {
    const int M = f.grid.n_side;
    double acc = 0.0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            acc += std::pow(f.grid.bracket_sq(a, b), s) * std::norm(f.at(a, b));
    return std::sqrt(acc) / f.grid.L;
}

// ||<grad>^s f||_{L^p} with pointwise values read from a 2x oversampled grid
inline double wsp_norm(const SpectralField& f, double s, double p, int os_factor = 2) {
    SpectralField g = apply_multiplier(f, MultiplierSpec::bracket_power(s));
    g = resample_to(g, f.grid.n_side * os_factor);
    const std::vector<double> av = detail::physical_abs(g);
    return detail::grid_lp_norm(av, p, sq(g.grid.spacing()));
}

// ---------------------------------------------------------------------------
// M-adic partition of the plane and weighted norms
// ---------------------------------------------------------------------------

// Radial partition of unity: shell 0 is a mollified disk of radius ~M,
// shell l >= 1 a mollified annulus at scale M^l. Shells sum to one and
// satisfy |grad chi_l| + |Lap chi_l| <= 16 / M.
struct MadicPartition {
    double M;

    explicit MadicPartition(double M_) : M(M_) {
        if (M_ < 2.0) throw parameter_error("MadicPartition: M must be >= 2");
    }

    // transition 0 -> 1 across [3/4 M, 4/3 M]
    double step(double r) const { return smooth_step((r / M - 0.75) / (4.0 / 3.0 - 0.75)); }

    double shell(int ell, double r) const {
        if (ell == 0) return 1.0 - step(r);
        const double scale = std::pow(M, 1.0 - ell);
        return step(r * scale) - step(r * scale / M);
    }

    // smallest l_max such that shells 0..l_max sum to one on |x| <= radius
    int cover_ell_max(double radius) const {
        int l = 0;
        while (0.75 * std::pow(M, l + 1) < radius) ++l;
        return l;
    }
};

struct WeightedNormReport {
    double s = 0.0;
    double lambda = 0.0;
    double M = 0.0;
    int ell_max = 0;
    std::vector<double> shell_values;  // e^{-lambda l} ||chi_l v||_{C^s}
    double value = 0.0;
};

// Multiply a field by a radial window sampled on an oversampled grid and
// return the (periodic) spectral representation of the product.
inline SpectralField apply_radial_window(const SpectralField& f,
                                         const std::function<double(double)>& w,
                                         int os_factor = 2) {
    GridSpec fine;
    if (f.is_real) {
        std::vector<double> pv = to_physical_real_oversampled(f, os_factor, &fine);
        for (int j1 = 0; j1 < fine.n_side; ++j1) {
            const double x1 = fine.coord(j1);
            for (int j2 = 0; j2 < fine.n_side; ++j2)
                pv[static_cast<std::size_t>(j1) * fine.n_side + j2] *=
                    w(std::hypot(x1, fine.coord(j2)));
        }
        return forward_transform_real(fine, pv);
    }
    const SpectralField up = resample_to(f, f.grid.n_side * os_factor);
    fine = up.grid;
    std::vector<cplx> pv = to_physical(up);
    for (int j1 = 0; j1 < fine.n_side; ++j1) {
        const double x1 = fine.coord(j1);
        for (int j2 = 0; j2 < fine.n_side; ++j2)
            pv[static_cast<std::size_t>(j1) * fine.n_side + j2] *=
                w(std::hypot(x1, fine.coord(j2)));
    }
    return forward_transform(fine, pv, false);
}

// Sum_l e^{-lambda l} ||chi^M_l v||_{C^s}, shells evaluated on the torus
// window [-pi L, pi L)^2.
inline WeightedNormReport weighted_besov_norm(const SpectralField& f, double s, double lambda,
                                              double M, int ell_max) {
    WeightedNormReport rep;
    rep.s = s;
    rep.lambda = lambda;
    rep.M = M;
    rep.ell_max = ell_max;
    const MadicPartition part(M);
    const double window_radius = std::sqrt(2.0) * pi * f.grid.L;
    if (part.cover_ell_max(window_radius) > ell_max)
        throw parameter_error("weighted_besov_norm: field support escapes shell ell_max");
    double total = 0.0;
    for (int l = 0; l <= ell_max; ++l) {
        const SpectralField fl =
            apply_radial_window(f, [&](double r) { return part.shell(l, r); });
        const double v = std::exp(-lambda * l) * holder_norm(fl, s);
        rep.shell_values.push_back(v);
        total += v;
    }
    rep.value = total;
    return rep;
}

// Norm of a window-localized field through a small torus: the product
// chi_B * f is supported in |x| <= radius, so its values restrict exactly
// onto an aligned subgrid treated as a torus of half-width pi*L_w. Exact
// when the grids share their spacing and the support fits.
inline double windowed_norm_small_torus(const SpectralField& f, double s, double radius,
                                        double taper, double L_w) {
    if (radius > pi * L_w)
        throw parameter_error("windowed_norm_small_torus: window exceeds the small torus");
    const double h = f.grid.spacing();
    const double ratio = two_pi * L_w / h;
    const int n_w = static_cast<int>(std::lround(ratio));
    if (std::abs(ratio - n_w) > 1e-9 || (n_w & (n_w - 1)) != 0)
        throw parameter_error("windowed_norm_small_torus: grids are not aligned");
    const int offset = static_cast<int>(std::lround((pi * f.grid.L - pi * L_w) / h));
    if (std::abs((pi * f.grid.L - pi * L_w) / h - offset) > 1e-9)
        throw parameter_error("windowed_norm_small_torus: grid offset is not integral");
    const std::vector<double> big = to_physical_real(f);
    const GridSpec small(L_w, n_w);
    std::vector<double> vals(small.size());
    for (int j1 = 0; j1 < n_w; ++j1) {
        const double x1 = small.coord(j1);
        for (int j2 = 0; j2 < n_w; ++j2) {
            const double x2 = small.coord(j2);
            const double w = smooth_step((radius - std::hypot(x1, x2)) / taper);
            vals[static_cast<std::size_t>(j1) * n_w + j2] =
                w * big[static_cast<std::size_t>(j1 + offset) * f.grid.n_side + (j2 + offset)];
        }
    }
    return holder_norm(forward_transform_real(small, vals), s);
}

// ---------------------------------------------------------------------------
// time-weighted norms
// ---------------------------------------------------------------------------

// Recording time grid: geometric refinement near zero united with a
// uniform grid, so the short-time weight is resolved and the truncation is
// auditable from the recorded times.
inline std::vector<double> x_norm_time_grid(double T, double t0 = 1e-3, double ratio = 1.2,
                                            double uniform_step = 0.05) {
    std::vector<double> ts;
    for (double t = t0; t < T; t *= ratio) ts.push_back(t);
    for (double t = uniform_step; t < T; t += uniform_step) ts.push_back(t);
    ts.push_back(T);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             ts.end());
    return ts;
}

// Time-indexed record of one run: either full fields or precomputed
// C^s norms at the recorded times (fields are kept only when small).
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<SpectralField> fields;  // empty if only norms were recorded
    std::vector<double> cs_norms;       // ||v(t_j)||_{C^s} when recorded
    double norm_smoothness = std::numeric_limits<double>::quiet_NaN();
    std::string integrator;
    double dt = 0.0;
    std::uint64_t master_seed = 0;
    StreamId stream;
};

inline double x_norm_weight(double t, double s0, double s) {
    return std::exp(t) * std::pow(std::min(1.0, t), 0.5 * (s + s0));
}

// sup over recorded times of e^t min(1,t)^{(s+s0)/2} ||v(t)||_{C^s}
inline double x_norm(const TrajectoryRecord& traj, double s0, double s, double T) {
    if (traj.times.empty()) throw parameter_error("x_norm: empty trajectory");
    const bool use_cached = !traj.cs_norms.empty();
    if (use_cached && traj.cs_norms.size() != traj.times.size())
        throw shape_error("x_norm: norm samples do not match times");
    if (use_cached && std::abs(traj.norm_smoothness - s) > 1e-12)
        throw parameter_error("x_norm: recorded norms were taken at a different smoothness");
    if (!use_cached && traj.fields.size() != traj.times.size())
        throw shape_error("x_norm: fields do not match times");
    double best = 0.0;
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        const double t = traj.times[j];
        if (t <= 0.0 || t > T + 1e-12) continue;
        const double n = use_cached ? traj.cs_norms[j] : holder_norm(traj.fields[j], s);
        best = std::max(best, x_norm_weight(t, s0, s) * n);
    }
    return best;
}

// Per-shell record for the weighted (large torus) runs: the X-norm input
// per shell plus the running sup of the shell-localized forcing norm.
struct WeightedTrajectoryRecord {
    std::vector<double> times;
    std::vector<std::vector<double>> shell_cs_norms;  // [ell][time]
    std::vector<double> theta_shell_sup;              // sup_t ||chi_l Theta(t)||_{C^s'}
    double norm_smoothness = std::numeric_limits<double>::quiet_NaN();
    double lambda = 0.0;
    double M = 0.0;
};

inline double y_norm(const WeightedTrajectoryRecord& traj, double s0, double s, double T) {
    if (traj.times.empty()) throw parameter_error("y_norm: empty trajectory");
    if (std::abs(traj.norm_smoothness - s) > 1e-12)
        throw parameter_error("y_norm: recorded norms were taken at a different smoothness");
    double total = 0.0;
    for (std::size_t l = 0; l < traj.shell_cs_norms.size(); ++l) {
        double best = 0.0;
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            const double t = traj.times[j];
            if (t <= 0.0 || t > T + 1e-12) continue;
            best = std::max(best, x_norm_weight(t, s0, s) * traj.shell_cs_norms[l][j]);
        }
        total += std::exp(-traj.lambda * l) * best;
    }
    return total;
}

// Sum_l e^{-lambda l} (sup_t ||chi_l Theta(t)||_{C^s})^A
inline double z_norm(const std::vector<double>& theta_shell_sup, double lambda, double A) {
    double total = 0.0;
    for (std::size_t l = 0; l < theta_shell_sup.size(); ++l)
        total += std::exp(-lambda * l) * std::pow(theta_shell_sup[l], A);
    return total;
}

// ---------------------------------------------------------------------------
// windowed Bessel-kernel norm
// ---------------------------------------------------------------------------

namespace detail {

// Convolution kernel of <grad>^{-alpha} on the plane via the subordination
// integral J_a(x) = (1/(4 pi Gamma(a/2))) Int t^{a/2-2} e^{-t - |x|^2/4t} dt,
// evaluated with a log-substituted trapezoid rule.
inline double bessel_kernel(double alpha, double rho) {
    const double t_star = std::max(0.5 * rho, 1e-8);
    const double lo = std::log(t_star) - 40.0;
    const double hi = std::log(t_star) + 40.0;
    const int n = 1200;
    const double du = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = std::exp(lo + i * du);
        const double v = std::pow(t, 0.5 * alpha - 1.0) * std::exp(-t - rho * rho / (4.0 * t));
        acc += (i == 0 || i == n) ? 0.5 * v : v;
    }
    return acc * du / (4.0 * pi * std::tgamma(0.5 * alpha));
}

}  // namespace detail

namespace detail {

// spectral multiplier of the windowed kernel, cached per (grid, alpha, A)
inline const SpectralField& windowed_bessel_multiplier(const GridSpec& g, double alpha, double A) {
    static std::map<std::tuple<double, int, double, double>, SpectralField> cache;
    static std::mutex cache_mutex;
    const auto key = std::make_tuple(g.L, g.n_side, alpha, A);
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    const int M = g.n_side;
    std::vector<double> kernel(g.size());
    for (int j1 = 0; j1 < M; ++j1) {
        const double x1 = g.coord(j1);
        for (int j2 = 0; j2 < M; ++j2) {
            const double x2 = g.coord(j2);
            const double r = std::hypot(x1, x2);
            if (r > A) continue;
            const double win = smooth_step((A - r) / (0.5 * A));
            double val;
            if (r < 0.75 * g.spacing()) {
                // cell average across the integrable singularity
                double acc = 0.0;
                const int sub = 16;
                for (int u = 0; u < sub; ++u)
                    for (int v = 0; v < sub; ++v) {
                        const double dx = x1 + (u + 0.5) / sub * g.spacing() - 0.5 * g.spacing();
                        const double dy = x2 + (v + 0.5) / sub * g.spacing() - 0.5 * g.spacing();
                        acc += bessel_kernel(alpha, std::hypot(dx, dy));
                    }
                val = acc / (sub * sub);
            } else {
                val = bessel_kernel(alpha, r);
            }
            kernel[static_cast<std::size_t>(j1) * M + j2] = win * val;
        }
    }
    return cache.emplace(key, forward_transform_real(g, kernel)).first->second;
}

}  // namespace detail

// || (phi_A J_alpha) * f ||_{L^p} on the torus window; phi_A is a radial
// bump that is 1 on |x| <= A/2 and vanishes for |x| >= A.
inline double bessel_local_norm(const SpectralField& f, double alpha, double p, double A = 10.0) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw parameter_error("bessel_local_norm: alpha must lie in (0, 2)");
    if (A > pi * f.grid.L)
        throw parameter_error("bessel_local_norm: window radius A exceeds the torus half-width");
    const SpectralField& khat = detail::windowed_bessel_multiplier(f.grid, alpha, A);
    SpectralField conv = f;
    for (std::size_t i = 0; i < conv.coeffs.size(); ++i)
        conv.coeffs[i] *= two_pi * khat.coeffs[i];
    const std::vector<double> av = detail::physical_abs(conv);
    return detail::grid_lp_norm(av, p, sq(f.grid.spacing()));
}

}  // namespace sgsq
