#pragma once

#include <cmath>
#include <vector>

#include "sgsq/common.hpp"
#include "sgsq/grid_fourier.hpp"
#include "sgsq/noise_gff.hpp"
#include "sgsq/norms.hpp"
#include "sgsq/parallel.hpp"
#include "sgsq/renorm.hpp"
#include "sgsq/stats.hpp"

namespace sgsq {

// Renormalized complex exponential Theta = gamma * e^{+- i beta Psi_N} of
// the truncated field. gamma = e^{beta^2 sigma / 2} with sigma the exact
// lattice constant, so E[Theta(x)] = 1 identically.

enum class ChaosSign { plus = +1, minus = -1 };

struct ChaosParams {
    double beta2 = 0.0;
    double N = 0.0;
    double sigma = 0.0;
    double gamma = 1.0;
    CutoffProfile chi = CutoffProfile::smooth_default;
};

inline ChaosParams chaos_params(const GridSpec& grid, double N, double beta2,
                                CutoffProfile chi = CutoffProfile::smooth_default) {
    ChaosParams p;
    p.beta2 = beta2;
    p.N = N;
    p.chi = chi;
    p.sigma = sigma_heat(grid, N, chi);
    p.gamma = gamma_coupling(beta2, p.sigma);
    return p;
}

struct ChaosField {
    GridSpec grid;         // oversampled evaluation grid
    SpectralField values;  // complex spectral coefficients
    double beta2 = 0.0;
    double N = 0.0;
    double sigma = 0.0;
    double gamma = 1.0;
    ChaosSign kappa = ChaosSign::plus;
};

// Pointwise exponential of an already-truncated real field, evaluated on a
// 2x oversampled grid to limit aliasing of the non-polynomial map, then
// returned in spectral form on that grid.
inline ChaosField build_theta(const SpectralField& psi_truncated, const ChaosParams& params,
                              ChaosSign kappa = ChaosSign::plus, int os_factor = 2) {
    if (!psi_truncated.is_real) throw shape_error("build_theta: psi must be a real field");
    if (std::abs(std::log(params.gamma) - 0.5 * params.beta2 * params.sigma) > 1e-10)
        throw provenance_error("build_theta: gamma does not match beta^2 sigma / 2");
    const double beta = std::sqrt(params.beta2);
    const double sign = kappa == ChaosSign::plus ? 1.0 : -1.0;

    GridSpec fine;
    const std::vector<double> pv = to_physical_real_oversampled(psi_truncated, os_factor, &fine);
    std::vector<cplx> theta(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double phase = beta * pv[i];
        theta[i] = params.gamma * cplx(std::cos(phase), sign * std::sin(phase));
    }
    ChaosField out;
    out.grid = fine;
    out.values = forward_transform(fine, theta, false);
    out.beta2 = params.beta2;
    out.N = params.N;
    out.sigma = params.sigma;
    out.gamma = params.gamma;
    out.kappa = kappa;
    return out;
}

// E[Theta(x) conj(Theta(x + r))] = exp(beta^2 C_N(r)) with C_N the
// truncated covariance; at r = 0 this is gamma^2.
inline cplx theta_covariance_oracle(const GridSpec& grid, double N, double beta2, double rx,
                                    double ry, CutoffProfile chi = CutoffProfile::smooth_default) {
    return cplx(std::exp(beta2 * truncated_covariance(grid, N, rx, ry, chi)), 0.0);
}

// ---------------------------------------------------------------------------
// scans
// ---------------------------------------------------------------------------

struct ChaosScanConfig {
    double L = 1.0;
    int grid_factor = 4;  // n_side = grid_factor * N * L
    int os_factor = 2;
    CutoffProfile chi = CutoffProfile::smooth_default;
};

inline GridSpec scan_grid(const ChaosScanConfig& cfg, double N) {
    int m = 8;
    while (m < cfg.grid_factor * N * cfg.L) m *= 2;
    return GridSpec(cfg.L, m);
}

// Median and mean of ||Theta_N||_{C^{-alpha}} per N, with per-octave
// median ratios and a log-log slope on the medians.
inline EnsembleStats regularity_scan(double beta2, double alpha, const std::vector<double>& N_list,
                                     int samples, const SeededStream& stream,
                                     const ChaosScanConfig& cfg = {}) {
    if (N_list.size() < 2) throw scan_error("regularity_scan: need at least two cutoffs");
    if (std::abs(alpha - beta2 / (4.0 * pi)) < 1e-9)
        throw parameter_error("regularity_scan: alpha sits exactly at the threshold");
    EnsembleStats stats;
    stats.statistic = "holder_norm_theta";
    for (double N : N_list) {
        const GridSpec grid = scan_grid(cfg, N);
        const ChaosParams params = chaos_params(grid, N, beta2, cfg.chi);
        const MultiplierSpec proj = MultiplierSpec::smooth_cutoff(N, cfg.chi);
        std::vector<double> norms(samples);
        parallel_for(samples, [&](std::size_t i) {
            const SeededStream member = stream.with_member(static_cast<std::uint32_t>(i))
                                            .with_slab(static_cast<std::uint64_t>(N));
            const SpectralField psi = apply_multiplier(sample_gff(grid, member), proj);
            const ChaosField theta = build_theta(psi, params, ChaosSign::plus, cfg.os_factor);
            norms[i] = holder_norm(theta.values, -alpha);
        });
        ScanPoint pt;
        pt.abscissa = N;
        pt.samples = norms.size();
        pt.mean = mean(norms);
        pt.median = median(norms);
        pt.ci_half_width = 1.96 * std_error(norms);
        stats.points.push_back(pt);
    }
    for (std::size_t i = 1; i < stats.points.size(); ++i)
        stats.extras["octave_ratio_" + std::to_string(static_cast<int>(stats.points[i].abscissa))] =
            stats.points[i].median / stats.points[i - 1].median;
    stats.loglog_fit = fit_loglog(stats.points, /*use_median=*/true);
    {
        // slope uncertainty from per-point median errors (normal factor)
        std::vector<double> x;
        for (const ScanPoint& p : stats.points) x.push_back(std::log(p.abscissa));
        const double xb = mean(x);
        double sxx = 0.0;
        for (double xi : x) sxx += sq(xi - xb);
        double var_slope = 0.0;
        for (std::size_t i = 0; i < stats.points.size(); ++i) {
            const double se_med =
                1.2533 * stats.points[i].ci_half_width / 1.96 / stats.points[i].median;
            var_slope += sq((x[i] - xb) / sxx * se_med);
        }
        stats.extras["slope_se_propagated"] = std::sqrt(var_slope);
    }
    return stats;
}

// Monte Carlo second moment of the pairing <cos(beta Pi_N u), phi> per N,
// for a list of couplings sharing the same field draws. Returns one
// EnsembleStats per coupling; the log-log fit is on the second moment and
// extras carry the root-mean-square slope (half of it) with its SE.
inline std::vector<EnsembleStats> cos_pairing_decay_multi(const std::vector<double>& beta2_list,
                                                          const SpectralField& phi,
                                                          const std::vector<double>& N_list,
                                                          int samples, const SeededStream& stream,
                                                          const ChaosScanConfig& cfg = {}) {
    if (N_list.empty()) throw scan_error("cos_pairing_decay: empty cutoff list");
    // phi must be band-limited below a quarter of the coarsest scan Nyquist
    const GridSpec coarsest = scan_grid(cfg, *std::min_element(N_list.begin(), N_list.end()));
    double phi_band = 0.0;
    for (int a = 0; a < phi.grid.n_side; ++a)
        for (int b = 0; b < phi.grid.n_side; ++b)
            if (std::abs(phi.at(a, b)) > 1e-14)
                phi_band = std::max(phi_band, phi.grid.freq_abs(a, b));
    if (phi_band > coarsest.nyquist() / 4.0)
        throw precondition_error("cos_pairing_decay: phi is not band-limited below Nyquist/4");

    std::vector<EnsembleStats> all(beta2_list.size());
    for (auto& s : all) s.statistic = "cos_pairing_second_moment";

    std::vector<double> betas;
    for (double b2 : beta2_list) betas.push_back(std::sqrt(b2));

    for (double N : N_list) {
        const GridSpec grid = scan_grid(cfg, N);
        const ProjectedGffSampler sampler(grid, N, cfg.chi);
        const std::vector<double> phiv = to_physical_real(resample_to(phi, grid.n_side));
        const double cell = sq(grid.spacing());

        std::vector<std::vector<double>> ysq(beta2_list.size(), std::vector<double>(samples));
        parallel_for(samples, [&](std::size_t i) {
            const SeededStream member = stream.with_member(static_cast<std::uint32_t>(i))
                                            .with_slab(static_cast<std::uint64_t>(N));
            thread_local std::vector<double> phys;
            sampler.sample(member, phys);
            for (std::size_t bi = 0; bi < betas.size(); ++bi) {
                double acc = 0.0;
                for (std::size_t j = 0; j < phys.size(); ++j)
                    acc += std::cos(betas[bi] * phys[j]) * phiv[j];
                ysq[bi][i] = sq(acc * cell);
            }
        });
        for (std::size_t bi = 0; bi < beta2_list.size(); ++bi) {
            ScanPoint pt;
            pt.abscissa = N;
            pt.samples = samples;
            pt.mean = mean(ysq[bi]);
            pt.median = median(ysq[bi]);
            pt.ci_half_width = 1.96 * std_error(ysq[bi]);
            all[bi].points.push_back(pt);
        }
    }
    for (std::size_t bi = 0; bi < all.size(); ++bi) {
        EnsembleStats& s = all[bi];
        if (s.points.size() >= 2) {
            s.loglog_fit = fit_loglog(s.points);
            // slope uncertainty propagated from per-point relative errors
            std::vector<double> x;
            for (const ScanPoint& p : s.points) x.push_back(std::log(p.abscissa));
            const double xb = mean(x);
            double sxx = 0.0;
            for (double xi : x) sxx += sq(xi - xb);
            double var_slope = 0.0;
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                const double sigma_log = s.points[i].ci_half_width / 1.96 / s.points[i].mean;
                var_slope += sq((x[i] - xb) / sxx * sigma_log);
            }
            const double slope_se = std::sqrt(var_slope);
            s.extras["slope_se_propagated"] = slope_se;
            s.extras["slope_rms"] = 0.5 * s.loglog_fit.slope;
            s.extras["slope_rms_se"] = 0.5 * slope_se;
        }
    }
    return all;
}

inline EnsembleStats cos_pairing_decay(double beta2, const SpectralField& phi,
                                       const std::vector<double>& N_list, int samples,
                                       const SeededStream& stream,
                                       const ChaosScanConfig& cfg = {}) {
    return cos_pairing_decay_multi({beta2}, phi, N_list, samples, stream, cfg)[0];
}

}  // namespace sgsq
