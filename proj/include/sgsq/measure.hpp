#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sgsq/common.hpp"
#include "sgsq/dynamics_parabolic.hpp"
#include "sgsq/grid_fourier.hpp"
#include "sgsq/noise_gff.hpp"
#include "sgsq/norms.hpp"
#include "sgsq/parallel.hpp"
#include "sgsq/renorm.hpp"
#include "sgsq/stats.hpp"

namespace sgsq {

// Sampling of the renormalized truncated Gibbs measure
//
//   d rho_{L,N}(u) prop. exp((gamma_{L,N}/beta) Int cos(beta Pi_N u) dx) d mu_L(u)
//
// by a preconditioned Crank-Nicolson chain reversible with respect to the
// free-field reference, plus the invariance / tightness / volume-scaling
// diagnostics built on top of it.

struct ChainConfig {
    int n_members = 500;
    int n_chains = 4;
    double target_acceptance = 0.3;
    double acceptance_window = 0.1;
    int pilot_steps = 1000;
    double initial_rho = 0.3;
    int burn_in = 0;  // 0: auto, 10 x integrated autocorrelation time
    int thin = 0;     // 0: auto, 2 x integrated autocorrelation time
    int os_factor = 2;
    bool potential_off = false;  // reference-measure reduction for tests
    double rhat_threshold = 1.05;
};

struct GibbsEnsemble {
    GridSpec grid;
    double N = 0.0;
    double beta2 = 0.0;
    double gamma = 0.0;
    std::vector<SpectralField> members;
    // sampler metadata
    double rho = 0.0;
    double acceptance_rate = 0.0;
    int burn_in = 0;
    int thin = 0;
    double tau = 1.0;
    double ess = 0.0;
    double rhat = 1.0;
    bool rhat_warning = false;
    std::uint64_t master_seed = 0;
    StreamId stream;
};

namespace detail {

// potential and cosine-mean evaluator on the oversampled quadrature grid
class PcnPotential {
public:
    PcnPotential(const GridSpec& grid, double N, double beta2, CutoffProfile chi, int os_factor)
        : grid_(grid),
          fine_(grid.L, grid.n_side * os_factor),
          beta_(std::sqrt(beta2)),
          gamma_(gamma_coupling(beta2, sigma_heat(grid, N, chi))) {
        const int M = grid.n_side;
        chi_table_.resize(grid.size());
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b)
                chi_table_[static_cast<std::size_t>(a) * M + b] =
                    cutoff_value(chi, grid.freq_abs(a, b) / N);
        half_.resize(static_cast<std::size_t>(fine_.n_side) * (fine_.n_side / 2 + 1));
        phys_.resize(fine_.size());
    }

    double gamma() const { return gamma_; }

    // mean over the torus of cos(beta Pi_N u)
    double cosine_mean(const SpectralField& u) {
        gather_fine_half(grid_, fine_, u, chi_table_.data(), half_);
        FftPlans::instance().c2r(fine_.n_side, half_.data(), phys_.data());
        double acc = 0.0;
        for (double v : phys_) acc += std::cos(beta_ * v);
        return acc / static_cast<double>(phys_.size());
    }

    // V(u) = (gamma/beta) Int cos(beta Pi_N u) dx
    double operator()(const SpectralField& u) {
        return gamma_ / beta_ * cosine_mean(u) * sq(two_pi * grid_.L);
    }

private:
    GridSpec grid_;
    GridSpec fine_;
    double beta_;
    double gamma_;
    std::vector<double> chi_table_;
    std::vector<cplx> half_;
    std::vector<double> phys_;
};

struct PcnChainState {
    SpectralField u;
    double potential = 0.0;
    std::uint64_t accepted = 0;
    std::uint64_t proposed = 0;
};

// one pCN proposal-accept step; counters: gaussians in [0, 2 M^2),
// acceptance uniform at 2 M^2
inline void pcn_step(PcnChainState& state, PcnPotential& V, double rho, double pot_scale,
                     const SeededStream& stream, SpectralField& scratch) {
    const GridSpec& grid = state.u.grid;
    fill_hermitian_gaussian(scratch, stream, [&](int a, int b) {
        return grid.L / std::sqrt(grid.bracket_sq(a, b));
    });
    const double keep = std::sqrt(1.0 - rho * rho);
    SpectralField proposal = state.u;
    for (std::size_t i = 0; i < proposal.coeffs.size(); ++i)
        proposal.coeffs[i] = keep * proposal.coeffs[i] + rho * scratch.coeffs[i];
    const double vp = pot_scale == 0.0 ? 0.0 : pot_scale * V(proposal);
    const double log_u = std::log(stream.uniform(2 * grid.size()));
    ++state.proposed;
    if (log_u < vp - state.potential) {
        state.u = std::move(proposal);
        state.potential = vp;
        ++state.accepted;
    }
}

}  // namespace detail

struct PcnDiagnostics {
    double rho = 0.0;
    double pilot_acceptance = 0.0;
    double tau = 1.0;
    int burn_in = 0;
    int thin = 0;
};

// Pilot run: adapt the proposal size toward the target acceptance, then
// estimate the integrated autocorrelation time of the cosine mean.
inline PcnDiagnostics pcn_pilot(const GridSpec& grid, double N, double beta2,
                                const ChainConfig& cfg, const SeededStream& stream,
                                CutoffProfile chi = CutoffProfile::smooth_default) {
    detail::PcnPotential V(grid, N, beta2, chi, cfg.os_factor);
    const double pot_scale = cfg.potential_off ? 0.0 : 1.0;
    detail::PcnChainState state{sample_gff(grid, stream.with_slab(0)), 0.0, 0, 0};
    state.potential = pot_scale == 0.0 ? 0.0 : V(state.u);
    SpectralField scratch(grid, true);
    double rho = cfg.initial_rho;
    std::vector<double> o1;
    const int adapt_block = 50;
    std::uint64_t block_accepted = 0;
    for (int step = 0; step < cfg.pilot_steps; ++step) {
        const std::uint64_t before = state.accepted;
        detail::pcn_step(state, V, rho, pot_scale, stream.with_slab(1 + step), scratch);
        block_accepted += state.accepted - before;
        if ((step + 1) % adapt_block == 0) {
            const double acc = static_cast<double>(block_accepted) / adapt_block;
            rho = std::clamp(rho * std::exp(0.8 * (acc - cfg.target_acceptance)), 1e-4, 0.999);
            block_accepted = 0;
        }
        if (step >= cfg.pilot_steps / 2) o1.push_back(V.cosine_mean(state.u));
    }
    PcnDiagnostics d;
    d.rho = rho;
    d.pilot_acceptance = static_cast<double>(state.accepted) / state.proposed;
    d.tau = std::max(1.0, integrated_autocorr_time(o1));
    d.burn_in = cfg.burn_in > 0 ? cfg.burn_in : static_cast<int>(std::ceil(10.0 * d.tau));
    d.thin = cfg.thin > 0 ? cfg.thin : std::max(1, static_cast<int>(std::ceil(2.0 * d.tau)));
    return d;
}

// Run parallel chains and hand each thinned member to the consumer.
// Member indices are deterministic functions of (chain, position), so the
// output is identical for any worker count.
inline GibbsEnsemble pcn_sample_streaming(
    const GridSpec& grid, double N, double beta2, const ChainConfig& cfg,
    const SeededStream& stream,
    const std::function<void(std::size_t, const SpectralField&)>& consume,
    CutoffProfile chi = CutoffProfile::smooth_default) {
    if (!(beta2 > 0.0 && beta2 < 4.0 * pi))
        throw parameter_error("pcn sampler: need 0 < beta^2 < 4 pi");
    require_cutoff_resolved(grid, N);
    const PcnDiagnostics diag = pcn_pilot(grid, N, beta2, cfg, stream.with_member(1000000), chi);
    const double pot_scale = cfg.potential_off ? 0.0 : 1.0;

    const int n_chains = std::max(1, cfg.n_chains);
    const int per_chain = (cfg.n_members + n_chains - 1) / n_chains;
    std::vector<std::vector<double>> chain_o1(n_chains);
    std::vector<double> chain_acc(n_chains, 0.0);

    parallel_for(n_chains, [&](std::size_t c) {
        const SeededStream cs = stream.with_member(static_cast<std::uint32_t>(c));
        detail::PcnPotential V(grid, N, beta2, chi, cfg.os_factor);
        detail::PcnChainState state{sample_gff(grid, cs.with_slab(0)), 0.0, 0, 0};
        state.potential = pot_scale == 0.0 ? 0.0 : V(state.u);
        SpectralField scratch(grid, true);
        std::uint64_t step = 0;
        for (int k = 0; k < diag.burn_in; ++k)
            detail::pcn_step(state, V, diag.rho, pot_scale, cs.with_slab(1 + step++), scratch);
        for (int m = 0; m < per_chain; ++m) {
            const std::size_t index = c * per_chain + m;
            for (int k = 0; k < diag.thin; ++k)
                detail::pcn_step(state, V, diag.rho, pot_scale, cs.with_slab(1 + step++), scratch);
            if (index < static_cast<std::size_t>(cfg.n_members)) consume(index, state.u);
            chain_o1[c].push_back(V.cosine_mean(state.u));
        }
        chain_acc[c] = static_cast<double>(state.accepted) / state.proposed;
    });

    GibbsEnsemble ens;
    ens.grid = grid;
    ens.N = N;
    ens.beta2 = beta2;
    ens.gamma = gamma_coupling(beta2, sigma_heat(grid, N, chi));
    ens.rho = diag.rho;
    ens.burn_in = diag.burn_in;
    ens.thin = diag.thin;
    ens.tau = diag.tau;
    ens.master_seed = stream.master_seed();
    ens.stream = stream.id();
    double acc = 0.0;
    for (double a : chain_acc) acc += a;
    ens.acceptance_rate = acc / n_chains;
    std::vector<double> all_o1;
    for (const auto& c : chain_o1) all_o1.insert(all_o1.end(), c.begin(), c.end());
    ens.ess = effective_sample_size(all_o1);
    ens.rhat = split_rhat(chain_o1);
    ens.rhat_warning = ens.rhat > cfg.rhat_threshold;
    return ens;
}

inline GibbsEnsemble pcn_sample_gibbs(const GridSpec& grid, double N, double beta2,
                                      const ChainConfig& cfg, const SeededStream& stream,
                                      CutoffProfile chi = CutoffProfile::smooth_default) {
    GibbsEnsemble ens;
    std::vector<SpectralField> members(cfg.n_members);
    ens = pcn_sample_streaming(
        grid, N, beta2, cfg, stream,
        [&](std::size_t i, const SpectralField& u) { members[i] = u; }, chi);
    ens.members = std::move(members);
    return ens;
}

// importance-sampling cross-check: E_rho[O] from reweighted free-field
// draws, with a delta-method standard error
struct ImportanceEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double ess = 0.0;
};

inline ImportanceEstimate importance_sampling_estimate(
    const GridSpec& grid, double N, double beta2, int n_draws, const SeededStream& stream,
    const std::function<double(const SpectralField&)>& observable, int os_factor = 2,
    CutoffProfile chi = CutoffProfile::smooth_default) {
    std::vector<double> w(n_draws), o(n_draws);
    parallel_for(n_draws, [&](std::size_t i) {
        detail::PcnPotential Vlocal(grid, N, beta2, chi, os_factor);
        const SpectralField u = sample_gff(grid, stream.with_member(static_cast<std::uint32_t>(i)));
        w[i] = Vlocal(u);
        o[i] = observable(u);
    });
    const double wmax = *std::max_element(w.begin(), w.end());
    double sw = 0.0, swo = 0.0, sw2 = 0.0;
    for (int i = 0; i < n_draws; ++i) {
        w[i] = std::exp(w[i] - wmax);
        sw += w[i];
        swo += w[i] * o[i];
        sw2 += w[i] * w[i];
    }
    ImportanceEstimate est;
    est.value = swo / sw;
    est.ess = sw * sw / sw2;
    double var = 0.0;
    for (int i = 0; i < n_draws; ++i) var += sq(w[i] * (o[i] - est.value));
    est.std_error = std::sqrt(var) / sw;
    return est;
}

// ---------------------------------------------------------------------------
// invariance under the truncated dynamics
// ---------------------------------------------------------------------------

struct InvarianceConfig {
    double T = 1.0;
    double dt = 2e-3;
    double gamma_scale = 1.0;  // 2.0 gives the wrong-coupling negative control
    double delta = 0.1;        // H^{-delta} observable
    double level = 0.01;       // KS level before the Bonferroni split
    std::vector<std::pair<int, int>> modes = {{1, 0}, {1, 1}, {2, 0}};
};

struct ObservableComparison {
    std::string name;
    double ks_p = 1.0;
    double mean_initial = 0.0;
    double mean_final = 0.0;
    double mean_shift = 0.0;
    double shift_se = 0.0;  // paired standard error of the mean difference
};

struct InvarianceReport {
    double T = 0.0;
    double bonferroni_level = 0.0;
    std::vector<ObservableComparison> observables;
    bool pass = true;

    const ObservableComparison& by_name(const std::string& n) const {
        for (const auto& o : observables)
            if (o.name == n) return o;
        throw parameter_error("invariance report: unknown observable " + n);
    }
};

// Evolve every member to time T with independent noise under the
// nonlinearity-truncated placement and compare the marginals of the
// declared observables before and after.
inline InvarianceReport invariance_test(const GibbsEnsemble& ensemble,
                                        const InvarianceConfig& cfg, const SeededStream& stream,
                                        const ParabolicParams& dynamics) {
    if (dynamics.placement != TruncationPlacement::nonlinearity)
        throw parameter_error(
            "invariance_test: the preserved dynamics project the nonlinearity, not the noise");
    if (dynamics.N != ensemble.N || std::abs(dynamics.beta2 - ensemble.beta2) > 1e-12)
        throw parameter_error("invariance_test: ensemble and dynamics parameters disagree");
    const std::size_t n = ensemble.members.size();
    if (n == 0) throw parameter_error("invariance_test: empty ensemble");
    for (const SpectralField& u : ensemble.members)
        if (u.grid != ensemble.grid) throw shape_error("invariance_test: member grid mismatch");

    ParabolicParams params = dynamics;
    params.gamma = gamma_coupling(ensemble.beta2, sigma_heat(ensemble.grid, ensemble.N, params.chi)) *
                   cfg.gamma_scale;

    auto observe = [&](const SpectralField& u, std::vector<double>& row) {
        detail::PcnPotential local(ensemble.grid, ensemble.N, ensemble.beta2, params.chi,
                                   params.os_factor);
        row[0] = local.cosine_mean(u);
        double energy = 0.0;
        for (const auto& [k1, k2] : cfg.modes) energy += std::norm(u.mode(k1, k2));
        row[1] = energy / cfg.modes.size();
        row[2] = sq(sobolev_norm(u, -cfg.delta));
    };

    std::vector<std::vector<double>> before(n, std::vector<double>(3));
    std::vector<std::vector<double>> after(n, std::vector<double>(3));
    parallel_for(n, [&](std::size_t i) {
        observe(ensemble.members[i], before[i]);
        const SeededStream member_stream = stream.with_member(static_cast<std::uint32_t>(i));
        const ParabolicRunResult run =
            run_truncated_sg(ensemble.members[i], params, cfg.T, cfg.dt,
                             stream_slabs(member_stream, ensemble.grid, cfg.dt));
        observe(run.final_state.u, after[i]);
    });

    InvarianceReport rep;
    rep.T = cfg.T;
    rep.bonferroni_level = cfg.level / 3.0;
    const char* names[3] = {"cosine_mean", "mode_energy", "sobolev_sq"};
    for (int obs = 0; obs < 3; ++obs) {
        std::vector<double> b(n), a(n), diff(n);
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = before[i][obs];
            a[i] = after[i][obs];
            diff[i] = a[i] - b[i];
        }
        ObservableComparison cmp;
        cmp.name = names[obs];
        cmp.ks_p = cfg.T == 0.0 ? 1.0 : ks_two_sample_pvalue(b, a);
        cmp.mean_initial = mean(b);
        cmp.mean_final = mean(a);
        cmp.mean_shift = mean(diff);
        cmp.shift_se = std_error(diff);
        if (cmp.ks_p <= rep.bonferroni_level) rep.pass = false;
        if (std::abs(cmp.mean_shift) > 3.0 * cmp.shift_se) rep.pass = false;
        rep.observables.push_back(cmp);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// tightness and volume scans
// ---------------------------------------------------------------------------

struct TightnessConfig {
    double L = 1.0;
    double delta = 0.1;
    double p = 2.0;
    ChainConfig chain;
};

// E_rho[ ||u||^p_{C^{-delta}} ] per cutoff on a common grid resolving the
// largest cutoff; reports the relative variation across the top octave.
inline EnsembleStats tightness_scan(const std::vector<double>& N_list, int samples,
                                    const TightnessConfig& cfg, const SeededStream& stream,
                                    double beta2) {
    if (N_list.size() < 2) throw scan_error("tightness_scan: need at least two cutoffs");
    const double n_max = *std::max_element(N_list.begin(), N_list.end());
    int m = 8;
    while (m < 4.0 * n_max * cfg.L) m *= 2;
    const GridSpec grid(cfg.L, m);
    EnsembleStats stats;
    stats.statistic = "gibbs_holder_moment";
    int warnings = 0;
    for (std::size_t j = 0; j < N_list.size(); ++j) {
        ChainConfig chain = cfg.chain;
        chain.n_members = samples;
        std::vector<double> vals(samples, 0.0);
        const GibbsEnsemble ens = pcn_sample_streaming(
            grid, N_list[j], beta2, chain,
            stream.with(StreamId{stream.id().experiment, 0, 77000 + j}),
            [&](std::size_t i, const SpectralField& u) {
                vals[i] = std::pow(holder_norm(u, -cfg.delta), cfg.p);
            });
        if (ens.rhat_warning) ++warnings;
        ScanPoint pt;
        pt.abscissa = N_list[j];
        pt.samples = vals.size();
        pt.mean = mean(vals);
        pt.median = median(vals);
        pt.ci_half_width = 1.96 * std_error(vals);
        stats.points.push_back(pt);
    }
    stats.loglog_fit = fit_loglog(stats.points);
    stats.extras["top_octave_variation"] = stats.max_relative_variation_top_octave();
    stats.extras["sampler_warnings"] = warnings;
    return stats;
}

struct VolumeScanConfig {
    double N = 32.0;
    double delta = 0.1;
    double p = 2.0;
    int grid_factor = 4;       // n_side = grid_factor * N * L, fixed resolution
    double window_radius = 1.5;
    double window_taper = 0.75;
};

struct VolumeScanResult {
    EnsembleStats global;
    EnsembleStats windowed;
};

// Moments of the stationary convolution norm, globally and through a fixed
// physical window, across torus sizes at fixed grid resolution.
inline VolumeScanResult volume_scan(const std::vector<double>& L_list, int samples,
                                    const VolumeScanConfig& cfg, const SeededStream& stream) {
    if (L_list.size() < 2) throw scan_error("volume_scan: need at least two torus sizes");
    VolumeScanResult out;
    out.global.statistic = "psi_holder_moment";
    out.windowed.statistic = "psi_windowed_holder_moment";
    double spacing0 = 0.0;
    for (double L : L_list) {
        int m = 8;
        while (m < cfg.grid_factor * cfg.N * L) m *= 2;
        const GridSpec grid(L, m);
        if (spacing0 == 0.0) spacing0 = grid.spacing();
        if (std::abs(grid.spacing() - spacing0) / spacing0 > 0.01)
            throw config_error("volume_scan: physical resolution drifts across torus sizes");
        const MultiplierSpec proj = MultiplierSpec::smooth_cutoff(cfg.N);
        std::vector<double> g(samples), w(samples);
        parallel_for(samples, [&](std::size_t i) {
            const SeededStream s = stream.with(StreamId{
                stream.id().experiment, static_cast<std::uint32_t>(i),
                static_cast<std::uint64_t>(L * 16)});
            const SpectralField psi = apply_multiplier(sample_gff(grid, s), proj);
            g[i] = std::pow(holder_norm(psi, -cfg.delta), cfg.p);
            // the window-localized norm lives on an aligned unit torus
            w[i] = std::pow(windowed_norm_small_torus(psi, -cfg.delta, cfg.window_radius,
                                                      cfg.window_taper, 1.0),
                            cfg.p);
        });
        auto push = [&](EnsembleStats& st, std::vector<double>& vals) {
            ScanPoint pt;
            pt.abscissa = L;
            pt.samples = vals.size();
            pt.mean = mean(vals);
            pt.median = median(vals);
            pt.ci_half_width = 1.96 * std_error(vals);
            st.points.push_back(pt);
        };
        push(out.global, g);
        push(out.windowed, w);
    }
    out.global.loglog_fit = fit_loglog(out.global.points);
    double wmin = out.windowed.points[0].mean, wmax = wmin;
    for (const ScanPoint& p : out.windowed.points) {
        wmin = std::min(wmin, p.mean);
        wmax = std::max(wmax, p.mean);
    }
    out.windowed.extras["relative_spread"] = (wmax - wmin) / wmax;
    return out;
}

// Weighted-space tightness proxy: the weighted Holder moment of Gibbs
// samples across torus sizes at fixed (lambda, M).
inline EnsembleStats weighted_tightness_proxy(const std::vector<double>& L_list, double N,
                                              double beta2, double delta, double p, double lambda,
                                              double M, int samples, const ChainConfig& chain_cfg,
                                              const SeededStream& stream) {
    EnsembleStats stats;
    stats.statistic = "gibbs_weighted_holder_moment";
    for (double L : L_list) {
        int m = 8;
        while (m < 4.0 * N * L) m *= 2;
        const GridSpec grid(L, m);
        const MadicPartition part(M);
        const int ell_max = part.cover_ell_max(std::sqrt(2.0) * pi * L);
        ChainConfig cc = chain_cfg;
        cc.n_members = samples;
        std::vector<double> vals(samples, 0.0);
        pcn_sample_streaming(grid, N, beta2, cc,
                             stream.with(StreamId{stream.id().experiment, 0,
                                                  88000 + static_cast<std::uint64_t>(L)}),
                             [&](std::size_t i, const SpectralField& u) {
                                 vals[i] = std::pow(
                                     weighted_besov_norm(u, -delta, lambda, M, ell_max).value, p);
                             });
        ScanPoint pt;
        pt.abscissa = L;
        pt.samples = vals.size();
        pt.mean = mean(vals);
        pt.median = median(vals);
        pt.ci_half_width = 1.96 * std_error(vals);
        stats.points.push_back(pt);
    }
    return stats;
}

}  // namespace sgsq
