// Acceptance suite: one test case per criterion, each printing a single
// PASS/FAIL line with the measured quantities at the stated tolerances.
// Ensemble sizes and thresholds are pinned here, not configurable.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sgsq/chaos.hpp"
#include "sgsq/cli_io.hpp"
#include "sgsq/dynamics_parabolic.hpp"
#include "sgsq/dynamics_wave.hpp"
#include "sgsq/measure.hpp"

using namespace sgsq;

namespace {

constexpr std::uint64_t acceptance_seed = 0x5EEDACCE;

SeededStream acc_stream(std::uint32_t experiment) {
    return SeededStream(acceptance_seed, {experiment, 0, 0});
}

void report(int criterion, const std::string& name, bool pass, const std::string& details) {
    std::printf("[acceptance] criterion %2d %-28s %s  (%s)\n", criterion, name.c_str(),
                pass ? "PASS" : "FAIL", details.c_str());
    std::fflush(stdout);
    REQUIRE(pass);
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return std::string(buf);
}

}  // namespace

TEST_CASE("criterion 1: renormalization asymptotics", "[c1]") {
    const GridSpec grid(1.0, 1024);
    std::vector<double> x, y;
    for (double N : {16.0, 32.0, 64.0, 128.0, 256.0}) {
        x.push_back(std::log(N));
        y.push_back(sigma_heat(grid, N));
    }
    const LineFit fit = fit_line(x, y);
    const double target = 1.0 / two_pi;
    const double rel = std::abs(fit.slope - target) / target;
    report(1, "sigma log-slope", rel <= 0.05,
           fmt("slope=%.6f target=%.6f rel_err=%.2f%%", fit.slope, target, 100.0 * rel));
}

TEST_CASE("criterion 2: chaos normalization", "[c2]") {
    const GridSpec grid(1.0, 256);
    const double N = 64.0;
    const int samples = 10000;
    bool all_pass = true;
    std::string details;
    const ProjectedGffSampler sampler(grid, N, CutoffProfile::smooth_default);
    for (double beta2 : {pi, 2.0 * pi}) {
        const double sigma = sigma_heat(grid, N);
        const double gamma = gamma_coupling(beta2, sigma);
        const double beta = std::sqrt(beta2);
        std::vector<double> re_pt(samples), re_avg(samples);
        std::vector<double> phys;
        for (int i = 0; i < samples; ++i) {
            sampler.sample(acc_stream(2).with_member(i).with_slab(beta2 > 4.0 ? 1 : 0), phys);
            re_pt[i] = gamma * std::cos(beta * phys[0]);
            double acc = 0.0;
            for (double v : phys) acc += std::cos(beta * v);
            re_avg[i] = gamma * acc / static_cast<double>(phys.size());
        }
        const double pt_err = std::abs(mean(re_pt) - 1.0);
        const double pt_se = std_error(re_pt);
        const double avg_err = std::abs(mean(re_avg) - 1.0);
        const bool pass = pt_err <= 3.0 * pt_se && avg_err <= 0.02;
        all_pass = all_pass && pass;
        details += fmt("b2=%.2fpi: |pt-1|=%.4f (3SE=%.4f) |avg-1|=%.4f; ", beta2 / pi, pt_err,
                       3.0 * pt_se, avg_err);
    }
    report(2, "chaos mean is one", all_pass, details);
}

TEST_CASE("criterion 3: cos pairing decay", "[c3]") {
    const GridSpec ref(1.0, 8);
    SpectralField phi(ref, true);
    phi.mode(1, 0) = cplx(pi, 0.0);
    phi.mode(-1, 0) = cplx(pi, 0.0);
    const std::vector<double> N_list = {16.0, 32.0, 64.0, 128.0, 256.0};
    const int samples = 100000;
    const std::vector<EnsembleStats> stats =
        cos_pairing_decay_multi({pi, 2.0 * pi}, phi, N_list, samples, acc_stream(3));
    const double tol[2] = {0.08, 0.10};
    bool all_pass = true;
    std::string details;
    for (int b = 0; b < 2; ++b) {
        const double beta2 = b == 0 ? pi : 2.0 * pi;
        const double slope_rms = stats[b].extras.at("slope_rms");
        const double target = -beta2 / (4.0 * pi);
        const bool pass = std::abs(slope_rms - target) <= tol[b];
        all_pass = all_pass && pass;
        details += fmt("b2=%.0fpi: rms_slope=%.4f target=%.4f (tol %.2f); ", beta2 / pi, slope_rms,
                       target, tol[b]);
    }
    report(3, "pairing decay exponent", all_pass, details);
}

TEST_CASE("criterion 4: regularity threshold", "[c4]") {
    const double beta2 = pi;
    const std::vector<double> N_list = {16.0, 32.0, 64.0, 128.0};
    const int samples = 400;
    const EnsembleStats above = regularity_scan(beta2, 0.35, N_list, samples, acc_stream(4));
    bool ratios_ok = true;
    std::string details = "alpha=0.35 ratios:";
    for (const auto& [key, ratio] : above.extras) {
        if (key.rfind("octave_ratio_", 0) != 0) continue;
        ratios_ok = ratios_ok && ratio >= 0.5 && ratio <= 2.0;
        details += fmt(" %.3f", ratio);
    }
    const EnsembleStats below = regularity_scan(beta2, 0.15, N_list, samples, acc_stream(40));
    const double slope = below.loglog_fit.slope;
    const double se = below.extras.at("slope_se_propagated");
    const bool positive = slope - 1.96 * se > 0.0;
    details += fmt("; alpha=0.15 slope=%.4f (95%% CI low=%.4f)", slope, slope - 1.96 * se);
    report(4, "chaos norm threshold", ratios_ok && positive, details);
}

TEST_CASE("criterion 5: measure invariance", "[c5]") {
    const GridSpec grid(1.0, 64);
    const double N = 16.0, beta2 = pi;
    ChainConfig chain;
    chain.n_members = 2000;
    chain.n_chains = 4;
    const GibbsEnsemble ens = pcn_sample_gibbs(grid, N, beta2, chain, acc_stream(5));
    InvarianceConfig icfg;
    icfg.T = 1.0;
    icfg.dt = 2e-3;
    ParabolicParams dyn;
    dyn.beta2 = beta2;
    dyn.N = N;
    const InvarianceReport good = invariance_test(ens, icfg, acc_stream(50), dyn);
    std::string details = fmt("rhat=%.3f;", ens.rhat);
    for (const auto& o : good.observables)
        details += fmt(" %s: p=%.3f shift=%.1fSE;", o.name.c_str(), o.ks_p,
                       o.shift_se > 0 ? o.mean_shift / o.shift_se : 0.0);

    InvarianceConfig control = icfg;
    control.gamma_scale = 2.0;
    const InvarianceReport bad = invariance_test(ens, control, acc_stream(50), dyn);
    const ObservableComparison& o1 = bad.by_name("cosine_mean");
    const bool control_detects = !bad.pass && std::abs(o1.mean_shift) > 3.0 * o1.shift_se;
    details += fmt(" control shift=%.1fSE", o1.shift_se > 0 ? o1.mean_shift / o1.shift_se : 0.0);
    report(5, "invariance + control", good.pass && control_detects, details);
}

TEST_CASE("criterion 6: tightness proxy", "[c6]") {
    TightnessConfig cfg;
    cfg.delta = 0.1;
    cfg.p = 2.0;
    cfg.chain.n_chains = 4;
    const EnsembleStats stats =
        tightness_scan({16.0, 32.0, 64.0, 128.0}, 400, cfg, acc_stream(6), pi);
    const double var = stats.extras.at("top_octave_variation");
    std::string details = "moments:";
    for (const ScanPoint& p : stats.points) details += fmt(" %.3f", p.mean);
    details += fmt("; top octave variation=%.1f%%", 100.0 * var);
    report(6, "uniform norm moments", var <= 0.10 && stats.extras.at("sampler_warnings") == 0.0,
           details);
}

TEST_CASE("criterion 7: a priori bound constants", "[c7]") {
    const double beta2 = pi, delta = 0.05, T = 2.0;
    const double s = beta2 / (4.0 * pi) + 3.0 * delta;
    const double N = 32.0;
    const GridSpec grid(1.0, 128);
    ParabolicParams params;
    params.beta2 = beta2;
    params.N = N;
    params.gamma = gamma_coupling(beta2, sigma_heat(grid, N));
    const ChaosParams cp = chaos_params(grid, N, beta2);

    std::vector<AprioriRun> runs(200);
    parallel_for(runs.size(), [&](std::size_t i) {
        const SeededStream rs = acc_stream(7).with_member(static_cast<std::uint32_t>(i));
        SpectralField v0 = apply_multiplier(sample_gff(grid, rs.with_slab(900001)),
                                            MultiplierSpec::sharp_cutoff(N));
        const double amp[4] = {0.0, 0.3, 1.0, 3.0};
        for (auto& c : v0.coeffs) c *= amp[i % 4];
        const SpectralField psi0 = sample_gff(grid, rs.with_slab(900002));
        RemainderRunConfig rcfg;
        rcfg.T = T;
        rcfg.dt = 5e-3;
        rcfg.delta = delta;
        rcfg.smoothness = s;
        rcfg.theta_smoothness = 2.0 * delta - s;
        const RemainderRunResult rr =
            run_remainder(v0, psi0, params, cp, rcfg, stream_slabs(rs, grid, rcfg.dt));
        runs[i].lhs = x_norm(rr.v_trajectory, delta, s, T);
        runs[i].v0_norm = rr.v0_norm;
        runs[i].theta_norm = rr.theta_sup_norm;
    });
    const std::vector<AprioriRun> train(runs.begin(), runs.begin() + 100);
    const std::vector<AprioriRun> validate(runs.begin() + 100, runs.end());
    const AprioriReport rep = apriori_monitor(train, validate, beta2, delta, T);

    // weighted variant on the large torus under the smallness condition
    const double lambda = 0.25, M = 16.0, Tw = 1.0;
    const double Nw = 8.0, Lw = 8.0;
    const GridSpec wgrid(Lw, 256);
    ParabolicParams wparams;
    wparams.beta2 = beta2;
    wparams.N = Nw;
    wparams.gamma = gamma_coupling(beta2, sigma_heat(wgrid, Nw));
    const ChaosParams wcp = chaos_params(wgrid, Nw, beta2);
    const MadicPartition part(M);
    const int ell_max = part.cover_ell_max(std::sqrt(2.0) * pi * Lw);
    std::vector<AprioriRun> wruns(100);
    parallel_for(wruns.size(), [&](std::size_t i) {
        const SeededStream rs = acc_stream(70).with_member(static_cast<std::uint32_t>(i));
        SpectralField v0 = apply_multiplier(sample_gff(wgrid, rs.with_slab(900001)),
                                            MultiplierSpec::sharp_cutoff(Nw));
        const double amp[4] = {0.0, 0.3, 1.0, 3.0};
        for (auto& c : v0.coeffs) c *= amp[i % 4];
        const SpectralField psi0 = sample_gff(wgrid, rs.with_slab(900002));
        RemainderRunConfig rcfg;
        rcfg.T = Tw;
        rcfg.dt = 5e-3;
        rcfg.delta = delta;
        rcfg.smoothness = s;
        rcfg.theta_smoothness = 2.0 * delta - s;
        const WeightedRemainderResult rr = run_remainder_weighted(
            v0, psi0, wparams, wcp, rcfg, lambda, M, ell_max, stream_slabs(rs, wgrid, rcfg.dt));
        wruns[i].lhs = y_norm(rr.trajectory, delta, s, Tw);
        wruns[i].v0_norm = rr.v0_weighted_norm;
        wruns[i].theta_shell_sup = rr.trajectory.theta_shell_sup;
    });
    const std::vector<AprioriRun> wtrain(wruns.begin(), wruns.begin() + 50);
    const std::vector<AprioriRun> wvalidate(wruns.begin() + 50, wruns.end());
    const AprioriReport wrep =
        apriori_monitor_weighted(wtrain, wvalidate, beta2, delta, Tw, lambda, M);

    const bool pass = rep.min_margin >= 0.0 && wrep.min_margin >= 0.0;
    report(7, "fitted constants validate", pass,
           fmt("plain: K1=%.3f K2=%.3g A=%.0f min_margin=%.3f; weighted: K1=%.3f K2=%.3g "
               "min_margin=%.3f",
               rep.K1, rep.K2, rep.A, rep.min_margin, wrep.K1, wrep.K2, wrep.min_margin));
}

TEST_CASE("criterion 8: wave exactness and variance", "[c8]") {
    // (a) linear mode evolution matches the closed form to 1e-12
    const GridSpec small(1.0, 32);
    WaveParams wp;
    wp.beta2 = pi;
    wp.N = 8.0;
    double linear_err = 0.0;
    for (double t : {0.1, 1.0, 5.0}) {
        WaveState st{0.0, SpectralField(small, true), SpectralField(small, true), wp};
        st.vel.mode(3, 1) = cplx(1.0, 0.0);
        st.vel.mode(-3, -1) = cplx(1.0, 0.0);
        const WaveState out = wave_linear_step(st, t);
        const double w = std::sqrt(0.75 + 10.0);
        linear_err = std::max(linear_err, std::abs(out.pos.mode(3, 1).real() -
                                                   std::exp(-0.5 * t) * std::sin(w * t) / w));
    }
    const bool exact_ok = linear_err <= 1e-12;

    // (b) Monte Carlo variance against the lattice constant at t = 1
    const GridSpec grid(1.0, 64);
    const double N = 16.0;
    WaveParams params;
    params.beta2 = pi;
    params.N = N;
    const int n = 10000;
    WaveStepper stepper(grid, params, 0.25);
    std::vector<double> vals(n);
    for (int i = 0; i < n; ++i) {
        SpectralField pos(grid, true), vel(grid, true);
        for (int k = 0; k < 4; ++k) {
            const SeededStream noise = acc_stream(8).with_member(i).with_slab(k);
            stepper.step_linear(pos, vel, &noise);
        }
        vals[i] = to_physical_real(pos)[0];
    }
    const double target = sigma_wave(grid, N, 1.0);
    const double var_err = std::abs(variance(vals) - target);
    const double var_tol = 3.0 * target * std::sqrt(2.0 / n);
    const bool var_ok = var_err <= var_tol;

    // (c) sigma_wave(50) equals sigma_heat to 1e-8
    const double relax_err = std::abs(sigma_wave(grid, N, 50.0) - sigma_heat(grid, N));
    const bool relax_ok = relax_err <= 1e-8;

    // (d) twenty long runs stay bounded
    const GridSpec wave_grid(1.0, 256);
    WaveParams wrun;
    wrun.beta2 = pi;
    wrun.N = 64.0;
    WaveRunConfig cfg;
    cfg.T = 10.0;
    cfg.dt = 1e-2;
    cfg.alpha = 0.3;
    cfg.record_stride = 50;
    const WaveChaosSchedule sched = wave_chaos_schedule(wave_grid, wrun, cfg.T, cfg.dt);
    std::vector<double> sups(20);
    parallel_for(sups.size(), [&](std::size_t r) {
        const SpectralField z(wave_grid, true);
        const WaveRunResult res = run_wave_remainder(
            z, z, wrun, sched, cfg, acc_stream(80).with_member(static_cast<std::uint32_t>(r)));
        sups[r] = wave_energy_monitor(res.energy_samples, cfg.alpha, cfg.T).sup_energy;
    });
    bool bounded = true;
    const double med = median(sups);
    for (double sv : sups) bounded = bounded && std::isfinite(sv) && sv <= 10.0 * med;

    report(8, "wave exactness + energy", exact_ok && var_ok && relax_ok && bounded,
           fmt("linear_err=%.1e; |var-sigma|=%.4f (tol %.4f); relax_err=%.1e; max/med=%.2f",
               linear_err, var_err, var_tol, *std::max_element(sups.begin(), sups.end()) / med));
}

TEST_CASE("criterion 9: volume scaling", "[c9]") {
    VolumeScanConfig cfg;
    cfg.N = 32.0;
    cfg.delta = 0.1;
    cfg.p = 2.0;
    const VolumeScanResult res = volume_scan({1.0, 2.0, 4.0, 8.0}, 200, cfg, acc_stream(9));
    const double slope = res.global.loglog_fit.slope;
    const double spread = res.windowed.extras.at("relative_spread");
    report(9, "norm growth in volume", slope <= 2.3 && spread <= 0.25,
           fmt("global slope=%.3f (<= 2.3); window spread=%.1f%% (<= 25%%)", slope,
               100.0 * spread));
}

TEST_CASE("criterion 10: structural suites", "[c10]") {
    // transform round trip at 1e-10
    const GridSpec grid(1.0, 64);
    SpectralField f = sample_gff(grid, acc_stream(10));
    const SpectralField back = forward_transform_real(grid, to_physical_real(f));
    double rt_err = 0.0;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
        rt_err = std::max(rt_err, std::abs(back.coeffs[i] - f.coeffs[i]));
    rt_err /= f.max_abs_coeff();
    const bool rt_ok = rt_err <= 1e-10;

    // dyadic partition of unity at 1e-12
    double pu_err = 0.0;
    const int kmax = lp_kmax(grid);
    const SeededStream s = acc_stream(100);
    for (int trial = 0; trial < 1000; ++trial) {
        const double xi = s.uniform(trial) * grid.nyquist();
        double sum = 0.0;
        for (int k = 0; k <= kmax; ++k) sum += lp_block_value(k, xi);
        pu_err = std::max(pu_err, std::abs(sum - 1.0));
    }
    const bool pu_ok = pu_err <= 1e-12;

    // Poisson summation on a Gaussian at 1e-8
    const double poisson_res =
        poisson_check([](double x, double y) { return std::exp(-0.5 * (x * x + y * y)); },
                      GridSpec(1.0, 32));
    const bool poisson_ok = poisson_res <= 1e-8;

    // heat-flow smoothing ratios: max at most 1.5x the median
    std::vector<double> ratios;
    for (double L : {1.0, 2.0, 4.0}) {
        const GridSpec g(L, static_cast<int>(64 * L));
        for (int trial = 0; trial < 10; ++trial) {
            const SeededStream rs = acc_stream(101).with_member(trial).with_slab(
                static_cast<std::uint64_t>(L));
            SpectralField h = apply_multiplier(sample_gff(g, rs),
                                               MultiplierSpec::sharp_cutoff(g.nyquist() / 2.0));
            const double base = holder_norm(h, -0.1);
            for (double t : {1e-3, 4e-3, 1.6e-2, 6.4e-2, 0.26, 1.0})
                ratios.push_back(holder_norm(heat_flow(h, t), 0.4) /
                                 (std::pow(std::min(1.0, t), -0.25) * base));
        }
    }
    const double ratio_max = *std::max_element(ratios.begin(), ratios.end());
    const bool schauder_ok = ratio_max <= 1.5 * median(ratios);

    // bitwise rerun determinism through the experiment runner
    namespace fs = std::filesystem;
    const fs::path base = fs::temp_directory_path() / "sgsq_acceptance_det";
    fs::remove_all(base);
    json cfg;
    cfg["subcommand"] = "gmc-scan";
    cfg["beta2"] = pi;
    cfg["alpha"] = 0.35;
    cfg["N_list"] = {8.0, 16.0};
    cfg["samples"] = 30;
    cfg["seed"] = 7;
    run_experiment(cfg, base / "a");
    run_experiment(cfg, base / "b");
    const auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const bool det_ok = read(base / "a/results.csv") == read(base / "b/results.csv") &&
                        read(base / "a/results.json") == read(base / "b/results.json");

    report(10, "structural suites", rt_ok && pu_ok && poisson_ok && schauder_ok && det_ok,
           fmt("roundtrip=%.1e; partition=%.1e; poisson=%.1e; schauder max/med=%.2f; rerun=%s",
               rt_err, pu_err, poisson_res, ratio_max / median(ratios), det_ok ? "byte-identical" : "DIFFERS"));
}
