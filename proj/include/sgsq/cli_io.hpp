#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sgsq/chaos.hpp"
#include "sgsq/common.hpp"
#include "sgsq/dynamics_parabolic.hpp"
#include "sgsq/dynamics_wave.hpp"
#include "sgsq/io.hpp"
#include "sgsq/measure.hpp"
#include "sgsq/parallel.hpp"

namespace sgsq {

// Experiment runner: a flat-key JSON config selects one subcommand, every
// run writes a self-describing output directory (manifest + results), and
// identical (config, seed) reruns produce byte-identical result payloads.

struct check_failed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cli {

// ---------------------------------------------------------------------------
// config access with field-path errors
// ---------------------------------------------------------------------------

class Config {
public:
    explicit Config(json j) : j_(std::move(j)) {
        if (!j_.is_object()) throw config_error("config: top level must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key) const {
        require(key);
        if (!j_.at(key).is_number()) throw config_error("config field '" + key + "': expected a number");
        return j_.at(key).get<double>();
    }
    double number_or(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }
    int integer(const std::string& key) const {
        const double v = number(key);
        if (v != std::floor(v)) throw config_error("config field '" + key + "': expected an integer");
        return static_cast<int>(v);
    }
    int integer_or(const std::string& key, int fallback) const {
        return has(key) ? integer(key) : fallback;
    }
    bool flag_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) throw config_error("config field '" + key + "': expected a bool");
        return j_.at(key).get<bool>();
    }
    std::string text_or(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_string()) throw config_error("config field '" + key + "': expected a string");
        return j_.at(key).get<std::string>();
    }
    std::vector<double> number_list(const std::string& key) const {
        require(key);
        if (!j_.at(key).is_array()) throw config_error("config field '" + key + "': expected an array");
        std::vector<double> out;
        for (const auto& v : j_.at(key)) {
            if (!v.is_number()) throw config_error("config field '" + key + "': expected numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }

    void allow_only(const std::vector<std::string>& keys) const {
        for (const auto& [k, v] : j_.items()) {
            if (k == "subcommand" || k == "seed" || k == "threads") continue;
            bool ok = false;
            for (const std::string& a : keys)
                if (k == a) ok = true;
            if (!ok) throw config_error("config field '" + k + "': unknown for this subcommand");
        }
    }

    const json& raw() const { return j_; }

private:
    void require(const std::string& key) const {
        if (!has(key)) throw config_error("config field '" + key + "': missing");
    }
    json j_;
};

inline CutoffProfile profile_from(const Config& cfg) {
    const std::string name = cfg.text_or("chi", "default");
    if (name == "default") return CutoffProfile::smooth_default;
    if (name == "physical") return CutoffProfile::physical_bump;
    if (name == "sharp") return CutoffProfile::sharp_radius1;
    throw config_error("config field 'chi': unknown profile '" + name + "'");
}

inline void require_parabolic_regime(double beta2) {
    if (!(beta2 > 0.0 && beta2 < 4.0 * pi))
        throw parameter_error("regime: this subcommand requires 0 < beta^2 < 4*pi");
}
inline void require_wave_regime(double beta2) {
    if (!(beta2 > 0.0 && beta2 < 2.0 * pi))
        throw parameter_error("regime: wave runs require 0 < beta^2 < 2*pi");
}

inline GridSpec grid_from(const Config& cfg, double default_factor_N = 0.0) {
    const double L = cfg.number_or("grid.L", 1.0);
    int n = cfg.integer_or("grid.n_side", 0);
    if (n == 0) {
        if (default_factor_N <= 0.0) throw config_error("config field 'grid.n_side': missing");
        n = 8;
        while (n < 4.0 * default_factor_N * L) n *= 2;
    }
    return GridSpec(L, n);
}

inline TruncationPlacement placement_from(const Config& cfg) {
    const std::string p = cfg.text_or("placement", "nonlinearity");
    if (p == "nonlinearity") return TruncationPlacement::nonlinearity;
    if (p == "noise") return TruncationPlacement::noise;
    throw config_error("config field 'placement': expected 'nonlinearity' or 'noise'");
}

// ---------------------------------------------------------------------------
// run context
// ---------------------------------------------------------------------------

struct RunContext {
    std::filesystem::path out_dir;
    std::uint64_t master_seed = 0;
    json results;                       // written to results.json
    std::vector<std::string> result_files{"results.json"};

    SeededStream stream(std::uint32_t experiment) const {
        return SeededStream(master_seed, {experiment, 0, 0});
    }
    std::filesystem::path file(const std::string& name) const { return out_dir / name; }
};

using Runner = std::function<void(const Config&, RunContext&)>;

// ---------------------------------------------------------------------------
// subcommand implementations
// ---------------------------------------------------------------------------

inline void run_renorm_table(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "grid.n_side", "beta2", "N_list", "chi"});
    const GridSpec grid = grid_from(cfg);
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    const RenormTable table = renorm_table(grid, beta2, cfg.number_list("N_list"), profile_from(cfg));
    CsvWriter csv(ctx.file("results.csv"), {"N", "sigma", "gamma"});
    for (const auto& e : table.entries) csv.row({e.N, e.sigma, e.gamma});
    ctx.results["rows"] = table.entries.size();
    ctx.results["chi_profile"] = cfg.text_or("chi", "default");
    ctx.results["grid"] = {{"L", grid.L}, {"n_side", grid.n_side}};
    ctx.result_files.push_back("results.csv");
}

inline void run_gff_check(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "grid.n_side", "N", "samples"});
    const GridSpec grid = grid_from(cfg, cfg.number("N"));
    const double N = cfg.number("N");
    const int samples = cfg.integer("samples");
    const double sigma = sigma_heat(grid, N);
    const MultiplierSpec chi = MultiplierSpec::smooth_cutoff(N);
    const SeededStream stream = ctx.stream(11);

    std::vector<double> point_vals(samples);
    std::vector<double> mode_re(samples), mode_im(samples);
    parallel_for(samples, [&](std::size_t i) {
        const SpectralField u = sample_gff(grid, stream.with_member(static_cast<std::uint32_t>(i)));
        point_vals[i] = to_physical_real(apply_multiplier(u, chi))[0];
        const cplx prod = u.mode(1, 0) * std::conj(u.mode(2, 1));
        mode_re[i] = prod.real();
        mode_im[i] = prod.imag();
    });
    const double var = variance(point_vals);
    const double z_var = (var - sigma) / (sigma * std::sqrt(2.0 / samples));
    const double z_re = mean(mode_re) / std_error(mode_re);
    const double z_im = mean(mode_im) / std_error(mode_im);
    ctx.results["sigma"] = sigma;
    ctx.results["variance_estimate"] = var;
    ctx.results["z_variance"] = z_var;
    ctx.results["z_cross_re"] = z_re;
    ctx.results["z_cross_im"] = z_im;
    const bool pass = std::abs(z_var) <= 3.0 && std::abs(z_re) <= 3.0 && std::abs(z_im) <= 3.0;
    ctx.results["pass"] = pass;
    if (!pass) throw check_failed("gff-check: statistical test outside 3 standard errors");
}

inline void run_gmc_scan(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "beta2", "alpha", "N_list", "samples", "chi", "oversample"});
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    ChaosScanConfig scan;
    scan.L = cfg.number_or("grid.L", 1.0);
    scan.os_factor = cfg.integer_or("oversample", 2);
    scan.chi = profile_from(cfg);
    const EnsembleStats stats = regularity_scan(beta2, cfg.number("alpha"), cfg.number_list("N_list"),
                                                cfg.integer("samples"), ctx.stream(21), scan);
    CsvWriter csv(ctx.file("results.csv"), {"N", "median", "mean", "ci_half_width"});
    for (const ScanPoint& p : stats.points) csv.row({p.abscissa, p.median, p.mean, p.ci_half_width});
    ctx.results["slope_median"] = stats.loglog_fit.slope;
    ctx.results["slope_se"] = stats.loglog_fit.slope_se;
    for (const auto& [k, v] : stats.extras) ctx.results[k] = v;
    ctx.result_files.push_back("results.csv");
}

inline void run_cos_decay(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "beta2", "N_list", "samples", "phi_mode", "chi"});
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    ChaosScanConfig scan;
    scan.L = cfg.number_or("grid.L", 1.0);
    scan.chi = profile_from(cfg);
    const std::vector<double> mode = cfg.has("phi_mode") ? cfg.number_list("phi_mode")
                                                         : std::vector<double>{1.0, 0.0};
    if (mode.size() != 2) throw config_error("config field 'phi_mode': expected [k1, k2]");
    const GridSpec ref(scan.L, 8);
    SpectralField phi(ref, true);
    phi.mode(static_cast<int>(mode[0]), static_cast<int>(mode[1])) = cplx(pi, 0.0);
    phi.mode(-static_cast<int>(mode[0]), -static_cast<int>(mode[1])) = cplx(pi, 0.0);
    const EnsembleStats stats = cos_pairing_decay(beta2, phi, cfg.number_list("N_list"),
                                                  cfg.integer("samples"), ctx.stream(22), scan);
    CsvWriter csv(ctx.file("results.csv"), {"N", "second_moment", "ci_half_width"});
    for (const ScanPoint& p : stats.points) csv.row({p.abscissa, p.mean, p.ci_half_width});
    ctx.results["slope_second_moment"] = stats.loglog_fit.slope;
    ctx.results["slope_rms"] = stats.extras.at("slope_rms");
    ctx.results["slope_rms_se"] = stats.extras.at("slope_rms_se");
    ctx.results["target_rms"] = -beta2 / (4.0 * pi);
    ctx.result_files.push_back("results.csv");
}

inline void run_parabolic(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "grid.n_side", "N", "beta2", "T", "dt", "placement", "init",
                    "record_smoothness", "chi"});
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    const double N = cfg.number("N");
    const GridSpec grid = grid_from(cfg, N);
    ParabolicParams params;
    params.beta2 = beta2;
    params.N = N;
    params.chi = profile_from(cfg);
    params.placement = placement_from(cfg);
    params.gamma = gamma_coupling(beta2, sigma_heat(grid, N, params.chi));
    const double T = cfg.number("T");
    const double dt = cfg.number("dt");
    const std::string init = cfg.text_or("init", "gff");
    SpectralField u0(grid, true);
    if (init == "gff")
        u0 = sample_gff(grid, ctx.stream(31));
    else if (init != "zero")
        throw config_error("config field 'init': expected 'gff' or 'zero'");
    const std::optional<double> rec =
        cfg.has("record_smoothness") ? std::optional<double>(cfg.number("record_smoothness"))
                                     : std::nullopt;
    const ParabolicRunResult run =
        run_truncated_sg(u0, params, T, dt, stream_slabs(ctx.stream(32), grid, dt), rec);
    write_field_dump(ctx.file("final_state.sgsq"), run.final_state.u);
    json sidecar;
    sidecar["t"] = run.final_state.t;
    sidecar["gamma"] = params.gamma;
    sidecar["placement"] = cfg.text_or("placement", "nonlinearity");
    sidecar["master_seed"] = ctx.master_seed;
    std::ofstream(ctx.file("final_state.json")) << sidecar.dump(2) << "\n";
    if (rec) {
        CsvWriter csv(ctx.file("results.csv"), {"t", "holder_norm"});
        for (std::size_t i = 0; i < run.trajectory.times.size(); ++i)
            csv.row({run.trajectory.times[i], run.trajectory.cs_norms[i]});
        ctx.result_files.push_back("results.csv");
    }
    ctx.results["final_time"] = run.final_state.t;
    ctx.results["steps"] = run.final_state.steps_taken;
    ctx.results["gamma"] = params.gamma;
}

inline void run_wave(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "grid.n_side", "N", "beta2", "T", "dt", "alpha", "chi", "runs"});
    const double beta2 = cfg.number("beta2");
    require_wave_regime(beta2);
    const double N = cfg.number("N");
    const GridSpec grid = grid_from(cfg, N);
    WaveParams params;
    params.beta2 = beta2;
    params.N = N;
    params.chi = profile_from(cfg);
    WaveRunConfig rcfg;
    rcfg.T = cfg.number("T");
    rcfg.dt = cfg.number("dt");
    rcfg.alpha = cfg.number_or("alpha", 0.3);
    const int runs = cfg.integer_or("runs", 1);
    const WaveChaosSchedule sched = wave_chaos_schedule(grid, params, rcfg.T, rcfg.dt);
    CsvWriter csv(ctx.file("results.csv"), {"run", "t", "energy"});
    std::vector<double> sups(runs);
    std::vector<std::vector<WaveEnergySample>> samples(runs);
    parallel_for(runs, [&](std::size_t r) {
        const SpectralField z(grid, true);
        const WaveRunResult res = run_wave_remainder(
            z, z, params, sched, rcfg, ctx.stream(41).with_member(static_cast<std::uint32_t>(r)));
        samples[r] = res.energy_samples;
        sups[r] = wave_energy_monitor(res.energy_samples, rcfg.alpha, rcfg.T).sup_energy;
    });
    for (int r = 0; r < runs; ++r)
        for (const WaveEnergySample& s : samples[r])
            csv.row({static_cast<double>(r), s.t, s.energy});
    ctx.results["sup_energy_max"] = *std::max_element(sups.begin(), sups.end());
    ctx.results["sup_energy_median"] = median(sups);
    ctx.result_files.push_back("results.csv");
}

inline void run_sample_gibbs(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "grid.n_side", "N", "beta2", "members", "chains", "pilot_steps",
                    "thin", "burn_in", "dump_fields", "chi"});
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    const double N = cfg.number("N");
    const GridSpec grid = grid_from(cfg, N);
    ChainConfig chain;
    chain.n_members = cfg.integer("members");
    chain.n_chains = cfg.integer_or("chains", 4);
    chain.pilot_steps = cfg.integer_or("pilot_steps", 1000);
    chain.thin = cfg.integer_or("thin", 0);
    chain.burn_in = cfg.integer_or("burn_in", 0);
    const bool dump = cfg.flag_or("dump_fields", false);
    if (dump) std::filesystem::create_directories(ctx.file("members"));
    std::vector<double> o1(chain.n_members, 0.0);
    const GibbsEnsemble ens = pcn_sample_streaming(
        grid, N, beta2, chain, ctx.stream(51),
        [&](std::size_t i, const SpectralField& u) {
            if (dump) write_field_dump(ctx.file("members") / ("member_" + std::to_string(i) + ".sgsq"), u);
            detail::PcnPotential pot(grid, N, beta2, profile_from(cfg), chain.os_factor);
            o1[i] = pot.cosine_mean(u);
        },
        profile_from(cfg));
    ctx.results["acceptance_rate"] = ens.acceptance_rate;
    ctx.results["rho"] = ens.rho;
    ctx.results["burn_in"] = ens.burn_in;
    ctx.results["thin"] = ens.thin;
    ctx.results["tau"] = ens.tau;
    ctx.results["ess"] = ens.ess;
    ctx.results["rhat"] = ens.rhat;
    ctx.results["rhat_warning"] = ens.rhat_warning;
    ctx.results["cosine_mean"] = mean(o1);
    ctx.results["cosine_mean_se"] = std_error(o1);
}

inline void run_invariance(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "grid.n_side", "N", "beta2", "members", "chains", "T", "dt",
                    "gamma_scale", "chi"});
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    const double N = cfg.number("N");
    const GridSpec grid = grid_from(cfg, N);
    ChainConfig chain;
    chain.n_members = cfg.integer("members");
    chain.n_chains = cfg.integer_or("chains", 4);
    const GibbsEnsemble ens = pcn_sample_gibbs(grid, N, beta2, chain, ctx.stream(52));
    InvarianceConfig icfg;
    icfg.T = cfg.number("T");
    icfg.dt = cfg.number("dt");
    icfg.gamma_scale = cfg.number_or("gamma_scale", 1.0);
    ParabolicParams dyn;
    dyn.beta2 = beta2;
    dyn.N = N;
    const InvarianceReport rep = invariance_test(ens, icfg, ctx.stream(53), dyn);
    json obs = json::array();
    for (const auto& o : rep.observables)
        obs.push_back({{"name", o.name},
                       {"ks_p", o.ks_p},
                       {"mean_shift", o.mean_shift},
                       {"shift_se", o.shift_se}});
    ctx.results["observables"] = obs;
    ctx.results["pass"] = rep.pass;
    ctx.results["bonferroni_level"] = rep.bonferroni_level;
    ctx.results["rhat_warning"] = ens.rhat_warning;
    if (!rep.pass) throw check_failed("invariance-test: distribution comparison failed");
}

inline void run_tightness(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "beta2", "N_list", "delta", "p", "samples", "chains"});
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    TightnessConfig tcfg;
    tcfg.L = cfg.number_or("grid.L", 1.0);
    tcfg.delta = cfg.number_or("delta", 0.1);
    tcfg.p = cfg.number_or("p", 2.0);
    tcfg.chain.n_chains = cfg.integer_or("chains", 4);
    const EnsembleStats stats =
        tightness_scan(cfg.number_list("N_list"), cfg.integer("samples"), tcfg, ctx.stream(54), beta2);
    CsvWriter csv(ctx.file("results.csv"), {"N", "moment", "ci_half_width"});
    for (const ScanPoint& p : stats.points) csv.row({p.abscissa, p.mean, p.ci_half_width});
    ctx.results["top_octave_variation"] = stats.extras.at("top_octave_variation");
    ctx.results["sampler_warnings"] = stats.extras.at("sampler_warnings");
    ctx.result_files.push_back("results.csv");
}

inline void run_volume(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"L_list", "N", "delta", "p", "samples", "window_radius"});
    VolumeScanConfig vcfg;
    vcfg.N = cfg.number("N");
    vcfg.delta = cfg.number_or("delta", 0.1);
    vcfg.p = cfg.number_or("p", 2.0);
    vcfg.window_radius = cfg.number_or("window_radius", 1.5);
    const VolumeScanResult res =
        volume_scan(cfg.number_list("L_list"), cfg.integer("samples"), vcfg, ctx.stream(55));
    CsvWriter csv(ctx.file("results.csv"), {"L", "global_moment", "global_ci", "window_moment",
                                            "window_ci"});
    for (std::size_t i = 0; i < res.global.points.size(); ++i)
        csv.row({res.global.points[i].abscissa, res.global.points[i].mean,
                 res.global.points[i].ci_half_width, res.windowed.points[i].mean,
                 res.windowed.points[i].ci_half_width});
    ctx.results["global_slope"] = res.global.loglog_fit.slope;
    ctx.results["window_relative_spread"] = res.windowed.extras.at("relative_spread");
    ctx.result_files.push_back("results.csv");
}

inline void run_apriori(const Config& cfg, RunContext& ctx) {
    cfg.allow_only({"grid.L", "beta2", "N", "delta", "T", "dt", "train_runs", "validate_runs",
                    "weighted", "lambda", "M", "chi"});
    const double beta2 = cfg.number("beta2");
    require_parabolic_regime(beta2);
    const double delta = cfg.number_or("delta", 0.05);
    const double T = cfg.number_or("T", 2.0);
    const double dt = cfg.number_or("dt", 5e-3);
    const double N = cfg.number("N");
    const double L = cfg.number_or("grid.L", 1.0);
    const bool weighted = cfg.flag_or("weighted", false);
    const double s = beta2 / (4.0 * pi) + 3.0 * delta;
    int m = 8;
    while (m < 4.0 * N * L) m *= 2;
    const GridSpec grid(L, m);
    ParabolicParams params;
    params.beta2 = beta2;
    params.N = N;
    params.gamma = gamma_coupling(beta2, sigma_heat(grid, N));
    const ChaosParams cp = chaos_params(grid, N, beta2);
    const int n_train = cfg.integer("train_runs");
    const int n_validate = cfg.integer("validate_runs");
    const double lambda = cfg.number_or("lambda", 0.25);
    const double M = cfg.number_or("M", 16.0);

    const int total = n_train + n_validate;
    std::vector<AprioriRun> runs(total);
    const SeededStream stream = ctx.stream(61);
    const MadicPartition part(M);
    const int ell_max = weighted ? part.cover_ell_max(std::sqrt(2.0) * pi * L) : 0;
    parallel_for(total, [&](std::size_t i) {
        const SeededStream rs = stream.with_member(static_cast<std::uint32_t>(i));
        SpectralField v0 = apply_multiplier(sample_gff(grid, rs.with_slab(900001)),
                                            MultiplierSpec::sharp_cutoff(N));
        const double amp[4] = {0.0, 0.3, 1.0, 3.0};
        for (auto& c : v0.coeffs) c *= amp[i % 4];
        const SpectralField psi0 = sample_gff(grid, rs.with_slab(900002));
        RemainderRunConfig rcfg;
        rcfg.T = T;
        rcfg.dt = dt;
        rcfg.delta = delta;
        rcfg.smoothness = s;
        rcfg.theta_smoothness = 2.0 * delta - s;
        AprioriRun& run = runs[i];
        if (!weighted) {
            const RemainderRunResult rr = run_remainder(v0, psi0, params, cp, rcfg,
                                                        stream_slabs(rs, grid, dt));
            run.lhs = x_norm(rr.v_trajectory, delta, s, T);
            run.v0_norm = rr.v0_norm;
            run.theta_norm = rr.theta_sup_norm;
        } else {
            const WeightedRemainderResult rr = run_remainder_weighted(
                v0, psi0, params, cp, rcfg, lambda, M, ell_max, stream_slabs(rs, grid, dt));
            run.lhs = y_norm(rr.trajectory, delta, s, T);
            run.v0_norm = rr.v0_weighted_norm;
            run.theta_shell_sup = rr.trajectory.theta_shell_sup;
        }
    });
    const std::vector<AprioriRun> train(runs.begin(), runs.begin() + n_train);
    const std::vector<AprioriRun> validate(runs.begin() + n_train, runs.end());
    const AprioriReport rep =
        weighted ? apriori_monitor_weighted(train, validate, beta2, delta, T, lambda, M)
                 : apriori_monitor(train, validate, beta2, delta, T);
    CsvWriter csv(ctx.file("results.csv"), {"validation_run", "margin"});
    for (std::size_t i = 0; i < rep.margins.size(); ++i)
        csv.row({static_cast<double>(i), rep.margins[i]});
    ctx.results["K1"] = rep.K1;
    ctx.results["K2"] = rep.K2;
    ctx.results["A"] = rep.A;
    ctx.results["headroom"] = rep.headroom;
    ctx.results["min_margin"] = rep.min_margin;
    ctx.results["s"] = s;
    ctx.result_files.push_back("results.csv");
    if (rep.min_margin < 0.0) throw check_failed("apriori-fit: negative validation margin");
}

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

inline const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> table = {
        {"renorm-table", run_renorm_table}, {"gff-check", run_gff_check},
        {"gmc-scan", run_gmc_scan},         {"cos-decay", run_cos_decay},
        {"run-parabolic", run_parabolic},   {"run-wave", run_wave},
        {"sample-gibbs", run_sample_gibbs}, {"invariance-test", run_invariance},
        {"tightness-scan", run_tightness},  {"volume-scan", run_volume},
        {"apriori-fit", run_apriori},
    };
    return table;
}

}  // namespace cli

// Execute one experiment. The manifest alone suffices to rerun: it echoes
// the full config, the subcommand, and the master seed. Result payloads
// are byte-stable for fixed (config, seed); wall time lives only in the
// manifest and is excluded from the hashed scope.
inline void run_experiment(const json& config_json, const std::filesystem::path& out_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt,
                           std::optional<std::string> subcommand_override = std::nullopt,
                           int threads = 1) {
    cli::Config cfg(config_json);
    const std::string sub = subcommand_override
                                ? *subcommand_override
                                : cfg.text_or("subcommand", "");
    if (sub.empty()) throw config_error("config field 'subcommand': missing");
    const auto it = cli::runners().find(sub);
    if (it == cli::runners().end())
        throw config_error("config field 'subcommand': unknown subcommand '" + sub + "'");

    std::filesystem::create_directories(out_dir);
    if (std::filesystem::exists(out_dir / "manifest.json"))
        throw config_error("output directory already holds an experiment (append-only): " +
                           out_dir.string());

    cli::RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.master_seed = seed_override ? *seed_override
                                    : static_cast<std::uint64_t>(cfg.number_or("seed", 0));
    worker_threads() = std::max(1, threads);

    const auto t0 = std::chrono::steady_clock::now();
    it->second(cfg, ctx);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream(ctx.file("results.json")) << ctx.results.dump(2) << "\n";

    json manifest;
    manifest["subcommand"] = sub;
    manifest["config"] = config_json;
    manifest["master_seed"] = ctx.master_seed;
    manifest["code_version"] = version_string;
    manifest["wall_time_s"] = wall;  // excluded from the hashed scope
    json hashes;
    for (const std::string& f : ctx.result_files) {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a_file(ctx.file(f))));
        hashes[f] = buf;
    }
    manifest["results_hash"] = hashes;
    std::ofstream(ctx.file("manifest.json")) << manifest.dump(2) << "\n";
}

}  // namespace sgsq
