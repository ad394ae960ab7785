#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "sgsq/chaos.hpp"
#include "sgsq/common.hpp"
#include "sgsq/grid_fourier.hpp"
#include "sgsq/noise_gff.hpp"
#include "sgsq/norms.hpp"
#include "sgsq/parallel.hpp"
#include "sgsq/renorm.hpp"
#include "sgsq/stats.hpp"

namespace sgsq {

// Exponential-Euler stepping for the renormalized truncated heat flow
//
//   du + (1 - Delta) u dt + gamma_N P_N sin(beta P_N u) dt = sqrt(2) dW
//
// and for the remainder equation driven by the chaos forcing. The linear
// flow and the noise are treated exactly per mode; the nonlinearity is
// frozen over the step, evaluated pointwise on a 2x oversampled grid, and
// routed through the exact integrating factor (1 - e^{-dt <n>^2}) / <n>^2.

enum class TruncationPlacement {
    nonlinearity,  // projector on the nonlinearity, plain noise
    noise,         // plain nonlinearity, projected noise
};

struct ParabolicParams {
    double beta2 = 0.0;
    double N = 0.0;
    double gamma = 0.0;  // renormalized coupling gamma_{L,N}
    TruncationPlacement placement = TruncationPlacement::nonlinearity;
    CutoffProfile chi = CutoffProfile::smooth_default;
    int os_factor = 2;
};

struct ParabolicState {
    double t = 0.0;
    SpectralField u;
    ParabolicParams params;
    std::uint64_t steps_taken = 0;
};

inline double default_dt_max(double N) {
    // 1e-2 at N <= 128, halved per octave beyond
    double dt = 1e-2;
    for (double n = 128.0; n < N; n *= 2.0) dt *= 0.5;
    return dt;
}

// Per-grid tables and scratch buffers for one (grid, params, dt) triple.
class ParabolicStepper {
public:
    ParabolicStepper(const GridSpec& grid, const ParabolicParams& params, double dt)
        : grid_(grid), params_(params), dt_(dt), fine_(grid.L, grid.n_side * params.os_factor) {
        if (!(dt > 0.0)) throw parameter_error("ParabolicStepper: dt must be positive");
        if (dt > default_dt_max(params.N) * (1.0 + 1e-12))
            throw parameter_error("ParabolicStepper: dt exceeds dt_max for this cutoff");
        require_cutoff_resolved(grid, params.N);
        const int M = grid.n_side;
        chi_.resize(grid.size());
        decay_.resize(grid.size());
        duhamel_.resize(grid.size());
        kappa_.resize(grid.size());
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b) {
                const std::size_t i = static_cast<std::size_t>(a) * M + b;
                const double lam = grid.bracket_sq(a, b);
                chi_[i] = cutoff_value(params.chi, grid.freq_abs(a, b) / params.N);
                decay_[i] = std::exp(-dt * lam);
                duhamel_[i] = -std::expm1(-dt * lam) / lam;
                kappa_[i] = std::sqrt(-std::expm1(-2.0 * dt * lam) / (dt * lam));
            }
        const int M2 = fine_.n_side;
        half_fine_.resize(static_cast<std::size_t>(M2) * (M2 / 2 + 1));
        phys_fine_.resize(fine_.size());
        drift_.resize(grid.size());
    }

    const GridSpec& grid() const { return grid_; }
    const GridSpec& fine_grid() const { return fine_; }
    double dt() const { return dt_; }
    const ParabolicParams& params() const { return params_; }
    double last_drift_sup() const { return last_drift_sup_; }

    // physical values of chi_N * u on the oversampled grid
    void truncated_physical(const SpectralField& u, std::vector<double>& out) {
        gather_fine(u, /*apply_chi=*/true);
        out.resize(phys_fine_.size());
        FftPlans::instance().c2r(fine_.n_side, half_fine_.data(), out.data());
    }

    // One step of the truncated model. The slab carries the raw spectral
    // Brownian increments for [t, t + dt].
    void step_truncated(SpectralField& u, const SpectralField& increments) {
        const double beta = std::sqrt(params_.beta2);
        gather_fine(u, /*apply_chi=*/true);
        FftPlans::instance().c2r(fine_.n_side, half_fine_.data(), phys_fine_.data());
        double sup = 0.0;
        for (double& v : phys_fine_) {
            v = std::sin(beta * v);
            sup = std::max(sup, std::abs(v));
        }
        last_drift_sup_ = params_.gamma * sup;
        if (!(last_drift_sup_ <= params_.gamma * (1.0 + 1e-12)))
            throw parameter_error("step_truncated: drift bound violated");
        FftPlans::instance().r2c(fine_.n_side, phys_fine_.data(), half_fine_.data());
        scatter_drift(-params_.gamma, params_.placement == TruncationPlacement::nonlinearity);
        const bool truncate_noise = params_.placement == TruncationPlacement::noise;
        const int M = grid_.n_side;
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b) {
                const std::size_t i = static_cast<std::size_t>(a) * M + b;
                const double noise_scale = truncate_noise ? kappa_[i] * chi_[i] : kappa_[i];
                u.coeffs[i] = decay_[i] * u.coeffs[i] + duhamel_[i] * drift_[i] +
                              noise_scale * increments.coeffs[i];
            }
    }

    // exact Ornstein-Uhlenbeck step on a companion field (same slab)
    void ou_step(SpectralField& psi, const SpectralField& increments) const {
        for (std::size_t i = 0; i < psi.coeffs.size(); ++i)
            psi.coeffs[i] = decay_[i] * psi.coeffs[i] + kappa_[i] * increments.coeffs[i];
    }

    // One deterministic step of the remainder equation with the chaos
    // forcing given pointwise on the oversampled grid (left endpoint).
    void step_remainder(SpectralField& v, const std::vector<cplx>& theta_phys) {
        if (theta_phys.size() != fine_.size())
            throw shape_error("step_remainder: forcing does not match the oversampled grid");
        const double beta = std::sqrt(params_.beta2);
        gather_fine(v, /*apply_chi=*/false);
        FftPlans::instance().c2r(fine_.n_side, half_fine_.data(), phys_fine_.data());
        for (std::size_t j = 0; j < phys_fine_.size(); ++j) {
            const double phase = beta * phys_fine_[j];
            // -Im(e^{i beta v} Theta)
            phys_fine_[j] = -(std::sin(phase) * theta_phys[j].real() +
                              std::cos(phase) * theta_phys[j].imag());
        }
        FftPlans::instance().r2c(fine_.n_side, phys_fine_.data(), half_fine_.data());
        scatter_drift(1.0, params_.placement == TruncationPlacement::nonlinearity);
        const int M = grid_.n_side;
        for (int a = 0; a < M; ++a)
            for (int b = 0; b < M; ++b) {
                const std::size_t i = static_cast<std::size_t>(a) * M + b;
                v.coeffs[i] = decay_[i] * v.coeffs[i] + duhamel_[i] * drift_[i];
            }
    }

private:
    void gather_fine(const SpectralField& u, bool apply_chi) {
        detail::gather_fine_half(grid_, fine_, u, apply_chi ? chi_.data() : nullptr, half_fine_);
    }

    void scatter_drift(double amp, bool apply_chi) {
        detail::fold_fine_half(grid_, fine_, half_fine_, apply_chi ? chi_.data() : nullptr, amp,
                               drift_);
    }

    GridSpec grid_;
    ParabolicParams params_;
    double dt_;
    GridSpec fine_;
    std::vector<double> chi_, decay_, duhamel_, kappa_;
    std::vector<cplx> half_fine_;
    std::vector<double> phys_fine_;
    std::vector<cplx> drift_;
    double last_drift_sup_ = 0.0;
};

// ---------------------------------------------------------------------------
// public single-step operations
// ---------------------------------------------------------------------------

inline ParabolicState step_truncated_sg(const ParabolicState& state, double dt,
                                        const NoiseSlab& slab) {
    if (slab.grid != state.u.grid) throw shape_error("step_truncated_sg: grid mismatch");
    if (std::abs(slab.dt - dt) > 1e-12) throw parameter_error("step_truncated_sg: slab/dt mismatch");
    ParabolicStepper stepper(state.u.grid, state.params, dt);
    ParabolicState out = state;
    stepper.step_truncated(out.u, slab.increments);
    out.t += dt;
    out.steps_taken += 1;
    return out;
}

// Remainder step with an explicitly supplied conjugate pair of forcings.
// The drift is Re[(i/2)(e^{i beta v} Theta^+ - e^{-i beta v} Theta^-)],
// which reduces to -Im(e^{i beta v} Theta^+) for a conjugate pair.
inline ParabolicState step_remainder(const ParabolicState& state, const ChaosField& theta_plus,
                                     const ChaosField& theta_minus, double dt) {
    const GridSpec fine(state.u.grid.L, state.u.grid.n_side * state.params.os_factor);
    if (theta_plus.grid != fine || theta_minus.grid != fine)
        throw shape_error("step_remainder: forcing grid does not match the oversampled grid");
    const std::vector<cplx> tp = to_physical(theta_plus.values);
    const std::vector<cplx> tm = to_physical(theta_minus.values);
    std::vector<cplx> eff(tp.size());
    // (i/2)(f+ T+ - f- T-) = -Im(f+ T+) when T- = conj(T+); keep the real
    // part of the general expression so non-conjugate test pairs behave
    for (std::size_t j = 0; j < tp.size(); ++j)
        eff[j] = 0.5 * (tp[j] + std::conj(tm[j]));
    ParabolicStepper stepper(state.u.grid, state.params, dt);
    ParabolicState out = state;
    stepper.step_remainder(out.u, eff);
    out.t += dt;
    out.steps_taken += 1;
    return out;
}

// ---------------------------------------------------------------------------
// run drivers
// ---------------------------------------------------------------------------

using SlabProvider = std::function<void(std::uint64_t step, SpectralField& increments)>;

inline SlabProvider stream_slabs(const SeededStream& stream, const GridSpec& grid, double dt) {
    const double sd = grid.L * std::sqrt(dt);
    return [stream, sd](std::uint64_t step, SpectralField& inc) {
        const SeededStream s = stream.with_slab(step);
        detail::fill_hermitian_gaussian(inc, s, [&](int, int) { return sd; });
    };
}

struct ParabolicRunResult {
    ParabolicState final_state;
    TrajectoryRecord trajectory;
};

// Integrate the full truncated model from u0 to time T; when a recording
// smoothness is supplied, C^s norms (and optionally fields) are taken at
// the x-norm time grid.
inline ParabolicRunResult run_truncated_sg(const SpectralField& u0, const ParabolicParams& params,
                                           double T, double dt, const SlabProvider& slabs,
                                           std::optional<double> record_smoothness = std::nullopt,
                                           bool keep_fields = false) {
    ParabolicStepper stepper(u0.grid, params, dt);
    SpectralField inc(u0.grid, true);
    ParabolicState state{0.0, u0, params, 0};
    const std::vector<double> record_times =
        record_smoothness ? x_norm_time_grid(T) : std::vector<double>{};
    std::size_t next_record = 0;
    ParabolicRunResult out;
    out.trajectory.integrator = "exponential-euler";
    out.trajectory.dt = dt;
    out.trajectory.norm_smoothness = record_smoothness.value_or(0.0);
    const std::uint64_t n_steps = static_cast<std::uint64_t>(std::llround(T / dt));
    for (std::uint64_t step = 0; step < n_steps; ++step) {
        slabs(step, inc);
        stepper.step_truncated(state.u, inc);
        state.t = (step + 1) * dt;
        while (next_record < record_times.size() && record_times[next_record] <= state.t + 1e-12) {
            out.trajectory.times.push_back(state.t);
            out.trajectory.cs_norms.push_back(holder_norm(state.u, *record_smoothness));
            if (keep_fields) out.trajectory.fields.push_back(state.u);
            ++next_record;
        }
    }
    out.final_state = state;
    return out;
}

// One remainder run: psi is propagated by the exact Ornstein-Uhlenbeck
// flow on the same slabs, the chaos forcing is rebuilt from psi at each
// left endpoint, and v is stepped deterministically.
struct RemainderRunConfig {
    double T = 1.0;
    double dt = 5e-3;
    double delta = 0.05;            // C^{-delta} data norm
    double smoothness = 0.0;        // s for the recorded solution norms
    double theta_smoothness = 0.0;  // 2 delta - s for the forcing norms
    bool record_theta = true;
    int theta_record_stride = 8;    // forcing norm sampled every this many steps
    bool keep_fields = false;
};

struct RemainderRunResult {
    ParabolicState final_v;
    SpectralField final_psi;
    TrajectoryRecord v_trajectory;
    double v0_norm = 0.0;         // ||v(0)||_{C^{-delta}}
    double theta_sup_norm = 0.0;  // sup over recorded times of ||Theta||_{C^{theta_smoothness}}
};

inline RemainderRunResult run_remainder(const SpectralField& v0, const SpectralField& psi0,
                                        const ParabolicParams& params, const ChaosParams& chaos,
                                        const RemainderRunConfig& cfg, const SlabProvider& slabs) {
    if (v0.grid != psi0.grid) throw shape_error("run_remainder: v0/psi0 grid mismatch");
    ParabolicStepper stepper(v0.grid, params, cfg.dt);
    SpectralField inc(v0.grid, true);
    SpectralField psi = psi0;
    SpectralField v = v0;
    const double beta = std::sqrt(params.beta2);
    const std::vector<double> record_times = x_norm_time_grid(cfg.T);
    std::size_t next_record = 0;

    RemainderRunResult out;
    out.v0_norm = holder_norm(v0, -cfg.delta);
    out.v_trajectory.integrator = "exponential-euler";
    out.v_trajectory.dt = cfg.dt;
    out.v_trajectory.norm_smoothness = cfg.smoothness;

    std::vector<double> psi_phys;
    std::vector<cplx> theta_phys(stepper.fine_grid().size());
    const std::uint64_t n_steps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.dt));
    for (std::uint64_t step = 0; step < n_steps; ++step) {
        // chaos forcing at the left endpoint
        stepper.truncated_physical(psi, psi_phys);
        for (std::size_t j = 0; j < theta_phys.size(); ++j) {
            const double phase = beta * psi_phys[j];
            theta_phys[j] = chaos.gamma * cplx(std::cos(phase), std::sin(phase));
        }
        if (cfg.record_theta && (step % cfg.theta_record_stride == 0)) {
            const SpectralField th = forward_transform(stepper.fine_grid(), theta_phys, false);
            out.theta_sup_norm =
                std::max(out.theta_sup_norm, holder_norm(th, cfg.theta_smoothness));
        }
        stepper.step_remainder(v, theta_phys);
        slabs(step, inc);
        stepper.ou_step(psi, inc);
        const double t = (step + 1) * cfg.dt;
        while (next_record < record_times.size() && record_times[next_record] <= t + 1e-12) {
            out.v_trajectory.times.push_back(t);
            out.v_trajectory.cs_norms.push_back(holder_norm(v, cfg.smoothness));
            if (cfg.keep_fields) out.v_trajectory.fields.push_back(v);
            ++next_record;
        }
    }
    out.final_v = ParabolicState{cfg.T, v, params, n_steps};
    out.final_psi = psi;
    return out;
}

// Weighted (large torus) variant: per-shell solution norms and the
// shell-localized forcing sups are recorded instead of global norms.
struct WeightedRemainderResult {
    ParabolicState final_v;
    WeightedTrajectoryRecord trajectory;
    double v0_weighted_norm = 0.0;  // ||v(0)||_{C^{-delta}_{lambda,M}}
};

inline WeightedRemainderResult run_remainder_weighted(const SpectralField& v0,
                                                      const SpectralField& psi0,
                                                      const ParabolicParams& params,
                                                      const ChaosParams& chaos,
                                                      const RemainderRunConfig& cfg, double lambda,
                                                      double M, int ell_max,
                                                      const SlabProvider& slabs) {
    if (v0.grid != psi0.grid) throw shape_error("run_remainder_weighted: v0/psi0 grid mismatch");
    ParabolicStepper stepper(v0.grid, params, cfg.dt);
    const MadicPartition part(M);
    SpectralField inc(v0.grid, true);
    SpectralField psi = psi0;
    SpectralField v = v0;
    const double beta = std::sqrt(params.beta2);
    const std::vector<double> record_times = x_norm_time_grid(cfg.T);
    std::size_t next_record = 0;

    WeightedRemainderResult out;
    out.v0_weighted_norm = weighted_besov_norm(v0, -cfg.delta, lambda, M, ell_max).value;
    out.trajectory.lambda = lambda;
    out.trajectory.M = M;
    out.trajectory.norm_smoothness = cfg.smoothness;
    out.trajectory.shell_cs_norms.resize(ell_max + 1);
    out.trajectory.theta_shell_sup.assign(ell_max + 1, 0.0);

    std::vector<double> psi_phys;
    std::vector<cplx> theta_phys(stepper.fine_grid().size());
    const std::uint64_t n_steps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.dt));
    for (std::uint64_t step = 0; step < n_steps; ++step) {
        stepper.truncated_physical(psi, psi_phys);
        for (std::size_t j = 0; j < theta_phys.size(); ++j) {
            const double phase = beta * psi_phys[j];
            theta_phys[j] = chaos.gamma * cplx(std::cos(phase), std::sin(phase));
        }
        if (cfg.record_theta && (step % cfg.theta_record_stride == 0)) {
            const SpectralField th = forward_transform(stepper.fine_grid(), theta_phys, false);
            for (int l = 0; l <= ell_max; ++l) {
                const SpectralField thl = apply_radial_window(
                    th, [&](double r) { return part.shell(l, r); }, 1);
                out.trajectory.theta_shell_sup[l] = std::max(
                    out.trajectory.theta_shell_sup[l], holder_norm(thl, cfg.theta_smoothness));
            }
        }
        stepper.step_remainder(v, theta_phys);
        slabs(step, inc);
        stepper.ou_step(psi, inc);
        const double t = (step + 1) * cfg.dt;
        while (next_record < record_times.size() && record_times[next_record] <= t + 1e-12) {
            out.trajectory.times.push_back(t);
            for (int l = 0; l <= ell_max; ++l) {
                const SpectralField vl = apply_radial_window(
                    v, [&](double r) { return part.shell(l, r); });
                out.trajectory.shell_cs_norms[l].push_back(holder_norm(vl, cfg.smoothness));
            }
            ++next_record;
        }
    }
    out.final_v = ParabolicState{cfg.T, v, params, n_steps};
    return out;
}

// ---------------------------------------------------------------------------
// a priori bound monitor
// ---------------------------------------------------------------------------

struct AprioriRun {
    double lhs = 0.0;        // X- or Y-norm of the remainder
    double v0_norm = 0.0;    // data term
    double theta_norm = 0.0; // sup-in-time forcing norm (conjugate pair halves equal)
    std::vector<double> theta_shell_sup;  // weighted variant only
};

struct AprioriReport {
    double delta = 0.0;
    double s = 0.0;
    double T = 0.0;
    double K1 = 0.0;
    double K2 = 0.0;
    double A = 0.0;
    double headroom = 1.25;
    std::vector<double> margins;  // rhs - lhs per run at the headroom constants
    double min_margin = 0.0;
    std::map<std::string, double> extras;
};

namespace detail {

// rhs_i = K1 a_i + K2 b_i >= lhs_i for all i, minimizing the weighted
// objective K1 abar + K2 bbar over the feasible corner points.
inline std::pair<double, double> fit_two_constants(const std::vector<double>& lhs,
                                                   const std::vector<double>& a,
                                                   const std::vector<double>& b) {
    const std::size_t n = lhs.size();
    double abar = 0.0, bbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        abar += a[i];
        bbar += b[i];
    }
    abar /= n;
    bbar /= n;
    auto feasible_k2 = [&](double k1) {
        double k2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (b[i] <= 0.0) continue;
            k2 = std::max(k2, (lhs[i] - k1 * a[i]) / b[i]);
        }
        return k2;
    };
    // candidate K1 values: 0, per-run ratios, pairwise intersections
    std::vector<double> cands{0.0};
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] > 0.0) cands.push_back(lhs[i] / a[i]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double det = a[i] * b[j] - a[j] * b[i];
            if (std::abs(det) < 1e-14) continue;
            const double k1 = (lhs[i] * b[j] - lhs[j] * b[i]) / det;
            if (k1 >= 0.0) cands.push_back(k1);
        }
    double best_obj = std::numeric_limits<double>::infinity();
    std::pair<double, double> best{0.0, 0.0};
    for (double k1 : cands) {
        // infeasible if some run has b == 0 and K1 a < lhs
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i)
            if (b[i] <= 0.0 && k1 * a[i] < lhs[i] * (1.0 - 1e-12)) ok = false;
        if (!ok) continue;
        const double k2 = feasible_k2(k1);
        const double obj = k1 * abar + k2 * bbar;
        if (obj < best_obj) {
            best_obj = obj;
            best = {k1, k2};
        }
    }
    return best;
}

}  // namespace detail

// Fit the smallest (K1, K2) with A = 1/theta over a theta grid such that
// lhs <= K1 ||v(0)||_{C^{-delta}} + K2 Sum_kappa ||Theta^kappa||^A on the
// training runs; margins are reported at headroom-inflated constants.
inline AprioriReport apriori_monitor(const std::vector<AprioriRun>& train,
                                     const std::vector<AprioriRun>& validate, double beta2,
                                     double delta, double T,
                                     const std::vector<double>& theta_grid = {0.05, 0.1, 0.2},
                                     double headroom = 1.25) {
    if (train.empty()) throw parameter_error("apriori_monitor: empty training ensemble");
    const double s = beta2 / (4.0 * pi) + 3.0 * delta;
    if (!(s < 1.0)) throw parameter_error("apriori_monitor: beta^2/(4 pi) + 3 delta must be < 1");
    AprioriReport rep;
    rep.delta = delta;
    rep.s = s;
    rep.T = T;
    rep.headroom = headroom;
    double best_k2 = std::numeric_limits<double>::infinity();
    for (double theta : theta_grid) {
        const double A = 1.0 / theta;
        std::vector<double> lhs, a, b;
        for (const AprioriRun& r : train) {
            lhs.push_back(r.lhs);
            a.push_back(r.v0_norm);
            b.push_back(2.0 * std::pow(r.theta_norm, A));
        }
        const auto [k1, k2] = detail::fit_two_constants(lhs, a, b);
        if (k2 < best_k2) {
            best_k2 = k2;
            rep.K1 = k1;
            rep.K2 = k2;
            rep.A = A;
        }
    }
    const double K1h = rep.K1 * headroom, K2h = rep.K2 * headroom;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const AprioriRun& r : validate) {
        const double rhs = K1h * r.v0_norm + K2h * 2.0 * std::pow(r.theta_norm, rep.A);
        rep.margins.push_back(rhs - r.lhs);
        rep.min_margin = std::min(rep.min_margin, rhs - r.lhs);
    }
    if (validate.empty()) rep.min_margin = 0.0;
    rep.extras["train_runs"] = static_cast<double>(train.size());
    rep.extras["validate_runs"] = static_cast<double>(validate.size());
    return rep;
}

// Weighted variant: lhs is the shell-weighted X-norm, the data term is the
// weighted C^{-delta} norm, and the forcing enters through the weighted
// sup-in-time shell sums with exponent A inside the sum.
inline AprioriReport apriori_monitor_weighted(const std::vector<AprioriRun>& train,
                                              const std::vector<AprioriRun>& validate, double beta2,
                                              double delta, double T, double lambda, double M,
                                              const std::vector<double>& theta_grid = {0.05, 0.1,
                                                                                       0.2},
                                              double headroom = 1.25) {
    if (train.empty()) throw parameter_error("apriori_monitor_weighted: empty training ensemble");
    if (T * std::exp(lambda) / M > 0.1)
        throw parameter_error("apriori_monitor_weighted: need T e^lambda / M <= 0.1");
    const double s = beta2 / (4.0 * pi) + 3.0 * delta;
    if (!(s < 1.0))
        throw parameter_error("apriori_monitor_weighted: beta^2/(4 pi) + 3 delta must be < 1");
    AprioriReport rep;
    rep.delta = delta;
    rep.s = s;
    rep.T = T;
    rep.headroom = headroom;
    double best_k2 = std::numeric_limits<double>::infinity();
    for (double theta : theta_grid) {
        const double A = 1.0 / theta;
        std::vector<double> lhs, a, b;
        for (const AprioriRun& r : train) {
            lhs.push_back(r.lhs);
            a.push_back(r.v0_norm);
            b.push_back(2.0 * z_norm(r.theta_shell_sup, lambda, A));
        }
        const auto [k1, k2] = detail::fit_two_constants(lhs, a, b);
        if (k2 < best_k2) {
            best_k2 = k2;
            rep.K1 = k1;
            rep.K2 = k2;
            rep.A = A;
        }
    }
    const double K1h = rep.K1 * headroom, K2h = rep.K2 * headroom;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const AprioriRun& r : validate) {
        const double rhs =
            K1h * r.v0_norm + K2h * 2.0 * z_norm(r.theta_shell_sup, lambda, rep.A);
        rep.margins.push_back(rhs - r.lhs);
        rep.min_margin = std::min(rep.min_margin, rhs - r.lhs);
    }
    if (validate.empty()) rep.min_margin = 0.0;
    rep.extras["lambda"] = lambda;
    rep.extras["M"] = M;
    return rep;
}

}  // namespace sgsq
