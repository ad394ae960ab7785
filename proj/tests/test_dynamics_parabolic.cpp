#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgsq/dynamics_parabolic.hpp"
#include "sgsq/stats.hpp"

using namespace sgsq;

namespace {
SeededStream dyn_stream(std::uint32_t member, std::uint64_t slab = 0) {
    return SeededStream(0xD15EA5Eull, {300, member, slab});
}

ParabolicParams make_params(const GridSpec& grid, double N, double beta2,
                            TruncationPlacement placement = TruncationPlacement::nonlinearity) {
    ParabolicParams p;
    p.beta2 = beta2;
    p.N = N;
    p.gamma = gamma_coupling(beta2, sigma_heat(grid, N));
    p.placement = placement;
    return p;
}

// relative L^2 distance between two fields
double rel_l2(const SpectralField& a, const SpectralField& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        num += std::norm(a.coeffs[i] - b.coeffs[i]);
        den += std::norm(b.coeffs[i]);
    }
    return std::sqrt(num / den);
}

// Coupled-refinement slab provider: level-0 increments are materialized
// once. Coarser runs consume per-mode exact OU aggregates of consecutive
// fine increments, so the linear-plus-noise flow is pathwise identical at
// every resolution and refinement differences isolate the frozen drift.
struct FineSlabs {
    GridSpec grid;
    double dt_fine;
    std::vector<SpectralField> incs;

    FineSlabs(const GridSpec& g, double dt, std::uint64_t n, const SeededStream& s)
        : grid(g), dt_fine(dt) {
        const double sd = g.L * std::sqrt(dt);
        for (std::uint64_t j = 0; j < n; ++j) {
            SpectralField f(g, true);
            detail::fill_hermitian_gaussian(f, s.with_slab(j), [&](int, int) { return sd; });
            incs.push_back(std::move(f));
        }
    }

    SlabProvider provider(int merge) const {
        if (merge == 1) {
            return [this](std::uint64_t step, SpectralField& out) { out = incs[step]; };
        }
        const double h = dt_fine;
        const GridSpec g = grid;
        return [this, merge, h, g](std::uint64_t step, SpectralField& out) {
            const int M = g.n_side;
            std::fill(out.coeffs.begin(), out.coeffs.end(), cplx(0.0, 0.0));
            for (int a = 0; a < M; ++a)
                for (int b = 0; b < M; ++b) {
                    const std::size_t i = static_cast<std::size_t>(a) * M + b;
                    const double lam = g.bracket_sq(a, b);
                    const double kf = std::sqrt(-std::expm1(-2.0 * h * lam) / (h * lam));
                    const double kc =
                        std::sqrt(-std::expm1(-2.0 * merge * h * lam) / (merge * h * lam));
                    cplx acc(0.0, 0.0);
                    for (int q = 0; q < merge; ++q)
                        acc += std::exp(-lam * h * (merge - 1 - q)) *
                               incs[step * merge + q].coeffs[i];
                    out.coeffs[i] = acc * (kf / kc);
                }
        };
    }
};
}  // namespace

TEST_CASE("zero coupling reduces to the exact OU flow", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 32);
    ParabolicParams p = make_params(grid, 8.0, pi);
    p.gamma = 0.0;
    const int n = 10000;
    const double dt = 0.01;
    std::vector<double> mode_re(n);
    for (int i = 0; i < n; ++i) {
        SpectralField u = sample_gff(grid, dyn_stream(i, 999));
        ParabolicStepper stepper(grid, p, dt);
        SpectralField inc(grid, true);
        const SlabProvider slabs = stream_slabs(dyn_stream(i), grid, dt);
        for (int k = 0; k < 5; ++k) {
            slabs(k, inc);
            stepper.step_truncated(u, inc);
        }
        mode_re[i] = u.mode(2, 1).real();
    }
    // stationary: Var(Re u_hat(n)) = L^2 / (2 <n>^2), <n>^2 = 6
    const double target = 1.0 / 12.0;
    REQUIRE(std::abs(variance(mode_re) - target) <= 3.0 * target * std::sqrt(2.0 / n));
}

TEST_CASE("zero noise and coupling decay single modes exactly", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 32);
    ParabolicParams p = make_params(grid, 8.0, pi);
    p.gamma = 0.0;
    SpectralField u(grid, true);
    u.mode(3, 0) = cplx(0.5, 0.0);
    u.mode(-3, 0) = cplx(0.5, 0.0);
    ParabolicState state{0.0, u, p, 0};
    const double dt = 0.01;
    const NoiseSlab zero{grid, dt, SpectralField(grid, true)};
    for (int k = 0; k < 100; ++k) state = step_truncated_sg(state, dt, zero);
    const double expected = 0.5 * std::exp(-1.0 * 10.0);
    REQUIRE(std::abs(state.u.mode(3, 0).real() - expected) < 1e-14);
    REQUIRE(std::abs(state.t - 1.0) < 1e-12);
}

TEST_CASE("dyadic refinement contracts at first order on a fixed path", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 64);
    const ParabolicParams p = make_params(grid, 16.0, pi);
    const double T = 1.0, dt0 = 8e-3;
    const std::uint64_t n_fine = static_cast<std::uint64_t>(std::llround(T / (dt0 / 4)));
    const FineSlabs fine(grid, dt0 / 4, n_fine, dyn_stream(0, 42));
    const SpectralField u0 = sample_gff(grid, dyn_stream(1, 0));

    auto run_at = [&](double dt, int merge) {
        ParabolicStepper stepper(grid, p, dt);
        SpectralField u = u0;
        SpectralField inc(grid, true);
        const SlabProvider slabs = fine.provider(merge);
        const std::uint64_t n = static_cast<std::uint64_t>(std::llround(T / dt));
        for (std::uint64_t k = 0; k < n; ++k) {
            slabs(k, inc);
            // rescale: aggregated increments carry variance merge * dt_fine
            stepper.step_truncated(u, inc);
        }
        return u;
    };
    const SpectralField u1 = run_at(dt0, 4);
    const SpectralField u2 = run_at(dt0 / 2, 2);
    const SpectralField u3 = run_at(dt0 / 4, 1);
    double d12 = 0.0, d23 = 0.0;
    for (std::size_t i = 0; i < u1.coeffs.size(); ++i) {
        d12 += std::norm(u1.coeffs[i] - u2.coeffs[i]);
        d23 += std::norm(u2.coeffs[i] - u3.coeffs[i]);
    }
    const double ratio = std::sqrt(d12 / d23);
    REQUIRE(ratio > 1.7);
    REQUIRE(ratio < 2.3);
}

TEST_CASE("remainder with zero forcing is the free heat decay", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 32);
    const ParabolicParams p = make_params(grid, 8.0, pi);
    SpectralField v(grid, true);
    v.mode(2, 1) = cplx(0.3, -0.1);
    v.mode(-2, -1) = cplx(0.3, 0.1);
    ParabolicStepper stepper(grid, p, 5e-3);
    std::vector<cplx> zero_theta(stepper.fine_grid().size(), cplx(0.0, 0.0));
    for (int k = 0; k < 40; ++k) stepper.step_remainder(v, zero_theta);
    const double expected = 0.3 * std::exp(-0.2 * 6.0);
    REQUIRE(std::abs(v.mode(2, 1).real() - expected) < 1e-13);
}

TEST_CASE("real constant forcing from rest stays at rest", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 32);
    const ParabolicParams p = make_params(grid, 8.0, pi);
    ParabolicStepper stepper(grid, p, 5e-3);
    SpectralField v(grid, true);
    std::vector<cplx> theta(stepper.fine_grid().size(), cplx(2.7, 0.0));
    for (int k = 0; k < 20; ++k) stepper.step_remainder(v, theta);
    REQUIRE(v.max_abs_coeff() < 1e-15);
}

TEST_CASE("public remainder step accepts a conjugate forcing pair", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 32);
    const double N = 8.0, beta2 = pi;
    const ParabolicParams p = make_params(grid, N, beta2);
    const ChaosParams cp = chaos_params(grid, N, beta2);
    const SpectralField psi = project_smooth(sample_gff(grid, dyn_stream(5, 1)), N);
    const ChaosField tp = build_theta(psi, cp, ChaosSign::plus);
    const ChaosField tm = build_theta(psi, cp, ChaosSign::minus);
    SpectralField v0(grid, true);
    v0.mode(1, 0) = cplx(0.2, 0.0);
    v0.mode(-1, 0) = cplx(0.2, 0.0);
    ParabolicState state{0.0, v0, p, 0};
    state = step_remainder(state, tp, tm, 5e-3);
    REQUIRE(state.u.hermitian_defect() < 1e-13);
    REQUIRE(state.t == 5e-3);
}

TEST_CASE("first order expansion tracks the full equation on one path", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 128);
    const double N = 32.0, beta2 = pi, T = 1.0;
    const ParabolicParams p = make_params(grid, N, beta2);
    const ChaosParams cp = chaos_params(grid, N, beta2);
    // v(0) inside the flat region of the cutoff, so u(0) - psi(0) = v(0)
    SpectralField v0 = apply_multiplier(sample_gff(grid, dyn_stream(7, 1)),
                                        MultiplierSpec::sharp_cutoff(N / 2.0));
    for (auto& c : v0.coeffs) c *= 0.3;
    const SpectralField psi0 = sample_gff(grid, dyn_stream(7, 2));

    for (double dt : {1e-2, 5e-3}) {
        const std::uint64_t n = static_cast<std::uint64_t>(std::llround(T / dt));
        const FineSlabs slabs(grid, dt, n, dyn_stream(7, 3));

        SpectralField u0 = psi0;
        for (std::size_t i = 0; i < u0.coeffs.size(); ++i) u0.coeffs[i] += v0.coeffs[i];
        const ParabolicRunResult full = run_truncated_sg(u0, p, T, dt, slabs.provider(1));

        RemainderRunConfig cfg;
        cfg.T = T;
        cfg.dt = dt;
        cfg.record_theta = false;
        const RemainderRunResult rem = run_remainder(v0, psi0, p, cp, cfg, slabs.provider(1));

        SpectralField sum = rem.final_psi;
        for (std::size_t i = 0; i < sum.coeffs.size(); ++i)
            sum.coeffs[i] += rem.final_v.u.coeffs[i];
        REQUIRE(rel_l2(sum, full.final_state.u) <= 5.0 * dt);
    }
}

TEST_CASE("runs are deterministic given seeds", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 32);
    const ParabolicParams p = make_params(grid, 8.0, pi);
    const SpectralField u0 = sample_gff(grid, dyn_stream(11, 0));
    const ParabolicRunResult a =
        run_truncated_sg(u0, p, 0.2, 5e-3, stream_slabs(dyn_stream(11, 1), grid, 5e-3));
    const ParabolicRunResult b =
        run_truncated_sg(u0, p, 0.2, 5e-3, stream_slabs(dyn_stream(11, 1), grid, 5e-3));
    for (std::size_t i = 0; i < a.final_state.u.coeffs.size(); ++i)
        REQUIRE(a.final_state.u.coeffs[i] == b.final_state.u.coeffs[i]);
}

TEST_CASE("nonlinearity stays bounded by the coupling", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 64);
    const ParabolicParams p = make_params(grid, 16.0, 2.0 * pi);
    ParabolicStepper stepper(grid, p, 5e-3);
    SpectralField u = sample_gff(grid, dyn_stream(13, 0));
    SpectralField inc(grid, true);
    const SlabProvider slabs = stream_slabs(dyn_stream(13, 1), grid, 5e-3);
    for (int k = 0; k < 50; ++k) {
        slabs(k, inc);
        stepper.step_truncated(u, inc);
        REQUIRE(stepper.last_drift_sup() <= p.gamma * (1.0 + 1e-12));
    }
}

TEST_CASE("remainder stays smooth while the rough input diverges", "[dynamics-parabolic]") {
    // first order expansion gain: ||v(t0)||_{C^s} stable in N, while
    // ||Pi_N Psi(t0)||_{C^s} grows
    const double beta2 = pi, delta = 0.05;
    const double s = beta2 / (4.0 * pi) + 3.0 * delta;
    const double t0 = 0.5;
    const int runs = 12;
    std::vector<double> v_med, psi_med;
    for (double N : {16.0, 32.0, 64.0}) {
        const GridSpec grid(1.0, static_cast<int>(4 * N));
        const ParabolicParams p = make_params(grid, N, beta2);
        const ChaosParams cp = chaos_params(grid, N, beta2);
        std::vector<double> vn(runs), pn(runs);
        for (int i = 0; i < runs; ++i) {
            const SpectralField psi0 =
                sample_gff(grid, dyn_stream(i, 7000 + static_cast<std::uint64_t>(N)));
            RemainderRunConfig cfg;
            cfg.T = t0;
            cfg.dt = 5e-3;
            cfg.smoothness = s;
            cfg.record_theta = false;
            const RemainderRunResult r =
                run_remainder(SpectralField(grid, true), psi0, p, cp, cfg,
                              stream_slabs(dyn_stream(i, 8000 + static_cast<std::uint64_t>(N)),
                                           grid, cfg.dt));
            vn[i] = holder_norm(r.final_v.u, s);
            pn[i] = holder_norm(project_smooth(r.final_psi, N), s);
        }
        v_med.push_back(median(vn));
        psi_med.push_back(median(pn));
    }
    REQUIRE(v_med[2] / v_med[0] < 2.0);
    REQUIRE(v_med[0] / v_med[2] < 2.0);
    REQUIRE(psi_med[2] / psi_med[0] > 1.5);
}

TEST_CASE("time step guards fire", "[dynamics-parabolic]") {
    const GridSpec grid(1.0, 64);
    const ParabolicParams p = make_params(grid, 16.0, pi);
    REQUIRE_THROWS_AS(ParabolicStepper(grid, p, 2e-2), parameter_error);
    GridSpec small(1.0, 32);
    ParabolicParams bad = p;
    bad.N = 32.0;
    REQUIRE_THROWS_AS(ParabolicStepper(small, bad, 1e-3), resolution_error);
}

TEST_CASE("constant fitting covers training data and validates", "[dynamics-parabolic]") {
    // synthetic a priori data with a known feasible pair
    std::vector<AprioriRun> train, validate;
    SeededStream s = dyn_stream(17);
    for (int i = 0; i < 60; ++i) {
        AprioriRun r;
        const double a = 0.5 + s.uniform(3 * i);
        const double th = 0.5 + s.uniform(3 * i + 1);
        r.v0_norm = a;
        r.theta_norm = th;
        r.lhs = 1.3 * a + 0.7 * 2.0 * std::pow(th, 10.0) * s.uniform(3 * i + 2);
        (i % 2 == 0 ? train : validate).push_back(r);
    }
    const AprioriReport rep = apriori_monitor(train, validate, pi, 0.05, 2.0, {0.1});
    REQUIRE(rep.A == 10.0);
    REQUIRE(rep.min_margin >= 0.0);
    for (const AprioriRun& r : train) {
        const double rhs = rep.K1 * r.v0_norm + rep.K2 * 2.0 * std::pow(r.theta_norm, rep.A);
        REQUIRE(rhs >= r.lhs * (1.0 - 1e-9));
    }
    // zero run is trivially covered
    AprioriRun zero;
    const AprioriReport rep2 = apriori_monitor({zero}, {zero}, pi, 0.05, 2.0);
    REQUIRE(rep2.min_margin >= 0.0);

    REQUIRE_THROWS_AS(apriori_monitor({}, {}, pi, 0.05, 2.0), parameter_error);
    REQUIRE_THROWS_AS(apriori_monitor({zero}, {}, pi, 0.4, 2.0), parameter_error);
}

TEST_CASE("weighted monitor reduces to the plain one on one shell", "[dynamics-parabolic]") {
    std::vector<AprioriRun> runs;
    SeededStream s = dyn_stream(19);
    for (int i = 0; i < 30; ++i) {
        AprioriRun r;
        r.v0_norm = 0.5 + s.uniform(2 * i);
        r.theta_norm = 1.0 + s.uniform(2 * i + 1);
        r.theta_shell_sup = {r.theta_norm};  // single shell, weight 1
        r.lhs = 0.9 * r.v0_norm + 0.1 * std::pow(r.theta_norm, 5.0);
        runs.push_back(r);
    }
    const AprioriReport plain = apriori_monitor(runs, runs, pi, 0.05, 1.0, {0.2}, 1.0);
    const AprioriReport weighted =
        apriori_monitor_weighted(runs, runs, pi, 0.05, 1.0, 0.0, 16.0, {0.2}, 1.0);
    REQUIRE(std::abs(plain.K1 - weighted.K1) < 1e-10);
    REQUIRE(std::abs(plain.K2 - weighted.K2) < 1e-10);
    REQUIRE_THROWS_AS(apriori_monitor_weighted(runs, runs, pi, 0.05, 4.0, 2.0, 16.0),
                      parameter_error);
}
