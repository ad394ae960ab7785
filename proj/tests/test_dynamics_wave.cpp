#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sgsq/dynamics_wave.hpp"
#include "sgsq/stats.hpp"

using namespace sgsq;

namespace {
SeededStream wave_stream(std::uint32_t member, std::uint64_t slab = 0) {
    return SeededStream(0x77AE5ull, {400, member, slab});
}

WaveParams make_params(double N, double beta2) {
    WaveParams p;
    p.beta2 = beta2;
    p.N = N;
    return p;
}

double quad(double t, int n, const std::function<double(double)>& f) {
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double tau = t * i / n;
        const double v = f(tau);
        acc += (i == 0 || i == n) ? 0.5 * v : v;
    }
    return acc * t / n;
}
}  // namespace

TEST_CASE("noise Gram entries match quadrature", "[dynamics-wave]") {
    for (double w : {0.8660254037844386, 3.2, 19.0}) {
        for (double dt : {0.05, 0.4, 2.0}) {
            auto D = [w](double tau) { return std::exp(-0.5 * tau) * std::sin(w * tau) / w; };
            auto Dd = [w](double tau) {
                return std::exp(-0.5 * tau) *
                       (std::cos(w * tau) - 0.5 * std::sin(w * tau) / w);
            };
            const WavePropagator p = wave_propagator(dt, w, 1.0);
            const double q11 = 2.0 * quad(dt, 200000, [&](double t) { return sq(D(t)); });
            const double q22 = 2.0 * quad(dt, 200000, [&](double t) { return sq(Dd(t)); });
            const double q12 = 2.0 * quad(dt, 200000, [&](double t) { return D(t) * Dd(t); });
            REQUIRE(std::abs(p.l11 * p.l11 - q11) < 1e-8);
            REQUIRE(std::abs(p.l21 * p.l11 - q12) < 1e-8);
            REQUIRE(std::abs(p.l21 * p.l21 + p.l22 * p.l22 - q22) < 1e-8);
            // Duhamel increments
            REQUIRE(std::abs(p.duh_pos - quad(dt, 200000, D)) < 1e-9);
            REQUIRE(std::abs(p.duh_vel - D(dt)) < 1e-14);
        }
    }
}

TEST_CASE("velocity data propagates along the damped sine kernel", "[dynamics-wave]") {
    const GridSpec grid(1.0, 32);
    const WaveParams params = make_params(8.0, pi);
    for (double t : {0.1, 1.0, 5.0}) {
        WaveState s{0.0, SpectralField(grid, true), SpectralField(grid, true), params};
        s.vel.mode(3, 1) = cplx(1.0, 0.0);
        s.vel.mode(-3, -1) = cplx(1.0, 0.0);
        const WaveState out = wave_linear_step(s, t);
        const double w = std::sqrt(0.75 + 10.0);
        const double expect = std::exp(-0.5 * t) * std::sin(w * t) / w;
        REQUIRE(std::abs(out.pos.mode(3, 1).real() - expect) <= 1e-12);
        REQUIRE(std::abs(out.pos.mode(3, 1).imag()) <= 1e-15);

        // composing ten exact substeps gives the same flow
        WaveState multi = s;
        for (int k = 0; k < 10; ++k) multi = wave_linear_step(multi, t / 10.0);
        REQUIRE(std::abs(multi.pos.mode(3, 1).real() - expect) <= 1e-12);
        REQUIRE(std::abs(multi.vel.mode(3, 1).real() - out.vel.mode(3, 1).real()) <= 1e-12);
    }
}

TEST_CASE("zero data and zero noise stay at rest", "[dynamics-wave]") {
    const GridSpec grid(1.0, 16);
    const WaveParams params = make_params(4.0, pi);
    WaveState s{0.0, SpectralField(grid, true), SpectralField(grid, true), params};
    const WaveState out = wave_linear_step(s, 1.0);
    REQUIRE(out.pos.max_abs_coeff() == 0.0);
    REQUIRE(out.vel.max_abs_coeff() == 0.0);
}

TEST_CASE("stochastic convolution variance matches the lattice constant", "[dynamics-wave]") {
    const GridSpec grid(1.0, 64);
    const double N = 16.0;
    const WaveParams params = make_params(N, pi);
    const int n = 10000;
    const double dt = 0.25;
    std::vector<double> at1(n), at50;
    WaveStepper stepper(grid, params, dt);
    for (int i = 0; i < n; ++i) {
        SpectralField pos(grid, true), vel(grid, true);
        for (int k = 0; k < 4; ++k) {
            const SeededStream noise = wave_stream(i, k);
            stepper.step_linear(pos, vel, &noise);
        }
        at1[i] = to_physical_real(pos)[0];
    }
    const double target = sigma_wave(grid, N, 1.0);
    REQUIRE(std::abs(variance(at1) - target) <= 3.0 * target * std::sqrt(2.0 / n));
}

TEST_CASE("long time wave variance relaxes to the heat constant", "[dynamics-wave]") {
    const GridSpec grid(1.0, 64);
    const double N = 16.0;
    const WaveParams params = make_params(N, pi);
    const int n = 4000;
    const double dt = 1.0;
    std::vector<double> at50(n);
    WaveStepper stepper(grid, params, dt);
    for (int i = 0; i < n; ++i) {
        SpectralField pos(grid, true), vel(grid, true);
        for (int k = 0; k < 50; ++k) {
            const SeededStream noise = wave_stream(i, 100 + k);
            stepper.step_linear(pos, vel, &noise);
        }
        at50[i] = to_physical_real(pos)[0];
    }
    const double sheat = sigma_heat(grid, N);
    REQUIRE(std::abs(sigma_wave(grid, N, 50.0) - sheat) < 1e-8);
    REQUIRE(std::abs(variance(at50) - sheat) <= 3.0 * sheat * std::sqrt(2.0 / n));
}

TEST_CASE("wave chaos with time dependent coupling has mean one", "[dynamics-wave]") {
    const GridSpec grid(1.0, 64);
    const double N = 16.0, beta2 = pi;
    const WaveParams params = make_params(N, beta2);
    const int n = 4000;
    const double dt = 0.25;
    const double beta = std::sqrt(beta2);
    std::vector<std::vector<double>> re(3, std::vector<double>(n));
    const int checkpoints[3] = {2, 4, 20};  // t = 0.5, 1, 5
    const double gammas[3] = {gamma_wave(beta2, grid, N, 0.5), gamma_wave(beta2, grid, N, 1.0),
                              gamma_wave(beta2, grid, N, 5.0)};
    WaveStepper stepper(grid, params, dt);
    for (int i = 0; i < n; ++i) {
        SpectralField pos(grid, true), vel(grid, true);
        int c = 0;
        for (int k = 0; k < 20; ++k) {
            const SeededStream noise = wave_stream(i, 200 + k);
            stepper.step_linear(pos, vel, &noise);
            if (c < 3 && k + 1 == checkpoints[c]) {
                re[c][i] = gammas[c] * std::cos(beta * to_physical_real(pos)[0]);
                ++c;
            }
        }
    }
    for (int c = 0; c < 3; ++c)
        REQUIRE(std::abs(mean(re[c]) - 1.0) <= 3.0 * std_error(re[c]));
}

TEST_CASE("remainder with zero forcing is the free damped flow", "[dynamics-wave]") {
    const GridSpec grid(1.0, 32);
    const WaveParams params = make_params(8.0, pi);
    WaveStepper stepper(grid, params, 0.05);
    SpectralField pos(grid, true), vel(grid, true);
    pos.mode(2, 0) = cplx(0.4, 0.0);
    pos.mode(-2, 0) = cplx(0.4, 0.0);
    SpectralField pos_left = pos;
    std::vector<cplx> zero_theta(stepper.fine_grid().size(), cplx(0.0, 0.0));
    for (int k = 0; k < 20; ++k) {
        pos_left = pos;
        stepper.step_linear(pos, vel, nullptr);
        stepper.add_remainder_drift(pos_left, pos, vel, zero_theta);
    }
    const double w = std::sqrt(0.75 + 4.0);
    const double t = 1.0;
    const double expect = std::exp(-0.5 * t) * (std::cos(w * t) + 0.5 * std::sin(w * t) / w) * 0.4;
    REQUIRE(std::abs(pos.mode(2, 0).real() - expect) < 1e-12);
}

TEST_CASE("real constant forcing from rest stays at rest", "[dynamics-wave]") {
    const GridSpec grid(1.0, 32);
    const WaveParams params = make_params(8.0, pi);
    WaveStepper stepper(grid, params, 0.05);
    SpectralField pos(grid, true), vel(grid, true);
    std::vector<cplx> theta(stepper.fine_grid().size(), cplx(1.9, 0.0));
    for (int k = 0; k < 20; ++k) {
        stepper.step_linear(pos, vel, nullptr);
        stepper.add_remainder_drift(pos, pos, vel, theta);
    }
    REQUIRE(pos.max_abs_coeff() < 1e-15);
    REQUIRE(vel.max_abs_coeff() < 1e-15);
}

TEST_CASE("first order expansion tracks the truncated wave model", "[dynamics-wave]") {
    const GridSpec grid(1.0, 128);
    const double N = 32.0, beta2 = pi, T = 1.0;
    const WaveParams params = make_params(N, beta2);
    SpectralField u0 = apply_multiplier(sample_gff(grid, wave_stream(3, 0)),
                                        MultiplierSpec::sharp_cutoff(N / 2.0));
    SpectralField u1 = apply_multiplier(sample_gff(grid, wave_stream(3, 1)),
                                        MultiplierSpec::sharp_cutoff(N / 2.0));
    for (auto& c : u0.coeffs) c *= 0.3;
    for (auto& c : u1.coeffs) c *= 0.3;
    for (double dt : {1e-2, 5e-3}) {
        WaveRunConfig cfg;
        cfg.T = T;
        cfg.dt = dt;
        cfg.record_stride = 1 << 30;
        const WaveChaosSchedule sched = wave_chaos_schedule(grid, params, T, dt);
        const SeededStream path = wave_stream(3, 7);
        const WaveRunResult full = run_truncated_wave(u0, u1, params, sched, cfg, path);
        const WaveRunResult rem = run_wave_remainder(u0, u1, params, sched, cfg, path);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < u0.coeffs.size(); ++i) {
            const cplx sum = rem.final_psi_pos.coeffs[i] + rem.final_state.pos.coeffs[i];
            num += std::norm(sum - full.final_state.pos.coeffs[i]);
            den += std::norm(full.final_state.pos.coeffs[i]);
        }
        REQUIRE(std::sqrt(num / den) <= 5.0 * dt);
    }
}

TEST_CASE("energies stay finite over long runs", "[dynamics-wave]") {
    const GridSpec grid(1.0, 64);
    const double N = 16.0, beta2 = pi;
    const WaveParams params = make_params(N, beta2);
    WaveRunConfig cfg;
    cfg.T = 5.0;
    cfg.dt = 1e-2;
    cfg.alpha = 0.3;
    cfg.record_stride = 50;
    const WaveChaosSchedule sched = wave_chaos_schedule(grid, params, cfg.T, cfg.dt);
    std::vector<double> sups;
    for (int i = 0; i < 6; ++i) {
        const SpectralField z(grid, true);
        const WaveRunResult r = run_wave_remainder(z, z, params, sched, cfg, wave_stream(i, 900));
        const WaveEnergyReport rep = wave_energy_monitor(r.energy_samples, cfg.alpha, cfg.T);
        REQUIRE(std::isfinite(rep.sup_energy));
        sups.push_back(rep.sup_energy);
    }
    const double med = median(sups);
    for (double s : sups) REQUIRE(s <= 10.0 * med);
}

TEST_CASE("monitored linear runs match the closed form envelope", "[dynamics-wave]") {
    const GridSpec grid(1.0, 32);
    const WaveParams params = make_params(8.0, pi);
    const double alpha = 0.3, dt = 0.1;
    WaveStepper stepper(grid, params, dt);
    SpectralField pos(grid, true), vel(grid, true);
    vel.mode(1, 0) = cplx(1.0, 0.0);
    vel.mode(-1, 0) = cplx(1.0, 0.0);
    std::vector<WaveEnergySample> samples;
    const double w = std::sqrt(0.75 + 1.0);
    for (int k = 0; k <= 20; ++k) {
        const double t = k * dt;
        WaveEnergySample s;
        s.t = t;
        s.energy = sobolev_norm(pos, 1.0 - alpha) + sobolev_norm(vel, -alpha);
        samples.push_back(s);
        // closed form for the monitored pair
        const double D = t == 0.0 ? 0.0 : std::exp(-0.5 * t) * std::sin(w * t) / w;
        const double Dd = std::exp(-0.5 * t) * (std::cos(w * t) - 0.5 * std::sin(w * t) / w);
        const double expect = std::sqrt(2.0 * std::pow(2.0, 1.0 - alpha)) * std::abs(D) +
                              std::sqrt(2.0 * std::pow(2.0, -alpha)) * std::abs(Dd);
        REQUIRE(std::abs(s.energy - expect) <= 1e-10 * std::max(1.0, expect));
        if (k < 20) stepper.step_linear(pos, vel, nullptr);
    }
    const WaveEnergyReport rep = wave_energy_monitor(samples, alpha, 2.0);
    REQUIRE(rep.sup_energy > 0.0);
    REQUIRE(samples[0].energy == Catch::Approx(std::sqrt(2.0 * std::pow(2.0, -alpha))));

    REQUIRE_THROWS_AS(wave_energy_monitor(samples, 0.6, 2.0), parameter_error);
    REQUIRE(wave_energy_monitor({}, 0.3, 1.0).sup_energy == 0.0);
}

TEST_CASE("zero trajectory monitors to zero", "[dynamics-wave]") {
    std::vector<WaveEnergySample> samples(3);
    samples[0].t = 0.0;
    samples[1].t = 0.5;
    samples[2].t = 1.0;
    REQUIRE(wave_energy_monitor(samples, 0.25, 1.0).sup_energy == 0.0);
}
