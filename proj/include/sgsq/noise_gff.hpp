#pragma once

#include <cmath>
#include <vector>

#include "sgsq/common.hpp"
#include "sgsq/grid.hpp"
#include "sgsq/grid_fourier.hpp"
#include "sgsq/rng.hpp"

namespace sgsq {

// Sampling of the massive Gaussian free field (covariance (1-Delta)^{-1}),
// spectral space-time white noise increments, and the exact per-mode
// Ornstein-Uhlenbeck update whose stationary law is the free field.
//
// Mode normalization under the (1/2pi) transform convention:
//   GFF:          E |uhat(n)|^2 = L^2 / <n>^2
//   noise slab:   E |dWhat(n)|^2 = L^2 * dt
// with uhat(-n) = conj(uhat(n)); self-conjugate lattice modes are real
// with the same total variance.

namespace detail {

// Hermitian pairing on the wrapped lattice: partner of (a,b) is
// ((M-a)%M, (M-b)%M). Canonical representatives are filled from the
// stream (two unit gaussians at pair counter = linear index) and partners
// by conjugation, so draws are independent of traversal order.
template <typename Scale>
inline void fill_hermitian_gaussian(SpectralField& f, const SeededStream& stream,
                                    Scale mode_sd) {
    const int M = f.grid.n_side;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int a = 0; a < M; ++a) {
        const int am = (M - a) % M;
        for (int b = 0; b < M; ++b) {
            const int bm = (M - b) % M;
            const bool self = (a == am && b == bm);
            const bool canonical = (a < am) || (a == am && b <= bm);
            if (!canonical) continue;
            const std::uint64_t idx = static_cast<std::uint64_t>(a) * M + b;
            const double sd = mode_sd(a, b);
            double z0, z1;
            stream.gaussian_pair(idx, z0, z1);
            if (self) {
                f.at(a, b) = cplx(sd * z0, 0.0);
            } else {
                const cplx v(sd * inv_sqrt2 * z0, sd * inv_sqrt2 * z1);
                f.at(a, b) = v;
                f.at(am, bm) = std::conj(v);
            }
        }
    }
    f.is_real = true;
}

}  // namespace detail

// One sample of the massive Gaussian free field on the grid.
inline SpectralField sample_gff(const GridSpec& grid, const SeededStream& stream) {
    SpectralField u(grid, true);
    const double L = grid.L;
    detail::fill_hermitian_gaussian(u, stream, [&](int a, int b) {
        return L / std::sqrt(grid.bracket_sq(a, b));
    });
    return u;
}

// Space-time white noise integrated over a time slab of length dt.
struct NoiseSlab {
    GridSpec grid;
    double dt = 0.0;
    SpectralField increments;  // spectral Brownian increments, Hermitian
};

inline NoiseSlab sample_white_noise_slab(const GridSpec& grid, double dt,
                                         const SeededStream& stream) {
    if (!(dt > 0.0)) throw parameter_error("sample_white_noise_slab: dt must be positive");
    NoiseSlab slab{grid, dt, SpectralField(grid, true)};
    const double sd = grid.L * std::sqrt(dt);
    detail::fill_hermitian_gaussian(slab.increments, stream, [&](int, int) { return sd; });
    return slab;
}

// Pairing <W_slab, phi> for a band-limited spatial test function phi,
// using the spectral Parseval identity.
inline double slab_pairing(const NoiseSlab& slab, const SpectralField& phi) {
    if (phi.grid != slab.grid) throw shape_error("slab_pairing: grid mismatch");
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < phi.coeffs.size(); ++i)
        s += slab.increments.coeffs[i] * std::conj(phi.coeffs[i]);
    return s.real() / (slab.grid.L * slab.grid.L);
}

// Exact Ornstein-Uhlenbeck step for (d/dt + 1 - Delta) driven by sqrt(2) x
// white noise. The slab's Brownian increment is rescaled so the one-step
// Gaussian has the exact variance L^2 (1 - e^{-2 dt <n>^2}) / <n>^2; the
// rescaling telescopes, so composing k steps of size dt equals one step of
// size k*dt in distribution.
inline SpectralField evolve_heat_convolution(const SpectralField& state, const NoiseSlab& slab) {
    if (state.grid != slab.grid) throw shape_error("evolve_heat_convolution: grid mismatch");
    SpectralField out = state;
    const int M = state.grid.n_side;
    const double dt = slab.dt;
    for (int a = 0; a < M; ++a) {
        for (int b = 0; b < M; ++b) {
            const double lam = state.grid.bracket_sq(a, b);
            const double decay = std::exp(-dt * lam);
            // sqrt(2) * sqrt((1 - e^{-2 lam dt}) / (2 lam dt))
            const double kappa = std::sqrt(-std::expm1(-2.0 * dt * lam) / (dt * lam));
            out.at(a, b) = decay * state.at(a, b) + kappa * slab.increments.at(a, b);
        }
    }
    return out;
}

// Deterministic part only (zero-noise step); exact mode decay e^{-t <n>^2}.
inline SpectralField heat_flow(const SpectralField& state, double t) {
    return apply_multiplier(state, MultiplierSpec::heat_semigroup(t));
}

// Hot-loop sampler for Pi_N u with u ~ GFF: draws go straight into the r2c
// half spectrum and one c2r synthesizes the physical field. Counter
// addressing matches sample_gff, so for equal streams the output equals
// to_physical_real(apply_multiplier(sample_gff(...), chi_N)) bit for bit.
class ProjectedGffSampler {
public:
    ProjectedGffSampler(const GridSpec& grid, double N, CutoffProfile chi)
        : grid_(grid) {
        const int M = grid.n_side;
        const int H = M / 2 + 1;
        const double inv_pref = inverse_prefactor(grid);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        slots_.resize(static_cast<std::size_t>(M) * H);
        for (int a = 0; a < M; ++a) {
            const int am = (M - a) % M;
            for (int b = 0; b < H; ++b) {
                const int bm = (M - b) % M;
                Slot& s = slots_[static_cast<std::size_t>(a) * H + b];
                const bool self = (a == am && b == bm);
                const bool canonical = (a < am) || (a == am && b <= bm);
                s.counter = canonical ? static_cast<std::uint64_t>(a) * M + b
                                      : static_cast<std::uint64_t>(am) * M + bm;
                s.conjugate = !canonical;
                s.self = self;
                const double cut = cutoff_value(chi, grid.freq_abs(a, b) / N);
                const double sd = grid.L / std::sqrt(grid.bracket_sq(a, b));
                const double checker = ((a + b) & 1) ? -1.0 : 1.0;
                s.scale = inv_pref * checker * cut * sd * (self ? 1.0 : inv_sqrt2);
            }
        }
    }

    void sample(const SeededStream& stream, std::vector<double>& phys_out) const {
        const int M = grid_.n_side;
        const int H = M / 2 + 1;
        thread_local std::vector<cplx> half;
        half.assign(static_cast<std::size_t>(M) * H, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const Slot& s = slots_[i];
            if (s.scale == 0.0) continue;
            double z0, z1;
            stream.gaussian_pair(s.counter, z0, z1);
            if (s.self)
                half[i] = cplx(s.scale * z0, 0.0);
            else
                half[i] = cplx(s.scale * z0, (s.conjugate ? -s.scale : s.scale) * z1);
        }
        phys_out.resize(grid_.size());
        FftPlans::instance().c2r(M, half.data(), phys_out.data());
    }

    const GridSpec& grid() const { return grid_; }

private:
    struct Slot {
        double scale = 0.0;
        std::uint64_t counter = 0;
        bool conjugate = false;
        bool self = false;
    };
    GridSpec grid_;
    std::vector<Slot> slots_;
};

}  // namespace sgsq
