#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <vector>

#include "sgsq/common.hpp"
#include "sgsq/fft.hpp"
#include "sgsq/grid.hpp"

namespace sgsq {

// Fourier conventions on the torus (R / 2*pi*L*Z)^2:
//
//   fhat(n) = (1/2pi) * Int f(x) e^{-i n.x} dx,        n in (Z/L)^2
//   f(x)    = (1/(2pi L^2)) * Sum_n fhat(n) e^{i n.x}
//
// With centered coordinates x_j = -pi L + j h the plane-wave phases reduce
// to a +-1 checkerboard in mode space on top of the raw FFT.

namespace detail {
inline double checker(int a, int b) { return ((a + b) & 1) ? -1.0 : 1.0; }
}  // namespace detail

inline double forward_prefactor(const GridSpec& g) {
    return two_pi * g.L * g.L / static_cast<double>(g.size());
}
inline double inverse_prefactor(const GridSpec& g) { return 1.0 / (two_pi * g.L * g.L); }

// ---------------------------------------------------------------------------
// transforms
// ---------------------------------------------------------------------------

inline SpectralField forward_transform(const GridSpec& grid, const std::vector<cplx>& values,
                                       bool is_real = false) {
    if (values.size() != grid.size())
        throw shape_error("forward_transform: value array does not match grid");
    SpectralField out(grid, is_real);
    FftPlans::instance().c2c(grid.n_side, values.data(), out.coeffs.data(), FFTW_FORWARD);
    const double pref = forward_prefactor(grid);
    const int M = grid.n_side;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) out.at(a, b) *= pref * detail::checker(a, b);
    return out;
}

inline std::vector<cplx> inverse_transform(const SpectralField& f) {
    const int M = f.grid.n_side;
    std::vector<cplx> tmp(f.grid.size());
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            tmp[static_cast<std::size_t>(a) * M + b] = detail::checker(a, b) * f.at(a, b);
    std::vector<cplx> out(f.grid.size());
    FftPlans::instance().c2c(M, tmp.data(), out.data(), FFTW_BACKWARD);
    const double pref = inverse_prefactor(f.grid);
    for (cplx& v : out) v *= pref;
    return out;
}

// real-data fast path: physical values -> Hermitian spectral field
inline SpectralField forward_transform_real(const GridSpec& grid,
                                            const std::vector<double>& values) {
    if (values.size() != grid.size())
        throw shape_error("forward_transform_real: value array does not match grid");
    const int M = grid.n_side;
    const int H = M / 2 + 1;
    std::vector<cplx> half(static_cast<std::size_t>(M) * H);
    FftPlans::instance().r2c(M, values.data(), half.data());
    SpectralField out(grid, true);
    const double pref = forward_prefactor(grid);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < H; ++b)
            out.at(a, b) = pref * detail::checker(a, b) * half[static_cast<std::size_t>(a) * H + b];
    // mirror the implied half so conj symmetry holds bitwise
    for (int a = 0; a < M; ++a) {
        const int am = (M - a) % M;
        for (int b = H; b < M; ++b) out.at(a, b) = std::conj(out.at(am, M - b));
    }
    return out;
}

// Hermitian spectral field -> physical values (real output)
inline std::vector<double> to_physical_real(const SpectralField& f) {
    if (!f.is_real) throw shape_error("to_physical_real: field is not flagged real");
    const int M = f.grid.n_side;
    const int H = M / 2 + 1;
    std::vector<cplx> half(static_cast<std::size_t>(M) * H);
    const double pref = inverse_prefactor(f.grid);
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < H; ++b)
            half[static_cast<std::size_t>(a) * H + b] = pref * detail::checker(a, b) * f.at(a, b);
    std::vector<double> out(f.grid.size());
    FftPlans::instance().c2r(M, half.data(), out.data());
    return out;
}

inline std::vector<cplx> to_physical(const SpectralField& f) { return inverse_transform(f); }

// ---------------------------------------------------------------------------
// integrals and inner products (exact for trigonometric data)
// ---------------------------------------------------------------------------

inline cplx integral(const SpectralField& f) { return two_pi * f.mode(0, 0); }

inline double l2_norm_sq(const SpectralField& f) {
    double s = 0.0;
    for (const cplx& c : f.coeffs) s += std::norm(c);
    return s / (f.grid.L * f.grid.L);
}

// ---------------------------------------------------------------------------
// frequency cutoff profiles
// ---------------------------------------------------------------------------

enum class CutoffProfile {
    smooth_default,  // 1 on r<=1/2, smooth monotone to 0 at r=2
    sharp_radius1,   // indicator of the closed unit ball
    physical_bump,   // transform of a compactly supported physical bump
    zero,            // identically zero (edge-case testing)
};

namespace detail {

// chi_phys(z) = Int_0^inf rho * b(rho) * J0(z rho) drho for the mollified
// indicator b (== 1 on rho <= 1/2, support in rho <= 1). Tabulated once;
// truncated to zero beyond the table range (sensitivity variant only).
inline double physical_bump_profile(double z) {
    static std::vector<double> table;
    static constexpr double z_max = 32.0;
    static constexpr int n_tab = 4096;
    static constexpr int n_quad = 800;
    static std::once_flag once;
    std::call_once(once, [] {
        table.resize(n_tab + 1);
        const double dr = 1.0 / n_quad;
        for (int i = 0; i <= n_tab; ++i) {
            const double z_i = z_max * i / n_tab;
            double acc = 0.0;
            for (int q = 0; q <= n_quad; ++q) {
                const double rho = q * dr;
                const double b = smooth_step((1.0 - rho) / 0.5);
                const double w = (q == 0 || q == n_quad) ? 0.5 : 1.0;
                acc += w * rho * b * std::cyl_bessel_j(0.0, z_i * rho);
            }
            table[i] = acc * dr;
        }
    });
    const double az = std::abs(z);
    if (az >= z_max) return 0.0;
    const double u = az / z_max * n_tab;
    const int i = std::min(static_cast<int>(u), n_tab - 1);
    const double t = u - i;
    return (1.0 - t) * table[i] + t * table[i + 1];
}

}  // namespace detail

inline double cutoff_value(CutoffProfile p, double r) {
    switch (p) {
        case CutoffProfile::smooth_default:
            return smooth_step((2.0 - r) / 1.5);
        case CutoffProfile::sharp_radius1:
            return r <= 1.0 ? 1.0 : 0.0;
        case CutoffProfile::physical_bump:
            return detail::physical_bump_profile(r);
        case CutoffProfile::zero:
            return 0.0;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Littlewood-Paley bump and dyadic blocks
// ---------------------------------------------------------------------------

// eta: [0,1]-valued, == 1 on [0, 5/4], supported on [0, 8/5)
inline double lp_bump(double r) { return smooth_step((1.6 - std::abs(r)) / 0.35); }

// multiplier of block k at radius xi
inline double lp_block_value(int k, double xi) {
    if (k == 0) return lp_bump(xi);
    return lp_bump(xi / std::ldexp(1.0, k)) - lp_bump(xi / std::ldexp(1.0, k - 1));
}

// Largest frequency magnitude representable on the grid (lattice corner).
inline double max_represented_freq(const GridSpec& g) { return std::sqrt(2.0) * g.nyquist(); }

// Smallest K such that blocks 0..K sum to 1 on every represented mode.
inline int lp_kmax(const GridSpec& g) {
    int k = 0;
    while (1.25 * std::ldexp(1.0, k) < max_represented_freq(g)) ++k;
    return k;
}

// ---------------------------------------------------------------------------
// multipliers
// ---------------------------------------------------------------------------

struct MultiplierSpec {
    enum class Kind {
        smooth_cutoff,   // chi(|n|/N), profile selectable
        sharp_cutoff,    // indicator |n| <= N
        bracket_power,   // <n>^s
        heat_semigroup,  // exp(-t (1+|n|^2))
        wave_D,          // e^{-t/2} sin(t w)/w,  w = sqrt(3/4+|n|^2)
        wave_Ddot,       // d/dt of wave_D
        lp_block,        // dyadic block k
    };

    Kind kind;
    double N = 0.0;
    CutoffProfile profile = CutoffProfile::smooth_default;
    double s = 0.0;
    double t = 0.0;
    int k = 0;

    static MultiplierSpec smooth_cutoff(double N, CutoffProfile p = CutoffProfile::smooth_default) {
        if (N < 1.0) throw parameter_error("smooth_cutoff: N must be >= 1");
        MultiplierSpec m{Kind::smooth_cutoff};
        m.N = N;
        m.profile = p;
        return m;
    }
    static MultiplierSpec sharp_cutoff(double N) {
        if (N < 1.0) throw parameter_error("sharp_cutoff: N must be >= 1");
        MultiplierSpec m{Kind::sharp_cutoff};
        m.N = N;
        return m;
    }
    static MultiplierSpec bracket_power(double s) {
        if (!std::isfinite(s)) throw parameter_error("bracket_power: s must be finite");
        MultiplierSpec m{Kind::bracket_power};
        m.s = s;
        return m;
    }
    static MultiplierSpec heat_semigroup(double t) {
        if (t < 0.0) throw parameter_error("heat_semigroup: t must be >= 0");
        MultiplierSpec m{Kind::heat_semigroup};
        m.t = t;
        return m;
    }
    static MultiplierSpec wave_D(double t) {
        if (t < 0.0) throw parameter_error("wave_D: t must be >= 0");
        MultiplierSpec m{Kind::wave_D};
        m.t = t;
        return m;
    }
    static MultiplierSpec wave_Ddot(double t) {
        if (t < 0.0) throw parameter_error("wave_Ddot: t must be >= 0");
        MultiplierSpec m{Kind::wave_Ddot};
        m.t = t;
        return m;
    }
    static MultiplierSpec lp_block(int k) {
        if (k < 0) throw parameter_error("lp_block: k must be >= 0");
        MultiplierSpec m{Kind::lp_block};
        m.k = k;
        return m;
    }

    double value(double freq_abs) const {
        switch (kind) {
            case Kind::smooth_cutoff:
                return cutoff_value(profile, freq_abs / N);
            case Kind::sharp_cutoff:
                return freq_abs <= N ? 1.0 : 0.0;
            case Kind::bracket_power:
                return std::pow(1.0 + freq_abs * freq_abs, 0.5 * s);
            case Kind::heat_semigroup:
                return std::exp(-t * (1.0 + freq_abs * freq_abs));
            case Kind::wave_D: {
                const double w = std::sqrt(0.75 + freq_abs * freq_abs);
                return std::exp(-0.5 * t) * std::sin(t * w) / w;
            }
            case Kind::wave_Ddot: {
                const double w = std::sqrt(0.75 + freq_abs * freq_abs);
                return std::exp(-0.5 * t) * (std::cos(t * w) - 0.5 * std::sin(t * w) / w);
            }
            case Kind::lp_block:
                return lp_block_value(k, freq_abs);
        }
        return 0.0;
    }
};

inline SpectralField apply_multiplier(const SpectralField& f, const MultiplierSpec& m) {
    SpectralField out = f;
    const int M = f.grid.n_side;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) out.at(a, b) *= m.value(f.grid.freq_abs(a, b));
    return out;
}

inline SpectralField project_smooth(const SpectralField& f, double N,
                                    CutoffProfile p = CutoffProfile::smooth_default) {
    return apply_multiplier(f, MultiplierSpec::smooth_cutoff(N, p));
}

struct LpBlock {
    SpectralField field;
    bool above_nyquist = false;
};

inline LpBlock lp_project(const SpectralField& f, int k) {
    if (k < 0) throw parameter_error("lp_project: block index must be >= 0");
    LpBlock out{SpectralField(f.grid, f.is_real), false};
    if (k >= 1 && 1.25 * std::ldexp(1.0, k - 1) >= max_represented_freq(f.grid)) {
        out.above_nyquist = true;  // block support entirely above the lattice
        return out;
    }
    out.field = apply_multiplier(f, MultiplierSpec::lp_block(k));
    return out;
}

// ---------------------------------------------------------------------------
// oversampled physical evaluation
// ---------------------------------------------------------------------------

inline std::vector<double> to_physical_real_oversampled(const SpectralField& f, int os_factor,
                                                        GridSpec* out_grid = nullptr) {
    const SpectralField fine = resample_to(f, f.grid.n_side * os_factor);
    if (out_grid) *out_grid = fine.grid;
    return to_physical_real(fine);
}

namespace detail {

// Fill the r2c half spectrum of the fine lattice from a base-lattice
// field, weighting mode i by weights[i] when given. Base Nyquist rows
// split evenly between +-M/2 on the fine lattice; only targets with
// nonnegative second component are written (the rest is implied by the
// conjugate symmetry the c2r transform assumes).
inline void gather_fine_half(const GridSpec& base, const GridSpec& fine, const SpectralField& u,
                             const double* weights, std::vector<cplx>& half_out) {
    const int M = base.n_side;
    const int M2 = fine.n_side;
    const int H2 = M2 / 2 + 1;
    const double scale0 = inverse_prefactor(base);
    half_out.assign(static_cast<std::size_t>(M2) * H2, cplx(0.0, 0.0));
    for (int a = 0; a < M; ++a) {
        const int k1 = base.signed_index(a);
        for (int b = 0; b <= M / 2; ++b) {
            const std::size_t i = static_cast<std::size_t>(a) * M + b;
            const double w = weights ? weights[i] : 1.0;
            if (w == 0.0) continue;
            const cplx val = scale0 * w * u.coeffs[i];
            const bool ny1 = (k1 == -M / 2);
            const bool ny2 = (b == M / 2);  // signed second component -M/2
            const int kappa2 = ny2 ? M / 2 : b;
            const double w2 = ny2 ? 0.5 : 1.0;
            const int kappa1s[2] = {k1, M / 2};
            const int n1 = ny1 ? 2 : 1;
            for (int q = 0; q < n1; ++q) {
                const int kappa1 = kappa1s[q];
                const double w1 = ny1 ? 0.5 : 1.0;
                const double checker = ((kappa1 + kappa2) & 1) ? -1.0 : 1.0;
                const int a2 = (kappa1 % M2 + M2) % M2;
                half_out[static_cast<std::size_t>(a2) * H2 + kappa2] += w1 * w2 * checker * val;
            }
        }
    }
}

// Fold a fine-lattice r2c half spectrum back onto the base lattice (the
// adjoint of the splitting above), scaling by amp and by weights[i].
inline void fold_fine_half(const GridSpec& base, const GridSpec& fine,
                           const std::vector<cplx>& half_in, const double* weights, double amp,
                           std::vector<cplx>& out) {
    const int M = base.n_side;
    const int M2 = fine.n_side;
    const int H2 = M2 / 2 + 1;
    const double pref = forward_prefactor(fine);
    auto fine_mode = [&](int k1, int k2) -> cplx {
        if (k2 >= 0) {
            const int a2 = (k1 % M2 + M2) % M2;
            return half_in[static_cast<std::size_t>(a2) * H2 + k2];
        }
        const int a2 = ((-k1) % M2 + M2) % M2;
        return std::conj(half_in[static_cast<std::size_t>(a2) * H2 - k2]);
    };
    out.resize(base.size());
    for (int a = 0; a < M; ++a) {
        const int k1 = base.signed_index(a);
        for (int b = 0; b < M; ++b) {
            const int k2 = base.signed_index(b);
            const std::size_t i = static_cast<std::size_t>(a) * M + b;
            const double w = weights ? weights[i] : 1.0;
            if (w == 0.0) {
                out[i] = cplx(0.0, 0.0);
                continue;
            }
            cplx acc = fine_mode(k1, k2);
            if (k1 == -M / 2) acc += fine_mode(M / 2, k2);
            if (k2 == -M / 2) acc += fine_mode(k1, M / 2);
            if (k1 == -M / 2 && k2 == -M / 2) acc += fine_mode(M / 2, M / 2);
            const double checker = ((k1 + k2) & 1) ? -1.0 : 1.0;
            out[i] = amp * pref * checker * w * acc;
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Poisson summation self-check
// ---------------------------------------------------------------------------

struct PoissonCheckOptions {
    int window_mult = 3;   // window half-count in fundamental domains per side
    int oversample = 2;    // quadrature refinement relative to the torus grid
    double decay_tol = 1e-12;
};

// Compares the lattice Fourier series built from the continuum transform of
// F (computed by quadrature over the window) against the direct
// periodization of F, and returns the max pointwise discrepancy on the grid.
inline double poisson_check(const std::function<double(double, double)>& F, const GridSpec& grid,
                            const PoissonCheckOptions& opt = {}) {
    if (opt.window_mult < 3) throw precondition_error("poisson_check: window must span >= 3 domains");
    const int M = grid.n_side;
    const int wm = opt.window_mult | 1;  // odd, so the window is centered
    const int W = wm * opt.oversample * M;
    const double period = two_pi * grid.L;
    const double hw = wm * period / W;

    // decay at the window edge
    const double edge = 0.5 * wm * period;
    for (double s = -edge; s < edge; s += 8.0 * hw) {
        if (std::abs(F(s, edge - hw)) > opt.decay_tol || std::abs(F(edge - hw, s)) > opt.decay_tol)
            throw precondition_error("poisson_check: F does not decay below tolerance at window edge");
    }

    // continuum transform on the dual lattice by Riemann sum over the window
    std::vector<cplx> samples(static_cast<std::size_t>(W) * W);
    for (int q1 = 0; q1 < W; ++q1) {
        const double x1 = -edge + q1 * hw;
        for (int q2 = 0; q2 < W; ++q2)
            samples[static_cast<std::size_t>(q1) * W + q2] = F(x1, -edge + q2 * hw);
    }
    std::vector<cplx> dft(samples.size());
    // W is a power of two times wm; build a dedicated plan through FFTW
    {
        fftw_plan plan;
        {
            static std::mutex planner_mutex;
            std::lock_guard<std::mutex> lock(planner_mutex);
            plan = fftw_plan_dft_2d(W, W, reinterpret_cast<fftw_complex*>(samples.data()),
                                    reinterpret_cast<fftw_complex*>(dft.data()), FFTW_FORWARD,
                                    FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }

    // FhatL(n(k)) with window phase: x_q = -edge + q hw
    SpectralField Fhat(grid, false);
    const double quad_pref = hw * hw / two_pi;
    for (int a = 0; a < M; ++a) {
        const int k1 = grid.signed_index(a);
        const int i1 = ((k1 * wm) % W + W) % W;
        for (int b = 0; b < M; ++b) {
            const int k2 = grid.signed_index(b);
            const int i2 = ((k2 * wm) % W + W) % W;
            // e^{-i n x_q} = e^{i n edge} e^{-2pi i (k wm) q / W}; edge phase is
            // e^{i pi k wm} = +-1
            const double phase = ((static_cast<long>(k1) + k2) * wm) % 2 == 0 ? 1.0 : -1.0;
            Fhat.at(a, b) = quad_pref * phase * dft[static_cast<std::size_t>(i1) * W + i2];
        }
    }
    // spectral decay near the lattice edge
    double edge_coeff = 0.0;
    for (int a = 0; a < M; ++a)
        edge_coeff = std::max({edge_coeff, std::abs(Fhat.at(a, M / 2)), std::abs(Fhat.at(M / 2, a))});
    if (edge_coeff > opt.decay_tol)
        throw precondition_error("poisson_check: transform of F does not decay below tolerance");

    const std::vector<cplx> series = inverse_transform(Fhat);

    // direct periodization
    const int mmax = (wm - 1) / 2;
    double residual = 0.0;
    for (int j1 = 0; j1 < M; ++j1) {
        const double x1 = grid.coord(j1);
        for (int j2 = 0; j2 < M; ++j2) {
            const double x2 = grid.coord(j2);
            double periodized = 0.0;
            for (int m1 = -mmax; m1 <= mmax; ++m1)
                for (int m2 = -mmax; m2 <= mmax; ++m2)
                    periodized += F(x1 + period * m1, x2 + period * m2);
            residual = std::max(residual,
                                std::abs(series[static_cast<std::size_t>(j1) * M + j2] - periodized));
        }
    }
    return residual;
}

}  // namespace sgsq
