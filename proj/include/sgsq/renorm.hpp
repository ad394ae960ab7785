#pragma once

#include <cmath>
#include <vector>

#include "sgsq/common.hpp"
#include "sgsq/grid.hpp"
#include "sgsq/grid_fourier.hpp"

namespace sgsq {

// Renormalization constants for the truncated dynamics. sigma is always the
// exact finite lattice sum (never the log asymptotic), so the chaos mean
// identity E[gamma e^{i beta Psi_N}] = 1 holds exactly in distribution.

inline void require_cutoff_resolved(const GridSpec& grid, double N) {
    if (2.0 * N > grid.nyquist())
        throw resolution_error("cutoff N not resolved: need 2N <= Nyquist = n_side/(2L)");
}

// sigma_{L,N} = (1/(4 pi^2 L^2)) * Sum_n chi_N^2(n) / <n>^2
inline double sigma_heat(const GridSpec& grid, double N,
                         CutoffProfile chi = CutoffProfile::smooth_default) {
    if (N < 1.0) throw parameter_error("sigma_heat: N must be >= 1");
    require_cutoff_resolved(grid, N);
    const int M = grid.n_side;
    double s = 0.0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) {
            const double c = cutoff_value(chi, grid.freq_abs(a, b) / N);
            if (c != 0.0) s += c * c / grid.bracket_sq(a, b);
        }
    return s / (4.0 * pi * pi * grid.L * grid.L);
}

inline double gamma_coupling(double beta2, double sigma) {
    if (!(beta2 > 0.0)) throw parameter_error("gamma: beta^2 must be positive");
    if (sigma < 0.0) throw parameter_error("gamma: sigma must be >= 0");
    const double arg = 0.5 * beta2 * sigma;
    if (arg > 700.0) throw parameter_error("gamma: exponent overflow (beta^2 sigma / 2 > 700)");
    return std::exp(arg);
}

// Int_0^t e^{-tau} sin^2(w tau) d tau in closed form; w^2 + 1/4 = <n>^2.
inline double damped_sine_sq_integral(double t, double w) {
    const double br2 = w * w + 0.25;
    const double em = std::exp(-t);
    return 0.5 * (1.0 - em) -
           (1.0 + em * (2.0 * w * std::sin(2.0 * w * t) - std::cos(2.0 * w * t))) / (8.0 * br2);
}

// sigma^wave_{L,N}(t) = (1/(2 pi^2 L^2)) Sum_n chi_N^2(n)/w^2 * Int_0^t
// e^{-(t-s)} sin^2((t-s) w) ds, with w = sqrt(3/4 + |n|^2). The integral is
// evaluated with the closed-form antiderivative, so there is no
// t-dependent quadrature bias. As t -> infinity this reduces to the heat
// constant: 1/w^2 * (1/2)(1 - 1/(4<n>^2)) = 1/(2 <n>^2).
inline double sigma_wave(const GridSpec& grid, double N, double t,
                         CutoffProfile chi = CutoffProfile::smooth_default) {
    if (N < 1.0) throw parameter_error("sigma_wave: N must be >= 1");
    if (t < 0.0) throw parameter_error("sigma_wave: t must be >= 0");
    require_cutoff_resolved(grid, N);
    const int M = grid.n_side;
    double s = 0.0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) {
            const double c = cutoff_value(chi, grid.freq_abs(a, b) / N);
            if (c == 0.0) continue;
            const double w = std::sqrt(0.75 + grid.freq_sq(a, b));
            s += c * c / (w * w) * damped_sine_sq_integral(t, w);
        }
    return s / (2.0 * pi * pi * grid.L * grid.L);
}

inline double gamma_wave(double beta2, const GridSpec& grid, double N, double t,
                         CutoffProfile chi = CutoffProfile::smooth_default) {
    return gamma_coupling(beta2, sigma_wave(grid, N, t, chi));
}

// Truncated covariance C_N(r) = (1/(4 pi^2 L^2)) Sum_n chi_N^2(n) e^{i n.r} / <n>^2.
// This is E[Psi_N(x) Psi_N(x + r)]; C_N(0) = sigma_{L,N}.
inline double truncated_covariance(const GridSpec& grid, double N, double rx, double ry,
                                   CutoffProfile chi = CutoffProfile::smooth_default) {
    require_cutoff_resolved(grid, N);
    const int M = grid.n_side;
    double s = 0.0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) {
            const double c = cutoff_value(chi, grid.freq_abs(a, b) / N);
            if (c == 0.0) continue;
            s += c * c / grid.bracket_sq(a, b) *
                 std::cos(grid.freq_x(a) * rx + grid.freq_y(b) * ry);
        }
    return s / (4.0 * pi * pi * grid.L * grid.L);
}

struct RenormTable {
    GridSpec grid;
    double beta2 = 0.0;
    CutoffProfile chi = CutoffProfile::smooth_default;
    struct Entry {
        double N;
        double sigma;
        double gamma;
    };
    std::vector<Entry> entries;
};

inline RenormTable renorm_table(const GridSpec& grid, double beta2,
                                const std::vector<double>& N_list,
                                CutoffProfile chi = CutoffProfile::smooth_default) {
    RenormTable table{grid, beta2, chi, {}};
    for (double N : N_list) {
        const double s = sigma_heat(grid, N, chi);
        table.entries.push_back({N, s, gamma_coupling(beta2, s)});
    }
    return table;
}

}  // namespace sgsq
