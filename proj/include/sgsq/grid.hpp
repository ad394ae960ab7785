#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "sgsq/common.hpp"

namespace sgsq {

// Discrete torus (R / 2*pi*L*Z)^2 sampled on an n_side x n_side grid.
//
// Dual lattice: n = k / L with integer k, each component in
// [-n_side/2, n_side/2). Physical grid: x_j = -pi*L + j * (2*pi*L/n_side),
// so the coordinate window is [-pi*L, pi*L)^2.
struct GridSpec {
    double L = 1.0;
    int n_side = 0;

    GridSpec() = default;
    GridSpec(double L_, int n_side_) : L(L_), n_side(n_side_) {
        if (!(L > 0.0)) throw parameter_error("GridSpec: torus parameter L must be positive");
        if (n_side < 4 || (n_side & (n_side - 1)) != 0)
            throw parameter_error("GridSpec: n_side must be a power of two >= 4");
    }

    std::size_t size() const { return static_cast<std::size_t>(n_side) * n_side; }
    double spacing() const { return two_pi * L / n_side; }
    double nyquist() const { return n_side / (2.0 * L); }
    double dual_spacing() const { return 1.0 / L; }
    double volume() const { return sq(two_pi * L); }

    // storage index (0..n_side-1) -> signed integer mode k in [-M/2, M/2)
    int signed_index(int a) const { return a < n_side / 2 ? a : a - n_side; }
    int wrap_index(int k) const {
        int a = k % n_side;
        if (a < 0) a += n_side;
        return a;
    }

    double coord(int j) const { return -pi * L + j * spacing(); }

    // frequency components of storage entry (a, b)
    double freq_x(int a) const { return signed_index(a) / L; }
    double freq_y(int b) const { return signed_index(b) / L; }
    double freq_abs(int a, int b) const { return std::hypot(freq_x(a), freq_y(b)); }
    double freq_sq(int a, int b) const { return sq(freq_x(a)) + sq(freq_y(b)); }
    // <n>^2 = 1 + |n|^2
    double bracket_sq(int a, int b) const { return 1.0 + freq_sq(a, b); }

    bool operator==(const GridSpec& o) const { return L == o.L && n_side == o.n_side; }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

// A field stored by its Fourier coefficients on the full dual lattice,
// row-major in wrapped index order (a * n_side + b).
struct SpectralField {
    GridSpec grid;
    std::vector<cplx> coeffs;
    bool is_real = false;

    SpectralField() = default;
    explicit SpectralField(const GridSpec& g, bool real_flag = false)
        : grid(g), coeffs(g.size(), cplx(0.0, 0.0)), is_real(real_flag) {}

    cplx& at(int a, int b) { return coeffs[static_cast<std::size_t>(a) * grid.n_side + b]; }
    const cplx& at(int a, int b) const {
        return coeffs[static_cast<std::size_t>(a) * grid.n_side + b];
    }

    // access by signed mode pair
    cplx& mode(int k1, int k2) { return at(grid.wrap_index(k1), grid.wrap_index(k2)); }
    const cplx& mode(int k1, int k2) const {
        return at(grid.wrap_index(k1), grid.wrap_index(k2));
    }

    // max over represented modes of |coeff(-n) - conj(coeff(n))|
    double hermitian_defect() const {
        const int M = grid.n_side;
        double worst = 0.0;
        for (int a = 0; a < M; ++a) {
            const int am = (M - a) % M;
            for (int b = 0; b < M; ++b) {
                const int bm = (M - b) % M;
                worst = std::max(worst, std::abs(at(am, bm) - std::conj(at(a, b))));
            }
        }
        return worst;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const cplx& c : coeffs) m = std::max(m, std::abs(c));
        return m;
    }
};

// Move a spectral field to another resolution on the same torus.
//
// Upsampling splits each Nyquist-row coefficient evenly between +M/2 and
// -M/2 on the finer lattice (per axis), which keeps real fields real and
// leaves the values at the original grid points unchanged. Downsampling is
// the adjoint: modes above the target Nyquist are discarded and the two
// rows that alias onto the target Nyquist row are folded together, so
// upsample-then-downsample is the identity.
inline SpectralField resample_to(const SpectralField& f, int new_n_side) {
    if (new_n_side == f.grid.n_side) return f;
    const GridSpec dst_grid(f.grid.L, new_n_side);
    SpectralField out(dst_grid, f.is_real);
    const int Ms = f.grid.n_side;
    const int Md = new_n_side;

    if (Md > Ms) {
        for (int a = 0; a < Ms; ++a) {
            const int k1 = f.grid.signed_index(a);
            const bool ny1 = (k1 == -Ms / 2);
            for (int b = 0; b < Ms; ++b) {
                const int k2 = f.grid.signed_index(b);
                const bool ny2 = (k2 == -Ms / 2);
                const cplx c = f.at(a, b);
                if (c == cplx(0.0, 0.0)) continue;
                const double w = (ny1 ? 0.5 : 1.0) * (ny2 ? 0.5 : 1.0);
                const int k1s[2] = {k1, -k1};
                const int k2s[2] = {k2, -k2};
                for (int i = 0; i < (ny1 ? 2 : 1); ++i)
                    for (int j = 0; j < (ny2 ? 2 : 1); ++j)
                        out.mode(k1s[i], k2s[j]) += w * c;
            }
        }
    } else {
        for (int a = 0; a < Md; ++a) {
            const int k1 = dst_grid.signed_index(a);
            const bool ny1 = (k1 == -Md / 2);
            for (int b = 0; b < Md; ++b) {
                const int k2 = dst_grid.signed_index(b);
                const bool ny2 = (k2 == -Md / 2);
                cplx acc(0.0, 0.0);
                for (int i = 0; i < (ny1 ? 2 : 1); ++i)
                    for (int j = 0; j < (ny2 ? 2 : 1); ++j)
                        acc += f.mode(i == 0 ? k1 : -k1, j == 0 ? k2 : -k2);
                out.at(a, b) = acc;
            }
        }
    }
    return out;
}

}  // namespace sgsq
