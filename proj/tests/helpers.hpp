#pragma once

#include <vector>

#include "sgsq/grid.hpp"
#include "sgsq/grid_fourier.hpp"
#include "sgsq/noise_gff.hpp"
#include "sgsq/rng.hpp"

namespace sgsq::testing {

// random real field, band-limited to |n| <= band (0 = no cut)
inline SpectralField random_real_field(const GridSpec& grid, const SeededStream& stream,
                                       double band = 0.0) {
    SpectralField f = sample_gff(grid, stream);
    if (band > 0.0) f = apply_multiplier(f, MultiplierSpec::sharp_cutoff(band));
    return f;
}

inline std::vector<cplx> random_complex_values(const GridSpec& grid, const SeededStream& stream) {
    std::vector<cplx> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double z0, z1;
        stream.gaussian_pair(i, z0, z1);
        v[i] = cplx(z0, z1);
    }
    return v;
}

inline double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace sgsq::testing
