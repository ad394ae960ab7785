#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgsq {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr const char* version_string = "sgsq 0.1.0";

// Error taxonomy. The CLI maps these onto process exit codes:
// config_error -> 2, the numerical/regime family -> 3.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct resolution_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct parameter_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct precondition_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct provenance_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct scan_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double sq(double x) { return x * x; }

// C^inf step: 0 for x <= 0, 1 for x >= 1, strictly monotone in between.
// Built from the standard exp(-1/x) bump; used by every smooth profile
// in the library so all cutoffs share one transition shape.
inline double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

}  // namespace sgsq
