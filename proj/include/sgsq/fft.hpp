#pragma once

#include <fftw3.h>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <vector>

#include "sgsq/common.hpp"
#include "sgsq/grid.hpp"

namespace sgsq {

// Process-wide FFTW plan cache.
//
// Plans are created once per grid size (FFTW_UNALIGNED, so they can be
// executed on any caller-owned buffer via the new-array interface) and are
// safe to execute concurrently on distinct buffers. Planner calls are
// serialized behind a mutex. Wisdom is persisted to a file so repeated
// processes skip measurement.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }

    // complex-to-complex, sign = FFTW_FORWARD (-1) or FFTW_BACKWARD (+1)
    void c2c(int n_side, const cplx* in, cplx* out, int sign) {
        const Entry& e = entry(n_side);
        fftw_execute_dft(sign == FFTW_FORWARD ? e.fwd : e.bwd,
                         reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    // real input -> half spectrum, layout n x (n/2+1), row-major
    void r2c(int n_side, const double* in, cplx* out_half) {
        const Entry& e = entry(n_side);
        fftw_execute_dft_r2c(e.r2c, const_cast<double*>(in),
                             reinterpret_cast<fftw_complex*>(out_half));
    }

    // half spectrum -> real output; clobbers the input buffer (FFTW c2r)
    void c2r(int n_side, cplx* in_half, double* out) {
        const Entry& e = entry(n_side);
        fftw_execute_dft_c2r(e.c2r, reinterpret_cast<fftw_complex*>(in_half), out);
    }

private:
    struct Entry {
        fftw_plan fwd = nullptr;
        fftw_plan bwd = nullptr;
        fftw_plan r2c = nullptr;
        fftw_plan c2r = nullptr;
    };

    FftPlans() {
        const char* env = std::getenv("SGSQ_FFTW_WISDOM");
        wisdom_path_ = env ? env : "/tmp/.sgsq_fftw_wisdom";
        fftw_import_wisdom_from_filename(wisdom_path_.c_str());
    }

    const Entry& entry(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;

        const std::size_t nn = static_cast<std::size_t>(n) * n;
        fftw_complex* a = fftw_alloc_complex(nn);
        fftw_complex* b = fftw_alloc_complex(nn);
        double* r = fftw_alloc_real(nn);
        fftw_complex* h = fftw_alloc_complex(static_cast<std::size_t>(n) * (n / 2 + 1));

        const unsigned flags = (n >= 512 ? FFTW_MEASURE : FFTW_ESTIMATE) | FFTW_UNALIGNED;
        Entry e;
        e.fwd = fftw_plan_dft_2d(n, n, a, b, FFTW_FORWARD, flags);
        e.bwd = fftw_plan_dft_2d(n, n, a, b, FFTW_BACKWARD, flags);
        e.r2c = fftw_plan_dft_r2c_2d(n, n, r, h, flags);
        e.c2r = fftw_plan_dft_c2r_2d(n, n, h, r, flags);

        fftw_free(a);
        fftw_free(b);
        fftw_free(r);
        fftw_free(h);

        fftw_export_wisdom_to_filename(wisdom_path_.c_str());
        return plans_.emplace(n, e).first->second;
    }

    std::mutex mutex_;
    std::map<int, Entry> plans_;
    std::string wisdom_path_;
};

}  // namespace sgsq
