#pragma once

#include <cmath>
#include <cstdint>

#include "sgsq/common.hpp"

namespace sgsq {

// Counter-based random numbers.
//
// Every draw is a pure function of (master_seed, stream_id, counter), so
// ensembles are reproducible bit-for-bit regardless of evaluation order or
// thread count. The generator is the SplitMix64 finalizer applied to a
// keyed counter; statistically solid for Monte Carlo work and fast enough
// to sit inside the spectral sampling hot loops.

namespace detail {
inline constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}
}  // namespace detail

// Identity of one independent substream: (experiment, member, time-slab).
struct StreamId {
    std::uint32_t experiment = 0;
    std::uint32_t member = 0;
    std::uint64_t slab = 0;
};

class SeededStream {
public:
    SeededStream(std::uint64_t master_seed, StreamId id)
        : master_seed_(master_seed), id_(id) {
        std::uint64_t k = detail::mix64(master_seed + detail::golden);
        k = detail::mix64(k ^ (static_cast<std::uint64_t>(id.experiment) + detail::golden));
        k = detail::mix64(k ^ (static_cast<std::uint64_t>(id.member) * 0xD1342543DE82EF95ull + detail::golden));
        k = detail::mix64(k ^ (id.slab * 0xDB4F0B9175AE2165ull + detail::golden));
        key_ = k;
    }

    std::uint64_t master_seed() const { return master_seed_; }
    StreamId id() const { return id_; }

    SeededStream with(StreamId id) const { return SeededStream(master_seed_, id); }
    SeededStream with_member(std::uint32_t member) const {
        StreamId id = id_;
        id.member = member;
        return with(id);
    }
    SeededStream with_slab(std::uint64_t slab) const {
        StreamId id = id_;
        id.slab = slab;
        return with(id);
    }

    std::uint64_t bits(std::uint64_t counter) const {
        return detail::mix64(key_ + counter * detail::golden);
    }

    // Uniform on (0, 1]; never returns 0 so log() is safe.
    double uniform(std::uint64_t counter) const {
        return ((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }

    // Box-Muller pair from counters (2i, 2i+1). Fixed counter addressing
    // keeps draws independent of evaluation order.
    void gaussian_pair(std::uint64_t pair_index, double& z0, double& z1) const {
        const double u1 = uniform(2 * pair_index);
        const double u2 = uniform(2 * pair_index + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        z0 = r * std::cos(two_pi * u2);
        z1 = r * std::sin(two_pi * u2);
    }

    double gaussian(std::uint64_t pair_index) const {
        double z0, z1;
        gaussian_pair(pair_index, z0, z1);
        return z0;
    }

private:
    std::uint64_t master_seed_;
    StreamId id_;
    std::uint64_t key_;
};

}  // namespace sgsq
