#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgsq/common.hpp"
#include "sgsq/grid.hpp"
#include "sgsq/norms.hpp"

namespace sgsq {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// binary field dump
//
// little-endian: magic "SGSQ", version u32, L f64, n_side u32, is_real u8,
// then row-major complex64 (float32 re, float32 im) coefficients.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t field_dump_version = 1;

inline void write_field_dump(const std::filesystem::path& path, const SpectralField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open field dump for writing: " + path.string());
    out.write("SGSQ", 4);
    const std::uint32_t version = field_dump_version;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&f.grid.L), 8);
    const std::uint32_t n = static_cast<std::uint32_t>(f.grid.n_side);
    out.write(reinterpret_cast<const char*>(&n), 4);
    const std::uint8_t real_flag = f.is_real ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&real_flag), 1);
    std::vector<float> buf(2 * f.coeffs.size());
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) {
        buf[2 * i] = static_cast<float>(f.coeffs[i].real());
        buf[2 * i + 1] = static_cast<float>(f.coeffs[i].imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline SpectralField read_field_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open field dump: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "SGSQ", 4) != 0)
        throw config_error("field dump has wrong magic: " + path.string());
    std::uint32_t version = 0, n = 0;
    double L = 0.0;
    std::uint8_t real_flag = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&L), 8);
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&real_flag), 1);
    if (version != field_dump_version) throw config_error("unsupported field dump version");
    SpectralField f(GridSpec(L, static_cast<int>(n)), real_flag != 0);
    std::vector<float> buf(2 * f.coeffs.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw config_error("field dump truncated: " + path.string());
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
        f.coeffs[i] = cplx(buf[2 * i], buf[2 * i + 1]);
    return f;
}

// ---------------------------------------------------------------------------
// CSV with stable formatting
// ---------------------------------------------------------------------------

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
        : out_(path) {
        if (!out_) throw config_error("cannot open csv for writing: " + path.string());
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        char buf[40];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
            out_ << (i ? "," : "") << buf;
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

// debug export: |coeff| by signed mode
inline void write_coeff_abs_csv(const std::filesystem::path& path, const SpectralField& f) {
    CsvWriter csv(path, {"k1", "k2", "abs_coeff"});
    const int M = f.grid.n_side;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            csv.row({static_cast<double>(f.grid.signed_index(a)),
                     static_cast<double>(f.grid.signed_index(b)), std::abs(f.at(a, b))});
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

inline json besov_report_json(const BesovReport& rep) {
    json j;
    j["s"] = rep.s;
    j["p"] = std::isinf(rep.p) ? json("inf") : json(rep.p);
    j["q"] = std::isinf(rep.q) ? json("inf") : json(rep.q);
    j["k_max"] = rep.k_max;
    j["block_values"] = rep.block_values;
    j["value"] = rep.value;
    return j;
}

inline json weighted_report_json(const WeightedNormReport& rep) {
    json j;
    j["s"] = rep.s;
    j["lambda"] = rep.lambda;
    j["M"] = rep.M;
    j["ell_max"] = rep.ell_max;
    j["shell_values"] = rep.shell_values;
    j["value"] = rep.value;
    return j;
}

// ---------------------------------------------------------------------------
// hashing (FNV-1a over file bytes) for machine-checkable determinism
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace sgsq
