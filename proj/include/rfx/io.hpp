#pragma once

/// @file
/// On-disk formats: the field binary container (32-byte header + little
/// endian doubles, row-major in (s1, s2, t)), CSV emitters and JSON
/// manifests. All writers are deterministic: fixed formatting, no
/// timestamps, fixed key order.

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfx/common.hpp"
#include "rfx/extremogram.hpp"
#include "rfx/lattice.hpp"

namespace rfx {

inline constexpr char kFieldMagic[8] = {'R', 'F', 'X', 'F', 'L', 'D', '0', '1'};
inline constexpr std::uint32_t kFieldVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

static_assert(sizeof(double) == 8);

inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }
}

inline double get_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw error("cannot open for writing: " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw error("write failed: " + path.string());
    }
}

} // namespace detail

/// Serializes a 3-d field. Header layout (32 bytes): magic "RFXFLD01",
/// u32 version, u32 n1, u32 n2, u32 n3, u32 k, 4 zero bytes; then
/// n1*n2*n3*k little-endian doubles, row-major in (s1, s2, t) with the
/// value component innermost.
inline void write_field_binary(const Field& field, const std::filesystem::path& path) {
    if (field.rank() != 3) {
        throw shape_error("the field container stores 3-d fields");
    }
    std::string bytes;
    bytes.reserve(32 + field.raw().size() * 8);
    bytes.append(kFieldMagic, 8);
    detail::put_u32(bytes, kFieldVersion);
    detail::put_u32(bytes, static_cast<std::uint32_t>(field.shape().dims[0]));
    detail::put_u32(bytes, static_cast<std::uint32_t>(field.shape().dims[1]));
    detail::put_u32(bytes, static_cast<std::uint32_t>(field.shape().dims[2]));
    detail::put_u32(bytes, static_cast<std::uint32_t>(field.value_dim()));
    detail::put_u32(bytes, 0);
    for (double v : field.raw()) {
        detail::put_f64(bytes, v);
    }
    detail::write_file(path, bytes);
}

inline Field read_field_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw error("cannot open field file: " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 32 || std::memcmp(bytes.data(), kFieldMagic, 8) != 0) {
        throw error("not a field container: " + path.string());
    }
    if (detail::get_u32(bytes.data() + 8) != kFieldVersion) {
        throw error("unsupported field container version in " + path.string());
    }
    LatticeShape shape;
    shape.dims = {static_cast<Index>(detail::get_u32(bytes.data() + 12)),
                  static_cast<Index>(detail::get_u32(bytes.data() + 16)),
                  static_cast<Index>(detail::get_u32(bytes.data() + 20))};
    shape.value_dim = static_cast<Index>(detail::get_u32(bytes.data() + 24));
    Field field(shape);
    const std::size_t expect = field.raw().size();
    if (bytes.size() != 32 + expect * 8) {
        throw error("truncated field container: " + path.string());
    }
    for (std::size_t i = 0; i < expect; ++i) {
        field.raw()[i] = detail::get_f64(bytes.data() + 32 + 8 * i);
    }
    return field;
}

/// Plain-text export for small lattices: one row per (s1, s2, t, components).
inline void write_field_csv(const Field& field, const std::filesystem::path& path) {
    if (field.rank() != 3) {
        throw shape_error("CSV export covers 3-d fields");
    }
    std::string out = "s1,s2,t";
    const Index k = field.value_dim();
    if (k == 1) {
        out += ",x\n";
    } else {
        for (Index c = 0; c < k; ++c) {
            out += ",x" + std::to_string(c);
        }
        out += "\n";
    }
    const auto& dims = field.shape().dims;
    for (Index s1 = 1; s1 <= dims[0]; ++s1) {
        for (Index s2 = 1; s2 <= dims[1]; ++s2) {
            for (Index t = 1; t <= dims[2]; ++t) {
                out += std::to_string(s1) + "," + std::to_string(s2) + "," +
                       std::to_string(t);
                const double* v = field.at3_vec(s1, s2, t);
                for (Index c = 0; c < k; ++c) {
                    out += "," + detail::format_double(v[c]);
                }
                out += "\n";
            }
        }
    }
    detail::write_file(path, out);
}

/// Extremogram table: one row per lag with the decomposition components.
inline void write_extremogram_csv(const ExtremogramEstimate& est,
                                  const std::filesystem::path& path) {
    std::string out = "h_s,h_t,rho_hat,block_sum,delta_term,R_num,R_den,denominator_count\n";
    for (Index h_s = 0; h_s <= est.lags.max_spatial; ++h_s) {
        for (Index h_t = 0; h_t <= est.lags.max_temporal; ++h_t) {
            const std::size_t l = est.lags.flat(h_s, h_t);
            out += std::to_string(h_s) + "," + std::to_string(h_t) + "," +
                   detail::format_double(est.rho[l]) + "," +
                   detail::format_double(est.has_components ? est.block_sum[l] : 0.0) +
                   "," +
                   detail::format_double(est.has_components ? est.delta_term[l] : 0.0) +
                   "," +
                   detail::format_double(est.has_components ? est.r_num[l] : 0.0) + "," +
                   detail::format_double(est.has_components ? est.r_den : 0.0) + "," +
                   std::to_string(est.denominator_count) + "\n";
        }
    }
    detail::write_file(path, out);
}

/// Per-lag replicate samples for external plotting: one row per replicate.
inline void write_samples_csv(const LagGrid& lags,
                              const std::vector<std::vector<double>>& samples,
                              const std::filesystem::path& path) {
    std::string out = "replicate";
    for (Index h_s = 0; h_s <= lags.max_spatial; ++h_s) {
        for (Index h_t = 0; h_t <= lags.max_temporal; ++h_t) {
            out += ",hs" + std::to_string(h_s) + "_ht" + std::to_string(h_t);
        }
    }
    out += "\n";
    const std::size_t reps = samples.empty() ? 0 : samples.front().size();
    for (std::size_t b = 0; b < reps; ++b) {
        out += std::to_string(b);
        for (std::size_t l = 0; l < samples.size(); ++l) {
            out += "," + detail::format_double(samples[l][b]);
        }
        out += "\n";
    }
    detail::write_file(path, out);
}

inline void write_json(const nlohmann::ordered_json& j,
                       const std::filesystem::path& path) {
    detail::write_file(path, j.dump(2) + "\n");
}

} // namespace rfx
