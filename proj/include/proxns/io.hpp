#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "proxns/core.hpp"

namespace proxns {

/// Images on disk: flat little-endian real64 .bin plus a .json sidecar with
/// shape and dtype. The sidecar path is the bin path with ".json" appended
/// to the stem (image.bin -> image.json).
inline std::filesystem::path sidecar_path(const std::filesystem::path& bin_path) {
    std::filesystem::path p = bin_path;
    p.replace_extension(".json");
    return p;
}

inline void write_image(const std::filesystem::path& bin_path, const ImageVector& image) {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw std::runtime_error("write_image: cannot open " + bin_path.string());
    out.write(reinterpret_cast<const char*>(image.values().data()),
              static_cast<std::streamsize>(image.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write_image: write failed for " + bin_path.string());

    nlohmann::json meta{{"rows", image.rows()},
                        {"cols", image.cols()},
                        {"dtype", "float64"},
                        {"byte_order", "little"},
                        {"layout", "row-major"}};
    std::ofstream side(sidecar_path(bin_path));
    if (!side) throw std::runtime_error("write_image: cannot open sidecar for " + bin_path.string());
    side << meta.dump(2) << "\n";
}

inline ImageVector read_image(const std::filesystem::path& bin_path) {
    std::ifstream side(sidecar_path(bin_path));
    if (!side) throw std::invalid_argument("read_image: missing sidecar for " + bin_path.string());
    nlohmann::json meta = nlohmann::json::parse(side);
    const auto rows = meta.at("rows").get<std::size_t>();
    const auto cols = meta.at("cols").get<std::size_t>();
    if (meta.value("dtype", "float64") != std::string("float64"))
        throw std::invalid_argument("read_image: unsupported dtype in sidecar");

    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw std::invalid_argument("read_image: cannot open " + bin_path.string());
    std::vector<double> data(rows * cols);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != data.size() * sizeof(double))
        throw std::invalid_argument("read_image: truncated file " + bin_path.string());
    return ImageVector(std::move(data), rows, cols);
}

/// Plain CSV export (one row per image row) for plotting.
inline void write_image_csv(const std::filesystem::path& path, const ImageVector& image) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_image_csv: cannot open " + path.string());
    out.precision(17);
    for (std::size_t r = 0; r < image.rows(); ++r) {
        for (std::size_t c = 0; c < image.cols(); ++c) {
            out << image.at(r, c);
            out << (c + 1 == image.cols() ? '\n' : ',');
        }
    }
}

/// FNV-1a over raw bytes; used to fingerprint the simulated observation so
/// model comparisons can verify they saw the same data.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace proxns
