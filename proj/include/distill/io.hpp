#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace distill {

/// Fixed-format double rendering used for all CSV output, so identical runs
/// produce byte-identical files.
inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

inline std::string fmt_int(long long v) { return std::to_string(v); }

/// Line-oriented CSV writer with a fixed column set.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out_(path, std::ios::binary), n_cols_(columns.size()) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
        write_cells(columns);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != n_cols_) {
            throw std::invalid_argument("csv row has " + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(n_cols_));
        }
        write_cells(cells);
    }

private:
    void write_cells(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_.put(',');
            out_ << cells[i];
        }
        out_.put('\n');
        if (!out_) throw std::runtime_error("csv write failed");
    }

    std::ofstream out_;
    std::size_t n_cols_;
};

/// Binary PPM (P6) export. Values are interpreted as RGB in [0, 1] and are
/// clamped at export time only; the in-memory pipeline never clamps.
inline void write_ppm(const std::string& path, int width, int height,
                      std::span<const double> image) {
    if (width < 1 || height < 1) throw std::invalid_argument("write_ppm: bad image size");
    if (image.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        throw std::invalid_argument("write_ppm: image size mismatch");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << "P6\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(image.size());
    for (double v : image) {
        const double c = std::clamp(v, 0.0, 1.0);
        bytes.push_back(static_cast<unsigned char>(std::lround(c * 255.0)));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("ppm write failed");
}

/// Renders an arbitrary-dimensional vector as a 1-pixel-tall grayscale P6
/// strip (used for snapshots of non-image generators).
inline void write_ppm_strip(const std::string& path, std::span<const double> values) {
    std::vector<double> rgb;
    rgb.reserve(values.size() * 3);
    for (double v : values) {
        rgb.push_back(v);
        rgb.push_back(v);
        rgb.push_back(v);
    }
    write_ppm(path, static_cast<int>(values.size()), 1, rgb);
}

}  // namespace distill
