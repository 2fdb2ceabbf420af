#ifndef LDFA_IO_HPP
#define LDFA_IO_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldfa/numerics.hpp"

namespace ldfa {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) {
        return "";
    }
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
    double value = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || tok.empty()) {
        throw std::runtime_error(path + ":" + std::to_string(line) + ": invalid numeric value '" +
                                 tok + "'");
    }
    return value;
}

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) {
        throw std::runtime_error(path + ": truncated header");
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace detail

// One sample per file row; returns samples as matrix columns. Blank lines are
// skipped, ragged or non-numeric rows are reported with their line number.
inline Matrix read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        std::vector<double> row;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = line.find(',', pos);
            std::string tok = detail::trim(
                comma == std::string::npos ? line.substr(pos) : line.substr(pos, comma - pos));
            row.push_back(detail::parse_double(tok, path, line_no));
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(width) + " columns, got " +
                                     std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Index>(width), static_cast<Index>(rows.size()));
    for (std::size_t j = 0; j < rows.size(); ++j) {
        for (std::size_t i = 0; i < width; ++i) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[j][i];
        }
    }
    return m;
}

// samples as rows, full double precision so a round trip is exact
inline void write_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path);
    }
    char buf[64];
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << (i > 0 ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

// one label per line, whitespace trimmed, blank lines skipped
inline std::vector<std::string> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = detail::trim(line);
        if (!t.empty()) {
            labels.push_back(t);
        }
    }
    return labels;
}

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

inline bool is_idx_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return false;
    }
    unsigned char buf[4] = {0xff, 0xff, 0xff, 0xff};
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) {
        return false;
    }
    std::uint32_t magic = (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
                          (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
    return magic == kIdxImageMagic || magic == kIdxLabelMagic;
}

// raw pixel intensities 0..255, one flattened image per column
inline Matrix read_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    if (detail::read_be32(in, path) != kIdxImageMagic) {
        throw std::runtime_error(path + ": not an image file (bad magic)");
    }
    std::uint32_t n = detail::read_be32(in, path);
    std::uint32_t rows = detail::read_be32(in, path);
    std::uint32_t cols = detail::read_be32(in, path);
    std::size_t pixels = std::size_t(rows) * cols;
    std::vector<unsigned char> buf(pixels);
    Matrix m(static_cast<Index>(pixels), static_cast<Index>(n));
    for (std::uint32_t j = 0; j < n; ++j) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (!in) {
            throw std::runtime_error(path + ": truncated image data at sample " + std::to_string(j));
        }
        for (std::size_t i = 0; i < pixels; ++i) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = static_cast<double>(buf[i]);
        }
    }
    return m;
}

inline std::vector<std::string> read_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    if (detail::read_be32(in, path) != kIdxLabelMagic) {
        throw std::runtime_error(path + ": not a label file (bad magic)");
    }
    std::uint32_t n = detail::read_be32(in, path);
    std::vector<unsigned char> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    if (!in) {
        throw std::runtime_error(path + ": truncated label data");
    }
    std::vector<std::string> labels;
    labels.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        labels.push_back(std::to_string(static_cast<int>(buf[i])));
    }
    return labels;
}

// Per-dimension affine map to [0, 1]. CSV data gets a fitted min-max range;
// IDX pixels always use the fixed 0..255 range. Constant dimensions map to
// 0.5. The fitted ranges are persisted with the model so queries are scaled
// exactly like the training data.
struct Normalization {
    Vector lo;
    Vector hi;

    Matrix apply(const Matrix& x) const {
        if (x.rows() != lo.size()) {
            throw std::invalid_argument("Normalization: dimension mismatch, expected " +
                                        std::to_string(lo.size()) + " features, got " +
                                        std::to_string(x.rows()));
        }
        Matrix out(x.rows(), x.cols());
        for (Index i = 0; i < x.rows(); ++i) {
            double span = hi(i) - lo(i);
            if (span == 0.0) {
                out.row(i).setConstant(0.5);
            } else {
                out.row(i) = (x.row(i).array() - lo(i)) / span;
            }
        }
        return out;
    }
};

inline Normalization fit_normalization(const Matrix& raw) {
    Normalization n;
    n.lo = raw.rowwise().minCoeff();
    n.hi = raw.rowwise().maxCoeff();
    return n;
}

inline Normalization pixel_normalization(Index d) {
    Normalization n;
    n.lo = Vector::Zero(d);
    n.hi = Vector::Constant(d, 255.0);
    return n;
}

struct Dataset {
    Matrix raw;  // D x N, before normalization
    std::vector<std::string> labels;
    bool from_idx = false;
};

// format sniffed from the leading magic bytes; anything that is not IDX parses
// as CSV
inline Dataset load_features(const std::string& path, const std::string& labels_path = "") {
    Dataset d;
    if (is_idx_file(path)) {
        d.raw = read_idx_images(path);
        d.from_idx = true;
    } else {
        d.raw = read_csv(path);
    }
    if (!labels_path.empty()) {
        d.labels = is_idx_file(labels_path) ? read_idx_labels(labels_path) : read_labels(labels_path);
        if (d.labels.size() != static_cast<std::size_t>(d.raw.cols())) {
            throw std::runtime_error("labels file has " + std::to_string(d.labels.size()) +
                                     " entries but feature file has " + std::to_string(d.raw.cols()) +
                                     " samples");
        }
    }
    return d;
}

}  // namespace ldfa

#endif
