#ifndef LDFA_SCATTER_SVG_HPP
#define LDFA_SCATTER_SVG_HPP

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldfa/numerics.hpp"

namespace ldfa {

namespace detail {

inline const std::vector<std::string>& scatter_palette() {
    static const std::vector<std::string> colors = {
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return colors;
}

inline std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace detail

// First two embedding dimensions as an SVG scatter, one color per class, with
// a sidecar CSV holding the exact plotted coordinates. Identical input
// produces identical bytes.
inline void write_scatter(const Matrix& embedding, const std::vector<std::string>& labels,
                          const std::string& out_path) {
    if (embedding.rows() < 2) {
        throw std::invalid_argument(
            "write_scatter: embedding has fewer than 2 dimensions; refit with embedding_dim >= 2");
    }
    const Index n = embedding.cols();
    if (!labels.empty() && labels.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("write_scatter: label count does not match sample count");
    }
    std::vector<std::string> classes;
    std::map<std::string, std::size_t> class_index;
    if (!labels.empty()) {
        for (const std::string& lab : labels) {
            if (class_index.emplace(lab, 0).second) {
                classes.push_back(lab);
            }
        }
        std::sort(classes.begin(), classes.end());
        for (std::size_t i = 0; i < classes.size(); ++i) {
            class_index[classes[i]] = i;
        }
    }

    const double width = 640.0, height = 480.0;
    const double px0 = 45.0, px1 = width - 45.0, py0 = height - 40.0, py1 = 40.0;
    double xmin = embedding.row(0).minCoeff(), xmax = embedding.row(0).maxCoeff();
    double ymin = embedding.row(1).minCoeff(), ymax = embedding.row(1).maxCoeff();
    if (xmax == xmin) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax == ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    auto sx = [&](double x) { return px0 + (x - xmin) / (xmax - xmin) * (px1 - px0); };
    auto sy = [&](double y) { return py0 + (y - ymin) / (ymax - ymin) * (py1 - py0); };

    std::ofstream svg(out_path, std::ios::binary);
    if (!svg) {
        throw std::runtime_error("cannot write file: " + out_path);
    }
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    const auto& palette = detail::scatter_palette();
    for (Index j = 0; j < n; ++j) {
        std::string color = "#1f77b4";
        if (!labels.empty()) {
            color = palette[class_index[labels[static_cast<std::size_t>(j)]] % palette.size()];
        }
        svg << "<circle cx=\"" << detail::format_coord(sx(embedding(0, j))) << "\" cy=\""
            << detail::format_coord(sy(embedding(1, j))) << "\" r=\"3\" fill=\"" << color
            << "\" fill-opacity=\"0.75\"/>\n";
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
        double ly = 20.0 + 18.0 * static_cast<double>(i);
        svg << "<rect x=\"" << width - 150.0 << "\" y=\"" << detail::format_coord(ly - 9.0)
            << "\" width=\"12\" height=\"12\" fill=\"" << palette[i % palette.size()] << "\"/>\n";
        svg << "<text x=\"" << width - 132.0 << "\" y=\"" << detail::format_coord(ly + 2.0)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << classes[i] << "</text>\n";
    }
    svg << "</svg>\n";
    if (!svg) {
        throw std::runtime_error("write failed: " + out_path);
    }

    std::ofstream csv(out_path + ".csv", std::ios::binary);
    if (!csv) {
        throw std::runtime_error("cannot write file: " + out_path + ".csv");
    }
    char buf[64];
    for (Index j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", embedding(0, j));
        csv << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", embedding(1, j));
        csv << "," << buf;
        if (!labels.empty()) {
            csv << "," << labels[static_cast<std::size_t>(j)];
        }
        csv << "\n";
    }
}

}  // namespace ldfa

#endif
