#ifndef LDFA_TEST_HELPERS_HPP
#define LDFA_TEST_HELPERS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "ldfa/numerics.hpp"

namespace testutil {

inline ldfa::Matrix random_matrix(ldfa::Rng& rng, ldfa::Index rows, ldfa::Index cols, double lo,
                                  double hi) {
    ldfa::Matrix m(rows, cols);
    for (ldfa::Index i = 0; i < rows; ++i) {
        for (ldfa::Index j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(lo, hi);
        }
    }
    return m;
}

// central finite differences against an analytic gradient block; params and
// grads share storage layout, so linear indexing walks them in step
template <typename LossFn, typename M>
double fd_max_rel_err(LossFn&& loss, M& param, const M& grad, double step = 1e-5) {
    double worst = 0.0;
    for (ldfa::Index t = 0; t < param.size(); ++t) {
        double orig = param.data()[t];
        param.data()[t] = orig + step;
        double lp = loss();
        param.data()[t] = orig - step;
        double lm = loss();
        param.data()[t] = orig;
        double fd = (lp - lm) / (2.0 * step);
        double an = grad.data()[t];
        double denom = std::max(1e-8, std::abs(fd) + std::abs(an));
        worst = std::max(worst, std::abs(an - fd) / denom);
    }
    return worst;
}

struct LabeledData {
    ldfa::Matrix x;  // D x N
    std::vector<std::string> labels;
};

// three well-separated spherical Gaussians in 10-D, sampled with Box-Muller
// from the library's deterministic uniform stream
inline LabeledData make_gaussians(ldfa::Index per_class, std::uint64_t seed, double spread = 8.0,
                                  double sigma = 0.5) {
    const ldfa::Index dim = 10;
    const int classes = 3;
    ldfa::Rng rng(seed);
    LabeledData out;
    out.x.resize(dim, per_class * classes);
    ldfa::Index col = 0;
    for (int c = 0; c < classes; ++c) {
        ldfa::Vector center = ldfa::Vector::Zero(dim);
        center(c) = spread;
        center(c + 3) = -0.5 * spread;
        for (ldfa::Index s = 0; s < per_class; ++s, ++col) {
            for (ldfa::Index d = 0; d < dim; ++d) {
                double u1 = 1.0 - rng.uniform();
                double u2 = rng.uniform();
                double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
                out.x(d, col) = center(d) + sigma * z;
            }
            out.labels.push_back(std::to_string(c));
        }
    }
    return out;
}

struct SwissRoll {
    ldfa::Matrix x;       // 3 x N ambient coordinates
    ldfa::Matrix params;  // 2 x N ground truth (arc length, height)
};

inline double spiral_arc_length(double t) {
    return 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t));
}

// three-quarter turn of an Archimedean roll; proportions chosen so the sheet
// is roughly square when unrolled and never comes close to touching itself
inline SwissRoll make_swiss_roll(ldfa::Index n, std::uint64_t seed) {
    const double t0 = 1.5 * M_PI;
    const double t1 = 3.0 * M_PI;
    const double height = 33.0;
    ldfa::Rng rng(seed);
    SwissRoll roll;
    roll.x.resize(3, n);
    roll.params.resize(2, n);
    for (ldfa::Index j = 0; j < n; ++j) {
        double t = t0 + (t1 - t0) * rng.uniform();
        double h = height * rng.uniform();
        roll.x(0, j) = t * std::cos(t);
        roll.x(1, j) = h;
        roll.x(2, j) = t * std::sin(t);
        roll.params(0, j) = spiral_arc_length(t) - spiral_arc_length(t0);
        roll.params(1, j) = h;
    }
    return roll;
}

// best affine fit of targets from embedding, as a fraction of the centered
// target norm; 0 means the embedding is an exact affine image of the truth
inline double affine_residual(const ldfa::Matrix& targets, const ldfa::Matrix& embedding) {
    const ldfa::Index n = embedding.cols();
    ldfa::Matrix ea(embedding.rows() + 1, n);
    ea.topRows(embedding.rows()) = embedding;
    ea.row(embedding.rows()).setOnes();
    ldfa::Matrix coef = targets * ldfa::pseudoinverse(ea);
    ldfa::Matrix centered = targets.colwise() - ldfa::Vector(targets.rowwise().mean());
    return (targets - coef * ea).norm() / centered.norm();
}

}  // namespace testutil

#endif
