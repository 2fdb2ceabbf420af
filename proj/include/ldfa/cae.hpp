#ifndef LDFA_CAE_HPP
#define LDFA_CAE_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ldfa/numerics.hpp"

namespace ldfa {

// One contractive auto-encoder layer with tied weights: the encoder is
// sigmoid(W x + b), the decoder sigmoid(W^T h + c).
struct CaeParams {
    Matrix w;  // d_out x d_in
    Vector b;  // d_out
    Vector c;  // d_in
};

struct TrainConfig {
    double lambda = 0.1;
    double learning_rate = 0.1;
    int epochs = 200;
    std::uint64_t seed = 0;
    double init_scale = 0.05;
};

struct CaeGradient {
    Matrix dw;
    Vector db;
    Vector dc;
};

inline Matrix encode(const CaeParams& p, const Matrix& x) {
    if (x.rows() != p.w.cols()) {
        throw std::invalid_argument("encode: input rows do not match weight columns");
    }
    return sigmoid((p.w * x).colwise() + p.b);
}

inline Matrix decode(const CaeParams& p, const Matrix& h) {
    if (h.rows() != p.w.rows()) {
        throw std::invalid_argument("decode: code rows do not match weight rows");
    }
    return sigmoid((p.w.transpose() * h).colwise() + p.c);
}

// reconstruction error plus the contractive penalty
// ||X - dec(enc(X))||_F^2 + lambda * trace(W^T A A^T W), A = H (1-H)
inline double cae_loss(const CaeParams& p, const Matrix& x, double lambda) {
    Matrix h = encode(p, x);
    Matrix xr = decode(p, h);
    Matrix a = sigmoid_derivative_factor(h);
    return (xr - x).squaredNorm() + lambda * (a.transpose() * p.w).squaredNorm();
}

// Analytic gradient of cae_loss. W enters three times: encoder, tied decoder,
// and the penalty; the terms below account for each path.
inline CaeGradient cae_gradient(const CaeParams& p, const Matrix& x, double lambda) {
    Matrix h = encode(p, x);
    Matrix xr = decode(p, h);
    Matrix a = sigmoid_derivative_factor(h);
    Matrix r = xr - x;
    Matrix gy = 2.0 * (r.array() * xr.array() * (1.0 - xr.array())).matrix();
    Matrix wta = p.w.transpose() * a;              // d_in x n
    Matrix gh = p.w * gy;
    gh.array() += 2.0 * lambda * (p.w * wta).array() * (1.0 - 2.0 * h.array());
    Matrix gz = (gh.array() * a.array()).matrix();
    CaeGradient g;
    g.dw = gz * x.transpose() + h * gy.transpose() + 2.0 * lambda * (a * wta.transpose());
    g.db = gz.rowwise().sum();
    g.dc = gy.rowwise().sum();
    return g;
}

namespace detail {

inline Matrix uniform_matrix(Rng& rng, Index rows, Index cols, double scale) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(-scale, scale);
        }
    }
    return m;
}

inline void check_unit_interval(const Matrix& x, const char* who) {
    if (x.size() > 0 && (x.minCoeff() < 0.0 || x.maxCoeff() > 1.0)) {
        throw std::invalid_argument(std::string(who) + ": input entries must lie in [0, 1]");
    }
}

}  // namespace detail

// Full-batch gradient descent from a seeded uniform initialization. The
// history, when requested, holds the initial loss followed by the loss after
// each epoch.
inline CaeParams train_cae(const Matrix& x, Index d_out, const TrainConfig& cfg,
                           std::vector<double>* loss_history = nullptr) {
    if (x.cols() < 1) {
        throw std::invalid_argument("train_cae: no samples");
    }
    detail::check_unit_interval(x, "train_cae");
    if (cfg.epochs < 1) {
        throw std::invalid_argument("train_cae: epochs must be at least 1");
    }
    Rng rng(cfg.seed);
    CaeParams p;
    p.w = detail::uniform_matrix(rng, d_out, x.rows(), cfg.init_scale);
    p.b = Vector::Zero(d_out);
    p.c = Vector::Zero(x.rows());
    if (loss_history) {
        loss_history->clear();
        loss_history->push_back(cae_loss(p, x, cfg.lambda));
    }
    for (int e = 0; e < cfg.epochs; ++e) {
        CaeGradient g = cae_gradient(p, x, cfg.lambda);
        p.w -= cfg.learning_rate * g.dw;
        p.b -= cfg.learning_rate * g.db;
        p.c -= cfg.learning_rate * g.dc;
        if (loss_history) {
            loss_history->push_back(cae_loss(p, x, cfg.lambda));
        }
    }
    return p;
}

}  // namespace ldfa

#endif
