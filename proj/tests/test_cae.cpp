#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "ldfa/cae.hpp"

using ldfa::CaeGradient;
using ldfa::CaeParams;
using ldfa::Index;
using ldfa::Matrix;
using ldfa::TrainConfig;
using ldfa::Vector;

namespace {

CaeParams zero_params(Index d_out, Index d_in) {
    CaeParams p;
    p.w = Matrix::Zero(d_out, d_in);
    p.b = Vector::Zero(d_out);
    p.c = Vector::Zero(d_in);
    return p;
}

}  // namespace

TEST_CASE("encode on known parameter settings", "[cae]") {
    ldfa::Rng rng(8);
    Matrix x = testutil::random_matrix(rng, 3, 5, 0.0, 1.0);
    CaeParams zero = zero_params(4, 3);
    Matrix h = ldfa::encode(zero, x);
    REQUIRE(h.rows() == 4);
    REQUIRE(h.cols() == 5);
    CHECK((h.array() - 0.5).abs().maxCoeff() == 0.0);

    CaeParams scalar = zero_params(1, 1);
    scalar.w(0, 0) = std::log(3.0);
    Matrix one(1, 1);
    one(0, 0) = 1.0;
    CHECK(ldfa::encode(scalar, one)(0, 0) == Catch::Approx(0.75).margin(1e-12));

    // elementwise oracle with explicit loops
    CaeParams p;
    p.w = testutil::random_matrix(rng, 4, 3, -1.0, 1.0);
    p.b = testutil::random_matrix(rng, 4, 1, -1.0, 1.0).col(0);
    p.c = Vector::Zero(3);
    Matrix hr = ldfa::encode(p, x);
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 5; ++j) {
            double z = p.b(i);
            for (Index r = 0; r < 3; ++r) {
                z += p.w(i, r) * x(r, j);
            }
            CHECK(hr(i, j) == Catch::Approx(ldfa::sigmoid(z)).margin(1e-14));
        }
    }

    CHECK_THROWS_AS(ldfa::encode(p, Matrix::Zero(2, 5)), std::invalid_argument);
}

TEST_CASE("decode mirrors the tied encoder", "[cae]") {
    ldfa::Rng rng(9);
    CaeParams zero = zero_params(3, 4);
    Matrix h = testutil::random_matrix(rng, 3, 6, 0.0, 1.0);
    Matrix xr = ldfa::decode(zero, h);
    REQUIRE(xr.rows() == 4);
    CHECK((xr.array() - 0.5).abs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(ldfa::decode(zero, Matrix::Zero(4, 6)), std::invalid_argument);
}

TEST_CASE("saturated tied autoencoder approximately reconstructs binary input", "[cae]") {
    // with W = s*I and centered biases the map rounds entries toward {0,1},
    // so inputs already near the corners come back nearly unchanged
    const Index d = 3;
    const double s = 50.0;
    CaeParams p;
    p.w = s * Matrix::Identity(d, d);
    p.b = Vector::Constant(d, -0.5 * s);
    p.c = Vector::Constant(d, -0.5 * s);

    Matrix x(d, 2);
    x << 0.02, 0.98,
         0.98, 0.02,
         0.98, 0.98;
    Matrix xr = ldfa::decode(p, ldfa::encode(p, x));
    CHECK((xr - x).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("cae_loss closed-form cases", "[cae]") {
    // all-0.5 input with zero weights reconstructs exactly, so the loss is 0
    CaeParams zero = zero_params(2, 3);
    Matrix half = Matrix::Constant(3, 4, 0.5);
    CHECK(ldfa::cae_loss(zero, half, 0.7) == 0.0);

    // scalar case: x=1 reconstructs to 0.5, squared error 0.25
    CaeParams scalar = zero_params(1, 1);
    Matrix one(1, 1);
    one(0, 0) = 1.0;
    CHECK(ldfa::cae_loss(scalar, one, 0.0) == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("cae_loss matches a scalar reimplementation", "[cae]") {
    ldfa::Rng rng(21);
    const Index d_in = 4;
    const Index d_out = 3;
    const Index n = 6;
    CaeParams p;
    p.w = testutil::random_matrix(rng, d_out, d_in, -0.8, 0.8);
    p.b = testutil::random_matrix(rng, d_out, 1, -0.3, 0.3).col(0);
    p.c = testutil::random_matrix(rng, d_in, 1, -0.3, 0.3).col(0);
    Matrix x = testutil::random_matrix(rng, d_in, n, 0.0, 1.0);
    const double lambda = 0.1;

    // element-by-element recomputation of both loss terms
    double recon = 0.0;
    Matrix h(d_out, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < d_out; ++i) {
            double z = p.b(i);
            for (Index r = 0; r < d_in; ++r) {
                z += p.w(i, r) * x(r, j);
            }
            h(i, j) = ldfa::sigmoid(z);
        }
        for (Index r = 0; r < d_in; ++r) {
            double z = p.c(r);
            for (Index i = 0; i < d_out; ++i) {
                z += p.w(i, r) * h(i, j);
            }
            double diff = ldfa::sigmoid(z) - x(r, j);
            recon += diff * diff;
        }
    }
    double penalty = 0.0;
    for (Index j = 0; j < n; ++j) {
        for (Index r = 0; r < d_in; ++r) {
            double dot = 0.0;
            for (Index i = 0; i < d_out; ++i) {
                dot += h(i, j) * (1.0 - h(i, j)) * p.w(i, r);
            }
            penalty += dot * dot;
        }
    }
    double expected = recon + lambda * penalty;
    CHECK(ldfa::cae_loss(p, x, lambda) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cae_gradient agrees with finite differences", "[cae]") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        ldfa::Rng rng(seed);
        CaeParams p;
        p.w = testutil::random_matrix(rng, 3, 4, -0.6, 0.6);
        p.b = testutil::random_matrix(rng, 3, 1, -0.4, 0.4).col(0);
        p.c = testutil::random_matrix(rng, 4, 1, -0.4, 0.4).col(0);
        Matrix x = testutil::random_matrix(rng, 4, 5, 0.0, 1.0);
        const double lambda = 0.1;

        CaeGradient g = ldfa::cae_gradient(p, x, lambda);
        auto loss = [&] { return ldfa::cae_loss(p, x, lambda); };
        CHECK(testutil::fd_max_rel_err(loss, p.w, g.dw) < 1e-5);
        CHECK(testutil::fd_max_rel_err(loss, p.b, g.db) < 1e-5);
        CHECK(testutil::fd_max_rel_err(loss, p.c, g.dc) < 1e-5);
    }
}

TEST_CASE("gradient vanishes at a perfect reconstruction with zero penalty", "[cae]") {
    // zero weights on all-0.5 input: residual is identically zero and with
    // lambda=0 there is no other term, so every partial must be exactly zero
    CaeParams p = zero_params(2, 3);
    Matrix half = Matrix::Constant(3, 5, 0.5);
    CaeGradient g = ldfa::cae_gradient(p, half, 0.0);
    CHECK(g.dw.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.db.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.dc.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("long training approaches a stationary point", "[cae]") {
    ldfa::Rng rng(31);
    Matrix x = testutil::random_matrix(rng, 2, 4, 0.1, 0.9);
    TrainConfig cfg;
    cfg.lambda = 0.05;
    cfg.learning_rate = 0.3;
    cfg.epochs = 40000;
    cfg.seed = 7;
    CaeParams p = ldfa::train_cae(x, 2, cfg);
    CaeGradient g = ldfa::cae_gradient(p, x, cfg.lambda);
    double norm = std::sqrt(g.dw.squaredNorm() + g.db.squaredNorm() + g.dc.squaredNorm());
    CHECK(norm < 1e-4);
}

TEST_CASE("train_cae reduces the loss and records history", "[cae]") {
    ldfa::Rng rng(55);
    Matrix x = testutil::random_matrix(rng, 10, 20, 0.0, 1.0);
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.seed = 11;
    std::vector<double> history;
    ldfa::train_cae(x, 4, cfg, &history);
    REQUIRE(history.size() == 501);
    CHECK(history.back() < history.front());
    for (double v : history) {
        CHECK(std::isfinite(v));
    }
}

TEST_CASE("train_cae is seed deterministic", "[cae]") {
    ldfa::Rng rng(66);
    Matrix x = testutil::random_matrix(rng, 5, 8, 0.0, 1.0);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.seed = 123;
    CaeParams a = ldfa::train_cae(x, 3, cfg);
    CaeParams b = ldfa::train_cae(x, 3, cfg);
    CHECK((a.w - b.w).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.b - b.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.c - b.c).cwiseAbs().maxCoeff() == 0.0);

    cfg.seed = 124;
    CaeParams c = ldfa::train_cae(x, 3, cfg);
    CHECK((a.w - c.w).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("train_cae validates its input", "[cae]") {
    TrainConfig cfg;
    Matrix bad(2, 2);
    bad << 0.1, 1.2, 0.3, 0.4;
    CHECK_THROWS_AS(ldfa::train_cae(bad, 2, cfg), std::invalid_argument);

    Matrix neg(1, 1);
    neg(0, 0) = -0.01;
    CHECK_THROWS_AS(ldfa::train_cae(neg, 1, cfg), std::invalid_argument);

    CHECK_THROWS_AS(ldfa::train_cae(Matrix(2, 0), 1, cfg), std::invalid_argument);

    TrainConfig none;
    none.epochs = 0;
    Matrix ok = Matrix::Constant(2, 3, 0.5);
    CHECK_THROWS_AS(ldfa::train_cae(ok, 1, none), std::invalid_argument);
}
