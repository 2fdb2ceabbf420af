#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "ldfa/numerics.hpp"

using ldfa::Index;
using ldfa::Matrix;
using ldfa::Vector;

TEST_CASE("sigmoid matches closed-form values", "[numerics]") {
    CHECK(ldfa::sigmoid(0.0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(ldfa::sigmoid(std::log(3.0)) == Catch::Approx(0.75).margin(1e-12));
    CHECK(ldfa::sigmoid(-std::log(3.0)) == Catch::Approx(0.25).margin(1e-12));

    // symmetry and graceful saturation far into both tails
    for (double z : {-745.0, -50.0, -3.7, -0.2, 0.9, 17.0, 300.0, 745.0}) {
        double p = ldfa::sigmoid(z);
        double q = ldfa::sigmoid(-z);
        CHECK(std::isfinite(p));
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p + q == Catch::Approx(1.0).margin(1e-12));
    }
    CHECK(ldfa::sigmoid(745.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(ldfa::sigmoid(-745.0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("matrix sigmoid applies elementwise", "[numerics]") {
    ldfa::Rng rng(11);
    Matrix z = testutil::random_matrix(rng, 5, 7, -30.0, 30.0);
    Matrix h = ldfa::sigmoid(z);
    REQUIRE(h.rows() == 5);
    REQUIRE(h.cols() == 7);
    for (Index i = 0; i < z.rows(); ++i) {
        for (Index j = 0; j < z.cols(); ++j) {
            CHECK(h(i, j) == ldfa::sigmoid(z(i, j)));
        }
    }
}

TEST_CASE("sigmoid derivative factor", "[numerics]") {
    Matrix half = Matrix::Constant(3, 4, 0.5);
    CHECK((ldfa::sigmoid_derivative_factor(half).array() - 0.25).abs().maxCoeff() == 0.0);

    Matrix edges(1, 3);
    edges << 0.0, 1.0, 0.75;
    Matrix f = ldfa::sigmoid_derivative_factor(edges);
    CHECK(f(0, 0) == 0.0);
    CHECK(f(0, 1) == 0.0);
    CHECK(f(0, 2) == Catch::Approx(0.1875).margin(1e-15));

    // chain rule consistency: d/dz sigmoid(z) equals h*(1-h)
    ldfa::Rng rng(5);
    Matrix z = testutil::random_matrix(rng, 4, 4, -6.0, 6.0);
    Matrix h = ldfa::sigmoid(z);
    Matrix an = ldfa::sigmoid_derivative_factor(h);
    const double step = 1e-6;
    for (Index t = 0; t < z.size(); ++t) {
        double fd = (ldfa::sigmoid(z.data()[t] + step) - ldfa::sigmoid(z.data()[t] - step)) /
                    (2.0 * step);
        CHECK(an.data()[t] == Catch::Approx(fd).margin(1e-9));
    }
}

TEST_CASE("pseudoinverse on simple matrices", "[numerics]") {
    Matrix eye = Matrix::Identity(3, 3);
    CHECK((ldfa::pseudoinverse(eye) - eye).cwiseAbs().maxCoeff() < 1e-14);

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 2.0;
    Matrix pinv = ldfa::pseudoinverse(diag);
    CHECK(pinv(0, 0) == Catch::Approx(0.5).margin(1e-14));
    CHECK(std::abs(pinv(0, 1)) < 1e-14);
    CHECK(std::abs(pinv(1, 0)) < 1e-14);
    CHECK(std::abs(pinv(1, 1)) < 1e-14);

    Matrix zero = Matrix::Zero(3, 2);
    Matrix zp = ldfa::pseudoinverse(zero);
    REQUIRE(zp.rows() == 2);
    REQUIRE(zp.cols() == 3);
    CHECK(zp.cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(ldfa::pseudoinverse(Matrix()), std::invalid_argument);
    CHECK_THROWS_AS(ldfa::pseudoinverse(eye, -1.0), std::invalid_argument);
}

namespace {

double penrose_residual(const Matrix& a, const Matrix& p) {
    double worst = 0.0;
    worst = std::max(worst, (a * p * a - a).cwiseAbs().maxCoeff());
    worst = std::max(worst, (p * a * p - p).cwiseAbs().maxCoeff());
    Matrix ap = a * p;
    worst = std::max(worst, (ap - ap.transpose()).cwiseAbs().maxCoeff());
    Matrix pa = p * a;
    worst = std::max(worst, (pa - pa.transpose()).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace

TEST_CASE("pseudoinverse satisfies the Penrose conditions", "[numerics]") {
    ldfa::Rng rng(404);
    for (int trial = 0; trial < 6; ++trial) {
        Matrix tall = testutil::random_matrix(rng, 8, 3, -2.0, 2.0);
        Matrix wide = testutil::random_matrix(rng, 3, 8, -2.0, 2.0);
        Matrix square = testutil::random_matrix(rng, 5, 5, -2.0, 2.0);
        Matrix deficient = testutil::random_matrix(rng, 6, 2, -2.0, 2.0) *
                           testutil::random_matrix(rng, 2, 4, -2.0, 2.0);
        for (const Matrix& a : {tall, wide, square, deficient}) {
            CHECK(penrose_residual(a, ldfa::pseudoinverse(a)) < 1e-10);
        }
    }
}

TEST_CASE("centering matrix properties", "[numerics]") {
    Matrix t2 = ldfa::centering_matrix(2);
    CHECK(t2(0, 0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(t2(0, 1) == Catch::Approx(-0.5).margin(1e-15));
    CHECK(t2(1, 0) == Catch::Approx(-0.5).margin(1e-15));
    CHECK(t2(1, 1) == Catch::Approx(0.5).margin(1e-15));

    for (Index m : {Index(1), Index(3), Index(7)}) {
        Matrix t = ldfa::centering_matrix(m);
        CHECK((t * Vector::Ones(m)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((t * t - t).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((t - t.transpose()).cwiseAbs().maxCoeff() == 0.0);
        // spectrum is one zero plus m-1 ones
        Eigen::SelfAdjointEigenSolver<Matrix> es(t);
        CHECK(std::abs(es.eigenvalues()(0)) < 1e-12);
        for (Index i = 1; i < m; ++i) {
            CHECK(es.eigenvalues()(i) == Catch::Approx(1.0).margin(1e-12));
        }
    }

    CHECK_THROWS_AS(ldfa::centering_matrix(0), std::invalid_argument);
}

TEST_CASE("smallest_eigenvectors on a diagonal matrix", "[numerics]") {
    Matrix d = Vector::LinSpaced(3, 0.0, 2.0).asDiagonal();
    ldfa::SpectralResult r = ldfa::smallest_eigenvectors(d, 1, 1);
    REQUIRE(r.eigenvalues.size() == 1);
    CHECK(r.eigenvalues(0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(r.eigenvectors(1, 0)) == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::abs(r.eigenvectors(0, 0)) < 1e-12);
    CHECK(std::abs(r.eigenvectors(2, 0)) < 1e-12);
}

TEST_CASE("smallest_eigenvectors recovers the path graph spectrum", "[numerics]") {
    // Laplacian of the path on n vertices has eigenvalues 2 - 2cos(pi*k/n)
    // with eigenvectors v_k(j) = cos((j + 1/2) * pi * k / n), a classical
    // closed form that exercises the solver against hand-derivable values.
    const Index n = 5;
    Matrix lap = Matrix::Zero(n, n);
    for (Index j = 0; j + 1 < n; ++j) {
        lap(j, j) += 1.0;
        lap(j + 1, j + 1) += 1.0;
        lap(j, j + 1) -= 1.0;
        lap(j + 1, j) -= 1.0;
    }

    ldfa::SpectralResult r = ldfa::smallest_eigenvectors(lap, 2, 1);
    REQUIRE(r.eigenvalues.size() == 2);
    REQUIRE(r.eigenvectors.cols() == 2);

    for (Index k = 1; k <= 2; ++k) {
        double expected = 2.0 - 2.0 * std::cos(M_PI * static_cast<double>(k) / n);
        CHECK(r.eigenvalues(k - 1) == Catch::Approx(expected).margin(1e-10));

        Vector analytic(n);
        for (Index j = 0; j < n; ++j) {
            analytic(j) = std::cos((j + 0.5) * M_PI * static_cast<double>(k) / n);
        }
        analytic.normalize();
        double overlap = std::abs(analytic.dot(r.eigenvectors.col(k - 1)));
        CHECK(overlap == Catch::Approx(1.0).margin(1e-10));

        // eigenpair residual and unit norm
        Vector v = r.eigenvectors.col(k - 1);
        CHECK((lap * v - r.eigenvalues(k - 1) * v).norm() < 1e-8);
        CHECK(v.norm() == Catch::Approx(1.0).margin(1e-12));
    }
    // returned vectors are mutually orthogonal
    CHECK(std::abs(r.eigenvectors.col(0).dot(r.eigenvectors.col(1))) < 1e-10);
}

TEST_CASE("smallest_eigenvectors rejects malformed input", "[numerics]") {
    Matrix asym(2, 2);
    asym << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(ldfa::smallest_eigenvectors(asym, 1, 0), std::invalid_argument);

    Matrix rect = Matrix::Zero(2, 3);
    CHECK_THROWS_AS(ldfa::smallest_eigenvectors(rect, 1, 0), std::invalid_argument);

    Matrix eye = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(ldfa::smallest_eigenvectors(eye, 3, 1), std::invalid_argument);
    CHECK_NOTHROW(ldfa::smallest_eigenvectors(eye, 2, 1));
}

TEST_CASE("rng stream is deterministic and in range", "[numerics]") {
    ldfa::Rng a(123);
    ldfa::Rng b(123);
    ldfa::Rng c(124);
    bool diverged = false;
    for (int i = 0; i < 100; ++i) {
        double va = a.uniform();
        CHECK(va >= 0.0);
        CHECK(va < 1.0);
        CHECK(va == b.uniform());
        if (va != c.uniform()) {
            diverged = true;
        }
    }
    CHECK(diverged);

    ldfa::Rng d(7);
    for (int i = 0; i < 50; ++i) {
        double v = d.uniform(-2.0, 3.0);
        CHECK(v >= -2.0);
        CHECK(v < 3.0);
        CHECK(d.below(10) < 10);
    }
}
