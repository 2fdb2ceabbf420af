#ifndef LDFA_NUMERICS_HPP
#define LDFA_NUMERICS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ldfa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct SpectralResult {
    Vector eigenvalues;   // ascending
    Matrix eigenvectors;  // one unit-norm vector per column
};

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

inline Matrix sigmoid(const Matrix& z) {
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

// elementwise h*(1-h), the slope of the sigmoid expressed through its output
inline Matrix sigmoid_derivative_factor(const Matrix& h) {
    return h.array() * (1.0 - h.array());
}

// Moore-Penrose inverse via SVD. Singular values at or below tol*sigma_max are
// treated as zero; the zero matrix maps to a zero matrix of transposed shape.
inline Matrix pseudoinverse(const Matrix& a, double tol = 1e-12) {
    if (a.size() == 0) {
        throw std::invalid_argument("pseudoinverse: empty matrix");
    }
    if (tol < 0.0) {
        throw std::invalid_argument("pseudoinverse: negative tolerance");
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    double cutoff = sv.size() > 0 ? tol * sv(0) : 0.0;
    Vector inv = Vector::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) {
            inv(i) = 1.0 / sv(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// I - ee^T/m: symmetric, idempotent, annihilates constants
inline Matrix centering_matrix(Index m) {
    if (m < 1) {
        throw std::invalid_argument("centering_matrix: size must be at least 1");
    }
    Matrix t = Matrix::Identity(m, m);
    t.array() -= 1.0 / static_cast<double>(m);
    return t;
}

// d eigenvectors with smallest eigenvalues after discarding the `skip` smallest
inline SpectralResult smallest_eigenvectors(const Matrix& phi, Index d, Index skip) {
    if (phi.rows() != phi.cols()) {
        throw std::invalid_argument("smallest_eigenvectors: matrix not square");
    }
    const Index n = phi.rows();
    double asym = (phi - phi.transpose()).cwiseAbs().maxCoeff();
    if (asym >= 1e-10) {
        throw std::invalid_argument("smallest_eigenvectors: matrix not symmetric, residual " +
                                    std::to_string(asym));
    }
    if (d + skip > n) {
        throw std::invalid_argument("smallest_eigenvectors: d + skip exceeds dimension");
    }
    Matrix sym = 0.5 * (phi + phi.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("smallest_eigenvectors: eigensolver failed to converge");
    }
    SpectralResult out;
    out.eigenvalues = es.eigenvalues().segment(skip, d);
    out.eigenvectors = es.eigenvectors().middleCols(skip, d);
    return out;
}

// Deterministic uniform variates from mt19937_64. The generator itself is fully
// specified by the standard; std::uniform_real_distribution is not, so doubles
// are derived from the raw 64-bit stream directly.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound) {
        return gen_() % bound;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace ldfa

#endif
