#ifndef LDFA_ALIGNMENT_HPP
#define LDFA_ALIGNMENT_HPP

#include <stdexcept>
#include <vector>

#include "ldfa/numerics.hpp"
#include "ldfa/scae.hpp"

namespace ldfa {

struct AlignmentBlock {
    NeighborhoodIndex neighborhood;
    Matrix m;  // (k+1) x (k+1)
};

struct GlobalAlignment {
    Matrix phi;  // N x N, symmetric positive semidefinite
};

struct GlobalEmbedding {
    Matrix h;  // d x N, rows orthonormal
    bool degenerate_spectrum = false;
    double spectral_gap = 0.0;
};

// M_i = T (I - F^+ F): centering composed with the projector onto the
// orthogonal complement of the local feature row space
inline AlignmentBlock local_alignment_matrix(const LocalFeatureBlock& block, double tol = 1e-12) {
    if (block.features.size() == 0) {
        throw std::invalid_argument("local_alignment_matrix: empty feature block");
    }
    const Index m = block.features.cols();
    Matrix proj = Matrix::Identity(m, m) - pseudoinverse(block.features, tol) * block.features;
    AlignmentBlock out;
    out.neighborhood = block.neighborhood;
    out.m = centering_matrix(m) * proj;
    return out;
}

// least-squares affine map from local features to the centered global block;
// diagnostic only, the eigenproblem below never needs it explicitly
inline Matrix optimal_affine(const Matrix& h_global_block, const LocalFeatureBlock& block,
                             double tol = 1e-12) {
    if (h_global_block.cols() != block.features.cols()) {
        throw std::invalid_argument("optimal_affine: column counts differ");
    }
    const Index m = block.features.cols();
    return h_global_block * centering_matrix(m) * pseudoinverse(block.features, tol);
}

// Phi = sum_i S_i (M_i M_i^T) S_i^T, scatter-accumulated block by block in
// neighborhood order
inline GlobalAlignment assemble_phi(const std::vector<AlignmentBlock>& blocks, Index n) {
    GlobalAlignment g;
    g.phi = Matrix::Zero(n, n);
    for (const AlignmentBlock& blk : blocks) {
        const std::vector<Index>& mem = blk.neighborhood.members;
        for (Index idx : mem) {
            if (idx < 0 || idx >= n) {
                throw std::invalid_argument("assemble_phi: member index out of range");
            }
        }
        Matrix gram = blk.m * blk.m.transpose();
        for (std::size_t a = 0; a < mem.size(); ++a) {
            for (std::size_t b = 0; b < mem.size(); ++b) {
                g.phi(mem[a], mem[b]) += gram(static_cast<Index>(a), static_cast<Index>(b));
            }
        }
    }
    return g;
}

namespace detail {

// flip rows so the largest-magnitude entry of each is positive; first
// occurrence wins on magnitude ties
inline void fix_row_signs(Matrix& h) {
    for (Index r = 0; r < h.rows(); ++r) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index c = 0; c < h.cols(); ++c) {
            double a = std::abs(h(r, c));
            if (a > best_abs) {
                best_abs = a;
                best = c;
            }
        }
        if (h(r, best) < 0.0) {
            h.row(r) = -h.row(r);
        }
    }
}

}  // namespace detail

// Smallest nontrivial eigenvectors of Phi form the embedding rows. The
// constant near-null eigenvector is dropped; a vanishing gap between it and
// the selected band is reported as a degeneracy instead of an error.
inline GlobalEmbedding solve_embedding(const GlobalAlignment& g, Index d) {
    const Index n = g.phi.rows();
    if (d < 1 || d > n - 1) {
        throw std::invalid_argument("solve_embedding: need 1 <= d <= N-1");
    }
    SpectralResult eig = smallest_eigenvectors(g.phi, d + 1, 0);
    GlobalEmbedding out;
    out.h = eig.eigenvectors.middleCols(1, d).transpose();
    detail::fix_row_signs(out.h);
    out.spectral_gap = eig.eigenvalues(1) - eig.eigenvalues(0);
    out.degenerate_spectrum = out.spectral_gap < 1e-12;
    return out;
}

}  // namespace ldfa

#endif
