#ifndef LDFA_EVALUATION_HPP
#define LDFA_EVALUATION_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldfa/alignment.hpp"
#include "ldfa/neighborhoods.hpp"
#include "ldfa/numerics.hpp"
#include "ldfa/scae.hpp"

namespace ldfa {

struct LabeledEmbedding {
    Matrix points;  // d x N
    std::vector<std::string> labels;
};

struct ClusteringResult {
    std::vector<int> assignment;
    Matrix centroids;  // d x n_clusters
    double inertia = 0.0;
};

namespace detail {

inline Index nearest_centroid(const Matrix& centroids, const Vector& p) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.cols(); ++c) {
        double d = (centroids.col(c) - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// greedy farthest-point seeding from a random start
inline Matrix seed_centroids(const Matrix& points, Index n_clusters, Index start) {
    const Index n = points.cols();
    Matrix centroids(points.rows(), n_clusters);
    centroids.col(0) = points.col(start);
    Vector min_d = Vector::Constant(n, std::numeric_limits<double>::infinity());
    for (Index c = 1; c < n_clusters; ++c) {
        for (Index j = 0; j < n; ++j) {
            double d = (points.col(j) - centroids.col(c - 1)).squaredNorm();
            if (d < min_d(j)) {
                min_d(j) = d;
            }
        }
        Index far = 0;
        double far_d = -1.0;
        for (Index j = 0; j < n; ++j) {
            if (min_d(j) > far_d) {
                far_d = min_d(j);
                far = j;
            }
        }
        centroids.col(c) = points.col(far);
    }
    return centroids;
}

}  // namespace detail

// Best-of-restarts Lloyd iteration, run to an assignment fixed point or 300
// iterations. Ties go to the lowest centroid, restart, or point index, so a
// fixed seed reproduces the result exactly. The optional trace records the
// inertia after each iteration of each restart.
inline ClusteringResult kmeans(const Matrix& points, Index n_clusters, Index restarts,
                               std::uint64_t seed,
                               std::vector<std::vector<double>>* trace = nullptr) {
    const Index n = points.cols();
    if (n_clusters < 1 || n_clusters > n) {
        throw std::invalid_argument("kmeans: n_clusters must lie in [1, N]");
    }
    if (restarts < 1) {
        throw std::invalid_argument("kmeans: need at least one restart");
    }
    if (trace) {
        trace->clear();
    }
    Rng rng(seed);
    ClusteringResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < restarts; ++r) {
        Index start = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        Matrix centroids = detail::seed_centroids(points, n_clusters, start);
        std::vector<int> assignment(static_cast<std::size_t>(n), -1);
        std::vector<double> restart_trace;
        for (int iter = 0; iter < 300; ++iter) {
            bool changed = false;
            for (Index j = 0; j < n; ++j) {
                int a = static_cast<int>(detail::nearest_centroid(centroids, points.col(j)));
                if (a != assignment[static_cast<std::size_t>(j)]) {
                    assignment[static_cast<std::size_t>(j)] = a;
                    changed = true;
                }
            }
            // empty clusters keep their previous centroid
            Matrix sums = Matrix::Zero(points.rows(), n_clusters);
            std::vector<Index> counts(static_cast<std::size_t>(n_clusters), 0);
            for (Index j = 0; j < n; ++j) {
                sums.col(assignment[static_cast<std::size_t>(j)]) += points.col(j);
                ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(j)])];
            }
            for (Index c = 0; c < n_clusters; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    centroids.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
                }
            }
            double inertia = 0.0;
            for (Index j = 0; j < n; ++j) {
                inertia += (points.col(j) - centroids.col(assignment[static_cast<std::size_t>(j)])).squaredNorm();
            }
            restart_trace.push_back(inertia);
            if (!changed) {
                break;
            }
        }
        double inertia = restart_trace.empty() ? 0.0 : restart_trace.back();
        if (trace) {
            trace->push_back(std::move(restart_trace));
        }
        if (inertia < best.inertia) {
            best.assignment = assignment;
            best.centroids = centroids;
            best.inertia = inertia;
        }
    }
    return best;
}

// fraction of samples belonging to the majority true class of their cluster
inline double purity(const std::vector<int>& assignment, const std::vector<std::string>& labels) {
    if (assignment.empty() || labels.empty()) {
        throw std::invalid_argument("purity: empty input");
    }
    if (assignment.size() != labels.size()) {
        throw std::invalid_argument("purity: assignment and label counts differ");
    }
    std::map<int, std::map<std::string, Index>> counts;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        ++counts[assignment[i]][labels[i]];
    }
    Index correct = 0;
    for (const auto& [cluster, by_label] : counts) {
        Index best = 0;
        for (const auto& [label, cnt] : by_label) {
            best = std::max(best, cnt);
        }
        correct += best;
    }
    return static_cast<double>(correct) / static_cast<double>(assignment.size());
}

// 1-NN accuracy with Euclidean distances, ties to the lowest training index
inline double knn_classify(const LabeledEmbedding& train, const LabeledEmbedding& test) {
    if (train.points.cols() == 0) {
        throw std::invalid_argument("knn_classify: empty training set");
    }
    if (train.points.rows() != test.points.rows()) {
        throw std::invalid_argument("knn_classify: dimension mismatch between train and test");
    }
    if (train.labels.size() != static_cast<std::size_t>(train.points.cols()) ||
        test.labels.size() != static_cast<std::size_t>(test.points.cols())) {
        throw std::invalid_argument("knn_classify: label count does not match point count");
    }
    if (test.points.cols() == 0) {
        return 1.0;
    }
    Index correct = 0;
    for (Index j = 0; j < test.points.cols(); ++j) {
        Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < train.points.cols(); ++i) {
            double d = (train.points.col(i) - test.points.col(j)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (train.labels[static_cast<std::size_t>(best)] == test.labels[static_cast<std::size_t>(j)]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(test.points.cols());
}

// rows of the result are the top-d principal component scores of the
// mean-centered data
inline GlobalEmbedding pca_project(const Matrix& x, Index d) {
    const Index rank_cap = std::min(x.rows(), x.cols());
    if (d < 1 || d > rank_cap) {
        throw std::invalid_argument("pca_project: d must lie in [1, min(D, N)]");
    }
    Vector mean = x.rowwise().mean();
    Matrix centered = x.colwise() - mean;
    Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    GlobalEmbedding out;
    out.h = Matrix(d, x.cols());
    for (Index i = 0; i < d; ++i) {
        out.h.row(i) = svd.singularValues()(i) * svd.matrixV().col(i).transpose();
    }
    detail::fix_row_signs(out.h);
    return out;
}

// Local PCA coordinates of each centered neighborhood, packaged exactly like
// SCAE feature blocks so the alignment stage consumes them unchanged.
inline std::vector<LocalFeatureBlock> ltsa_mode_features(const Matrix& x, const NeighborhoodSet& nbrs,
                                                         Index d_local) {
    if (d_local < 1 || d_local > nbrs.k) {
        throw std::invalid_argument("ltsa_mode_features: need 1 <= d_local <= k");
    }
    std::vector<LocalFeatureBlock> blocks;
    blocks.reserve(nbrs.items.size());
    for (const NeighborhoodIndex& nbr : nbrs.items) {
        Matrix xi = gather(x, nbr);
        Vector mean = xi.rowwise().mean();
        Matrix centered = xi.colwise() - mean;
        LocalFeatureBlock block;
        block.neighborhood = nbr;
        Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.singularValues().size() == 0 || svd.singularValues()(0) <= 1e-12) {
            block.features = Matrix::Zero(d_local, xi.cols());
            block.degenerate = true;
        } else {
            block.features = Matrix(d_local, xi.cols());
            for (Index i = 0; i < d_local; ++i) {
                block.features.row(i) = svd.singularValues()(i) * svd.matrixV().col(i).transpose();
            }
            detail::fix_row_signs(block.features);
        }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

// per-class shuffled split; class groups follow first appearance order
inline std::pair<std::vector<Index>, std::vector<Index>> stratified_split(
    const std::vector<std::string>& labels, double train_fraction, std::uint64_t seed) {
    if (labels.empty()) {
        throw std::invalid_argument("stratified_split: no labels");
    }
    if (train_fraction <= 0.0 || train_fraction >= 1.0) {
        throw std::invalid_argument("stratified_split: fraction must lie in (0, 1)");
    }
    std::vector<std::string> order;
    std::map<std::string, std::vector<Index>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = groups.try_emplace(labels[i]);
        if (inserted) {
            order.push_back(labels[i]);
        }
        it->second.push_back(static_cast<Index>(i));
    }
    Rng rng(seed);
    std::vector<Index> train_idx;
    std::vector<Index> test_idx;
    for (const std::string& label : order) {
        std::vector<Index>& g = groups[label];
        for (std::size_t i = g.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(g[i - 1], g[j]);
        }
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(g.size())));
        n_train = std::min(n_train, g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            (i < n_train ? train_idx : test_idx).push_back(g[i]);
        }
    }
    return {std::move(train_idx), std::move(test_idx)};
}

}  // namespace ldfa

#endif
