#ifndef LDFA_OOS_HPP
#define LDFA_OOS_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ldfa/alignment.hpp"
#include "ldfa/cae.hpp"
#include "ldfa/neighborhoods.hpp"
#include "ldfa/numerics.hpp"
#include "ldfa/scae.hpp"

namespace ldfa {

// one-layer sigmoid net mapping top SCAE codes to scaled global features
struct AlignNet {
    Matrix theta;  // d x d_L
    Vector u;      // d
};

struct UniformNetLayer {
    Matrix q;
    Vector v;
};

// the SCAE encoder of one neighborhood with the alignment layer stacked on top
struct UniformNet {
    std::vector<UniformNetLayer> layers;  // widths chain from D to d
};

// Per-row affine map taking embedding rows into (0, 1) so sigmoid outputs can
// reach them, and back. Constant rows map to 0.5 with unit gain.
struct EmbeddingScale {
    Vector offset;
    Vector gain;
    std::vector<std::uint8_t> degenerate;

    Matrix apply(const Matrix& h) const {
        Matrix out = h;
        for (Index r = 0; r < out.rows(); ++r) {
            out.row(r) = (out.row(r).array() - offset(r)) * gain(r);
        }
        return out;
    }

    Matrix invert(const Matrix& scaled) const {
        Matrix out = scaled;
        for (Index r = 0; r < out.rows(); ++r) {
            out.row(r) = out.row(r).array() / gain(r) + offset(r);
        }
        return out;
    }

    Vector invert(const Vector& scaled) const {
        Vector out = scaled;
        for (Index r = 0; r < out.size(); ++r) {
            out(r) = out(r) / gain(r) + offset(r);
        }
        return out;
    }
};

// send [min, max] of each embedding row to [margin, 1 - margin]
inline EmbeddingScale fit_embedding_scale(const GlobalEmbedding& h, double margin) {
    if (margin <= 0.0 || margin >= 0.5) {
        throw std::invalid_argument("fit_embedding_scale: margin must lie in (0, 0.5)");
    }
    const Index d = h.h.rows();
    EmbeddingScale s;
    s.offset = Vector::Zero(d);
    s.gain = Vector::Ones(d);
    s.degenerate.assign(static_cast<std::size_t>(d), 0);
    for (Index r = 0; r < d; ++r) {
        double mn = h.h.row(r).minCoeff();
        double mx = h.h.row(r).maxCoeff();
        if (mx == mn) {
            s.gain(r) = 1.0;
            s.offset(r) = mn - 0.5;
            s.degenerate[static_cast<std::size_t>(r)] = 1;
        } else {
            s.gain(r) = (1.0 - 2.0 * margin) / (mx - mn);
            s.offset(r) = mn - margin / s.gain(r);
        }
    }
    return s;
}

inline Matrix align_net_forward(const AlignNet& net, const Matrix& features) {
    return sigmoid((net.theta * features).colwise() + net.u);
}

inline double align_net_loss(const AlignNet& net, const Matrix& features, const Matrix& targets) {
    return (targets - align_net_forward(net, features)).squaredNorm();
}

struct AlignNetGradient {
    Matrix dtheta;
    Vector du;
};

inline AlignNetGradient align_net_gradient(const AlignNet& net, const Matrix& features,
                                           const Matrix& targets) {
    Matrix p = align_net_forward(net, features);
    Matrix gz = 2.0 * ((p - targets).array() * p.array() * (1.0 - p.array())).matrix();
    AlignNetGradient g;
    g.dtheta = gz * features.transpose();
    g.du = gz.rowwise().sum();
    return g;
}

// seeded gradient descent on the squared alignment error of one neighborhood
inline AlignNet train_align_net(const LocalFeatureBlock& block, const Matrix& targets,
                                const TrainConfig& cfg) {
    if (targets.cols() != block.features.cols()) {
        throw std::invalid_argument("train_align_net: target columns do not match neighborhood size");
    }
    if (targets.size() > 0 && (targets.minCoeff() <= 0.0 || targets.maxCoeff() >= 1.0)) {
        throw std::invalid_argument("train_align_net: targets must lie strictly inside (0, 1)");
    }
    Rng rng(cfg.seed);
    AlignNet net;
    net.theta = detail::uniform_matrix(rng, targets.rows(), block.features.rows(), cfg.init_scale);
    net.u = Vector::Zero(targets.rows());
    for (int e = 0; e < cfg.epochs; ++e) {
        AlignNetGradient g = align_net_gradient(net, block.features, targets);
        net.theta -= cfg.learning_rate * g.dtheta;
        net.u -= cfg.learning_rate * g.du;
    }
    return net;
}

// copy the SCAE encoder layers verbatim and stack the alignment layer on top
inline UniformNet build_uniform_net(const ScaeModel& m, const AlignNet& a) {
    if (m.layers.empty()) {
        throw std::invalid_argument("build_uniform_net: model has no layers");
    }
    if (a.theta.cols() != m.dims.back()) {
        throw std::invalid_argument("build_uniform_net: alignment layer width does not match top code width");
    }
    UniformNet net;
    net.layers.reserve(m.layers.size() + 1);
    for (const CaeParams& layer : m.layers) {
        net.layers.push_back(UniformNetLayer{layer.w, layer.b});
    }
    net.layers.push_back(UniformNetLayer{a.theta, a.u});
    return net;
}

inline Matrix uniform_net_forward(const UniformNet& net, const Matrix& x) {
    if (net.layers.empty()) {
        throw std::invalid_argument("uniform_net_forward: empty net");
    }
    if (x.rows() != net.layers.front().q.cols()) {
        throw std::invalid_argument("uniform_net_forward: input rows do not match first layer");
    }
    Matrix h = x;
    for (const UniformNetLayer& layer : net.layers) {
        h = sigmoid((layer.q * h).colwise() + layer.v);
    }
    return h;
}

inline double uniform_net_loss(const UniformNet& net, const Matrix& x, const Matrix& targets) {
    return (targets - uniform_net_forward(net, x)).squaredNorm();
}

inline std::vector<AlignNetGradient> uniform_net_gradient(const UniformNet& net, const Matrix& x,
                                                          const Matrix& targets) {
    const std::size_t n_layers = net.layers.size();
    std::vector<Matrix> acts(n_layers + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        acts[l + 1] = sigmoid((net.layers[l].q * acts[l]).colwise() + net.layers[l].v);
    }
    std::vector<AlignNetGradient> grads(n_layers);
    Matrix delta = 2.0 * ((acts[n_layers] - targets).array() * acts[n_layers].array() *
                          (1.0 - acts[n_layers].array()))
                             .matrix();
    for (std::size_t li = n_layers; li-- > 0;) {
        grads[li].dtheta = delta * acts[li].transpose();
        grads[li].du = delta.rowwise().sum();
        if (li > 0) {
            delta = (net.layers[li].q.transpose() * delta).array() * acts[li].array() *
                    (1.0 - acts[li].array());
        }
    }
    return grads;
}

// full back-propagation through all layers, with the same guarded acceptance
// as SCAE fine-tuning
inline UniformNet finetune_uniform_net(const UniformNet& net, const Matrix& x_block,
                                       const Matrix& targets, const TrainConfig& cfg) {
    if (targets.cols() != x_block.cols()) {
        throw std::invalid_argument("finetune_uniform_net: target and input column counts differ");
    }
    if (cfg.epochs == 0) {
        return net;
    }
    double loss_before = uniform_net_loss(net, x_block, targets);
    UniformNet tuned = net;
    for (int e = 0; e < cfg.epochs; ++e) {
        std::vector<AlignNetGradient> grads = uniform_net_gradient(tuned, x_block, targets);
        for (std::size_t l = 0; l < tuned.layers.size(); ++l) {
            tuned.layers[l].q -= cfg.learning_rate * grads[l].dtheta;
            tuned.layers[l].v -= cfg.learning_rate * grads[l].du;
        }
    }
    if (uniform_net_loss(tuned, x_block, targets) <= loss_before) {
        return tuned;
    }
    return net;
}

// nearest training sample by Euclidean distance (ties to the lowest index)
inline Index nearest_training_sample(const Vector& x_new, const Matrix& training) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < training.cols(); ++j) {
        double d = (training.col(j) - x_new).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

// embed a new sample through the uniform net of its nearest training sample's
// neighborhood, then undo the target scaling
inline Vector embed_new(const Vector& x_new, const Matrix& training, const NeighborhoodSet& nbrs,
                        const std::vector<UniformNet>& nets, const EmbeddingScale& scale) {
    if (x_new.size() != training.rows()) {
        throw std::invalid_argument("embed_new: query dimension does not match training data");
    }
    if (nets.size() != nbrs.items.size()) {
        throw std::invalid_argument("embed_new: one net per neighborhood required");
    }
    Index j = nearest_training_sample(x_new, training);
    Matrix y = uniform_net_forward(nets[static_cast<std::size_t>(j)], x_new);
    return scale.invert(Vector(y.col(0)));
}

}  // namespace ldfa

#endif
