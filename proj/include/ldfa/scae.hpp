#ifndef LDFA_SCAE_HPP
#define LDFA_SCAE_HPP

#include <stdexcept>
#include <utility>
#include <vector>

#include "ldfa/cae.hpp"
#include "ldfa/neighborhoods.hpp"
#include "ldfa/numerics.hpp"
#include "ldfa/thread_pool.hpp"

namespace ldfa {

// CAE layers composed so each layer's code is the next layer's input
struct ScaeModel {
    std::vector<CaeParams> layers;
    std::vector<Index> dims;  // [D, d_1, ..., d_L]
};

// top-layer codes of one neighborhood, in its private coordinate system
struct LocalFeatureBlock {
    NeighborhoodIndex neighborhood;
    Matrix features;  // d_L x (k+1)
    bool degenerate = false;
};

inline Matrix encode_deep(const ScaeModel& m, const Matrix& x) {
    if (m.layers.empty()) {
        throw std::invalid_argument("encode_deep: model has no layers");
    }
    if (x.rows() != m.dims.front()) {
        throw std::invalid_argument("encode_deep: input rows do not match model width");
    }
    Matrix h = x;
    for (const CaeParams& layer : m.layers) {
        h = encode(layer, h);
    }
    return h;
}

// greedy layer-wise pretraining: layer l is a fresh CAE trained on the codes
// of the layers below it
inline ScaeModel pretrain(const Matrix& x, const std::vector<Index>& dims, const TrainConfig& cfg) {
    if (dims.size() < 2) {
        throw std::invalid_argument("pretrain: need at least one layer (two widths)");
    }
    if (dims.front() != x.rows()) {
        throw std::invalid_argument("pretrain: dims[0] must equal the input dimension");
    }
    ScaeModel m;
    m.dims = dims;
    Matrix cur = x;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        CaeParams p = train_cae(cur, dims[l], cfg);
        cur = encode(p, cur);
        m.layers.push_back(std::move(p));
    }
    return m;
}

// sum over layers of the per-layer CAE loss evaluated on the composed forward
// activations
inline double scae_loss(const ScaeModel& m, const Matrix& x, double lambda) {
    double total = 0.0;
    Matrix cur = x;
    for (const CaeParams& layer : m.layers) {
        total += cae_loss(layer, cur, lambda);
        cur = encode(layer, cur);
    }
    return total;
}

// Backpropagation through the stack. Each layer contributes its own
// reconstruction and penalty terms; the input of layer l additionally receives
// the gradient flowing down from the layers above.
inline std::vector<CaeGradient> scae_gradient(const ScaeModel& m, const Matrix& x, double lambda) {
    const std::size_t n_layers = m.layers.size();
    std::vector<Matrix> xs(n_layers), hs(n_layers), xrs(n_layers), as(n_layers);
    Matrix cur = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        xs[l] = cur;
        hs[l] = encode(m.layers[l], cur);
        xrs[l] = decode(m.layers[l], hs[l]);
        as[l] = sigmoid_derivative_factor(hs[l]);
        cur = hs[l];
    }
    std::vector<CaeGradient> grads(n_layers);
    Matrix gx_above;  // gradient with respect to the code of the layer below
    for (std::size_t li = n_layers; li-- > 0;) {
        const CaeParams& p = m.layers[li];
        Matrix r = xrs[li] - xs[li];
        Matrix gy = 2.0 * (r.array() * xrs[li].array() * (1.0 - xrs[li].array())).matrix();
        Matrix wta = p.w.transpose() * as[li];
        Matrix gh = p.w * gy;
        gh.array() += 2.0 * lambda * (p.w * wta).array() * (1.0 - 2.0 * hs[li].array());
        if (li + 1 < n_layers) {
            gh += gx_above;
        }
        Matrix gz = (gh.array() * as[li].array()).matrix();
        grads[li].dw = gz * xs[li].transpose() + hs[li] * gy.transpose() +
                       2.0 * lambda * (as[li] * wta.transpose());
        grads[li].db = gz.rowwise().sum();
        grads[li].dc = gy.rowwise().sum();
        if (li > 0) {
            gx_above = p.w.transpose() * gz - 2.0 * r;
        }
    }
    return grads;
}

// Joint gradient descent on the stacked objective. If descent ends up worse
// than the starting point on this data, the starting parameters are kept; tiny
// neighborhoods make occasional divergence cheap to guard against.
inline ScaeModel finetune(const ScaeModel& m, const Matrix& x, const TrainConfig& cfg) {
    if (m.layers.empty() || x.rows() != m.dims.front()) {
        throw std::invalid_argument("finetune: model and data are not shape-consistent");
    }
    if (cfg.epochs == 0) {
        return m;
    }
    double loss_before = scae_loss(m, x, cfg.lambda);
    ScaeModel tuned = m;
    for (int e = 0; e < cfg.epochs; ++e) {
        std::vector<CaeGradient> grads = scae_gradient(tuned, x, cfg.lambda);
        for (std::size_t l = 0; l < tuned.layers.size(); ++l) {
            tuned.layers[l].w -= cfg.learning_rate * grads[l].dw;
            tuned.layers[l].b -= cfg.learning_rate * grads[l].db;
            tuned.layers[l].c -= cfg.learning_rate * grads[l].dc;
        }
    }
    double loss_after = scae_loss(tuned, x, cfg.lambda);
    if (loss_after <= loss_before) {
        return tuned;
    }
    return m;
}

// One independent SCAE per neighborhood. Seeds are derived as seed XOR i, and
// results land in slot i regardless of worker scheduling, so reruns are
// bit-identical at any thread count. Models are kept only when a sink is
// given; with many wide neighborhoods the feature blocks are all later stages
// need, and the models dominate memory.
inline std::vector<LocalFeatureBlock> train_local_scaes(const Matrix& x, const NeighborhoodSet& nbrs,
                                                        const std::vector<Index>& dims,
                                                        const TrainConfig& pretrain_cfg,
                                                        const TrainConfig& finetune_cfg,
                                                        unsigned threads = 1,
                                                        std::vector<ScaeModel>* models_out = nullptr) {
    std::vector<LocalFeatureBlock> out(nbrs.items.size());
    if (models_out) {
        models_out->assign(nbrs.items.size(), ScaeModel{});
    }
    parallel_for(nbrs.items.size(), threads, [&](std::size_t i) {
        const NeighborhoodIndex& nbr = nbrs.items[i];
        Matrix xi = gather(x, nbr);
        TrainConfig pre = pretrain_cfg;
        TrainConfig fine = finetune_cfg;
        pre.seed = pretrain_cfg.seed ^ static_cast<std::uint64_t>(i);
        fine.seed = finetune_cfg.seed ^ static_cast<std::uint64_t>(i);
        ScaeModel model = pretrain(xi, dims, pre);
        model = finetune(model, xi, fine);
        LocalFeatureBlock block;
        block.neighborhood = nbr;
        block.features = encode_deep(model, xi);
        out[i] = std::move(block);
        if (models_out) {
            (*models_out)[i] = std::move(model);
        }
    });
    return out;
}

}  // namespace ldfa

#endif
