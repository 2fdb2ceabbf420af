#ifndef LDFA_PIPELINE_HPP
#define LDFA_PIPELINE_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldfa/alignment.hpp"
#include "ldfa/archive.hpp"
#include "ldfa/evaluation.hpp"
#include "ldfa/io.hpp"
#include "ldfa/neighborhoods.hpp"
#include "ldfa/oos.hpp"
#include "ldfa/scae.hpp"
#include "ldfa/thread_pool.hpp"

namespace ldfa {

struct PipelineConfig {
    Index k = 10;
    std::vector<Index> widths;  // SCAE chain from input width to top code width
    Index embedding_dim = 2;
    double lambda = 0.1;
    double learning_rate = 0.1;
    int pretrain_epochs = 200;
    int finetune_epochs = 200;
    int align_epochs = 200;
    std::uint64_t seed = 0;
    double margin = 0.1;
    std::string mode = "ldfa";
    bool train_oos = false;
    double init_scale = 0.05;
    unsigned threads = 0;  // 0 means use available parallelism

    unsigned effective_threads() const { return threads == 0 ? default_thread_count() : threads; }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true") {
        return true;
    }
    if (v == "0" || v == "false") {
        return false;
    }
    throw std::runtime_error("expected a boolean (0/1/true/false), got '" + v + "'");
}

template <typename T>
T parse_integer(const std::string& v) {
    T value{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw std::runtime_error("expected an integer, got '" + v + "'");
    }
    return value;
}

inline double parse_real(const std::string& v) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw std::runtime_error("expected a number, got '" + v + "'");
    }
    return value;
}

}  // namespace detail

// key=value lines; blank lines and lines starting with '#' are skipped;
// unknown keys are errors
inline PipelineConfig parse_config_text(const std::string& text, const std::string& name) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(name + ":" + std::to_string(line_no) +
                                     ": expected key=value, got '" + t + "'");
        }
        std::string key = detail::trim(t.substr(0, eq));
        std::string value = detail::trim(t.substr(eq + 1));
        try {
            if (key == "k") {
                cfg.k = detail::parse_integer<Index>(value);
            } else if (key == "widths") {
                cfg.widths.clear();
                std::istringstream ws(value);
                std::string tok;
                while (std::getline(ws, tok, ',')) {
                    cfg.widths.push_back(detail::parse_integer<Index>(detail::trim(tok)));
                }
            } else if (key == "embedding_dim") {
                cfg.embedding_dim = detail::parse_integer<Index>(value);
            } else if (key == "lambda") {
                cfg.lambda = detail::parse_real(value);
            } else if (key == "learning_rate") {
                cfg.learning_rate = detail::parse_real(value);
            } else if (key == "pretrain_epochs") {
                cfg.pretrain_epochs = detail::parse_integer<int>(value);
            } else if (key == "finetune_epochs") {
                cfg.finetune_epochs = detail::parse_integer<int>(value);
            } else if (key == "align_epochs") {
                cfg.align_epochs = detail::parse_integer<int>(value);
            } else if (key == "seed") {
                cfg.seed = detail::parse_integer<std::uint64_t>(value);
            } else if (key == "margin") {
                cfg.margin = detail::parse_real(value);
            } else if (key == "mode") {
                if (value != "ldfa" && value != "ltsa" && value != "pca") {
                    throw std::runtime_error("mode must be ldfa, ltsa, or pca, got '" + value + "'");
                }
                cfg.mode = value;
            } else if (key == "train_oos") {
                cfg.train_oos = detail::parse_bool(value);
            } else if (key == "init_scale") {
                cfg.init_scale = detail::parse_real(value);
            } else if (key == "threads") {
                cfg.threads = detail::parse_integer<unsigned>(value);
            } else {
                throw std::runtime_error("unknown key '" + key + "'");
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

inline PipelineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

struct FitResult {
    ModelArchive archive;
    GlobalEmbedding embedding;
};

namespace detail {

inline void validate_config(const PipelineConfig& cfg, Index d_in, Index n) {
    if (cfg.k < 1) {
        throw std::invalid_argument("config: k must be at least 1");
    }
    if (cfg.embedding_dim < 1) {
        throw std::invalid_argument("config: embedding_dim must be at least 1");
    }
    if (cfg.margin <= 0.0 || cfg.margin >= 0.5) {
        throw std::invalid_argument("config: margin must lie in (0, 0.5)");
    }
    if (cfg.mode == "ldfa") {
        if (cfg.widths.size() < 2) {
            throw std::invalid_argument("config: widths must list at least two layer sizes");
        }
        if (cfg.widths.front() != d_in) {
            throw std::invalid_argument("config: widths must start at the input dimension " +
                                        std::to_string(d_in) + ", got " +
                                        std::to_string(cfg.widths.front()));
        }
    }
    if (cfg.mode != "pca" && cfg.k >= n) {
        throw std::invalid_argument("config: k must be smaller than the sample count " +
                                    std::to_string(n));
    }
}

}  // namespace detail

// Fits a model on already-normalized features. The normalization that
// produced them is stored in the archive so queries are scaled identically.
inline FitResult fit_pipeline(const PipelineConfig& cfg, const Matrix& x, const Normalization& norm) {
    const Index n = x.cols();
    const Index d = cfg.embedding_dim;
    if (n == 0) {
        throw std::invalid_argument("fit: no samples");
    }
    detail::validate_config(cfg, x.rows(), n);
    const unsigned threads = cfg.effective_threads();

    FitResult res;
    ModelArchive& ar = res.archive;
    ar.mode = cfg.mode;
    ar.n = n;
    ar.d_in = x.rows();
    ar.embedding_dim = d;
    ar.k = cfg.k;
    ar.widths = cfg.mode == "ldfa" ? cfg.widths : std::vector<Index>{};
    ar.lambda = cfg.lambda;
    ar.learning_rate = cfg.learning_rate;
    ar.margin = cfg.margin;
    ar.pretrain_epochs = cfg.pretrain_epochs;
    ar.finetune_epochs = cfg.finetune_epochs;
    ar.align_epochs = cfg.align_epochs;
    ar.seed = cfg.seed;
    ar.norm = norm;
    ar.training_features = x;

    if (cfg.mode == "pca") {
        // basis kept alongside the scores so transform projects new samples
        // with the same components and sign convention
        Vector mean = x.rowwise().mean();
        Matrix centered = x.colwise() - mean;
        Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (d > svd.singularValues().size()) {
            throw std::invalid_argument("config: embedding_dim exceeds the data rank bound");
        }
        Matrix scores(d, n);
        Matrix components(d, x.rows());
        for (Index i = 0; i < d; ++i) {
            scores.row(i) = svd.singularValues()(i) * svd.matrixV().col(i).transpose();
            components.row(i) = svd.matrixU().col(i).transpose();
        }
        for (Index r = 0; r < d; ++r) {
            Index best = 0;
            double best_abs = -1.0;
            for (Index c = 0; c < n; ++c) {
                double a = std::abs(scores(r, c));
                if (a > best_abs) {
                    best_abs = a;
                    best = c;
                }
            }
            if (scores(r, best) < 0.0) {
                scores.row(r) = -scores.row(r);
                components.row(r) = -components.row(r);
            }
        }
        res.embedding.h = scores;
        ar.embedding = scores;
        ar.pca_mean = mean;
        ar.pca_components = components;
        return res;
    }

    NeighborhoodSet nbrs = build_neighborhoods(x, cfg.k, threads);
    std::vector<LocalFeatureBlock> blocks;
    std::vector<ScaeModel> models;
    if (cfg.mode == "ltsa") {
        blocks = ltsa_mode_features(x, nbrs, d);
    } else {
        TrainConfig pre;
        pre.lambda = cfg.lambda;
        pre.learning_rate = cfg.learning_rate;
        pre.epochs = cfg.pretrain_epochs;
        pre.seed = cfg.seed;
        pre.init_scale = cfg.init_scale;
        TrainConfig fine = pre;
        fine.epochs = cfg.finetune_epochs;
        blocks = train_local_scaes(x, nbrs, cfg.widths, pre, fine, threads,
                                   cfg.train_oos ? &models : nullptr);
    }

    std::vector<AlignmentBlock> ablocks(blocks.size());
    parallel_for(blocks.size(), threads,
                 [&](std::size_t i) { ablocks[i] = local_alignment_matrix(blocks[i]); });
    GlobalAlignment phi = assemble_phi(ablocks, n);
    res.embedding = solve_embedding(phi, d);
    ar.embedding = res.embedding.h;
    ar.degenerate_spectrum = res.embedding.degenerate_spectrum;
    ar.spectral_gap = res.embedding.spectral_gap;
    ar.nbrs = nbrs;

    if (cfg.mode == "ldfa" && cfg.train_oos) {
        ar.has_oos = true;
        ar.scale = fit_embedding_scale(res.embedding, cfg.margin);
        Matrix targets = ar.scale.apply(res.embedding.h);
        ar.scaes = std::move(models);
        ar.align_nets.resize(blocks.size());
        ar.uniform_nets.resize(blocks.size());
        parallel_for(blocks.size(), threads, [&](std::size_t i) {
            const NeighborhoodIndex& nbr = nbrs.items[i];
            Matrix t_i(d, static_cast<Index>(nbr.members.size()));
            for (std::size_t j = 0; j < nbr.members.size(); ++j) {
                t_i.col(static_cast<Index>(j)) = targets.col(nbr.members[j]);
            }
            TrainConfig acfg;
            acfg.lambda = cfg.lambda;
            acfg.learning_rate = cfg.learning_rate;
            acfg.epochs = cfg.align_epochs;
            acfg.seed = cfg.seed ^ static_cast<std::uint64_t>(i);
            acfg.init_scale = cfg.init_scale;
            ar.align_nets[i] = train_align_net(blocks[i], t_i, acfg);
            UniformNet net = build_uniform_net(ar.scaes[i], ar.align_nets[i]);
            ar.uniform_nets[i] = finetune_uniform_net(net, gather(x, nbr), t_i, acfg);
        });
    }
    return res;
}

// raw features in, embeddings out, using the archive's stored normalization
inline Matrix transform_pipeline(const ModelArchive& ar, const Matrix& raw) {
    if (raw.cols() == 0) {
        return Matrix(ar.embedding_dim, 0);
    }
    Matrix x = ar.norm.apply(raw);
    if (ar.mode == "pca") {
        return ar.pca_components * (x.colwise() - Vector(ar.pca_mean));
    }
    if (ar.mode == "ltsa") {
        throw std::runtime_error(
            "transform: ltsa mode is an alignment oracle and keeps no out-of-sample networks");
    }
    if (!ar.has_oos) {
        throw std::runtime_error(
            "transform: archive has no out-of-sample networks; fit with train_oos=1");
    }
    Matrix out(ar.embedding_dim, x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        out.col(j) = embed_new(Vector(x.col(j)), ar.training_features, ar.nbrs, ar.uniform_nets,
                               ar.scale);
    }
    return out;
}

}  // namespace ldfa

#endif
