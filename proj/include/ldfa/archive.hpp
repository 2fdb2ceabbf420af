#ifndef LDFA_ARCHIVE_HPP
#define LDFA_ARCHIVE_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldfa/io.hpp"
#include "ldfa/neighborhoods.hpp"
#include "ldfa/numerics.hpp"
#include "ldfa/oos.hpp"
#include "ldfa/scae.hpp"

namespace ldfa {

static_assert(std::endian::native == std::endian::little,
              "archive payload is little-endian; big-endian hosts need byte swapping");

// Everything a fitted model needs to embed new samples, plus the training
// embedding itself. Serialized as a text manifest followed by raw float64
// arrays in declared order; the round trip is bit-exact.
struct ModelArchive {
    std::string mode = "ldfa";
    Index n = 0;
    Index d_in = 0;
    Index embedding_dim = 0;
    Index k = 0;
    std::vector<Index> widths;
    double lambda = 0.1;
    double learning_rate = 0.1;
    double margin = 0.1;
    int pretrain_epochs = 0;
    int finetune_epochs = 0;
    int align_epochs = 0;
    std::uint64_t seed = 0;
    bool has_oos = false;
    bool degenerate_spectrum = false;
    double spectral_gap = 0.0;

    Normalization norm;
    Matrix training_features;  // normalized, D x N
    Matrix embedding;          // d x N
    NeighborhoodSet nbrs;      // ldfa and ltsa modes
    std::vector<ScaeModel> scaes;        // ldfa with out-of-sample nets
    std::vector<AlignNet> align_nets;    // ldfa with out-of-sample nets
    std::vector<UniformNet> uniform_nets;
    EmbeddingScale scale;
    Vector pca_mean;        // pca mode
    Matrix pca_components;  // pca mode, d x D
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct ArrayDecl {
    std::string name;
    Index rows = 0;
    Index cols = 0;
};

// walks the archive's array-valued members in a fixed order; save and load
// both go through this single definition so they cannot drift apart
template <typename Fn>
void for_each_array_decl(const ModelArchive& m, Fn&& fn) {
    fn("norm.lo", m.norm.lo.size(), Index(1));
    fn("norm.hi", m.norm.hi.size(), Index(1));
    fn("train.x", m.training_features.rows(), m.training_features.cols());
    fn("embedding", m.embedding.rows(), m.embedding.cols());
    if (m.mode == "pca") {
        fn("pca.mean", m.pca_mean.size(), Index(1));
        fn("pca.components", m.pca_components.rows(), m.pca_components.cols());
        return;
    }
    fn("neighborhoods", Index(m.nbrs.items.size()), m.k + 1);
    if (m.mode == "ltsa" || !m.has_oos) {
        return;
    }
    for (std::size_t i = 0; i < m.scaes.size(); ++i) {
        for (std::size_t l = 0; l < m.scaes[i].layers.size(); ++l) {
            const CaeParams& p = m.scaes[i].layers[l];
            std::string base = "scae." + std::to_string(i) + ".layer." + std::to_string(l);
            fn(base + ".w", p.w.rows(), p.w.cols());
            fn(base + ".b", p.b.size(), Index(1));
            fn(base + ".c", p.c.size(), Index(1));
        }
    }
    for (std::size_t i = 0; i < m.align_nets.size(); ++i) {
        std::string base = "align." + std::to_string(i);
        fn(base + ".theta", m.align_nets[i].theta.rows(), m.align_nets[i].theta.cols());
        fn(base + ".u", m.align_nets[i].u.size(), Index(1));
    }
    for (std::size_t i = 0; i < m.uniform_nets.size(); ++i) {
        for (std::size_t l = 0; l < m.uniform_nets[i].layers.size(); ++l) {
            const UniformNetLayer& p = m.uniform_nets[i].layers[l];
            std::string base = "uniform." + std::to_string(i) + ".layer." + std::to_string(l);
            fn(base + ".q", p.q.rows(), p.q.cols());
            fn(base + ".v", p.v.size(), Index(1));
        }
    }
    fn("scale.offset", m.scale.offset.size(), Index(1));
    fn("scale.gain", m.scale.gain.size(), Index(1));
    fn("scale.degenerate", Index(m.scale.degenerate.size()), Index(1));
}

inline void write_array(std::ostream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

inline void write_matrix_rowmajor(std::ostream& out, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            write_array(out, &v, 1);
        }
    }
}

class PayloadReader {
  public:
    PayloadReader(std::istream& in, std::vector<ArrayDecl> decls, std::string path)
        : in_(in), decls_(std::move(decls)), path_(std::move(path)) {}

    Matrix next(const std::string& name) {
        if (pos_ >= decls_.size()) {
            throw std::runtime_error(path_ + ": archive ended before array '" + name + "'");
        }
        const ArrayDecl& d = decls_[pos_++];
        if (d.name != name) {
            throw std::runtime_error(path_ + ": expected array '" + name + "', found '" + d.name + "'");
        }
        Matrix m(d.rows, d.cols);
        for (Index i = 0; i < d.rows; ++i) {
            for (Index j = 0; j < d.cols; ++j) {
                double v = 0.0;
                in_.read(reinterpret_cast<char*>(&v), sizeof(double));
                m(i, j) = v;
            }
        }
        if (!in_) {
            throw std::runtime_error(path_ + ": truncated payload at array '" + name + "'");
        }
        return m;
    }

    Vector next_vector(const std::string& name) {
        Matrix m = next(name);
        if (m.cols() != 1) {
            throw std::runtime_error(path_ + ": array '" + name + "' is not a vector");
        }
        return Vector(m.col(0));
    }

    bool done() const { return pos_ == decls_.size(); }

  private:
    std::istream& in_;
    std::vector<ArrayDecl> decls_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_archive(const ModelArchive& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path);
    }
    out << "ldfa-model v1\n";
    out << "mode " << m.mode << "\n";
    out << "n " << m.n << "\n";
    out << "d_in " << m.d_in << "\n";
    out << "embedding_dim " << m.embedding_dim << "\n";
    out << "k " << m.k << "\n";
    if (!m.widths.empty()) {
        out << "widths ";
        for (std::size_t i = 0; i < m.widths.size(); ++i) {
            out << (i > 0 ? "," : "") << m.widths[i];
        }
        out << "\n";
    }
    out << "lambda " << detail::format_double(m.lambda) << "\n";
    out << "learning_rate " << detail::format_double(m.learning_rate) << "\n";
    out << "margin " << detail::format_double(m.margin) << "\n";
    out << "pretrain_epochs " << m.pretrain_epochs << "\n";
    out << "finetune_epochs " << m.finetune_epochs << "\n";
    out << "align_epochs " << m.align_epochs << "\n";
    out << "seed " << m.seed << "\n";
    out << "has_oos " << (m.has_oos ? 1 : 0) << "\n";
    out << "degenerate_spectrum " << (m.degenerate_spectrum ? 1 : 0) << "\n";
    out << "spectral_gap " << detail::format_double(m.spectral_gap) << "\n";
    std::size_t count = 0;
    detail::for_each_array_decl(m, [&](const std::string&, Index, Index) { ++count; });
    out << "arrays " << count << "\n";
    detail::for_each_array_decl(m, [&](const std::string& name, Index rows, Index cols) {
        out << "array " << name << " " << rows << " " << cols << "\n";
    });
    out << "end-manifest\n";

    detail::write_matrix_rowmajor(out, m.norm.lo);
    detail::write_matrix_rowmajor(out, m.norm.hi);
    detail::write_matrix_rowmajor(out, m.training_features);
    detail::write_matrix_rowmajor(out, m.embedding);
    if (m.mode == "pca") {
        detail::write_matrix_rowmajor(out, m.pca_mean);
        detail::write_matrix_rowmajor(out, m.pca_components);
    } else {
        Matrix nbrm(static_cast<Index>(m.nbrs.items.size()), m.k + 1);
        for (std::size_t i = 0; i < m.nbrs.items.size(); ++i) {
            for (Index j = 0; j <= m.k; ++j) {
                nbrm(static_cast<Index>(i), j) =
                    static_cast<double>(m.nbrs.items[i].members[static_cast<std::size_t>(j)]);
            }
        }
        detail::write_matrix_rowmajor(out, nbrm);
        if (m.mode != "ltsa" && m.has_oos) {
            for (const ScaeModel& s : m.scaes) {
                for (const CaeParams& p : s.layers) {
                    detail::write_matrix_rowmajor(out, p.w);
                    detail::write_matrix_rowmajor(out, p.b);
                    detail::write_matrix_rowmajor(out, p.c);
                }
            }
            for (const AlignNet& a : m.align_nets) {
                detail::write_matrix_rowmajor(out, a.theta);
                detail::write_matrix_rowmajor(out, a.u);
            }
            for (const UniformNet& u : m.uniform_nets) {
                for (const UniformNetLayer& layer : u.layers) {
                    detail::write_matrix_rowmajor(out, layer.q);
                    detail::write_matrix_rowmajor(out, layer.v);
                }
            }
            detail::write_matrix_rowmajor(out, m.scale.offset);
            detail::write_matrix_rowmajor(out, m.scale.gain);
            Matrix deg(static_cast<Index>(m.scale.degenerate.size()), 1);
            for (std::size_t i = 0; i < m.scale.degenerate.size(); ++i) {
                deg(static_cast<Index>(i), 0) = m.scale.degenerate[i] ? 1.0 : 0.0;
            }
            detail::write_matrix_rowmajor(out, deg);
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

inline ModelArchive load_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::string line;
    if (!std::getline(in, line) || line != "ldfa-model v1") {
        throw std::runtime_error(path + ": not a model archive (bad header)");
    }
    ModelArchive m;
    std::map<std::string, std::string> kv;
    std::vector<detail::ArrayDecl> decls;
    std::size_t declared = 0;
    while (std::getline(in, line)) {
        if (line == "end-manifest") {
            break;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "arrays") {
            ls >> declared;
        } else if (key == "array") {
            detail::ArrayDecl d;
            ls >> d.name >> d.rows >> d.cols;
            if (!ls) {
                throw std::runtime_error(path + ": malformed array declaration: " + line);
            }
            decls.push_back(std::move(d));
        } else {
            std::string value;
            std::getline(ls, value);
            kv[key] = detail::trim(value);
        }
    }
    if (decls.size() != declared) {
        throw std::runtime_error(path + ": manifest declares " + std::to_string(declared) +
                                 " arrays but lists " + std::to_string(decls.size()));
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) {
            throw std::runtime_error(path + ": manifest is missing key '" + key + "'");
        }
        return it->second;
    };
    m.mode = need("mode");
    m.n = std::stoll(need("n"));
    m.d_in = std::stoll(need("d_in"));
    m.embedding_dim = std::stoll(need("embedding_dim"));
    m.k = std::stoll(need("k"));
    if (kv.count("widths")) {
        std::istringstream ws(kv["widths"]);
        std::string tok;
        while (std::getline(ws, tok, ',')) {
            m.widths.push_back(std::stoll(tok));
        }
    }
    m.lambda = std::stod(need("lambda"));
    m.learning_rate = std::stod(need("learning_rate"));
    m.margin = std::stod(need("margin"));
    m.pretrain_epochs = std::stoi(need("pretrain_epochs"));
    m.finetune_epochs = std::stoi(need("finetune_epochs"));
    m.align_epochs = std::stoi(need("align_epochs"));
    m.seed = std::stoull(need("seed"));
    m.has_oos = need("has_oos") == "1";
    m.degenerate_spectrum = need("degenerate_spectrum") == "1";
    m.spectral_gap = std::stod(need("spectral_gap"));

    detail::PayloadReader reader(in, std::move(decls), path);
    m.norm.lo = reader.next_vector("norm.lo");
    m.norm.hi = reader.next_vector("norm.hi");
    m.training_features = reader.next("train.x");
    m.embedding = reader.next("embedding");
    if (m.mode == "pca") {
        m.pca_mean = reader.next_vector("pca.mean");
        m.pca_components = reader.next("pca.components");
    } else {
        Matrix nbrm = reader.next("neighborhoods");
        m.nbrs.k = m.k;
        m.nbrs.items.resize(static_cast<std::size_t>(nbrm.rows()));
        for (Index i = 0; i < nbrm.rows(); ++i) {
            NeighborhoodIndex& nbr = m.nbrs.items[static_cast<std::size_t>(i)];
            nbr.members.resize(static_cast<std::size_t>(nbrm.cols()));
            for (Index j = 0; j < nbrm.cols(); ++j) {
                nbr.members[static_cast<std::size_t>(j)] = static_cast<Index>(nbrm(i, j));
            }
            nbr.center = nbr.members[0];
        }
        if (m.mode != "ltsa" && m.has_oos) {
            std::vector<Index> widths = m.widths;
            std::size_t n_layers = widths.empty() ? 0 : widths.size() - 1;
            m.scaes.resize(m.nbrs.items.size());
            for (std::size_t i = 0; i < m.scaes.size(); ++i) {
                std::string si = "scae." + std::to_string(i);
                m.scaes[i].dims = widths;
                m.scaes[i].layers.resize(n_layers);
                for (std::size_t l = 0; l < n_layers; ++l) {
                    std::string base = si + ".layer." + std::to_string(l);
                    m.scaes[i].layers[l].w = reader.next(base + ".w");
                    m.scaes[i].layers[l].b = reader.next_vector(base + ".b");
                    m.scaes[i].layers[l].c = reader.next_vector(base + ".c");
                }
            }
            m.align_nets.resize(m.nbrs.items.size());
            for (std::size_t i = 0; i < m.align_nets.size(); ++i) {
                std::string base = "align." + std::to_string(i);
                m.align_nets[i].theta = reader.next(base + ".theta");
                m.align_nets[i].u = reader.next_vector(base + ".u");
            }
            m.uniform_nets.resize(m.nbrs.items.size());
            for (std::size_t i = 0; i < m.uniform_nets.size(); ++i) {
                m.uniform_nets[i].layers.resize(n_layers + 1);
                for (std::size_t l = 0; l <= n_layers; ++l) {
                    std::string base = "uniform." + std::to_string(i) + ".layer." + std::to_string(l);
                    m.uniform_nets[i].layers[l].q = reader.next(base + ".q");
                    m.uniform_nets[i].layers[l].v = reader.next_vector(base + ".v");
                }
            }
            m.scale.offset = reader.next_vector("scale.offset");
            m.scale.gain = reader.next_vector("scale.gain");
            Vector deg = reader.next_vector("scale.degenerate");
            m.scale.degenerate.resize(static_cast<std::size_t>(deg.size()));
            for (Index i = 0; i < deg.size(); ++i) {
                m.scale.degenerate[static_cast<std::size_t>(i)] = deg(i) != 0.0 ? 1 : 0;
            }
        }
    }
    if (!reader.done()) {
        throw std::runtime_error(path + ": archive declares more arrays than the loader consumed");
    }
    return m;
}

namespace detail {

inline bool bits_equal(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        return false;
    }
    return a.size() == 0 ||
           std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

inline bool bits_equal(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        return false;
    }
    return a.size() == 0 ||
           std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

}  // namespace detail

// bitwise comparison across every scalar and array; used by the determinism
// and round-trip checks
inline bool archives_equal(const ModelArchive& a, const ModelArchive& b) {
    if (a.mode != b.mode || a.n != b.n || a.d_in != b.d_in || a.embedding_dim != b.embedding_dim ||
        a.k != b.k || a.widths != b.widths || a.seed != b.seed || a.has_oos != b.has_oos ||
        a.degenerate_spectrum != b.degenerate_spectrum) {
        return false;
    }
    if (std::memcmp(&a.lambda, &b.lambda, sizeof(double)) != 0 ||
        std::memcmp(&a.learning_rate, &b.learning_rate, sizeof(double)) != 0 ||
        std::memcmp(&a.margin, &b.margin, sizeof(double)) != 0 ||
        std::memcmp(&a.spectral_gap, &b.spectral_gap, sizeof(double)) != 0 ||
        a.pretrain_epochs != b.pretrain_epochs || a.finetune_epochs != b.finetune_epochs ||
        a.align_epochs != b.align_epochs) {
        return false;
    }
    if (!detail::bits_equal(a.norm.lo, b.norm.lo) || !detail::bits_equal(a.norm.hi, b.norm.hi) ||
        !detail::bits_equal(a.training_features, b.training_features) ||
        !detail::bits_equal(a.embedding, b.embedding) || !detail::bits_equal(a.pca_mean, b.pca_mean) ||
        !detail::bits_equal(a.pca_components, b.pca_components)) {
        return false;
    }
    if (a.nbrs.items.size() != b.nbrs.items.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.nbrs.items.size(); ++i) {
        if (a.nbrs.items[i].members != b.nbrs.items[i].members) {
            return false;
        }
    }
    if (a.scaes.size() != b.scaes.size() || a.align_nets.size() != b.align_nets.size() ||
        a.uniform_nets.size() != b.uniform_nets.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.scaes.size(); ++i) {
        if (a.scaes[i].layers.size() != b.scaes[i].layers.size()) {
            return false;
        }
        for (std::size_t l = 0; l < a.scaes[i].layers.size(); ++l) {
            if (!detail::bits_equal(a.scaes[i].layers[l].w, b.scaes[i].layers[l].w) ||
                !detail::bits_equal(a.scaes[i].layers[l].b, b.scaes[i].layers[l].b) ||
                !detail::bits_equal(a.scaes[i].layers[l].c, b.scaes[i].layers[l].c)) {
                return false;
            }
        }
    }
    for (std::size_t i = 0; i < a.align_nets.size(); ++i) {
        if (!detail::bits_equal(a.align_nets[i].theta, b.align_nets[i].theta) ||
            !detail::bits_equal(a.align_nets[i].u, b.align_nets[i].u)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.uniform_nets.size(); ++i) {
        if (a.uniform_nets[i].layers.size() != b.uniform_nets[i].layers.size()) {
            return false;
        }
        for (std::size_t l = 0; l < a.uniform_nets[i].layers.size(); ++l) {
            if (!detail::bits_equal(a.uniform_nets[i].layers[l].q, b.uniform_nets[i].layers[l].q) ||
                !detail::bits_equal(a.uniform_nets[i].layers[l].v, b.uniform_nets[i].layers[l].v)) {
                return false;
            }
        }
    }
    return detail::bits_equal(a.scale.offset, b.scale.offset) &&
           detail::bits_equal(a.scale.gain, b.scale.gain) &&
           a.scale.degenerate == b.scale.degenerate;
}

}  // namespace ldfa

#endif
