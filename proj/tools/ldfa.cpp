#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ldfa/archive.hpp"
#include "ldfa/evaluation.hpp"
#include "ldfa/io.hpp"
#include "ldfa/pipeline.hpp"
#include "ldfa/scatter_svg.hpp"

namespace {

struct CommonArgs {
    std::string input;
    std::string labels;
    std::string config;
    std::string model;
    std::string output;
    std::string mode;
    std::string metrics = "cluster";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool mode_set = false;
    unsigned threads = 0;
    bool threads_set = false;
    bool train_oos = false;
    int repeats = 1;
    double split = 0.7;
};

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

int run_fit(const CommonArgs& args) {
    ldfa::PipelineConfig cfg;
    if (!args.config.empty()) {
        cfg = ldfa::parse_config_file(args.config);
    }
    if (args.seed_set) {
        cfg.seed = args.seed;
    }
    if (args.mode_set) {
        cfg.mode = args.mode;
    }
    if (args.threads_set) {
        cfg.threads = args.threads;
    }
    if (args.train_oos) {
        cfg.train_oos = true;
    }
    ldfa::Dataset data = ldfa::load_features(args.input, args.labels);
    ldfa::Normalization norm = data.from_idx ? ldfa::pixel_normalization(data.raw.rows())
                                             : ldfa::fit_normalization(data.raw);
    ldfa::Matrix x = norm.apply(data.raw);
    std::cout << "loaded " << x.cols() << " samples of dimension " << x.rows()
              << (data.from_idx ? " (idx pixels)" : " (csv)") << "\n";
    if (cfg.mode == "ldfa" && cfg.widths.empty()) {
        cfg.widths = {x.rows(), cfg.embedding_dim};
        std::cout << "note: widths not configured, using a single coding layer " << x.rows() << ","
                  << cfg.embedding_dim << "\n";
    }
    ldfa::FitResult fit = ldfa::fit_pipeline(cfg, x, norm);
    std::cout << "mode " << cfg.mode << ", embedding " << fit.embedding.h.rows() << "x"
              << fit.embedding.h.cols() << ", seed " << cfg.seed << "\n";
    if (fit.embedding.degenerate_spectrum) {
        std::cout << "warning: degenerate spectrum, gap " << format_value(fit.embedding.spectral_gap)
                  << " below the skipped null direction\n";
    }
    if (!args.model.empty()) {
        ldfa::save_archive(fit.archive, args.model);
        std::cout << "model written to " << args.model << "\n";
    }
    if (!args.output.empty()) {
        ldfa::write_csv(args.output, fit.embedding.h);
        std::cout << "embedding written to " << args.output << "\n";
    }
    return 0;
}

int run_transform(const CommonArgs& args) {
    ldfa::ModelArchive ar = ldfa::load_archive(args.model);
    ldfa::Dataset data = ldfa::load_features(args.input);
    ldfa::Matrix emb = ldfa::transform_pipeline(ar, data.raw);
    if (emb.cols() == ar.n && ar.embedding.cols() == ar.n && ar.n > 0) {
        // an input of exactly the training size is reported against the
        // stored training embedding
        double worst = 0.0, mean = 0.0;
        for (ldfa::Index j = 0; j < emb.cols(); ++j) {
            double rmse = std::sqrt((emb.col(j) - ar.embedding.col(j)).squaredNorm() /
                                    static_cast<double>(emb.rows()));
            worst = std::max(worst, rmse);
            mean += rmse;
        }
        mean /= static_cast<double>(emb.cols());
        std::cout << "self-consistency vs training embedding: mean rmse " << format_value(mean)
                  << ", max rmse " << format_value(worst) << "\n";
    }
    if (!args.output.empty()) {
        ldfa::write_csv(args.output, emb);
        std::cout << "embeddings written to " << args.output << " (" << emb.cols() << " rows)\n";
    } else {
        char buf[64];
        for (ldfa::Index j = 0; j < emb.cols(); ++j) {
            for (ldfa::Index i = 0; i < emb.rows(); ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", emb(i, j));
                std::cout << (i > 0 ? "," : "") << buf;
            }
            std::cout << "\n";
        }
    }
    return 0;
}

int run_evaluate(const CommonArgs& args) {
    ldfa::Matrix points = ldfa::read_csv(args.input);
    std::vector<std::string> labels = ldfa::read_labels(args.labels);
    if (labels.size() != static_cast<std::size_t>(points.cols())) {
        throw std::runtime_error("labels file has " + std::to_string(labels.size()) +
                                 " entries but embedding file has " + std::to_string(points.cols()) +
                                 " samples");
    }
    std::set<std::string> classes(labels.begin(), labels.end());
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!args.output.empty()) {
        file.open(args.output);
        if (!file) {
            throw std::runtime_error("cannot write file: " + args.output);
        }
        out = &file;
    }
    for (int r = 0; r < args.repeats; ++r) {
        std::uint64_t seed = args.seed + static_cast<std::uint64_t>(r);
        if (args.metrics == "cluster") {
            ldfa::ClusteringResult cr =
                ldfa::kmeans(points, static_cast<ldfa::Index>(classes.size()), 10, seed);
            (*out) << "purity " << format_value(ldfa::purity(cr.assignment, labels)) << " " << seed
                   << "\n";
        } else {
            auto [train_idx, test_idx] = ldfa::stratified_split(labels, args.split, seed);
            ldfa::LabeledEmbedding train, test;
            train.points.resize(points.rows(), static_cast<ldfa::Index>(train_idx.size()));
            test.points.resize(points.rows(), static_cast<ldfa::Index>(test_idx.size()));
            for (std::size_t i = 0; i < train_idx.size(); ++i) {
                train.points.col(static_cast<ldfa::Index>(i)) = points.col(train_idx[i]);
                train.labels.push_back(labels[static_cast<std::size_t>(train_idx[i])]);
            }
            for (std::size_t i = 0; i < test_idx.size(); ++i) {
                test.points.col(static_cast<ldfa::Index>(i)) = points.col(test_idx[i]);
                test.labels.push_back(labels[static_cast<std::size_t>(test_idx[i])]);
            }
            (*out) << "knn_accuracy " << format_value(ldfa::knn_classify(train, test)) << " " << seed
                   << "\n";
        }
    }
    return 0;
}

int run_visualize(const CommonArgs& args) {
    ldfa::Matrix points = ldfa::read_csv(args.input);
    std::vector<std::string> labels;
    if (!args.labels.empty()) {
        labels = ldfa::read_labels(args.labels);
        if (labels.size() != static_cast<std::size_t>(points.cols())) {
            throw std::runtime_error("labels file has " + std::to_string(labels.size()) +
                                     " entries but embedding file has " +
                                     std::to_string(points.cols()) + " samples");
        }
    }
    ldfa::write_scatter(points, labels, args.output);
    std::cout << "scatter written to " << args.output << " with sidecar " << args.output << ".csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"local deep-feature alignment: dimensionality reduction with out-of-sample embedding"};
    app.require_subcommand(1);
    CommonArgs args;

    CLI::App* fit = app.add_subcommand("fit", "fit a model and emit the training embedding");
    fit->add_option("--input", args.input, "feature file (csv or idx)")->required();
    fit->add_option("--labels", args.labels, "label file, validated against the sample count");
    fit->add_option("--config", args.config, "key=value configuration file");
    fit->add_option("--model", args.model, "write the fitted model archive here");
    fit->add_option("--output", args.output, "write the training embedding csv here");
    auto* fit_seed = fit->add_option("--seed", args.seed, "override the config seed");
    auto* fit_mode = fit->add_option("--mode", args.mode, "override the config mode")
                         ->check(CLI::IsMember({"ldfa", "ltsa", "pca"}));
    auto* fit_threads = fit->add_option("--threads", args.threads, "worker threads for neighborhood training");
    fit->add_flag("--train-oos", args.train_oos, "also train out-of-sample embedding networks");

    CLI::App* transform = app.add_subcommand("transform", "embed new samples with a fitted model");
    transform->add_option("--input", args.input, "feature file (csv or idx)")->required();
    transform->add_option("--model", args.model, "model archive from fit")->required();
    transform->add_option("--output", args.output, "write embeddings csv here (default: stdout)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score an embedding against labels");
    evaluate->add_option("--input", args.input, "embedding csv (samples as rows)")->required();
    evaluate->add_option("--labels", args.labels, "label file")->required();
    evaluate->add_option("--metrics", args.metrics, "cluster (k-means purity) or classify (1-NN)")
        ->check(CLI::IsMember({"cluster", "classify"}));
    evaluate->add_option("--seed", args.seed, "base seed; repeats use seed, seed+1, ...");
    evaluate->add_option("--repeats", args.repeats, "number of seeded repetitions")
        ->check(CLI::PositiveNumber);
    evaluate->add_option("--split", args.split, "train fraction for classify");
    evaluate->add_option("--output", args.output, "write the metrics report here (default: stdout)");

    CLI::App* visualize = app.add_subcommand("visualize", "render the first two embedding dimensions");
    visualize->add_option("--input", args.input, "embedding csv (samples as rows)")->required();
    visualize->add_option("--labels", args.labels, "label file for class colors");
    visualize->add_option("--output", args.output, "svg output path")->required();

    CLI11_PARSE(app, argc, argv);
    args.seed_set = fit_seed->count() > 0;
    args.mode_set = fit_mode->count() > 0;
    args.threads_set = fit_threads->count() > 0;

    try {
        if (fit->parsed()) {
            return run_fit(args);
        }
        if (transform->parsed()) {
            return run_transform(args);
        }
        if (evaluate->parsed()) {
            return run_evaluate(args);
        }
        return run_visualize(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
