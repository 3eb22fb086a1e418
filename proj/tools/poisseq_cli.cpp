// Command line front end: simulate, classify, cluster and evaluate count data.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "poisseq/poisseq.hpp"

namespace {

namespace fs = std::filesystem;
using namespace poisseq;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

#ifndef POISSEQ_VERSION
#define POISSEQ_VERSION "0.0.0"
#endif

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

/// Collects what a run read, wrote and found, then writes manifest.json.
class RunManifest {
public:
    explicit RunManifest(const CLI::App& command) : command_(command) {}

    void input(const std::string& role, const std::string& path) {
        inputs_[role] = Json{{"path", path}, {"sha256", sha256_file(path)}};
    }
    void output(const std::string& path) { outputs_.push_back(path); }
    Json& results() { return results_; }
    void set(const std::string& key, Json value) { extra_[key] = std::move(value); }

    void write(const std::string& out_dir) const {
        Json options = Json::object();
        for (const CLI::Option* opt : command_.get_options()) {
            if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
            const auto& name = opt->get_lnames().front();
            if (opt->get_items_expected_max() == 0) {
                options[name] = opt->count() > 0;
            } else if (opt->count() == 0) {
                options[name] = opt->get_default_str();
            } else if (opt->get_items_expected_max() > 1) {
                options[name] = opt->results();
            } else {
                options[name] = opt->results().back();
            }
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        Json j{{"tool", "poisseq"},
               {"version", POISSEQ_VERSION},
               {"subcommand", command_.get_name()},
               {"options", options},
               {"inputs", inputs_},
               {"outputs", outputs_},
               {"results", results_},
               {"wall_time_seconds", seconds}};
        for (const auto& [key, value] : extra_.items()) j[key] = value;
        write_json(j, (fs::path(out_dir) / "manifest.json").string());
    }

private:
    const CLI::App& command_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    Json inputs_ = Json::object();
    std::vector<std::string> outputs_;
    Json results_ = Json::object();
    Json extra_ = Json::object();
};

std::string prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

std::string out_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

Orientation parse_orientation(const std::string& text) {
    return text == "features-as-rows" ? Orientation::features_as_rows : Orientation::samples_as_rows;
}

std::size_t resolve_threads(std::size_t threads) {
    return threads == 0 ? default_thread_count() : threads;
}

// Option groups shared between subcommands.

struct InputArgs {
    std::string counts;
    std::string orientation = "samples-as-rows";
};

void add_input(CLI::App* cmd, InputArgs& args) {
    cmd->add_option("--counts", args.counts, "Count matrix TSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--orientation", args.orientation, "Row meaning of the counts file")
        ->check(CLI::IsMember({"samples-as-rows", "features-as-rows"}))
        ->capture_default_str();
}

struct FitArgs {
    std::string size_factors = "total";
    std::string transform = "on";
    std::string priors = "uniform";
    double beta = 1.0;
};

void add_fit(CLI::App* cmd, FitArgs& args) {
    cmd->add_option("--size-factors", args.size_factors, "total | quantile | median-ratio")
        ->check(CLI::IsMember({"total", "total-count", "quantile", "median-ratio"}))
        ->capture_default_str();
    cmd->add_option("--transform", args.transform, "Power-transform before fitting")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    cmd->add_option("--priors", args.priors, "uniform | empirical")
        ->check(CLI::IsMember({"uniform", "empirical"}))
        ->capture_default_str();
    cmd->add_option("--beta", args.beta, "Gamma prior shape and rate")->capture_default_str();
}

FitOptions fit_options(const FitArgs& args, double rho) {
    FitOptions o;
    o.method = parse_size_factor_method(args.size_factors);
    o.transform = args.transform == "on";
    o.priors = parse_prior_mode(args.priors);
    o.beta = args.beta;
    o.rho = rho;
    return o;
}

std::size_t count_errors(const std::vector<Prediction>& predictions,
                         const std::vector<std::size_t>& truth) {
    std::size_t errors = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].class_index != truth[i]) ++errors;
    }
    return errors;
}

/// Labels for `ids` expressed as indices into `class_names`.
std::vector<std::size_t> labels_for(const std::string& path, const std::vector<std::string>& ids,
                                    const std::vector<std::string>& class_names) {
    const auto [raw, names] = index_assignments(read_id_assignments(path), ids);
    std::vector<std::size_t> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto it = std::find(class_names.begin(), class_names.end(), names[raw[i]]);
        if (it == class_names.end()) {
            throw ValidationError("label '" + names[raw[i]] + "' for sample '" + ids[i] +
                                  "' is not a class of the model");
        }
        out[i] = static_cast<std::size_t>(it - class_names.begin());
    }
    return out;
}

// Subcommands.

struct SimulateArgs {
    SimulationConfig config;
    std::string out_dir;
    bool test_set = false;
};

void run_simulate(const CLI::App& cmd, const SimulateArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    const auto sim = simulate(args.config);
    write_count_matrix(sim.data.matrix(), out_path(dir, "counts.tsv"));
    write_labels(sim.data, out_path(dir, "labels.tsv"));
    write_json(to_json(sim), out_path(dir, "truth.json"));
    for (const auto* name : {"counts.tsv", "labels.tsv", "truth.json"}) manifest.output(out_path(dir, name));
    if (args.test_set) {
        const auto test = simulate_test_set(sim, args.config.seed);
        write_count_matrix(test.data.matrix(), out_path(dir, "test_counts.tsv"));
        write_labels(test.data, out_path(dir, "test_labels.tsv"));
        manifest.output(out_path(dir, "test_counts.tsv"));
        manifest.output(out_path(dir, "test_labels.tsv"));
    }
    std::size_t de = 0;
    for (const bool b : sim.truth.de_mask) de += b ? 1 : 0;
    manifest.results()["de_features"] = de;
    manifest.set("seed", args.config.seed);
    manifest.write(dir);
}

struct TrainArgs {
    InputArgs input;
    std::string labels;
    FitArgs fit;
    double rho = 0.0;
    std::string out_dir;
};

void run_train(const CLI::App& cmd, const TrainArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("counts", args.input.counts);
    manifest.input("labels", args.labels);
    const auto data =
        read_labeled_dataset(args.input.counts, args.labels, parse_orientation(args.input.orientation));
    const auto model = fit(data, fit_options(args.fit, args.rho));
    write_model(model, out_path(dir, "model.json"));
    manifest.output(out_path(dir, "model.json"));
    manifest.results()["alpha"] = model.alpha;
    manifest.results()["active_features"] = model.num_active_features();
    manifest.results()["training_errors"] = count_errors(predict(model, data.matrix()), data.labels());
    manifest.write(dir);
}

struct PredictArgs {
    std::string model;
    InputArgs input;
    std::string labels;
    std::string out_dir;
};

void run_predict(const CLI::App& cmd, const PredictArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("model", args.model);
    manifest.input("counts", args.input.counts);
    const auto model = read_model(args.model);
    const auto samples = read_count_matrix(args.input.counts, parse_orientation(args.input.orientation));
    if (samples.feature_ids() != model.feature_ids) {
        if (samples.num_features() != model.num_features()) {
            throw ValidationError("counts have " + std::to_string(samples.num_features()) +
                                  " features, model expects " + std::to_string(model.num_features()));
        }
        throw ValidationError("feature ids of the counts do not match the model");
    }
    const auto predictions = predict(model, samples);

    const auto path = out_path(dir, "predictions.tsv");
    auto out = detail::open_for_write(path);
    out << "id\tclass";
    for (const auto& name : model.class_names) out << "\tposterior_" << name;
    out << '\n';
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        out << samples.sample_ids()[i] << '\t' << model.class_names[predictions[i].class_index];
        for (const double p : predictions[i].posterior) out << '\t' << detail::format_double(p);
        out << '\n';
    }
    detail::finish_write(out, path);
    manifest.output(path);

    if (!args.labels.empty()) {
        manifest.input("labels", args.labels);
        const auto truth = labels_for(args.labels, samples.sample_ids(), model.class_names);
        manifest.results()["errors"] = count_errors(predictions, truth);
    }
    manifest.write(dir);
}

struct CvArgs {
    InputArgs input;
    std::string labels;
    FitArgs fit;
    std::vector<double> rho_grid;
    std::size_t folds = 5;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    std::string out_dir;
};

void run_cv(const CLI::App& cmd, const CvArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("counts", args.input.counts);
    manifest.input("labels", args.labels);
    const auto data =
        read_labeled_dataset(args.input.counts, args.labels, parse_orientation(args.input.orientation));

    CvOptions options;
    options.fit = fit_options(args.fit, 0.0);
    options.rho_grid = args.rho_grid.empty() ? default_rho_grid(data, options.fit) : args.rho_grid;
    options.folds = args.folds;
    options.seed = args.seed;
    options.threads = resolve_threads(args.threads);
    const auto cv = cross_validate(data, options);
    for (const auto& w : cv.warnings) std::cerr << "warning: " << w << '\n';
    write_json(to_json(cv), out_path(dir, "cv.json"));

    auto refit = options.fit;
    refit.rho = cv.selected_rho;
    const auto model = fit(data, refit);
    write_model(model, out_path(dir, "model.json"));
    manifest.output(out_path(dir, "cv.json"));
    manifest.output(out_path(dir, "model.json"));
    manifest.results()["selected_rho"] = cv.selected_rho;
    manifest.results()["cv_errors"] = cv.errors[cv.selected_index];
    manifest.results()["active_features"] = model.num_active_features();
    manifest.set("seed", args.seed);
    manifest.set("threads_resolved", options.threads);
    manifest.write(dir);
}

struct DissimArgs {
    InputArgs input;
    std::string measure = "poisson";
    std::string size_factors = "total";
    std::string axis = "samples";
    std::string transform = "on";
    double beta = 1.0;
    std::size_t threads = 0;
    std::string out_dir;
};

void run_dissim(const CLI::App& cmd, const DissimArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("counts", args.input.counts);
    const auto matrix = read_count_matrix(args.input.counts, parse_orientation(args.input.orientation));
    DissimilarityOptions options;
    options.measure = parse_measure(args.measure);
    options.method = parse_size_factor_method(args.size_factors);
    options.transform = args.transform == "on";
    options.beta = args.beta;
    options.threads = resolve_threads(args.threads);
    const auto d = args.axis == "features" ? feature_dissimilarity_matrix(matrix, options)
                                           : dissimilarity_matrix(matrix, options);
    write_dissimilarity_matrix(d, out_path(dir, "dissimilarity.tsv"));
    auto sidecar = sidecar_json(d);
    sidecar["axis"] = args.axis;
    write_json(sidecar, out_path(dir, "dissimilarity.json"));
    manifest.output(out_path(dir, "dissimilarity.tsv"));
    manifest.output(out_path(dir, "dissimilarity.json"));
    manifest.results()["alpha"] = d.alpha;
    manifest.results()["size"] = d.size();
    manifest.set("threads_resolved", options.threads);
    manifest.write(dir);
}

struct ClusterArgs {
    std::string dissim;
    std::size_t cut_k = 0;
    std::string labels;
    bool sweep = false;
    std::string out_dir;
};

void run_cluster(const CLI::App& cmd, const ClusterArgs& args) {
    if (args.sweep && args.labels.empty()) throw ValidationError("--sweep needs --labels");
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("dissimilarity", args.dissim);
    const auto d = read_dissimilarity_matrix(args.dissim);
    const auto tree = complete_linkage(d);
    write_newick(tree, out_path(dir, "tree.nwk"));
    manifest.output(out_path(dir, "tree.nwk"));

    std::optional<Partition> truth;
    if (!args.labels.empty()) {
        manifest.input("labels", args.labels);
        truth = Partition(index_assignments(read_id_assignments(args.labels), d.ids()).first);
    }
    if (args.cut_k > 0) {
        const auto clusters = cut_tree(tree, args.cut_k);
        write_partition(clusters, d.ids(), out_path(dir, "partition.tsv"));
        manifest.output(out_path(dir, "partition.tsv"));
        if (truth) manifest.results()["cer"] = cer(clusters, *truth);
    }
    if (args.sweep) {
        const auto path = out_path(dir, "sweep.tsv");
        auto out = detail::open_for_write(path);
        out << "k\tcer\n";
        for (std::size_t k = 1; k <= d.size(); ++k) {
            out << k << '\t' << detail::format_double(cer(cut_tree(tree, k), *truth)) << '\n';
        }
        detail::finish_write(out, path);
        manifest.output(path);
    }
    manifest.write(dir);
}

struct CerArgs {
    std::string first;
    std::string second;
    std::string out_dir;
};

void run_cer(const CLI::App& cmd, const CerArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("first", args.first);
    manifest.input("second", args.second);
    const auto [ids, p] = read_partition(args.first);
    const auto q = Partition(index_assignments(read_id_assignments(args.second), ids).first);
    const double value = cer(p, q);
    write_json(Json{{"cer", value}, {"n", ids.size()}}, out_path(dir, "cer.json"));
    manifest.output(out_path(dir, "cer.json"));
    manifest.results()["cer"] = value;
    manifest.write(dir);
    std::cout << detail::format_double(value) << '\n';
}

struct TransformArgs {
    InputArgs input;
    double z = kOverdispersionZ;
    bool write_matrix = false;
    std::string out_dir;
};

void run_transform(const CLI::App& cmd, const TransformArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("counts", args.input.counts);
    const auto matrix = read_count_matrix(args.input.counts, parse_orientation(args.input.orientation));
    const auto result = find_alpha(matrix, args.z);
    write_json(to_json(result), out_path(dir, "transform.json"));
    manifest.output(out_path(dir, "transform.json"));
    if (args.write_matrix) {
        write_count_matrix(result.matrix, out_path(dir, "transformed.tsv"));
        manifest.output(out_path(dir, "transformed.tsv"));
    }
    manifest.results() = to_json(result);
    manifest.write(dir);
    std::cout << to_json(result).dump() << '\n';
}

struct SizeFactorArgs {
    InputArgs input;
    std::string method = "total";
    std::string out_dir;
};

void run_size_factors(const CLI::App& cmd, const SizeFactorArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    manifest.input("counts", args.input.counts);
    const auto matrix = read_count_matrix(args.input.counts, parse_orientation(args.input.orientation));
    const auto factors = estimate_size_factors(matrix, parse_size_factor_method(args.method));
    write_size_factors(factors, matrix.sample_ids(), out_path(dir, "size_factors.tsv"));
    write_json(to_json(factors), out_path(dir, "size_factors.json"));
    manifest.output(out_path(dir, "size_factors.tsv"));
    manifest.output(out_path(dir, "size_factors.json"));
    manifest.write(dir);
}

struct ReplicateArgs {
    std::string task = "classify";
    SimulationConfig config;
    std::size_t reps = 50;
    std::size_t folds = 5;
    FitArgs fit;
    std::string measure = "poisson";
    std::size_t threads = 0;
    std::string out_dir;
};

void run_replicate(const CLI::App& cmd, const ReplicateArgs& args) {
    const auto dir = prepare_out_dir(args.out_dir);
    RunManifest manifest(cmd);
    ReplicateSummary summary;
    if (args.task == "classify") {
        ClassificationExperiment e;
        e.simulation = args.config;
        e.fit = fit_options(args.fit, 0.0);
        e.reps = args.reps;
        e.folds = args.folds;
        e.threads = resolve_threads(args.threads);
        summary = run_classification_experiment(e);
    } else {
        ClusteringExperiment e;
        e.simulation = args.config;
        e.reps = args.reps;
        e.dissimilarity.measure = parse_measure(args.measure);
        e.dissimilarity.method = parse_size_factor_method(args.fit.size_factors);
        e.dissimilarity.transform = args.fit.transform == "on";
        e.dissimilarity.beta = args.fit.beta;
        e.dissimilarity.threads = resolve_threads(args.threads);
        summary = run_clustering_experiment(e);
    }
    const char* metric = args.task == "classify" ? "test_errors" : "cer";

    const auto path = out_path(dir, "replicates.tsv");
    auto out = detail::open_for_write(path);
    out << "replicate\t" << metric << (summary.nonzero.empty() ? "" : "\tactive_features") << '\n';
    for (std::size_t r = 0; r < summary.values.size(); ++r) {
        out << r + 1 << '\t' << detail::format_double(summary.values[r]);
        if (!summary.nonzero.empty()) out << '\t' << detail::format_double(summary.nonzero[r]);
        out << '\n';
    }
    detail::finish_write(out, path);

    Json j{{"task", args.task},
           {"metric", metric},
           {"reps", args.reps},
           {"mean", summary.mean},
           {"standard_error", summary.standard_error},
           {"simulation", to_json(args.config)}};
    if (!summary.nonzero.empty()) j["mean_active_features"] = summary.mean_nonzero;
    write_json(j, out_path(dir, "summary.json"));
    manifest.output(path);
    manifest.output(out_path(dir, "summary.json"));
    manifest.results() = j;
    manifest.set("seed", args.config.seed);
    manifest.write(dir);
    std::cout << metric << "\tmean " << detail::format_double(summary.mean) << "\tse "
              << detail::format_double(summary.standard_error) << '\n';
}

void add_simulation(CLI::App* cmd, SimulationConfig& c, bool required) {
    auto mark = [required](CLI::Option* opt) { return required ? opt->required() : opt->capture_default_str(); };
    mark(cmd->add_option("--n", c.n, "Samples")->check(CLI::PositiveNumber));
    mark(cmd->add_option("--p", c.p, "Features")->check(CLI::PositiveNumber));
    mark(cmd->add_option("--k", c.K, "Classes")->check(CLI::PositiveNumber));
    mark(cmd->add_option("--phi", c.phi, "Negative binomial overdispersion"));
    mark(cmd->add_option("--sigma", c.sigma, "Log-scale spread of class ratios"));
    mark(cmd->add_option("--seed", c.seed, "Random seed"));
    cmd->add_option("--de-prob", c.de_prob, "Probability a feature is differentially expressed")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"poisseq: Poisson models for sequencing count data"};
    app.set_version_flag("--version", POISSEQ_VERSION);
    app.require_subcommand(1);

    SimulateArgs simulate_args;
    auto* simulate_cmd = app.add_subcommand("simulate", "Draw counts from the negative binomial model");
    add_simulation(simulate_cmd, simulate_args.config, true);
    simulate_cmd->add_option("--out-dir", simulate_args.out_dir)->required();
    simulate_cmd->add_flag("--test-set", simulate_args.test_set, "Also draw a test set of the same size");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Fit a (sparse) PLDA classifier");
    add_input(train_cmd, train_args.input);
    train_cmd->add_option("--labels", train_args.labels)->required()->check(CLI::ExistingFile);
    add_fit(train_cmd, train_args.fit);
    train_cmd->add_option("--rho", train_args.rho, "Shrinkage threshold")->capture_default_str();
    train_cmd->add_option("--out-dir", train_args.out_dir)->required();

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "Classify samples with a fitted model");
    predict_cmd->add_option("--model", predict_args.model)->required()->check(CLI::ExistingFile);
    add_input(predict_cmd, predict_args.input);
    predict_cmd->add_option("--labels", predict_args.labels, "Optional true labels to count errors")
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--out-dir", predict_args.out_dir)->required();

    CvArgs cv_args;
    auto* cv_cmd = app.add_subcommand("cv", "Choose rho by stratified cross-validation");
    add_input(cv_cmd, cv_args.input);
    cv_cmd->add_option("--labels", cv_args.labels)->required()->check(CLI::ExistingFile);
    add_fit(cv_cmd, cv_args.fit);
    cv_cmd->add_option("--rho-grid", cv_args.rho_grid, "Comma-separated rho values")->delimiter(',');
    cv_cmd->add_option("--folds", cv_args.folds)->capture_default_str();
    cv_cmd->add_option("--seed", cv_args.seed)->capture_default_str();
    cv_cmd->add_option("--threads", cv_args.threads, "0 = all cores")->capture_default_str();
    cv_cmd->add_option("--out-dir", cv_args.out_dir)->required();

    DissimArgs dissim_args;
    auto* dissim_cmd = app.add_subcommand("dissim", "Pairwise dissimilarity matrix");
    add_input(dissim_cmd, dissim_args.input);
    dissim_cmd->add_option("--measure", dissim_args.measure)
        ->check(CLI::IsMember({"poisson", "sq-euclidean"}))
        ->capture_default_str();
    dissim_cmd->add_option("--size-factors", dissim_args.size_factors)
        ->check(CLI::IsMember({"total", "total-count", "quantile", "median-ratio"}))
        ->capture_default_str();
    dissim_cmd->add_option("--axis", dissim_args.axis)
        ->check(CLI::IsMember({"samples", "features"}))
        ->capture_default_str();
    dissim_cmd->add_option("--transform", dissim_args.transform)
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    dissim_cmd->add_option("--beta", dissim_args.beta)->capture_default_str();
    dissim_cmd->add_option("--threads", dissim_args.threads, "0 = all cores")->capture_default_str();
    dissim_cmd->add_option("--out-dir", dissim_args.out_dir)->required();

    ClusterArgs cluster_args;
    auto* cluster_cmd = app.add_subcommand("cluster", "Complete-linkage clustering of a dissimilarity TSV");
    cluster_cmd->add_option("--dissim", cluster_args.dissim)->required()->check(CLI::ExistingFile);
    cluster_cmd->add_option("--cut-k", cluster_args.cut_k, "Number of clusters to cut into");
    cluster_cmd->add_option("--labels", cluster_args.labels, "True classes for scoring")
        ->check(CLI::ExistingFile);
    cluster_cmd->add_flag("--sweep", cluster_args.sweep, "Write CER for every k");
    cluster_cmd->add_option("--out-dir", cluster_args.out_dir)->required();

    CerArgs cer_args;
    auto* cer_cmd = app.add_subcommand("cer", "Clustering error rate between two partitions");
    cer_cmd->add_option("first", cer_args.first)->required()->check(CLI::ExistingFile);
    cer_cmd->add_option("second", cer_args.second)->required()->check(CLI::ExistingFile);
    cer_cmd->add_option("--out-dir", cer_args.out_dir)->required();

    TransformArgs transform_args;
    auto* transform_cmd = app.add_subcommand("transform", "Estimate the power transform exponent");
    add_input(transform_cmd, transform_args.input);
    transform_cmd->add_option("--z", transform_args.z, "Overdispersion threshold in null sds")
        ->capture_default_str();
    transform_cmd->add_flag("--write-matrix", transform_args.write_matrix);
    transform_cmd->add_option("--out-dir", transform_args.out_dir)->required();

    SizeFactorArgs sf_args;
    auto* sf_cmd = app.add_subcommand("size-factors", "Estimate per-sample size factors");
    add_input(sf_cmd, sf_args.input);
    sf_cmd->add_option("--method", sf_args.method)
        ->check(CLI::IsMember({"total", "total-count", "quantile", "median-ratio"}))
        ->capture_default_str();
    sf_cmd->add_option("--out-dir", sf_args.out_dir)->required();

    ReplicateArgs rep_args;
    auto* rep_cmd = app.add_subcommand("replicate", "Repeat a simulation experiment and summarize");
    rep_cmd->add_option("--task", rep_args.task)
        ->check(CLI::IsMember({"classify", "cluster"}))
        ->capture_default_str();
    add_simulation(rep_cmd, rep_args.config, false);
    rep_cmd->add_option("--reps", rep_args.reps)->capture_default_str();
    rep_cmd->add_option("--folds", rep_args.folds)->capture_default_str();
    add_fit(rep_cmd, rep_args.fit);
    rep_cmd->add_option("--measure", rep_args.measure)
        ->check(CLI::IsMember({"poisson", "sq-euclidean"}))
        ->capture_default_str();
    rep_cmd->add_option("--threads", rep_args.threads, "0 = all cores")->capture_default_str();
    rep_cmd->add_option("--out-dir", rep_args.out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (simulate_cmd->parsed()) run_simulate(*simulate_cmd, simulate_args);
        else if (train_cmd->parsed()) run_train(*train_cmd, train_args);
        else if (predict_cmd->parsed()) run_predict(*predict_cmd, predict_args);
        else if (cv_cmd->parsed()) run_cv(*cv_cmd, cv_args);
        else if (dissim_cmd->parsed()) run_dissim(*dissim_cmd, dissim_args);
        else if (cluster_cmd->parsed()) run_cluster(*cluster_cmd, cluster_args);
        else if (cer_cmd->parsed()) run_cer(*cer_cmd, cer_args);
        else if (transform_cmd->parsed()) run_transform(*transform_cmd, transform_args);
        else if (sf_cmd->parsed()) run_size_factors(*sf_cmd, sf_args);
        else if (rep_cmd->parsed()) run_replicate(*rep_cmd, rep_args);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
