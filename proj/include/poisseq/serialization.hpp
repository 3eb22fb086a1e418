#ifndef POISSEQ_SERIALIZATION_HPP
#define POISSEQ_SERIALIZATION_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poisseq/clustering.hpp"
#include "poisseq/core_data.hpp"
#include "poisseq/detail/text.hpp"
#include "poisseq/dissimilarity.hpp"
#include "poisseq/error.hpp"
#include "poisseq/plda.hpp"
#include "poisseq/power_transform.hpp"
#include "poisseq/simulator.hpp"
#include "poisseq/size_factors.hpp"

/**
 * @file serialization.hpp
 *
 * @brief JSON and TSV forms of fitted models and results.
 *
 * Doubles are written in the shortest decimal form that reads back to the
 * identical value.
 */

namespace poisseq {

using Json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline Json split_rows(const std::vector<double>& flat, std::size_t rows) {
    Json out = Json::array();
    const std::size_t cols = rows == 0 ? 0 : flat.size() / rows;
    for (std::size_t r = 0; r < rows; ++r) {
        out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                          flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
    }
    return out;
}

inline std::vector<double> join_rows(const Json& rows, std::size_t expected_rows,
                                     std::size_t expected_cols, const char* field) {
    if (!rows.is_array() || rows.size() != expected_rows) {
        throw ParseError(std::string("model field '") + field + "' has the wrong number of rows");
    }
    std::vector<double> flat;
    flat.reserve(expected_rows * expected_cols);
    for (const auto& row : rows) {
        auto values = row.get<std::vector<double>>();
        if (values.size() != expected_cols) {
            throw ParseError(std::string("model field '") + field + "' has a row of the wrong length");
        }
        flat.insert(flat.end(), values.begin(), values.end());
    }
    return flat;
}

} // namespace detail

inline Json to_json(const SizeFactors& factors) {
    return Json{{"method", to_string(factors.method)},
                {"values", factors.values},
                {"unnormalized", factors.unnormalized},
                {"training_total", factors.aux.training_total},
                {"unnormalized_sum", factors.aux.unnormalized_sum},
                {"usable_features", factors.aux.usable_features},
                {"geometric_means", factors.aux.geometric_means}};
}

inline SizeFactors size_factors_from_json(const Json& j) {
    SizeFactors out;
    out.method = parse_size_factor_method(j.at("method").get<std::string>());
    out.values = j.at("values").get<std::vector<double>>();
    out.unnormalized = j.at("unnormalized").get<std::vector<double>>();
    out.aux.training_total = j.at("training_total").get<double>();
    out.aux.unnormalized_sum = j.at("unnormalized_sum").get<double>();
    out.aux.usable_features = j.at("usable_features").get<std::vector<std::size_t>>();
    out.aux.geometric_means = j.at("geometric_means").get<std::vector<double>>();
    if (out.aux.usable_features.size() != out.aux.geometric_means.size()) {
        throw ParseError("size factor geometric means do not match usable features");
    }
    return out;
}

inline Json to_json(const PldaModel& model) {
    const std::size_t K = model.num_classes();
    return Json{{"format", "poisseq-plda"},
                {"version", kModelFormatVersion},
                {"size_factor_method", to_string(model.size_factors.method)},
                {"alpha", model.alpha},
                {"beta", model.beta},
                {"rho", model.rho},
                {"prior_mode", to_string(model.prior_mode)},
                {"priors", model.priors},
                {"class_names", model.class_names},
                {"feature_ids", model.feature_ids},
                {"g_hat", model.g_hat},
                {"d_hat", detail::split_rows(model.d_hat, K)},
                {"n_hat_class_sums", detail::split_rows(model.n_hat_class_sums, K)},
                {"size_factors", to_json(model.size_factors)}};
}

inline PldaModel plda_model_from_json(const Json& j) {
    try {
        if (j.at("format").get<std::string>() != "poisseq-plda") {
            throw ParseError("not a PLDA model file");
        }
        if (j.at("version").get<int>() != kModelFormatVersion) {
            throw ParseError("unsupported model version");
        }
        PldaModel model;
        model.size_factors = size_factors_from_json(j.at("size_factors"));
        model.alpha = j.at("alpha").get<double>();
        model.beta = j.at("beta").get<double>();
        model.rho = j.at("rho").get<double>();
        model.prior_mode = parse_prior_mode(j.at("prior_mode").get<std::string>());
        model.priors = j.at("priors").get<std::vector<double>>();
        model.class_names = j.at("class_names").get<std::vector<std::string>>();
        model.feature_ids = j.at("feature_ids").get<std::vector<std::string>>();
        model.g_hat = j.at("g_hat").get<std::vector<double>>();
        const std::size_t K = model.class_names.size();
        const std::size_t p = model.g_hat.size();
        model.d_hat = detail::join_rows(j.at("d_hat"), K, p, "d_hat");
        model.n_hat_class_sums = detail::join_rows(j.at("n_hat_class_sums"), K, p, "n_hat_class_sums");
        if (model.priors.size() != K || model.feature_ids.size() != p) {
            throw ParseError("model arrays have inconsistent sizes");
        }
        for (const double d : model.d_hat) {
            if (!(d > 0.0)) throw ParseError("model class ratios must be positive");
        }
        return model;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("malformed model JSON: ") + e.what());
    }
}

inline Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_json(const Json& j, const std::string& path) {
    auto out = detail::open_for_write(path);
    out << j.dump(2) << '\n';
    detail::finish_write(out, path);
}

inline void write_model(const PldaModel& model, const std::string& path) {
    write_json(to_json(model), path);
}

inline PldaModel read_model(const std::string& path) { return plda_model_from_json(read_json(path)); }

/// Two-column TSV of sample id and factor.
inline void write_size_factors(const SizeFactors& factors, const std::vector<std::string>& ids,
                               const std::string& path) {
    if (ids.size() != factors.values.size()) throw ValidationError("size factor / id count mismatch");
    auto out = detail::open_for_write(path);
    out << "id\tsize_factor\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << '\t' << detail::format_double(factors.values[i]) << '\n';
    }
    detail::finish_write(out, path);
}

inline Json to_json(const TransformResult& result) {
    return Json{{"alpha", result.alpha},
                {"statistic", result.statistic},
                {"target", result.target},
                {"converged", result.converged},
                {"overdispersed", result.overdispersed},
                {"zero_features", result.zero_features}};
}

inline Json to_json(const CvResult& cv) {
    return Json{{"rho_grid", cv.rho_grid},
                {"errors", cv.errors},
                {"error_rate", cv.error_rate},
                {"mean_nonzero", cv.mean_nonzero},
                {"folds", cv.folds},
                {"selected_index", cv.selected_index},
                {"selected_rho", cv.selected_rho},
                {"warnings", cv.warnings}};
}

inline Json to_json(const SimulationConfig& c) {
    return Json{{"n", c.n},         {"p", c.p},         {"k", c.K},      {"phi", c.phi},
                {"sigma", c.sigma}, {"de_prob", c.de_prob}, {"seed", c.seed}};
}

inline Json to_json(const SimulatedDataset& sim) {
    std::vector<int> mask(sim.truth.de_mask.begin(), sim.truth.de_mask.end());
    return Json{{"config", to_json(sim.config)},
                {"s", sim.truth.s},
                {"g", sim.truth.g},
                {"d", detail::split_rows(sim.truth.d, sim.config.K)},
                {"de_mask", mask}};
}

/// Sidecar describing how a dissimilarity matrix was computed.
inline Json sidecar_json(const DissimilarityMatrix& d) {
    return Json{{"measure", to_string(d.measure())},
                {"size_factor_method", to_string(d.method())},
                {"alpha", d.alpha},
                {"beta", d.beta},
                {"n", d.size()}};
}

inline void write_newick(const Dendrogram& dendrogram, const std::string& path) {
    auto out = detail::open_for_write(path);
    out << to_newick(dendrogram) << '\n';
    detail::finish_write(out, path);
}

} // namespace poisseq

#endif
