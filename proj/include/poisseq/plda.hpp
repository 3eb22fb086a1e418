#ifndef POISSEQ_PLDA_HPP
#define POISSEQ_PLDA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poisseq/core_data.hpp"
#include "poisseq/error.hpp"
#include "poisseq/parallel.hpp"
#include "poisseq/power_transform.hpp"
#include "poisseq/size_factors.hpp"

/**
 * @file plda.hpp
 *
 * @brief Poisson linear discriminant analysis and its sparse variant.
 *
 * Counts are modelled as X_ij | y_i = k ~ Poisson(s_i g_j d_kj). Size factors
 * s_i and feature rates g_j = X_{.j} are estimated without labels; the class
 * ratios d_kj get a Gamma(beta, beta) posterior mean, optionally
 * soft-thresholded toward 1 by rho so that features with every d_kj = 1 drop
 * out of the decision rule.
 */

namespace poisseq {

enum class PriorMode { uniform, empirical };

inline std::string_view to_string(PriorMode mode) {
    return mode == PriorMode::uniform ? "uniform" : "empirical";
}

inline PriorMode parse_prior_mode(std::string_view text) {
    if (text == "uniform") return PriorMode::uniform;
    if (text == "empirical") return PriorMode::empirical;
    throw ValidationError("unknown prior mode '" + std::string(text) + "'");
}

struct FitOptions {
    SizeFactorMethod method = SizeFactorMethod::total_count;
    double rho = 0.0;
    double beta = 1.0;
    PriorMode priors = PriorMode::uniform;
    bool transform = true;
};

/// sign(x) * max(|x| - t, 0).
inline double soft_threshold(double x, double t) {
    if (t < 0.0) throw ValidationError("soft threshold must be nonnegative");
    const double magnitude = std::abs(x) - t;
    if (!(magnitude > 0.0)) return 0.0;
    return x > 0.0 ? magnitude : -magnitude;
}

/**
 * @brief Shrunken class ratio from posterior shape a and rate b.
 *
 * Written case by case so that rho = 0 returns a / b bit for bit, which is
 * exactly the unshrunken posterior mean. Equivalent to 1 + S(a/b - 1, rho/sqrt(b)).
 */
inline double shrunken_ratio(double a, double b, double rho) {
    const double ratio = a / b;
    const double root_b = std::sqrt(b);
    if (root_b * (ratio - 1.0) > rho) return ratio - rho / root_b;
    if (root_b * (1.0 - ratio) > rho) return ratio + rho / root_b;
    return 1.0;
}

/// Everything a fit needs that does not depend on rho.
struct PldaStatistics {
    SizeFactors size_factors;
    double alpha = 1.0;
    double beta = 1.0;
    PriorMode prior_mode = PriorMode::uniform;
    std::vector<double> g_hat;
    /// K x p row-major: X_{C_k j}.
    std::vector<double> class_counts;
    /// K x p row-major: sum over i in C_k of s_i g_j.
    std::vector<double> n_hat_class_sums;
    std::vector<double> priors;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_ids;

    std::size_t num_classes() const { return class_names.size(); }
    std::size_t num_features() const { return g_hat.size(); }

    /// Smallest rho that sets every ratio to 1: max over (k, j) of sqrt(b)|a/b - 1|.
    double rho_max() const {
        double out = 0.0;
        for (std::size_t idx = 0; idx < class_counts.size(); ++idx) {
            const double a = class_counts[idx] + beta;
            const double b = n_hat_class_sums[idx] + beta;
            out = std::max(out, std::sqrt(b) * std::abs(a / b - 1.0));
        }
        return out;
    }
};

struct PldaModel {
    SizeFactors size_factors;
    double alpha = 1.0;
    double beta = 1.0;
    double rho = 0.0;
    PriorMode prior_mode = PriorMode::uniform;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_ids;
    std::vector<double> g_hat;
    /// K x p row-major, every entry > 0.
    std::vector<double> d_hat;
    /// K x p row-major.
    std::vector<double> n_hat_class_sums;
    std::vector<double> priors;

    std::size_t num_classes() const { return class_names.size(); }
    std::size_t num_features() const { return g_hat.size(); }
    double d(std::size_t k, std::size_t j) const { return d_hat[k * num_features() + j]; }

    /// Features with d_kj != 1 for at least one class.
    std::size_t num_active_features() const {
        const std::size_t p = num_features();
        std::size_t active = 0;
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t k = 0; k < num_classes(); ++k) {
                if (d_hat[k * p + j] != 1.0) {
                    ++active;
                    break;
                }
            }
        }
        return active;
    }
};

struct Prediction {
    std::size_t class_index = 0;
    std::vector<double> scores;
    std::vector<double> posterior;
};

inline PldaStatistics compute_fit_statistics(const LabeledDataset& data, const FitOptions& options) {
    if (!(options.beta > 0.0)) throw ValidationError("beta must be positive");
    const std::size_t K = data.num_classes();
    if (K < 2) throw ValidationError("classification needs at least two classes");

    PldaStatistics stats;
    stats.beta = options.beta;
    stats.prior_mode = options.priors;
    stats.class_names = data.class_names();
    stats.feature_ids = data.matrix().feature_ids();

    const CountMatrix* matrix = &data.matrix();
    std::optional<TransformResult> transformed;
    if (options.transform) {
        transformed = find_alpha(data.matrix());
        stats.alpha = transformed->alpha;
        matrix = &transformed->matrix;
    }

    stats.size_factors = estimate_size_factors(*matrix, options.method);
    stats.g_hat = column_totals(*matrix);

    const std::size_t p = matrix->num_features();
    stats.class_counts.assign(K * p, 0.0);
    stats.n_hat_class_sums.assign(K * p, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        double class_size_factor = 0.0;
        for (const auto i : data.members(k)) class_size_factor += stats.size_factors.values[i];
        for (const auto i : data.members(k)) {
            const auto row = matrix->row(i);
            for (std::size_t j = 0; j < p; ++j) stats.class_counts[k * p + j] += row[j];
        }
        for (std::size_t j = 0; j < p; ++j) {
            stats.n_hat_class_sums[k * p + j] = class_size_factor * stats.g_hat[j];
        }
    }

    stats.priors.resize(K);
    const double n = static_cast<double>(data.matrix().num_samples());
    for (std::size_t k = 0; k < K; ++k) {
        stats.priors[k] = options.priors == PriorMode::uniform
                              ? 1.0 / static_cast<double>(K)
                              : static_cast<double>(data.members(k).size()) / n;
    }
    return stats;
}

/// Shrinks the posterior means in `stats` toward 1 with threshold rho.
inline PldaModel shrink(const PldaStatistics& stats, double rho) {
    if (!(rho >= 0.0)) throw ValidationError("rho must be nonnegative");
    PldaModel model;
    model.size_factors = stats.size_factors;
    model.alpha = stats.alpha;
    model.beta = stats.beta;
    model.rho = rho;
    model.prior_mode = stats.prior_mode;
    model.class_names = stats.class_names;
    model.feature_ids = stats.feature_ids;
    model.g_hat = stats.g_hat;
    model.n_hat_class_sums = stats.n_hat_class_sums;
    model.priors = stats.priors;
    model.d_hat.resize(stats.class_counts.size());
    for (std::size_t idx = 0; idx < model.d_hat.size(); ++idx) {
        const double a = stats.class_counts[idx] + stats.beta;
        const double b = stats.n_hat_class_sums[idx] + stats.beta;
        model.d_hat[idx] = shrunken_ratio(a, b, rho);
    }
    return model;
}

/// Fits PLDA (rho = 0) or sparse PLDA (rho > 0).
inline PldaModel fit(const LabeledDataset& data, const FitOptions& options = {}) {
    return shrink(compute_fit_statistics(data, options), options.rho);
}

namespace detail {

/// log d and sum_j g_j d_kj, computed once per model for batch scoring.
struct ScoringTables {
    std::vector<double> log_d;
    std::vector<double> rate_totals;
    std::vector<double> log_priors;

    explicit ScoringTables(const PldaModel& model) {
        const std::size_t K = model.num_classes();
        const std::size_t p = model.num_features();
        log_d.resize(K * p);
        rate_totals.assign(K, 0.0);
        log_priors.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < p; ++j) {
                log_d[k * p + j] = std::log(model.d_hat[k * p + j]);
                rate_totals[k] += model.g_hat[j] * model.d_hat[k * p + j];
            }
            log_priors[k] = std::log(model.priors[k]);
        }
    }
};

/// Scores an already-transformed sample with a given size factor.
inline Prediction score_scaled(const PldaModel& model, const ScoringTables& tables,
                               std::span<const double> x_star, double s_star) {
    const std::size_t K = model.num_classes();
    const std::size_t p = model.num_features();
    if (x_star.size() != p) {
        throw ValidationError("sample has " + std::to_string(x_star.size()) +
                              " features, model expects " + std::to_string(p));
    }
    Prediction out;
    out.scores.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        double linear = 0.0;
        for (std::size_t j = 0; j < p; ++j) linear += x_star[j] * tables.log_d[k * p + j];
        out.scores[k] = linear - s_star * tables.rate_totals[k] + tables.log_priors[k];
    }
    out.class_index = 0;
    for (std::size_t k = 1; k < K; ++k) {
        if (out.scores[k] > out.scores[out.class_index]) out.class_index = k;
    }
    const double top = out.scores[out.class_index];
    out.posterior.resize(K);
    double norm = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        out.posterior[k] = std::exp(out.scores[k] - top);
        norm += out.posterior[k];
    }
    for (auto& v : out.posterior) v /= norm;
    return out;
}

inline Prediction score(const PldaModel& model, const ScoringTables& tables,
                        std::span<const double> x_star) {
    const std::size_t p = model.num_features();
    if (x_star.size() != p) {
        throw ValidationError("sample has " + std::to_string(x_star.size()) +
                              " features, model expects " + std::to_string(p));
    }
    std::vector<double> transformed;
    if (model.alpha != 1.0) {
        transformed.resize(p);
        for (std::size_t j = 0; j < p; ++j) transformed[j] = std::pow(x_star[j], model.alpha);
        x_star = transformed;
    }
    return score_scaled(model, tables, x_star,
                        estimate_test_size_factor(model.size_factors, x_star, p));
}

} // namespace detail

/**
 * @brief Classifies one raw-count sample.
 *
 * The sample is power-transformed with the model's alpha, given a size
 * factor on the training scale, and scored as
 * sum_j x_j log d_kj - s* sum_j g_j d_kj + log pi_k. Ties go to the lowest
 * class index.
 */
inline Prediction predict(const PldaModel& model, std::span<const double> x_star) {
    return detail::score(model, detail::ScoringTables(model), x_star);
}

/**
 * @brief Scores a sample that is already on the model's transformed scale,
 * using the supplied size factor instead of estimating one.
 */
inline Prediction predict_with_size_factor(const PldaModel& model, std::span<const double> x_star,
                                           double s_star) {
    return detail::score_scaled(model, detail::ScoringTables(model), x_star, s_star);
}

inline std::vector<Prediction> predict(const PldaModel& model, const CountMatrix& samples) {
    const detail::ScoringTables tables(model);
    std::vector<Prediction> out;
    out.reserve(samples.num_samples());
    for (std::size_t i = 0; i < samples.num_samples(); ++i) {
        out.push_back(detail::score(model, tables, samples.row(i)));
    }
    return out;
}

/// {0} followed by 29 values geometrically spaced from 1e-3 rho_max to rho_max.
inline std::vector<double> default_rho_grid(double rho_max) {
    std::vector<double> grid{0.0};
    if (!(rho_max > 0.0)) return grid;
    constexpr int kPoints = 29;
    const double lo = std::log(1e-3 * rho_max);
    const double hi = std::log(rho_max);
    for (int t = 0; t < kPoints; ++t) {
        grid.push_back(t == kPoints - 1 ? rho_max : std::exp(lo + (hi - lo) * t / (kPoints - 1)));
    }
    return grid;
}

/// Default grid for `data`: rho_max comes from a fit on all of it.
inline std::vector<double> default_rho_grid(const LabeledDataset& data, const FitOptions& options) {
    return default_rho_grid(compute_fit_statistics(data, options).rho_max());
}

struct CvOptions {
    FitOptions fit;
    std::vector<double> rho_grid;
    std::size_t folds = 5;
    std::uint64_t seed = 1;
    /// 0 = default_thread_count().
    std::size_t threads = 1;
};

struct CvResult {
    std::vector<double> rho_grid;
    /// Held-out misclassifications summed over folds.
    std::vector<std::size_t> errors;
    /// errors / n.
    std::vector<double> error_rate;
    /// Mean over folds of the number of active features.
    std::vector<double> mean_nonzero;
    std::size_t folds = 0;
    std::size_t selected_index = 0;
    double selected_rho = 0.0;
    std::vector<std::string> warnings;
};

/**
 * @brief Stratified fold assignment.
 *
 * Each class's members are shuffled with a generator seeded by `seed` and
 * dealt to folds in turn; the dealing position carries over between classes
 * so fold sizes stay balanced.
 */
inline std::vector<std::size_t> stratified_folds(const LabeledDataset& data, std::size_t folds,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> fold_of(data.matrix().num_samples());
    std::size_t position = 0;
    for (std::size_t k = 0; k < data.num_classes(); ++k) {
        auto members = data.members(k);
        std::shuffle(members.begin(), members.end(), rng);
        for (const auto i : members) fold_of[i] = position++ % folds;
    }
    return fold_of;
}

/**
 * @brief K-fold cross-validation over a grid of rho values.
 *
 * The transform, size factors and all parameters are refit on each training
 * portion. The selected rho is the smallest one attaining the minimum number
 * of held-out errors.
 */
inline CvResult cross_validate(const LabeledDataset& data, const CvOptions& options) {
    CvResult result;
    std::size_t smallest_class = data.matrix().num_samples();
    for (std::size_t k = 0; k < data.num_classes(); ++k) {
        smallest_class = std::min(smallest_class, data.members(k).size());
    }
    result.folds = options.folds;
    if (smallest_class < options.folds) {
        result.folds = smallest_class;
        result.warnings.push_back("smallest class has " + std::to_string(smallest_class) +
                                  " samples; folds reduced from " + std::to_string(options.folds) +
                                  " to " + std::to_string(smallest_class));
    }
    if (result.folds < 2) {
        throw ValidationError("cross-validation needs at least 2 folds and 2 samples per class");
    }

    if (options.rho_grid.empty()) throw ValidationError("rho grid is empty");
    result.rho_grid = options.rho_grid;
    for (const double rho : result.rho_grid) {
        if (!(rho >= 0.0)) throw ValidationError("rho grid values must be nonnegative");
    }

    const auto fold_of = stratified_folds(data, result.folds, options.seed);
    const std::size_t G = result.rho_grid.size();
    std::vector<std::vector<std::size_t>> fold_errors(result.folds, std::vector<std::size_t>(G, 0));
    std::vector<std::vector<std::size_t>> fold_nonzero(result.folds,
                                                       std::vector<std::size_t>(G, 0));

    parallel_for(result.folds, options.threads, [&](std::size_t f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? test : train).push_back(i);
        const auto stats = compute_fit_statistics(data.select_samples(train), options.fit);
        const auto held_out = data.matrix().select_samples(test);
        for (std::size_t g = 0; g < G; ++g) {
            const auto model = shrink(stats, result.rho_grid[g]);
            fold_nonzero[f][g] = model.num_active_features();
            const auto predictions = predict(model, held_out);
            for (std::size_t t = 0; t < test.size(); ++t) {
                if (predictions[t].class_index != data.labels()[test[t]]) ++fold_errors[f][g];
            }
        }
    });

    const double n = static_cast<double>(data.matrix().num_samples());
    result.errors.assign(G, 0);
    result.error_rate.resize(G);
    result.mean_nonzero.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        double nonzero = 0.0;
        for (std::size_t f = 0; f < result.folds; ++f) {
            result.errors[g] += fold_errors[f][g];
            nonzero += static_cast<double>(fold_nonzero[f][g]);
        }
        result.error_rate[g] = static_cast<double>(result.errors[g]) / n;
        result.mean_nonzero[g] = nonzero / static_cast<double>(result.folds);
    }
    for (std::size_t g = 1; g < G; ++g) {
        const auto best = result.selected_index;
        if (result.errors[g] < result.errors[best] ||
            (result.errors[g] == result.errors[best] && result.rho_grid[g] < result.rho_grid[best])) {
            result.selected_index = g;
        }
    }
    result.selected_rho = result.rho_grid[result.selected_index];
    return result;
}

} // namespace poisseq

#endif
