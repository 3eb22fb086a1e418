#ifndef POISSEQ_DISSIMILARITY_HPP
#define POISSEQ_DISSIMILARITY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
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
 * @file dissimilarity.hpp
 *
 * @brief Pairwise dissimilarities between samples (or features) of a count
 * matrix.
 *
 * The Poisson dissimilarity of two samples is a modified log likelihood ratio
 * statistic. The Poisson model is fit to the two samples alone: size factors
 * s and s' come from the 2-by-p sub-matrix, g_j = x_j + x'_j, N = s g. Under
 * the alternative each sample gets its own ratio d = (x + beta)/(N + beta),
 * and the statistic is
 *
 *     sum_j  N_j (1 - d_j) + x_j log d_j  +  N'_j (1 - d'_j) + x'_j log d'_j .
 *
 * Every summand is nonnegative and the statistic is zero for identical
 * samples.
 */

namespace poisseq {

enum class Measure { poisson, sq_euclidean };

inline std::string_view to_string(Measure measure) {
    return measure == Measure::poisson ? "poisson" : "sq-euclidean";
}

inline Measure parse_measure(std::string_view text) {
    if (text == "poisson") return Measure::poisson;
    if (text == "sq-euclidean") return Measure::sq_euclidean;
    throw ValidationError("unknown dissimilarity measure '" + std::string(text) + "'");
}

/// How the alternative-hypothesis ratios d are estimated.
enum class RatioEstimate {
    /// Gamma(beta, beta) posterior mean (x + beta)/(N + beta). The default.
    posterior_mean,
    /// Maximum likelihood x / N with 0 log 0 = 0. Exposed for testing the
    /// equivalence with the multinomial likelihood ratio; not a clustering
    /// option.
    mle,
};

/**
 * @brief Symmetric n-by-n dissimilarity matrix with zero diagonal.
 *
 * Stored as the condensed upper triangle: pair (i, j) with i < j lives at
 * i*n - i*(i+1)/2 + (j - i - 1).
 */
class DissimilarityMatrix {
public:
    DissimilarityMatrix(std::vector<std::string> ids, std::vector<double> condensed,
                        Measure measure = Measure::poisson,
                        SizeFactorMethod method = SizeFactorMethod::total_count)
        : ids_(std::move(ids)), condensed_(std::move(condensed)), measure_(measure),
          method_(method) {
        const std::size_t n = ids_.size();
        if (n == 0) throw ValidationError("dissimilarity matrix needs at least one item");
        if (condensed_.size() != n * (n - 1) / 2) {
            throw ValidationError("condensed dissimilarity has " + std::to_string(condensed_.size()) +
                                  " entries, expected " + std::to_string(n * (n - 1) / 2));
        }
        for (const double v : condensed_) {
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError("dissimilarities must be finite and nonnegative, got " +
                                      detail::format_double(v));
            }
        }
    }

    static std::size_t condensed_index(std::size_t i, std::size_t j, std::size_t n) {
        if (i > j) std::swap(i, j);
        return i * n - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t size() const { return ids_.size(); }

    double operator()(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return condensed_[condensed_index(i, j, size())];
    }

    const std::vector<double>& condensed() const { return condensed_; }
    const std::vector<std::string>& ids() const { return ids_; }
    Measure measure() const { return measure_; }
    SizeFactorMethod method() const { return method_; }

    /// Exponent applied before computing, 1 when untransformed.
    double alpha = 1.0;
    double beta = 1.0;

private:
    std::vector<std::string> ids_;
    std::vector<double> condensed_;
    Measure measure_;
    SizeFactorMethod method_;
};

namespace detail {

/// N(1 - d) + x log d, clamped at zero. Each term is nonnegative in exact
/// arithmetic; the clamp absorbs rounding when d is within an ulp of 1.
inline double poisson_term(double x, double n_hat, double beta, RatioEstimate estimate) {
    double term = 0.0;
    if (estimate == RatioEstimate::posterior_mean) {
        const double d = (x + beta) / (n_hat + beta);
        term = n_hat * (1.0 - d) + (x > 0.0 ? x * std::log(d) : 0.0);
    } else {
        if (!(n_hat > 0.0)) return 0.0;
        if (!(x > 0.0)) return n_hat;
        term = n_hat - x + x * std::log(x / n_hat);
    }
    return std::max(term, 0.0);
}

} // namespace detail

/**
 * @brief Poisson dissimilarity of two samples under the pair-restricted fit.
 *
 * Throws EstimationError if size factors cannot be estimated on the pair.
 */
inline double poisson_pair_dissimilarity(std::span<const double> x, std::span<const double> y,
                                         SizeFactorMethod method = SizeFactorMethod::total_count,
                                         double beta = 1.0,
                                         RatioEstimate estimate = RatioEstimate::posterior_mean) {
    const std::size_t p = x.size();
    if (y.size() != p) throw ValidationError("pair vectors differ in length");
    if (estimate == RatioEstimate::posterior_mean && !(beta > 0.0)) {
        throw ValidationError("beta must be positive");
    }
    std::vector<double> pair(2 * p);
    std::copy(x.begin(), x.end(), pair.begin());
    std::copy(y.begin(), y.end(), pair.begin() + static_cast<std::ptrdiff_t>(p));
    const auto factors = detail::estimate_size_factors(pair, 2, p, method);
    const double s_x = factors.values[0];
    const double s_y = factors.values[1];

    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double g = x[j] + y[j];
        total += detail::poisson_term(x[j], s_x * g, beta, estimate) +
                 detail::poisson_term(y[j], s_y * g, beta, estimate);
    }
    return total;
}

struct DissimilarityOptions {
    Measure measure = Measure::poisson;
    SizeFactorMethod method = SizeFactorMethod::total_count;
    double beta = 1.0;
    /// Power-transform the whole matrix once before the Poisson measure.
    bool transform = true;
    /// 0 = default_thread_count().
    std::size_t threads = 1;
};

/**
 * @brief Poisson dissimilarity between every pair of samples.
 *
 * When `transform` is set, alpha is estimated once on the full matrix and
 * applied before any pair is computed. Pairs are independent and run in
 * parallel; each pair sums features in ascending order so the output does not
 * depend on the thread count. On failure the lowest failing pair is reported.
 */
inline DissimilarityMatrix poisson_dissimilarity_matrix(const CountMatrix& matrix,
                                                        const DissimilarityOptions& options = {}) {
    std::optional<TransformResult> transformed;
    if (options.transform) transformed = find_alpha(matrix);
    const CountMatrix& data = transformed ? transformed->matrix : matrix;

    const std::size_t n = data.num_samples();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    std::vector<double> condensed(pairs.size(), 0.0);
    std::vector<std::string> failures(pairs.size());

    parallel_for(pairs.size(), options.threads, [&](std::size_t idx) {
        const auto [i, j] = pairs[idx];
        try {
            condensed[idx] = poisson_pair_dissimilarity(data.row(i), data.row(j), options.method,
                                                        options.beta);
        } catch (const Error& e) {
            failures[idx] = e.what();
        }
    });
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        if (!failures[idx].empty()) {
            throw EstimationError("pair ('" + data.sample_ids()[pairs[idx].first] + "', '" +
                                  data.sample_ids()[pairs[idx].second] + "'): " + failures[idx]);
        }
    }

    DissimilarityMatrix out(data.sample_ids(), std::move(condensed), Measure::poisson,
                            options.method);
    out.alpha = transformed ? transformed->alpha : 1.0;
    out.beta = options.beta;
    return out;
}

/// Squared Euclidean distance after dividing each sample by the given factor.
inline DissimilarityMatrix sq_euclidean_dissimilarity_matrix(const CountMatrix& matrix,
                                                             std::span<const double> factors,
                                                             SizeFactorMethod method) {
    const std::size_t n = matrix.num_samples();
    const std::size_t p = matrix.num_features();
    if (factors.size() != n) throw ValidationError("one size factor per sample is required");
    for (const double s : factors) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("size factors must be positive");
    }
    std::vector<double> scaled(n * p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) scaled[i * p + j] = matrix(i, j) / factors[i];
    }
    std::vector<double> condensed;
    condensed.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double diff = scaled[i * p + j] - scaled[k * p + j];
                sum += diff * diff;
            }
            condensed.push_back(sum);
        }
    }
    return DissimilarityMatrix(matrix.sample_ids(), std::move(condensed), Measure::sq_euclidean,
                               method);
}

/// As above with factors estimated on the full matrix by `method`.
inline DissimilarityMatrix sq_euclidean_dissimilarity_matrix(const CountMatrix& matrix,
                                                             SizeFactorMethod method) {
    const auto factors = estimate_size_factors(matrix, method);
    return sq_euclidean_dissimilarity_matrix(matrix, factors.values, method);
}

inline DissimilarityMatrix dissimilarity_matrix(const CountMatrix& matrix,
                                                const DissimilarityOptions& options) {
    if (options.measure == Measure::poisson) return poisson_dissimilarity_matrix(matrix, options);
    return sq_euclidean_dissimilarity_matrix(matrix, options.method);
}

/// Dissimilarities between features: the sample-wise computation on the
/// transpose.
inline DissimilarityMatrix feature_dissimilarity_matrix(const CountMatrix& matrix,
                                                        const DissimilarityOptions& options) {
    return dissimilarity_matrix(matrix.transposed(), options);
}

/**
 * @brief Log likelihood ratio of two multinomial samples (common versus
 * separate category probabilities), with 0 log 0 = 0.
 *
 * Equals the Poisson pair statistic under total-count factors and maximum
 * likelihood ratios.
 */
inline double multinomial_lrt(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pair vectors differ in length");
    auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
    double x_total = 0.0;
    double y_total = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        sum += xlogx(x[j]) + xlogx(y[j]) - xlogx(x[j] + y[j]);
        x_total += x[j];
        y_total += y[j];
    }
    if (!(x_total > 0.0) || !(y_total > 0.0)) {
        throw ValidationError("multinomial likelihood ratio needs positive totals");
    }
    return sum + xlogx(x_total + y_total) - xlogx(x_total) - xlogx(y_total);
}

/// Full symmetric TSV with an "id" header row and id column.
inline void write_dissimilarity_matrix(const DissimilarityMatrix& d, const std::string& path) {
    auto out = detail::open_for_write(path);
    out << "id";
    for (const auto& id : d.ids()) out << '\t' << id;
    out << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        out << d.ids()[i];
        for (std::size_t j = 0; j < d.size(); ++j) out << '\t' << detail::format_double(d(i, j));
        out << '\n';
    }
    detail::finish_write(out, path);
}

/**
 * @brief Reads a full square TSV written by write_dissimilarity_matrix.
 *
 * The row and column ids must agree, the diagonal must be zero and the
 * matrix exactly symmetric.
 */
inline DissimilarityMatrix read_dissimilarity_matrix(const std::string& path) {
    const auto full = read_count_matrix(path);
    const std::size_t n = full.num_samples();
    if (full.num_features() != n || full.sample_ids() != full.feature_ids()) {
        throw ValidationError(path + ": dissimilarity matrix must be square with matching ids");
    }
    std::vector<double> condensed;
    condensed.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        if (full(i, i) != 0.0) {
            throw ValidationError(path + ": nonzero diagonal at '" + full.sample_ids()[i] + "'");
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (full(i, j) != full(j, i)) {
                throw ValidationError(path + ": not symmetric at ('" + full.sample_ids()[i] + "', '" +
                                      full.sample_ids()[j] + "')");
            }
            condensed.push_back(full(i, j));
        }
    }
    return DissimilarityMatrix(full.sample_ids(), std::move(condensed));
}

} // namespace poisseq

#endif
