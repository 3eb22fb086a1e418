#ifndef POISSEQ_SIZE_FACTORS_HPP
#define POISSEQ_SIZE_FACTORS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "poisseq/core_data.hpp"
#include "poisseq/error.hpp"

/**
 * @file size_factors.hpp
 *
 * @brief Per-sample size factors (sequencing depth) and their extension to
 * new samples.
 *
 * Three estimators are provided. Each produces unnormalized per-sample values
 * (row total, median ratio m_i, or upper quartile q_i) which are divided by
 * their sum so the factors add to one. The statistics needed to place a new
 * sample on the same scale are retained in `SizeFactorAux`.
 */

namespace poisseq {

enum class SizeFactorMethod { total_count, quantile, median_ratio };

inline std::string_view to_string(SizeFactorMethod method) {
    switch (method) {
    case SizeFactorMethod::total_count: return "total-count";
    case SizeFactorMethod::quantile: return "quantile";
    case SizeFactorMethod::median_ratio: return "median-ratio";
    }
    return "unknown";
}

/// Accepts "total", "total-count", "quantile" and "median-ratio".
inline SizeFactorMethod parse_size_factor_method(std::string_view text) {
    if (text == "total" || text == "total-count") return SizeFactorMethod::total_count;
    if (text == "quantile") return SizeFactorMethod::quantile;
    if (text == "median-ratio") return SizeFactorMethod::median_ratio;
    throw ValidationError("unknown size factor method '" + std::string(text) + "'");
}

/// Training statistics sufficient to compute the factor of a new sample.
struct SizeFactorAux {
    /// Grand total of the training matrix (total-count).
    double training_total = 0.0;
    /// Sum of the unnormalized training values (Σ m_i or Σ q_i).
    double unnormalized_sum = 0.0;
    /// Features with a positive count in every training sample (median-ratio).
    std::vector<std::size_t> usable_features;
    /// Geometric means of the usable features, parallel to `usable_features`.
    std::vector<double> geometric_means;
};

struct SizeFactors {
    SizeFactorMethod method = SizeFactorMethod::total_count;
    /// Normalized factors, summing to one.
    std::vector<double> values;
    /// Row totals, m_i or q_i before normalization.
    std::vector<double> unnormalized;
    SizeFactorAux aux;
};

namespace detail {

inline std::string sample_name(std::span<const std::string> ids, std::size_t i) {
    if (i < ids.size()) return "'" + ids[i] + "'";
    return "#" + std::to_string(i + 1);
}

/// Median; even counts average the two middle order statistics. Reorders `v`.
inline double median_in_place(std::vector<double>& v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + m, v.end());
    const double upper = v[m];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + m);
    return (lower + upper) / 2.0;
}

/// 75th percentile by linear interpolation at 1-based order-statistic
/// position h = 1 + (p - 1) * 0.75.
inline double upper_quartile(std::span<const double> row) {
    std::vector<double> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = 1.0 + static_cast<double>(sorted.size() - 1) * 0.75;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo >= sorted.size()) return sorted.back();
    return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

inline double median_ratio(std::span<const double> row, const SizeFactorAux& aux) {
    std::vector<double> ratios;
    ratios.reserve(aux.usable_features.size());
    for (std::size_t u = 0; u < aux.usable_features.size(); ++u) {
        ratios.push_back(row[aux.usable_features[u]] / aux.geometric_means[u]);
    }
    return median_in_place(ratios);
}

/**
 * Estimates size factors on a row-major n-by-p block. `ids` names samples in
 * error messages and may be empty.
 */
inline SizeFactors estimate_size_factors(std::span<const double> data, std::size_t n,
                                         std::size_t p, SizeFactorMethod method,
                                         std::span<const std::string> ids = {}) {
    SizeFactors out;
    out.method = method;
    out.unnormalized.assign(n, 0.0);
    auto row = [&](std::size_t i) { return data.subspan(i * p, p); };

    switch (method) {
    case SizeFactorMethod::total_count: {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (const double v : row(i)) sum += v;
            if (!(sum > 0.0)) {
                throw EstimationError("sample " + sample_name(ids, i) +
                                      " has zero total count; total-count size factor undefined");
            }
            out.unnormalized[i] = sum;
        }
        break;
    }
    case SizeFactorMethod::quantile: {
        for (std::size_t i = 0; i < n; ++i) {
            const double q = upper_quartile(row(i));
            if (!(q > 0.0)) {
                throw EstimationError("sample " + sample_name(ids, i) +
                                      " has a zero 75th percentile; quantile size factor undefined");
            }
            out.unnormalized[i] = q;
        }
        break;
    }
    case SizeFactorMethod::median_ratio: {
        auto& aux = out.aux;
        for (std::size_t j = 0; j < p; ++j) {
            double log_sum = 0.0;
            bool positive = true;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = data[i * p + j];
                if (!(v > 0.0)) {
                    positive = false;
                    break;
                }
                log_sum += std::log(v);
            }
            if (positive) {
                aux.usable_features.push_back(j);
                aux.geometric_means.push_back(std::exp(log_sum / static_cast<double>(n)));
            }
        }
        if (aux.usable_features.empty()) {
            throw EstimationError(
                "no feature is positive in every sample; median-ratio size factors are undefined "
                "(use total-count or quantile)");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double m = median_ratio(row(i), aux);
            if (!(m > 0.0)) {
                throw EstimationError("sample " + sample_name(ids, i) +
                                      " has a zero median ratio; median-ratio size factor undefined");
            }
            out.unnormalized[i] = m;
        }
        break;
    }
    }

    double sum = 0.0;
    for (const double u : out.unnormalized) sum += u;
    out.aux.unnormalized_sum = sum;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (const double v : row(i)) row_sum += v;
        total += row_sum;
    }
    out.aux.training_total = total;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = out.unnormalized[i] / sum;
    return out;
}

} // namespace detail

inline SizeFactors estimate_size_factors(const CountMatrix& matrix, SizeFactorMethod method) {
    return detail::estimate_size_factors(matrix.values(), matrix.num_samples(),
                                         matrix.num_features(), method, matrix.sample_ids());
}

inline SizeFactors estimate_total_count(const CountMatrix& matrix) {
    return estimate_size_factors(matrix, SizeFactorMethod::total_count);
}

inline SizeFactors estimate_median_ratio(const CountMatrix& matrix) {
    return estimate_size_factors(matrix, SizeFactorMethod::median_ratio);
}

inline SizeFactors estimate_quantile(const CountMatrix& matrix) {
    return estimate_size_factors(matrix, SizeFactorMethod::quantile);
}

/**
 * @brief Size factor of a new sample on the training scale.
 *
 * Total count divides the sample total by the training grand total; median
 * ratio and quantile divide the sample's m* or q* by the training Σ m_i or
 * Σ q_i. The result is not renormalized, so a sample twice as deep as a
 * training sample receives twice its factor.
 */
inline double estimate_test_size_factor(const SizeFactors& training, std::span<const double> x_star,
                                        std::size_t num_features) {
    if (x_star.size() != num_features) {
        throw ValidationError("test sample has " + std::to_string(x_star.size()) +
                              " features, model expects " + std::to_string(num_features));
    }
    switch (training.method) {
    case SizeFactorMethod::total_count: {
        double sum = 0.0;
        for (const double v : x_star) sum += v;
        if (!(sum > 0.0)) throw EstimationError("test sample has zero total count");
        return sum / training.aux.training_total;
    }
    case SizeFactorMethod::quantile: {
        const double q = detail::upper_quartile(x_star);
        if (!(q > 0.0)) throw EstimationError("test sample has a zero 75th percentile");
        return q / training.aux.unnormalized_sum;
    }
    case SizeFactorMethod::median_ratio: {
        const double m = detail::median_ratio(x_star, training.aux);
        if (!(m > 0.0)) throw EstimationError("test sample has a zero median ratio");
        return m / training.aux.unnormalized_sum;
    }
    }
    throw ValidationError("unknown size factor method");
}

} // namespace poisseq

#endif
