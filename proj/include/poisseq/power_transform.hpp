#ifndef POISSEQ_POWER_TRANSFORM_HPP
#define POISSEQ_POWER_TRANSFORM_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "poisseq/core_data.hpp"
#include "poisseq/error.hpp"

/**
 * @file power_transform.hpp
 *
 * @brief Entrywise power transform X^alpha that brings overdispersed counts
 * back to Poisson-like dispersion.
 *
 * alpha is chosen so that the Pearson chi-squared statistic of the
 * independence (total-count) fit equals its degrees of freedom (n-1)(p-1).
 */

namespace poisseq {

inline constexpr double kAlphaMin = 0.01;

/// Data count as overdispersed only when the statistic at alpha = 1 is this
/// many null standard deviations above target.
inline constexpr double kOverdispersionZ = 4.0;

struct TransformResult {
    double alpha = 1.0;
    double statistic = 0.0;
    double target = 0.0;
    bool converged = true;
    /// False when alpha = 1 was kept because the statistic at alpha = 1 was
    /// not significantly above target.
    bool overdispersed = false;
    /// Features whose total was zero; excluded from the statistic.
    std::size_t zero_features = 0;
    CountMatrix matrix;
};

namespace detail {

/// Pearson statistic of (values)^alpha restricted to `columns`; rows with a
/// zero total are rejected by the caller.
inline double pearson_statistic(std::span<const double> values, std::size_t n, std::size_t p,
                                std::span<const std::size_t> columns, double alpha) {
    const std::size_t q = columns.size();
    std::vector<double> t(n * q);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < q; ++c) {
            const double v = values[i * p + columns[c]];
            t[i * q + c] = alpha == 1.0 ? v : std::pow(v, alpha);
        }
    }
    std::vector<double> rows(n, 0.0);
    std::vector<double> cols(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < q; ++c) {
            rows[i] += t[i * q + c];
            cols[c] += t[i * q + c];
        }
    }
    double total = 0.0;
    for (const double r : rows) total += r;

    double statistic = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_stat = 0.0;
        for (std::size_t c = 0; c < q; ++c) {
            const double fitted = rows[i] * cols[c] / total;
            if (fitted > 0.0) {
                const double diff = t[i * q + c] - fitted;
                row_stat += diff * diff / fitted;
            }
        }
        statistic += row_stat;
    }
    return statistic;
}

inline void require_positive_rows(const CountMatrix& matrix) {
    for (std::size_t i = 0; i < matrix.num_samples(); ++i) {
        if (!(matrix.row_sums()[i] > 0.0)) {
            throw ValidationError("sample '" + matrix.sample_ids()[i] +
                                  "' has zero total count; goodness-of-fit statistic undefined");
        }
    }
}

} // namespace detail

/**
 * @brief Pearson chi-squared statistic of the matrix against the
 * independence fit X_{i.} X_{.j} / X_{..}.
 *
 * Every row and column total must be positive.
 */
inline double gof_statistic(const CountMatrix& matrix) {
    detail::require_positive_rows(matrix);
    std::vector<std::size_t> columns(matrix.num_features());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (!(matrix.column_sums()[j] > 0.0)) {
            throw ValidationError("feature '" + matrix.feature_ids()[j] +
                                  "' has zero total count; goodness-of-fit statistic undefined");
        }
        columns[j] = j;
    }
    return detail::pearson_statistic(matrix.values(), matrix.num_samples(), matrix.num_features(),
                                     columns, 1.0);
}

/// Entrywise X^alpha; alpha = 1 returns an identical copy.
inline CountMatrix apply_alpha(const CountMatrix& matrix, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ValidationError("alpha must lie in (0, 1], got " + detail::format_double(alpha));
    }
    if (alpha == 1.0) return matrix;
    return matrix.transform([alpha](double v) { return std::pow(v, alpha); });
}

/**
 * @brief Null standard deviation of the Pearson statistic for Poisson counts.
 *
 * Each cell contributes variance 2 + 1/mu; the sum is scaled by
 * df / (n q) for the estimated margins. For large means this is sqrt(2 df),
 * the chi-squared value; small means make the statistic much noisier.
 */
inline double pearson_null_sd(const CountMatrix& matrix, std::span<const std::size_t> columns) {
    const std::size_t n = matrix.num_samples();
    const std::size_t q = columns.size();
    if (n < 2 || q < 2) return 0.0;
    double total = 0.0;
    for (const auto j : columns) total += matrix.column_sums()[j];
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto j : columns) {
            const double fitted = matrix.row_sums()[i] * matrix.column_sums()[j] / total;
            if (fitted > 0.0) sum += 2.0 + 1.0 / fitted;
        }
    }
    const double df = static_cast<double>(n - 1) * static_cast<double>(q - 1);
    return std::sqrt(sum * df / (static_cast<double>(n) * static_cast<double>(q)));
}

/**
 * @brief Chooses alpha in [0.01, 1] so the transformed data fit the Poisson
 * independence model with statistic close to (n-1)(p-1).
 *
 * Data whose statistic at alpha = 1 is at most `overdispersion_z` null
 * standard deviations (pearson_null_sd) above target keep alpha = 1 and are
 * reported as not overdispersed; z = 0 keeps alpha = 1 only when the
 * statistic is at or below target. Otherwise a 21-point grid brackets the crossing closest to
 * alpha = 1 and bisection refines it until the bracket is narrower than 1e-6
 * or the statistic is within 0.1% of target. If even alpha = 0.01 leaves the
 * statistic above target, 0.01 is returned with `converged == false`.
 *
 * Features with a zero total contribute nothing to the fit and are left out
 * of both the statistic and its degrees of freedom.
 */
inline TransformResult find_alpha(const CountMatrix& matrix,
                                  double overdispersion_z = kOverdispersionZ) {
    detail::require_positive_rows(matrix);
    std::vector<std::size_t> columns;
    for (std::size_t j = 0; j < matrix.num_features(); ++j) {
        if (matrix.column_sums()[j] > 0.0) columns.push_back(j);
    }

    const std::size_t n = matrix.num_samples();
    const std::size_t q = columns.size();
    const double target = q < 2 ? 0.0 : static_cast<double>(n - 1) * static_cast<double>(q - 1);
    auto statistic = [&](double alpha) {
        return detail::pearson_statistic(matrix.values(), n, matrix.num_features(), columns, alpha);
    };
    auto finish = [&](double alpha, double stat, bool converged, bool overdispersed = true) {
        TransformResult result{alpha,         stat,
                               target,        converged,
                               overdispersed, matrix.num_features() - q,
                               apply_alpha(matrix, alpha)};
        return result;
    };
    const double tolerance = 1e-3 * target;

    const double at_one = statistic(1.0);
    if (at_one <= target + std::max(0.0, overdispersion_z) * pearson_null_sd(matrix, columns)) {
        return finish(1.0, at_one, true, false);
    }

    constexpr int kGridIntervals = 20;
    std::vector<double> grid(kGridIntervals + 1);
    std::vector<double> stats(kGridIntervals + 1);
    for (int k = 0; k <= kGridIntervals; ++k) {
        grid[k] = k == kGridIntervals ? 1.0 : kAlphaMin + (1.0 - kAlphaMin) * k / kGridIntervals;
        stats[k] = k == kGridIntervals ? at_one : statistic(grid[k]);
    }
    if (stats[0] > target) return finish(kAlphaMin, stats[0], false);

    int below = 0;
    for (int k = 0; k < kGridIntervals; ++k) {
        if (stats[k] <= target) below = k;
    }
    double lo = grid[below];
    double hi = grid[below + 1];
    double lo_stat = stats[below];
    double hi_stat = stats[below + 1];
    if (std::abs(lo_stat - target) <= tolerance) return finish(lo, lo_stat, true);

    while (hi - lo >= 1e-6) {
        const double mid = 0.5 * (lo + hi);
        const double s = statistic(mid);
        if (std::abs(s - target) <= tolerance) return finish(mid, s, true);
        if (s <= target) {
            lo = mid;
            lo_stat = s;
        } else {
            hi = mid;
            hi_stat = s;
        }
    }
    const bool lo_better = std::abs(lo_stat - target) <= std::abs(hi_stat - target);
    const double alpha = lo_better ? lo : hi;
    const double stat = lo_better ? lo_stat : hi_stat;
    return finish(alpha, stat, std::abs(stat - target) <= tolerance);
}

} // namespace poisseq

#endif
