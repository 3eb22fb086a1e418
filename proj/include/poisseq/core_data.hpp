#ifndef POISSEQ_CORE_DATA_HPP
#define POISSEQ_CORE_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "poisseq/detail/text.hpp"
#include "poisseq/error.hpp"

/**
 * @file core_data.hpp
 *
 * @brief Count matrices, labeled data sets, partitions and their TSV formats.
 *
 * Matrices are always held sample-major: n rows (samples) by p columns
 * (features). Entries are nonnegative reals so that power-transformed
 * counts use the same type as raw counts.
 */

namespace poisseq {

/**
 * @brief Dense n-by-p matrix of nonnegative (possibly transformed) counts.
 *
 * Immutable once constructed. Row sums, column sums and the grand total are
 * computed at construction in ascending index order, so recomputing them with
 * a plain loop reproduces the cached values exactly.
 */
class CountMatrix {
public:
    CountMatrix(std::size_t n, std::size_t p, std::vector<double> values,
                std::vector<std::string> sample_ids, std::vector<std::string> feature_ids)
        : n_(n), p_(p), values_(std::move(values)), sample_ids_(std::move(sample_ids)),
          feature_ids_(std::move(feature_ids)) {
        validate();
        compute_marginals();
    }

    /// Builds a matrix from nested rows with generated ids "s1".."sn" and
    /// "f1".."fp".
    static CountMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty() || rows.front().empty()) {
            throw ValidationError("count matrix needs at least one sample and one feature");
        }
        const std::size_t n = rows.size();
        const std::size_t p = rows.front().size();
        std::vector<double> values;
        values.reserve(n * p);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != p) {
                throw ValidationError("row " + std::to_string(i + 1) + " has " +
                                      std::to_string(rows[i].size()) + " entries, expected " +
                                      std::to_string(p));
            }
            values.insert(values.end(), rows[i].begin(), rows[i].end());
        }
        return CountMatrix(n, p, std::move(values), default_ids("s", n), default_ids("f", p));
    }

    static std::vector<std::string> default_ids(const std::string& prefix, std::size_t count) {
        std::vector<std::string> ids;
        ids.reserve(count);
        for (std::size_t i = 0; i < count; ++i) ids.push_back(prefix + std::to_string(i + 1));
        return ids;
    }

    std::size_t num_samples() const { return n_; }
    std::size_t num_features() const { return p_; }

    double operator()(std::size_t i, std::size_t j) const { return values_[i * p_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values_).subspan(i * p_, p_);
    }

    /// Row-major storage.
    std::span<const double> values() const { return values_; }

    const std::vector<double>& row_sums() const { return row_sums_; }
    const std::vector<double>& column_sums() const { return col_sums_; }
    double total() const { return total_; }

    const std::vector<std::string>& sample_ids() const { return sample_ids_; }
    const std::vector<std::string>& feature_ids() const { return feature_ids_; }

    CountMatrix transposed() const {
        std::vector<double> out(n_ * p_);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < p_; ++j) out[j * n_ + i] = values_[i * p_ + j];
        }
        return CountMatrix(p_, n_, std::move(out), feature_ids_, sample_ids_);
    }

    /// Sub-matrix of the given samples, in the given order.
    CountMatrix select_samples(std::span<const std::size_t> rows) const {
        std::vector<double> out;
        out.reserve(rows.size() * p_);
        std::vector<std::string> ids;
        ids.reserve(rows.size());
        for (const auto i : rows) {
            const auto r = row(i);
            out.insert(out.end(), r.begin(), r.end());
            ids.push_back(sample_ids_[i]);
        }
        return CountMatrix(rows.size(), p_, std::move(out), std::move(ids), feature_ids_);
    }

    /// Applies `fn` to every entry; ids are kept.
    template <typename Fn>
    CountMatrix transform(Fn&& fn) const {
        std::vector<double> out(values_.size());
        std::transform(values_.begin(), values_.end(), out.begin(), fn);
        return CountMatrix(n_, p_, std::move(out), sample_ids_, feature_ids_);
    }

    friend bool operator==(const CountMatrix& a, const CountMatrix& b) {
        return a.n_ == b.n_ && a.p_ == b.p_ && a.values_ == b.values_ &&
               a.sample_ids_ == b.sample_ids_ && a.feature_ids_ == b.feature_ids_;
    }

private:
    void validate() const {
        if (n_ == 0 || p_ == 0) {
            throw ValidationError("count matrix needs at least one sample and one feature");
        }
        if (values_.size() != n_ * p_) {
            throw ValidationError("count matrix storage has " + std::to_string(values_.size()) +
                                  " entries, expected " + std::to_string(n_ * p_));
        }
        if (sample_ids_.size() != n_ || feature_ids_.size() != p_) {
            throw ValidationError("count matrix id vectors do not match its shape");
        }
        check_unique(sample_ids_, "sample");
        check_unique(feature_ids_, "feature");
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < p_; ++j) {
                const double v = values_[i * p_ + j];
                if (!std::isfinite(v) || v < 0.0) {
                    throw ValidationError("invalid count " + detail::format_double(v) +
                                          " at sample '" + sample_ids_[i] + "', feature '" +
                                          feature_ids_[j] + "': entries must be finite and >= 0");
                }
            }
        }
    }

    static void check_unique(const std::vector<std::string>& ids, const char* axis) {
        std::unordered_set<std::string> seen;
        for (const auto& id : ids) {
            if (!seen.insert(id).second) {
                throw ValidationError(std::string("duplicate ") + axis + " id '" + id + "'");
            }
        }
    }

    void compute_marginals() {
        row_sums_.assign(n_, 0.0);
        col_sums_.assign(p_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < p_; ++j) {
                const double v = values_[i * p_ + j];
                row_sums_[i] += v;
                col_sums_[j] += v;
            }
        }
        total_ = 0.0;
        for (const double r : row_sums_) total_ += r;
    }

    std::size_t n_;
    std::size_t p_;
    std::vector<double> values_;
    std::vector<std::string> sample_ids_;
    std::vector<std::string> feature_ids_;
    std::vector<double> row_sums_;
    std::vector<double> col_sums_;
    double total_ = 0.0;
};

/// Per-feature totals X_{.j}; these are the baseline feature rates.
inline std::vector<double> column_totals(const CountMatrix& matrix) {
    return matrix.column_sums();
}

/// A count matrix together with a class label (0-based) for every sample.
class LabeledDataset {
public:
    LabeledDataset(CountMatrix matrix, std::vector<std::size_t> labels,
                   std::vector<std::string> class_names)
        : matrix_(std::move(matrix)), labels_(std::move(labels)),
          class_names_(std::move(class_names)) {
        if (labels_.size() != matrix_.num_samples()) {
            throw ValidationError("label count " + std::to_string(labels_.size()) +
                                  " does not match sample count " +
                                  std::to_string(matrix_.num_samples()));
        }
        members_.assign(class_names_.size(), {});
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i] >= class_names_.size()) {
                throw ValidationError("label " + std::to_string(labels_[i]) +
                                      " out of range for sample '" + matrix_.sample_ids()[i] + "'");
            }
            members_[labels_[i]].push_back(i);
        }
        for (std::size_t k = 0; k < members_.size(); ++k) {
            if (members_[k].empty()) {
                throw ValidationError("class '" + class_names_[k] + "' has no samples");
            }
        }
    }

    const CountMatrix& matrix() const { return matrix_; }
    const std::vector<std::size_t>& labels() const { return labels_; }
    const std::vector<std::string>& class_names() const { return class_names_; }
    std::size_t num_classes() const { return class_names_.size(); }

    /// Sample indices of class k, ascending.
    const std::vector<std::size_t>& members(std::size_t k) const { return members_[k]; }

    LabeledDataset select_samples(std::span<const std::size_t> rows) const {
        std::vector<std::size_t> labels;
        labels.reserve(rows.size());
        for (const auto i : rows) labels.push_back(labels_[i]);
        return LabeledDataset(matrix_.select_samples(rows), std::move(labels), class_names_);
    }

private:
    CountMatrix matrix_;
    std::vector<std::size_t> labels_;
    std::vector<std::string> class_names_;
    std::vector<std::vector<std::size_t>> members_;
};

/// Assignment of n items to clusters 0..k-1, every cluster nonempty.
class Partition {
public:
    explicit Partition(std::vector<std::size_t> assignments) : assignments_(std::move(assignments)) {
        num_clusters_ = 0;
        for (const auto a : assignments_) num_clusters_ = std::max(num_clusters_, a + 1);
        std::vector<bool> used(num_clusters_, false);
        for (const auto a : assignments_) used[a] = true;
        for (std::size_t c = 0; c < num_clusters_; ++c) {
            if (!used[c]) {
                throw ValidationError("partition cluster " + std::to_string(c + 1) + " is empty");
            }
        }
    }

    std::size_t size() const { return assignments_.size(); }
    std::size_t num_clusters() const { return num_clusters_; }
    std::size_t operator[](std::size_t i) const { return assignments_[i]; }
    const std::vector<std::size_t>& assignments() const { return assignments_; }

private:
    std::vector<std::size_t> assignments_;
    std::size_t num_clusters_ = 0;
};

enum class Orientation { samples_as_rows, features_as_rows };

/**
 * @brief Reads a tab-separated count table.
 *
 * The header row starts with the literal cell "id" followed by column ids;
 * each data row starts with its row id. With `features_as_rows` the table is
 * transposed into sample-major form.
 */
inline CountMatrix read_count_matrix(const std::string& path,
                                     Orientation orientation = Orientation::samples_as_rows) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw ParseError(path + ": empty file");
    const auto header = detail::split_tabs(lines.front());
    if (header.front() != "id") {
        throw ParseError(path + ": line 1: first header cell must be 'id'");
    }
    if (header.size() < 2) throw ParseError(path + ": line 1: no column ids");
    if (lines.size() < 2) throw ParseError(path + ": no data rows");

    const std::size_t cols = header.size() - 1;
    std::vector<std::string> col_ids;
    col_ids.reserve(cols);
    for (std::size_t c = 1; c < header.size(); ++c) col_ids.emplace_back(header[c]);

    std::vector<std::string> row_ids;
    std::vector<double> values;
    values.reserve((lines.size() - 1) * cols);
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto cells = detail::split_tabs(lines[l]);
        if (cells.size() != header.size()) {
            throw ParseError(path + ": line " + std::to_string(l + 1) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(cells.size()));
        }
        row_ids.emplace_back(cells.front());
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto v = detail::parse_double(cells[c]);
            if (!v) {
                throw ParseError(path + ": line " + std::to_string(l + 1) + ", column " +
                                 std::to_string(c + 1) + ": '" + std::string(cells[c]) +
                                 "' is not a number");
            }
            values.push_back(*v);
        }
    }

    const std::size_t rows = row_ids.size();
    CountMatrix as_read(rows, cols, std::move(values), std::move(row_ids), std::move(col_ids));
    if (orientation == Orientation::samples_as_rows) return as_read;
    return as_read.transposed();
}

inline void write_count_matrix(const CountMatrix& matrix, const std::string& path) {
    auto out = detail::open_for_write(path);
    out << "id";
    for (const auto& f : matrix.feature_ids()) out << '\t' << f;
    out << '\n';
    for (std::size_t i = 0; i < matrix.num_samples(); ++i) {
        out << matrix.sample_ids()[i];
        for (const double v : matrix.row(i)) out << '\t' << detail::format_double(v);
        out << '\n';
    }
    detail::finish_write(out, path);
}

/// (item id, group name) pairs in file order.
using IdAssignments = std::vector<std::pair<std::string, std::string>>;

/// Reads a two-column id/group TSV. A first row whose first cell is "id" is
/// treated as a header.
inline IdAssignments read_id_assignments(const std::string& path) {
    const auto lines = detail::read_lines(path);
    IdAssignments out;
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto cells = detail::split_tabs(lines[l]);
        if (l == 0 && cells.front() == "id") continue;
        if (cells.size() != 2) {
            throw ParseError(path + ": line " + std::to_string(l + 1) + ": expected 2 fields, found " +
                             std::to_string(cells.size()));
        }
        out.emplace_back(std::string(cells[0]), std::string(cells[1]));
    }
    if (out.empty()) throw ParseError(path + ": no rows");
    return out;
}

inline void write_id_assignments(const IdAssignments& rows, const std::string& header,
                                 const std::string& path) {
    auto out = detail::open_for_write(path);
    out << "id\t" << header << '\n';
    for (const auto& [id, group] : rows) out << id << '\t' << group << '\n';
    detail::finish_write(out, path);
}

/**
 * @brief Maps group names onto the given ids.
 *
 * Group names become indices 0..K-1 in order of first appearance in `rows`.
 * Every id must appear exactly once.
 */
inline std::pair<std::vector<std::size_t>, std::vector<std::string>>
index_assignments(const IdAssignments& rows, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> group_index;
    std::vector<std::string> names;
    std::unordered_map<std::string, std::size_t> by_id;
    for (const auto& [id, group] : rows) {
        auto [it, inserted] = group_index.try_emplace(group, names.size());
        if (inserted) names.push_back(group);
        if (!by_id.emplace(id, it->second).second) {
            throw ValidationError("duplicate id '" + id + "' in assignment file");
        }
    }
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("no assignment for id '" + id + "'");
        out.push_back(it->second);
    }
    if (by_id.size() != ids.size()) {
        throw ValidationError("assignment file has " + std::to_string(by_id.size()) +
                              " ids, expected " + std::to_string(ids.size()));
    }
    return {std::move(out), std::move(names)};
}

inline LabeledDataset read_labeled_dataset(const std::string& counts_path,
                                           const std::string& labels_path,
                                           Orientation orientation = Orientation::samples_as_rows) {
    auto matrix = read_count_matrix(counts_path, orientation);
    auto [labels, names] = index_assignments(read_id_assignments(labels_path), matrix.sample_ids());
    return LabeledDataset(std::move(matrix), std::move(labels), std::move(names));
}

inline void write_labels(const LabeledDataset& data, const std::string& path) {
    IdAssignments rows;
    for (std::size_t i = 0; i < data.labels().size(); ++i) {
        rows.emplace_back(data.matrix().sample_ids()[i], data.class_names()[data.labels()[i]]);
    }
    write_id_assignments(rows, "class", path);
}

/// Writes clusters numbered from 1.
inline void write_partition(const Partition& partition, const std::vector<std::string>& ids,
                            const std::string& path) {
    if (ids.size() != partition.size()) {
        throw ValidationError("partition size does not match id count");
    }
    IdAssignments rows;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        rows.emplace_back(ids[i], std::to_string(partition[i] + 1));
    }
    write_id_assignments(rows, "cluster", path);
}

/// Reads a partition file; rows are returned in file order.
inline std::pair<std::vector<std::string>, Partition> read_partition(const std::string& path) {
    const auto rows = read_id_assignments(path);
    std::vector<std::string> ids;
    ids.reserve(rows.size());
    for (const auto& r : rows) ids.push_back(r.first);
    auto [assignments, names] = index_assignments(rows, ids);
    return {std::move(ids), Partition(std::move(assignments))};
}

} // namespace poisseq

#endif
