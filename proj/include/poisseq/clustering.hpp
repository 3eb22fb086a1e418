#ifndef POISSEQ_CLUSTERING_HPP
#define POISSEQ_CLUSTERING_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "poisseq/core_data.hpp"
#include "poisseq/dissimilarity.hpp"
#include "poisseq/error.hpp"

/**
 * @file clustering.hpp
 *
 * @brief Agglomerative clustering, tree cutting, Newick export and the
 * clustering error rate.
 */

namespace poisseq {

/// Node ids: leaves are 0..n-1, the node created by merge m is n + m.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::vector<Merge> merges;
    std::vector<std::string> leaf_ids;

    std::size_t num_leaves() const { return leaf_ids.size(); }
};

enum class Linkage { complete, single, average };

/**
 * @brief Agglomerative clustering of a dissimilarity matrix.
 *
 * Each active cluster occupies the slot of its smallest leaf. At every step
 * the closest pair of active slots (a, b), a < b, merges into slot a; ties go
 * to the lexicographically smallest (a, b). Distances to the merged cluster
 * follow the linkage update, which for complete linkage is the maximum.
 * `merges[m].left` is the node in slot a.
 */
inline Dendrogram agglomerate(const DissimilarityMatrix& d, Linkage linkage = Linkage::complete) {
    const std::size_t n = d.size();
    if (n < 2) throw ValidationError("clustering needs at least two items");

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = d(i, j);
    }
    std::vector<bool> active(n, true);
    std::vector<std::size_t> node(n);
    std::vector<std::size_t> size(n, 1);
    std::iota(node.begin(), node.end(), std::size_t{0});

    Dendrogram out;
    out.leaf_ids = d.ids();
    out.merges.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t best_a = 0;
        std::size_t best_b = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (active[b] && dist[a * n + b] < best) {
                    best = dist[a * n + b];
                    best_a = a;
                    best_b = b;
                }
            }
        }

        out.merges.push_back({node[best_a], node[best_b], best, size[best_a] + size[best_b]});
        for (std::size_t c = 0; c < n; ++c) {
            if (!active[c] || c == best_a || c == best_b) continue;
            const double da = dist[best_a * n + c];
            const double db = dist[best_b * n + c];
            double merged = 0.0;
            switch (linkage) {
            case Linkage::complete: merged = std::max(da, db); break;
            case Linkage::single: merged = std::min(da, db); break;
            case Linkage::average:
                merged = (da * static_cast<double>(size[best_a]) +
                          db * static_cast<double>(size[best_b])) /
                         static_cast<double>(size[best_a] + size[best_b]);
                break;
            }
            dist[best_a * n + c] = merged;
            dist[c * n + best_a] = merged;
        }
        active[best_b] = false;
        node[best_a] = n + step;
        size[best_a] += size[best_b];
    }
    return out;
}

/// Complete-linkage clustering; merge heights are nondecreasing.
inline Dendrogram complete_linkage(const DissimilarityMatrix& d) {
    return agglomerate(d, Linkage::complete);
}

/**
 * @brief Partition into k clusters by undoing the last k - 1 merges.
 *
 * Clusters are numbered 0..k-1 in order of their smallest leaf.
 */
inline Partition cut_tree(const Dendrogram& dendrogram, std::size_t k) {
    const std::size_t n = dendrogram.num_leaves();
    if (k < 1 || k > n) {
        throw ValidationError("cut size " + std::to_string(k) + " outside 1.." + std::to_string(n));
    }
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (std::size_t m = 0; m < n - k; ++m) {
        const auto& merge = dendrogram.merges[m];
        parent[find(merge.left)] = n + m;
        parent[find(merge.right)] = n + m;
    }
    std::vector<std::size_t> cluster_of_root(2 * n - 1, std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> assignments(n);
    std::size_t next = 0;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        auto& c = cluster_of_root[find(leaf)];
        if (c == std::numeric_limits<std::size_t>::max()) c = next++;
        assignments[leaf] = c;
    }
    return Partition(std::move(assignments));
}

/**
 * @brief Clustering error rate: the fraction of item pairs on which the two
 * partitions disagree about co-membership (one minus the Rand index).
 */
inline double cer(const Partition& p, const Partition& q) {
    if (p.size() != q.size()) {
        throw ValidationError("partitions differ in length (" + std::to_string(p.size()) + " vs " +
                              std::to_string(q.size()) + ")");
    }
    const std::size_t n = p.size();
    if (n < 2) throw ValidationError("clustering error rate needs at least two items");
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if ((p[i] == p[j]) != (q[i] == q[j])) ++disagree;
        }
    }
    return static_cast<double>(disagree) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

namespace detail {

inline std::string newick_label(const std::string& id) {
    const bool needs_quotes =
        id.empty() || id.find_first_of(" \t\n()[]':;,") != std::string::npos;
    if (!needs_quotes) return id;
    std::string out = "'";
    for (const char c : id) {
        if (c == '\'') out += '\'';
        out += c;
    }
    out += '\'';
    return out;
}

} // namespace detail

/**
 * @brief Newick text of the dendrogram.
 *
 * A leaf's branch length is its parent's height; an internal node's is the
 * parent height minus its own.
 */
inline std::string to_newick(const Dendrogram& dendrogram) {
    const std::size_t n = dendrogram.num_leaves();
    if (n == 1) return detail::newick_label(dendrogram.leaf_ids.front()) + ";";
    auto height = [&](std::size_t node) {
        return node < n ? 0.0 : dendrogram.merges[node - n].height;
    };
    // Merges are in creation order, so both children are always built first.
    std::vector<std::string> text(2 * n - 1);
    for (std::size_t leaf = 0; leaf < n; ++leaf) text[leaf] = detail::newick_label(dendrogram.leaf_ids[leaf]);
    for (std::size_t m = 0; m < dendrogram.merges.size(); ++m) {
        const auto& merge = dendrogram.merges[m];
        const double h = merge.height;
        text[n + m] = "(" + text[merge.left] + ":" + detail::format_double(h - height(merge.left)) +
                      "," + text[merge.right] + ":" +
                      detail::format_double(h - height(merge.right)) + ")";
        text[merge.left].clear();
        text[merge.right].clear();
    }
    return text[2 * n - 2] + ";";
}

} // namespace poisseq

#endif
