#ifndef POISSEQ_REPLICATE_HPP
#define POISSEQ_REPLICATE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "poisseq/clustering.hpp"
#include "poisseq/dissimilarity.hpp"
#include "poisseq/plda.hpp"
#include "poisseq/simulator.hpp"

/**
 * @file replicate.hpp
 *
 * @brief Repeated simulation experiments: sparse PLDA test error and
 * clustering error rate over many simulated data sets.
 */

namespace poisseq {

struct ReplicateSummary {
    std::vector<double> values;
    double mean = 0.0;
    /// Standard error of the mean.
    double standard_error = 0.0;
    /// Classification only: active features of each refit model.
    std::vector<double> nonzero;
    double mean_nonzero = 0.0;
};

namespace detail {

inline void summarize(ReplicateSummary& s) {
    const double r = static_cast<double>(s.values.size());
    double sum = 0.0;
    for (const double v : s.values) sum += v;
    s.mean = sum / r;
    double ss = 0.0;
    for (const double v : s.values) ss += (v - s.mean) * (v - s.mean);
    s.standard_error = s.values.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;
    if (!s.nonzero.empty()) {
        double nz = 0.0;
        for (const double v : s.nonzero) nz += v;
        s.mean_nonzero = nz / static_cast<double>(s.nonzero.size());
    }
}

inline std::uint64_t replicate_seed(std::uint64_t base, std::size_t rep) {
    return splitmix64(base + 0x51ed2701ULL * (rep + 1));
}

} // namespace detail

struct ClassificationExperiment {
    SimulationConfig simulation;
    FitOptions fit;
    std::size_t reps = 50;
    std::size_t folds = 5;
    std::size_t threads = 1;
};

/**
 * Per replicate: simulate n training and n test samples, choose rho by
 * cross-validation on the training set, refit on all training samples and
 * count test misclassifications.
 */
inline ReplicateSummary run_classification_experiment(const ClassificationExperiment& experiment) {
    ReplicateSummary summary;
    for (std::size_t rep = 0; rep < experiment.reps; ++rep) {
        auto config = experiment.simulation;
        config.seed = detail::replicate_seed(experiment.simulation.seed, rep);
        const auto [train, test] = split_train_test(config);

        CvOptions cv_options;
        cv_options.fit = experiment.fit;
        cv_options.folds = experiment.folds;
        cv_options.seed = config.seed;
        cv_options.threads = experiment.threads;
        cv_options.rho_grid = default_rho_grid(train.data, experiment.fit);
        const auto cv = cross_validate(train.data, cv_options);

        auto fit_options = experiment.fit;
        fit_options.rho = cv.selected_rho;
        const auto model = fit(train.data, fit_options);
        const auto predictions = predict(model, test.data.matrix());
        std::size_t errors = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            if (predictions[i].class_index != test.data.labels()[i]) ++errors;
        }
        summary.values.push_back(static_cast<double>(errors));
        summary.nonzero.push_back(static_cast<double>(model.num_active_features()));
    }
    detail::summarize(summary);
    return summary;
}

struct ClusteringExperiment {
    SimulationConfig simulation;
    DissimilarityOptions dissimilarity;
    std::size_t reps = 50;
};

/// Per replicate: simulate, cluster with complete linkage, cut at K and
/// score the clustering error rate against the true classes.
inline ReplicateSummary run_clustering_experiment(const ClusteringExperiment& experiment) {
    ReplicateSummary summary;
    for (std::size_t rep = 0; rep < experiment.reps; ++rep) {
        auto config = experiment.simulation;
        config.seed = detail::replicate_seed(experiment.simulation.seed, rep);
        const auto sim = simulate(config);
        const auto d = dissimilarity_matrix(sim.data.matrix(), experiment.dissimilarity);
        const auto clusters = cut_tree(complete_linkage(d), config.K);
        summary.values.push_back(cer(Partition(sim.data.labels()), clusters));
    }
    detail::summarize(summary);
    return summary;
}

} // namespace poisseq

#endif
