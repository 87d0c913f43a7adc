#pragma once

#include "stlfer/classifiers.hpp"
#include "stlfer/tensor.hpp"

#include <utility>
#include <vector>

namespace stlfer {

/// Elementwise mean of the member posteriors. Members must agree in shape
/// and class list; the result stays row-stochastic.
PosteriorMatrix fuse_sum(const std::vector<PosteriorMatrix>& posteriors);

/// Elementwise product with every probability floored at 1e-12 first (a
/// single hard zero must not annihilate a class), then row-renormalized.
PosteriorMatrix fuse_product(const std::vector<PosteriorMatrix>& posteriors);

/// Trains the stacking meta-learner (logistic regression) on horizontally
/// concatenated member posteriors; width = members x classes. Validation
/// labels must span at least two classes.
ClassifierPtr stack_train(const std::vector<PosteriorMatrix>& validation_posteriors,
                          const std::vector<int>& validation_labels,
                          const LogRegConfig& config = {});

PosteriorMatrix stack_predict(const Classifier& meta,
                              const std::vector<PosteriorMatrix>& test_posteriors);

/// Per-classifier competence for one query: the number of the query's k
/// validation neighbours each classifier labels correctly.
struct CompetenceProfile {
    std::vector<int> weights;  // one per pool member, each in [0, k]
};

struct KnorauBatchResult {
    PosteriorMatrix posteriors;               // one row per query
    std::vector<CompetenceProfile> profiles;  // one per query
};

/// KNORA-U over precomputed member posteriors. Competence comes from the
/// validation posteriors against the labels; neighbours are searched in
/// `validation_features` (distance ties resolve to the lowest row index).
/// Each query's posterior is the normalized weighted argmax vote, or the
/// sum rule over all members when every weight is zero. Works even when the
/// members score the same samples in different feature spaces, since only
/// their posteriors enter.
KnorauBatchResult knorau_select(const std::vector<PosteriorMatrix>& validation_posteriors,
                                const std::vector<int>& validation_labels,
                                const Tensor& validation_features,
                                const std::vector<PosteriorMatrix>& test_posteriors,
                                const Tensor& test_features, int k);

/// KNORA-U dynamic selection over a fixed pool of classifiers that share one
/// feature space. A thin wrapper over knorau_select: member posteriors on
/// the validation set are precomputed once at construction.
class KnorauEnsemble {
public:
    /// Members may disagree on locally-seen classes; the ensemble works over
    /// the sorted union. Throws when the pool is empty, k < 1, or the
    /// validation set has fewer than k rows.
    KnorauEnsemble(std::vector<const Classifier*> members, Tensor validation_features,
                   std::vector<int> validation_labels, int k = 7);

    const std::vector<int>& classes() const { return classes_; }
    int k() const { return k_; }

    /// Weighted vote for one query row (shape {d} or {1, d}): each member
    /// votes its own argmax with weight = correctly-classified neighbours.
    /// All-zero weights fall back to the sum rule over the whole pool.
    std::pair<int, CompetenceProfile> predict_one(const Tensor& row) const;

    /// Batch form; rows are normalized vote masses (or the sum-rule
    /// fallback posterior where no member was competent).
    PosteriorMatrix predict_proba(const Tensor& rows) const;

private:
    KnorauBatchResult select(const Tensor& rows) const;

    std::vector<const Classifier*> members_;
    Tensor validation_features_;
    std::vector<int> validation_labels_;
    int k_;
    std::vector<int> classes_;
    std::vector<PosteriorMatrix> validation_posteriors_;  // expanded to classes_
};

}  // namespace stlfer
