#pragma once

#include "stlfer/tensor.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace stlfer {

/// Row-stochastic class-probability matrix over an explicit class list.
struct PosteriorMatrix {
    Tensor rows;               // M x K, rows sum to 1
    std::vector<int> classes;  // K class ids, ascending
};

/// Common interface of every trained model. Implementations are immutable
/// after training; predict_proba is reentrant.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual std::string kind() const = 0;
    virtual const std::vector<int>& classes() const = 0;
    virtual PosteriorMatrix predict_proba(const Tensor& rows) const = 0;
    virtual void save(const std::string& path) const = 0;
};

using ClassifierPtr = std::unique_ptr<Classifier>;

/// Reads any saved classifier, dispatching on the container's kind tag.
ClassifierPtr load_classifier(const std::string& path);

// ---------------------------------------------------------------------------
// Linear SVM (one-vs-rest, class-weighted hinge loss, probability outputs)
// ---------------------------------------------------------------------------

struct SvmConfig {
    double C = 1e-6;
    bool balanced = true;  // per-class weights M / (K * M_c)
    int iterations = 10000;
    int batch_size = 64;
    std::uint64_t seed = 0;
};

class SvmClassifier final : public Classifier {
public:
    SvmClassifier(std::vector<int> classes, Tensor weights, Tensor bias, double temperature);

    std::string kind() const override { return "svm"; }
    const std::vector<int>& classes() const override { return classes_; }
    PosteriorMatrix predict_proba(const Tensor& rows) const override;
    void save(const std::string& path) const override;

    /// Per-class decision values w_k . x + b_k, one row per sample.
    Tensor decision_values(const Tensor& rows) const;
    double temperature() const { return temperature_; }

private:
    std::vector<int> classes_;
    Tensor weights_;  // K x d
    Tensor bias_;     // K
    double temperature_;
};

ClassifierPtr svm_train(const Tensor& features, const std::vector<int>& labels,
                        const SvmConfig& config = {});

// ---------------------------------------------------------------------------
// Decision tree (CART, Gini impurity), bagging, random forest
// ---------------------------------------------------------------------------

struct TreeConfig {
    int max_depth = 10;
    bool sqrt_features = true;  // floor(sqrt(width)) candidates per node; else all
    std::uint64_t seed = 0;
};

class TreeClassifier final : public Classifier {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        std::vector<double> probs;  // leaf only: class frequencies
    };

    TreeClassifier() = default;
    TreeClassifier(std::vector<int> classes, std::vector<Node> nodes);

    std::string kind() const override { return "tree"; }
    const std::vector<int>& classes() const override { return classes_; }
    PosteriorMatrix predict_proba(const Tensor& rows) const override;
    void save(const std::string& path) const override;

    const std::vector<Node>& nodes() const { return nodes_; }
    int depth() const;

private:
    std::vector<int> classes_;
    std::vector<Node> nodes_;
};

TreeClassifier tree_train_value(const Tensor& features, const std::vector<int>& labels,
                                const TreeConfig& config = {});
ClassifierPtr tree_train(const Tensor& features, const std::vector<int>& labels,
                         const TreeConfig& config = {});

struct BaggingConfig {
    int n_estimators = 100;
    double sample_fraction = 1.0;  // bootstrap size as a fraction of M
    TreeConfig tree;               // base-estimator settings
    std::uint64_t seed = 0;
};

class BaggingClassifier final : public Classifier {
public:
    BaggingClassifier(std::vector<int> classes, std::vector<TreeClassifier> members);

    std::string kind() const override { return "bagging"; }
    const std::vector<int>& classes() const override { return classes_; }
    PosteriorMatrix predict_proba(const Tensor& rows) const override;
    void save(const std::string& path) const override;

    const std::vector<TreeClassifier>& members() const { return members_; }
    /// One member's posterior, expanded to the ensemble's class list.
    PosteriorMatrix member_proba(int index, const Tensor& rows) const;

private:
    std::vector<int> classes_;
    std::vector<TreeClassifier> members_;
};

ClassifierPtr bagging_train(const Tensor& features, const std::vector<int>& labels,
                            const BaggingConfig& config = {});

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 10;
    bool oob = true;
    std::uint64_t seed = 0;
};

class ForestClassifier final : public Classifier {
public:
    ForestClassifier(std::vector<int> classes, std::vector<TreeClassifier> members,
                     double oob_score);

    std::string kind() const override { return "forest"; }
    const std::vector<int>& classes() const override { return classes_; }
    PosteriorMatrix predict_proba(const Tensor& rows) const override;
    void save(const std::string& path) const override;

    const std::vector<TreeClassifier>& members() const { return members_; }
    PosteriorMatrix member_proba(int index, const Tensor& rows) const;
    /// Accuracy of out-of-bag majority votes; -1 when not computed.
    double oob_score() const { return oob_score_; }

private:
    std::vector<int> classes_;
    std::vector<TreeClassifier> members_;
    double oob_score_;
};

ClassifierPtr forest_train(const Tensor& features, const std::vector<int>& labels,
                           const ForestConfig& config = {});

// ---------------------------------------------------------------------------
// Multinomial logistic regression (the stacking meta-learner)
// ---------------------------------------------------------------------------

struct LogRegConfig {
    double C = 1.0;
    int max_iterations = 500;
    double tolerance = 1e-6;  // on the gradient norm
};

class LogRegClassifier final : public Classifier {
public:
    LogRegClassifier(std::vector<int> classes, Tensor weights, Tensor bias);

    std::string kind() const override { return "logreg"; }
    const std::vector<int>& classes() const override { return classes_; }
    PosteriorMatrix predict_proba(const Tensor& rows) const override;
    void save(const std::string& path) const override;

    const Tensor& weights() const { return weights_; }
    const Tensor& bias() const { return bias_; }

private:
    std::vector<int> classes_;
    Tensor weights_;  // K x d
    Tensor bias_;     // K
};

ClassifierPtr logreg_train(const Tensor& features, const std::vector<int>& labels,
                           const LogRegConfig& config = {});

/// L2 norm of the penalized-likelihood gradient at (weights, bias); the
/// training stopping criterion, exposed so tests can audit returned optima.
double logreg_gradient_norm(const Tensor& features, const std::vector<int>& labels,
                            const std::vector<int>& classes, const Tensor& weights,
                            const Tensor& bias, double C);

// ---------------------------------------------------------------------------

/// Sorted distinct labels. Throws std::invalid_argument when empty or when
/// labels and feature rows disagree in count.
std::vector<int> distinct_classes(const Tensor& features, const std::vector<int>& labels);

/// Re-indexes a posterior onto a wider class list, filling zeros for classes
/// the model never saw. Every model class must appear in `target`.
PosteriorMatrix expand_posterior(const PosteriorMatrix& p, const std::vector<int>& target);

}  // namespace stlfer
