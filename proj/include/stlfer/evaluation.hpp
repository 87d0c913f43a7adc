#pragma once

#include "stlfer/classifiers.hpp"
#include "stlfer/diversity.hpp"
#include "stlfer/ensembles.hpp"
#include "stlfer/features.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stlfer {

/// One leave-one-subject-out fold: every sample of the test subject goes to
/// `test`; the remaining samples split into `train` and `validation`.
struct LosoFold {
    std::string test_subject;
    std::vector<int> train;       // ascending sample indices
    std::vector<int> validation;  // ascending sample indices
    std::vector<int> test;        // ascending sample indices
};

/// One fold per distinct subject, ordered by subject id. The validation set
/// is drawn from the non-test samples, stratified per class (round(fraction
/// * class count) samples each), shuffled by streams derived from `seed`.
/// Throws on a single-subject dataset or fraction outside [0, 1).
std::vector<LosoFold> loso_split(const std::vector<std::string>& subjects,
                                 const std::vector<int>& labels, double validation_fraction,
                                 std::uint64_t seed);
std::vector<LosoFold> loso_split(const LabeledDataset& dataset, double validation_fraction,
                                 std::uint64_t seed);

/// Fraction of positions where predictions equal labels. Throws on empty or
/// mismatched inputs.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

struct ClassAuc {
    int class_id = 0;
    bool present = false;  // the class had at least one positive and one negative
    double auc = 0.0;      // meaningful only when present
};

struct AucSummary {
    std::vector<ClassAuc> per_class;  // one entry per posterior class, in order
    double mean = 0.0;                // unweighted mean over present classes
    int present_classes = 0;
};

/// One-vs-rest AUC per class from the posterior columns, computed with the
/// rank statistic (tied scores contribute 1/2). Classes without both a
/// positive and a negative example are reported absent and excluded from
/// the mean.
AucSummary auc_ovr(const PosteriorMatrix& posteriors, const std::vector<int>& labels);

/// What a KNORA-U pool is made of: each representation's own ensemble
/// members (one dynamic selection per representation, reported as extra
/// columns), or one classifier per representation (a fusion-style row).
enum class KnorauPoolMode { members, representations };

struct EvaluationSettings {
    int pca_components = 150;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;

    bool svm = true;
    bool bagging = true;
    bool forest = true;

    bool fusion_sum = true;
    bool fusion_product = true;
    bool fusion_stacking = true;
    bool knorau = true;
    int knorau_k = 7;
    KnorauPoolMode knorau_pool = KnorauPoolMode::members;

    SvmConfig svm_config;          // seed is overridden per fold/representation
    BaggingConfig bagging_config;  // likewise
    ForestConfig forest_config;    // likewise
    LogRegConfig stacking_config;
};

/// Aggregated LOSO results: representation rows then fusion rows, one column
/// per classifier family, accuracies micro-averaged over all test samples.
struct ExperimentReport {
    std::vector<std::string> class_names;
    std::vector<std::string> row_labels;  // representation rows first
    int representation_rows = 0;
    std::vector<std::string> column_labels;
    Tensor accuracies;  // rows x columns, each in [0, 1]

    std::vector<std::string> fold_subjects;  // fold order
    std::vector<Tensor> fold_correct;        // per fold: rows x columns correct counts
    std::vector<int> fold_test_counts;

    struct AucEntry {
        std::string row;
        std::string column;
        AucSummary summary;
    };
    std::vector<AucEntry> aucs;  // fusion rows only, pooled over folds

    std::vector<std::string> notes;        // e.g. per-fold PCA clamping
    std::vector<std::string> config_echo;  // "key = value" lines
};

/// Row label for one pool member: "Seed 3", "Data lfw", "Depth 2",
/// "Latent 150". The ordinal counts members of the same strategy.
std::string representation_label(const RepresentationSpec& spec, int ordinal_within_strategy);

/// Full LOSO experiment over an already-trained representation pool:
/// per fold and representation, extract + PCA (clamped to the training fold
/// when necessary) + standardize, train the enabled classifiers, evaluate
/// individually and under every enabled fusion rule. Deterministic in
/// settings.seed. Errors carry fold and representation context.
ExperimentReport run_experiment(const RepresentationPool& pool, const LabeledDataset& labeled,
                                const EvaluationSettings& settings);

/// The same experiment starting from already-extracted features, one matrix
/// per representation (all sharing labels, subjects, and class names). The
/// pool overload reduces to this one, so a staged extract-then-evaluate
/// pipeline reproduces the single-process report byte for byte.
ExperimentReport run_experiment(const std::vector<FeatureMatrix>& features,
                                const EvaluationSettings& settings);

/// Aligned text rendering: configuration echo, the accuracy table (percent),
/// the per-class AUC table, per-fold sizes, and notes. Byte-stable for a
/// given report.
std::string render_report(const ExperimentReport& report);

std::string report_accuracy_csv(const ExperimentReport& report);
std::string report_auc_csv(const ExperimentReport& report);
std::string report_folds_csv(const ExperimentReport& report);

void save_report(const ExperimentReport& report, const std::string& path);
ExperimentReport load_report(const std::string& path);

}  // namespace stlfer
