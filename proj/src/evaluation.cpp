#include "stlfer/evaluation.hpp"

#include "stlfer/random.hpp"
#include "stlfer/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stlfer {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

Tensor gather_rows(const Tensor& rows, const std::vector<int>& idx) {
    const int d = rows.dim(1);
    Tensor out({static_cast<int>(idx.size()), d});
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int c = 0; c < d; ++c) out.at(static_cast<int>(i), c) = rows.at(idx[i], c);
    return out;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& values, const std::vector<int>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(values[static_cast<std::size_t>(i)]);
    return out;
}

int argmax_class(const PosteriorMatrix& p, int row) {
    int best = 0;
    for (int c = 1; c < p.rows.dim(1); ++c)
        if (p.rows.at(row, c) > p.rows.at(row, best)) best = c;
    return p.classes[static_cast<std::size_t>(best)];
}

int count_correct(const PosteriorMatrix& p, const std::vector<int>& labels) {
    int correct = 0;
    for (int r = 0; r < p.rows.dim(0); ++r)
        if (argmax_class(p, r) == labels[static_cast<std::size_t>(r)]) ++correct;
    return correct;
}

/// Midrank AUC: average ranks over tied scores, so each tied positive /
/// negative pair contributes exactly 1/2.
double rank_auc(const std::vector<double>& scores, const std::vector<char>& positive) {
    const std::size_t n = scores.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
    });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[static_cast<std::size_t>(order[j + 1])] ==
                                scores[static_cast<std::size_t>(order[i])])
            ++j;
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) rank[static_cast<std::size_t>(order[t])] = avg;
        i = j + 1;
    }
    double rank_sum = 0.0;
    double p = 0.0;
    for (std::size_t t = 0; t < n; ++t)
        if (positive[t]) {
            rank_sum += rank[t];
            p += 1.0;
        }
    const double neg = static_cast<double>(n) - p;
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * neg);
}

template <typename Fn>
auto with_context(const std::string& context, Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(context + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(context + ": " + e.what());
    }
}

enum class ColumnKind { svm, bagging, forest, knorau_dt, knorau_rf };

struct ColumnPlan {
    std::string label;
    ColumnKind kind;
};

/// Aligned fixed-width table: first column left-aligned, the rest right-
/// aligned, two spaces between columns, a dash rule under the header and an
/// optional one before the final `tail_rows` rows.
std::string render_table(const std::vector<std::vector<std::string>>& rows, int tail_rows) {
    if (rows.empty()) return "";
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::size_t total = 0;
    for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c ? 2 : 0);
    const std::string rule(total, '-');

    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r == 1) out += rule + "\n";
        if (tail_rows > 0 && rows.size() > static_cast<std::size_t>(tail_rows) &&
            r == rows.size() - static_cast<std::size_t>(tail_rows))
            out += rule + "\n";
        const auto& row = rows[r];
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += "  ";
            if (c == 0) {
                out += row[c];
                out += std::string(width[c] - row[c].size(), ' ');
            } else {
                out += std::string(width[c] - row[c].size(), ' ');
                out += row[c];
            }
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += "\n";
    }
    return out;
}

void write_string_list(BinaryWriter& w, const std::vector<std::string>& items) {
    w.u32(static_cast<std::uint32_t>(items.size()));
    for (const auto& s : items) w.str(s);
}

std::vector<std::string> read_string_list(BinaryReader& r) {
    std::vector<std::string> items(r.u32());
    for (auto& s : items) s = r.str();
    return items;
}

}  // namespace

std::vector<LosoFold> loso_split(const std::vector<std::string>& subjects,
                                 const std::vector<int>& labels, double validation_fraction,
                                 std::uint64_t seed) {
    if (subjects.empty()) throw std::invalid_argument("loso_split: empty sample list");
    if (subjects.size() != labels.size())
        throw std::invalid_argument("loso_split: " + std::to_string(subjects.size()) +
                                    " subjects vs " + std::to_string(labels.size()) + " labels");
    if (!(validation_fraction >= 0.0) || validation_fraction >= 1.0)
        throw std::invalid_argument("validation fraction must lie in [0, 1), got " +
                                    fmt("%g", validation_fraction));
    const std::set<std::string> subject_set(subjects.begin(), subjects.end());
    if (subject_set.size() < 2)
        throw std::invalid_argument("leave-one-subject-out needs at least two subjects, got " +
                                    std::to_string(subject_set.size()));
    const std::vector<std::string> ordered(subject_set.begin(), subject_set.end());
    const int m = static_cast<int>(subjects.size());
    const RandomStream master(seed);

    std::vector<LosoFold> folds;
    folds.reserve(ordered.size());
    for (std::size_t f = 0; f < ordered.size(); ++f) {
        LosoFold fold;
        fold.test_subject = ordered[f];
        std::map<int, std::vector<int>> strata;  // class -> non-test indices, ascending
        for (int i = 0; i < m; ++i) {
            if (subjects[static_cast<std::size_t>(i)] == fold.test_subject)
                fold.test.push_back(i);
            else
                strata[labels[static_cast<std::size_t>(i)]].push_back(i);
        }
        const RandomStream fold_stream = master.child("loso", f);
        for (auto& [label, idx] : strata) {
            const int n_val = static_cast<int>(
                std::floor(validation_fraction * static_cast<double>(idx.size()) + 0.5));
            RandomStream stratum = fold_stream.child("stratum", static_cast<std::uint64_t>(label));
            stratum.shuffle(idx);
            for (std::size_t i = 0; i < idx.size(); ++i)
                (static_cast<int>(i) < n_val ? fold.validation : fold.train).push_back(idx[i]);
        }
        std::sort(fold.train.begin(), fold.train.end());
        std::sort(fold.validation.begin(), fold.validation.end());
        folds.push_back(std::move(fold));
    }
    return folds;
}

std::vector<LosoFold> loso_split(const LabeledDataset& dataset, double validation_fraction,
                                 std::uint64_t seed) {
    validate(dataset);
    std::vector<std::string> subjects;
    std::vector<int> labels;
    subjects.reserve(dataset.samples.size());
    labels.reserve(dataset.samples.size());
    for (const auto& s : dataset.samples) {
        subjects.push_back(s.subject_id);
        labels.push_back(s.label);
    }
    return loso_split(subjects, labels, validation_fraction, seed);
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty()) throw std::invalid_argument("accuracy of an empty prediction list");
    if (predictions.size() != labels.size())
        throw std::invalid_argument("accuracy: " + std::to_string(predictions.size()) +
                                    " predictions vs " + std::to_string(labels.size()) +
                                    " labels");
    int correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

AucSummary auc_ovr(const PosteriorMatrix& posteriors, const std::vector<int>& labels) {
    if (posteriors.rows.rank() != 2)
        throw std::invalid_argument("auc_ovr: posterior matrix must be rank-2");
    const int m = posteriors.rows.dim(0);
    if (m == 0) throw std::invalid_argument("auc_ovr: empty posterior matrix");
    if (static_cast<int>(labels.size()) != m)
        throw std::invalid_argument("auc_ovr: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(m) + " rows");

    AucSummary summary;
    double total = 0.0;
    for (std::size_t c = 0; c < posteriors.classes.size(); ++c) {
        ClassAuc entry;
        entry.class_id = posteriors.classes[c];
        std::vector<double> scores(static_cast<std::size_t>(m));
        std::vector<char> positive(static_cast<std::size_t>(m));
        int pos = 0;
        for (int r = 0; r < m; ++r) {
            scores[static_cast<std::size_t>(r)] = posteriors.rows.at(r, static_cast<int>(c));
            const bool is_pos = labels[static_cast<std::size_t>(r)] == entry.class_id;
            positive[static_cast<std::size_t>(r)] = static_cast<char>(is_pos);
            if (is_pos) ++pos;
        }
        if (pos > 0 && pos < m) {
            entry.present = true;
            entry.auc = rank_auc(scores, positive);
            total += entry.auc;
            ++summary.present_classes;
        }
        summary.per_class.push_back(entry);
    }
    summary.mean =
        summary.present_classes > 0 ? total / static_cast<double>(summary.present_classes) : 0.0;
    return summary;
}

std::string representation_label(const RepresentationSpec& spec, int ordinal_within_strategy) {
    if (spec.strategy == "seed") return "Seed " + std::to_string(ordinal_within_strategy + 1);
    if (spec.strategy == "dataset") return "Data " + spec.dataset_id;
    if (spec.strategy == "architecture") return "Depth " + std::to_string(spec.arch.depth);
    if (spec.strategy == "latent") return "Latent " + std::to_string(spec.arch.latent_size);
    throw std::invalid_argument("unknown representation strategy: " + spec.strategy);
}

ExperimentReport run_experiment(const RepresentationPool& pool, const LabeledDataset& labeled,
                                const EvaluationSettings& settings) {
    validate(labeled);
    if (pool.members.empty()) throw std::invalid_argument("representation pool is empty");

    // Featurize once per representation: encoders never depend on the fold.
    // The labeled set is preprocessed once per distinct encoder input shape.
    std::map<std::pair<int, int>, LabeledDataset> preprocessed;
    std::vector<FeatureMatrix> features_by_rep;
    features_by_rep.reserve(pool.members.size());
    std::map<std::string, int> strategy_ordinal;
    for (const auto& member : pool.members) {
        const std::pair<int, int> shape{member.spec.arch.input_h, member.spec.arch.input_w};
        auto it = preprocessed.find(shape);
        if (it == preprocessed.end()) {
            PreprocessConfig pc;
            pc.target_h = shape.first;
            pc.target_w = shape.second;
            LabeledDataset resized;
            resized.class_names = labeled.class_names;
            for (const auto& s : labeled.samples)
                resized.samples.push_back({preprocess(s.image, pc), s.label, s.subject_id});
            it = preprocessed.emplace(shape, std::move(resized)).first;
        }
        const std::string label =
            representation_label(member.spec, strategy_ordinal[member.spec.strategy]++);
        with_context("representation " + label, [&] {
            FeatureMatrix fm = extract_features(member.encoder, it->second);
            fm.provenance = member.spec;
            features_by_rep.push_back(std::move(fm));
        });
    }
    return run_experiment(features_by_rep, settings);
}

ExperimentReport run_experiment(const std::vector<FeatureMatrix>& features,
                                const EvaluationSettings& settings) {
    if (features.empty()) throw std::invalid_argument("representation pool is empty");
    const FeatureMatrix& first = features.front();
    const int n_samples = first.count();
    if (n_samples < 1) throw std::invalid_argument("feature matrices are empty");
    const int n_classes = static_cast<int>(first.class_names.size());
    if (n_classes < 1) throw std::invalid_argument("feature matrices carry no class names");
    for (std::size_t r = 0; r < features.size(); ++r) {
        const FeatureMatrix& fm = features[r];
        const std::string who = "representation " + std::to_string(r);
        if (fm.rows.rank() != 2)
            throw std::invalid_argument(who + ": feature rows must be rank-2");
        if (fm.count() != n_samples)
            throw std::invalid_argument(who + ": " + std::to_string(fm.count()) +
                                        " samples, expected " + std::to_string(n_samples));
        if (static_cast<int>(fm.labels.size()) != fm.count() ||
            static_cast<int>(fm.subject_ids.size()) != fm.count())
            throw std::invalid_argument(who + ": labels/subjects do not match the row count");
        if (fm.class_names != first.class_names || fm.labels != first.labels ||
            fm.subject_ids != first.subject_ids)
            throw std::invalid_argument(
                who + ": class names, labels, and subjects must match the first representation");
    }
    for (int i = 0; i < n_samples; ++i) {
        const int label = first.labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= n_classes)
            throw std::invalid_argument("sample " + std::to_string(i) + ": label " +
                                        std::to_string(label) + " outside the class list");
        if (first.subject_ids[static_cast<std::size_t>(i)].empty())
            throw std::invalid_argument("sample " + std::to_string(i) + ": empty subject id");
    }

    if (settings.pca_components < 1)
        throw std::invalid_argument("pca_components must be >= 1, got " +
                                    std::to_string(settings.pca_components));
    if (settings.knorau && settings.knorau_k < 1)
        throw std::invalid_argument("knorau k must be >= 1, got " +
                                    std::to_string(settings.knorau_k));
    const bool needs_validation = settings.fusion_stacking || settings.knorau;
    if (settings.validation_fraction == 0.0 && needs_validation)
        throw std::invalid_argument(
            "stacking and knora-u need a validation split; raise validation_fraction or disable "
            "them");

    const bool member_knorau = settings.knorau && settings.knorau_pool == KnorauPoolMode::members;
    const bool rep_knorau =
        settings.knorau && settings.knorau_pool == KnorauPoolMode::representations;

    std::vector<ColumnPlan> columns;
    if (settings.svm) columns.push_back({"SVM", ColumnKind::svm});
    if (settings.bagging) columns.push_back({"BG", ColumnKind::bagging});
    if (settings.forest) columns.push_back({"RF", ColumnKind::forest});
    if (member_knorau && settings.bagging) columns.push_back({"KnoraU-DT", ColumnKind::knorau_dt});
    if (member_knorau && settings.forest) columns.push_back({"KnoraU-RF", ColumnKind::knorau_rf});
    if (columns.empty()) throw std::invalid_argument("no classifier enabled");

    std::vector<std::string> fusion_rows;
    if (settings.fusion_sum) fusion_rows.push_back("Sum");
    if (settings.fusion_product) fusion_rows.push_back("Product");
    if (settings.fusion_stacking) fusion_rows.push_back("Stacking");
    if (rep_knorau) fusion_rows.push_back("KnoraU");

    const int n_reps = static_cast<int>(features.size());
    const int n_fusion = static_cast<int>(fusion_rows.size());
    const int n_rows = n_reps + n_fusion;
    const int n_cols = static_cast<int>(columns.size());
    std::vector<int> all_classes(static_cast<std::size_t>(n_classes));
    std::iota(all_classes.begin(), all_classes.end(), 0);

    ExperimentReport report;
    report.class_names = first.class_names;
    report.representation_rows = n_reps;
    std::map<std::string, int> strategy_ordinal;
    for (const auto& fm : features)
        report.row_labels.push_back(
            representation_label(fm.provenance, strategy_ordinal[fm.provenance.strategy]++));
    for (const auto& label : fusion_rows) report.row_labels.push_back(label);
    for (const auto& col : columns) report.column_labels.push_back(col.label);

    const std::vector<LosoFold> folds = loso_split(first.subject_ids, first.labels,
                                                   settings.validation_fraction, settings.seed);
    // protocol hygiene: the split already guarantees this, but the guard is
    // cheap and the property is load-bearing for every reported number
    for (const auto& fold : folds) {
        for (const auto& group : {fold.train, fold.validation})
            for (int i : group)
                if (first.subject_ids[static_cast<std::size_t>(i)] == fold.test_subject)
                    throw std::logic_error("loso fold for subject " + fold.test_subject +
                                           " leaked a test-subject sample");
    }

    Tensor total_correct({n_rows, n_cols});
    int total_test = 0;
    // pooled posteriors per fusion cell, for AUC over all test samples
    std::vector<std::vector<std::vector<double>>> pooled(
        static_cast<std::size_t>(n_fusion),
        std::vector<std::vector<double>>(static_cast<std::size_t>(n_cols)));
    std::vector<int> pooled_labels;

    const RandomStream master(settings.seed);
    for (std::size_t fold_index = 0; fold_index < folds.size(); ++fold_index) {
        const LosoFold& fold = folds[fold_index];
        const RandomStream fold_stream = master.child("fold", fold_index);
        const std::string fold_context = "fold " + fold.test_subject;

        const std::vector<int>& all_labels = first.labels;
        const std::vector<int> train_labels = gather(all_labels, fold.train);
        const std::vector<int> val_labels = gather(all_labels, fold.validation);
        const std::vector<int> test_labels = gather(all_labels, fold.test);

        Tensor fold_correct({n_rows, n_cols});
        std::vector<std::vector<PosteriorMatrix>> val_by_col(static_cast<std::size_t>(n_cols));
        std::vector<std::vector<PosteriorMatrix>> test_by_col(static_cast<std::size_t>(n_cols));
        Tensor rep0_val;   // neighbour space for cross-representation KNORA-U
        Tensor rep0_test;

        for (int r = 0; r < n_reps; ++r) {
            const std::string context =
                fold_context + ", " + report.row_labels[static_cast<std::size_t>(r)];
            with_context(context, [&] {
                const FeatureMatrix& fm = features[static_cast<std::size_t>(r)];
                const Tensor train_x = gather_rows(fm.rows, fold.train);
                const Tensor val_x = gather_rows(fm.rows, fold.validation);
                const Tensor test_x = gather_rows(fm.rows, fold.test);

                const int n_train = train_x.dim(0);
                if (n_train < 2)
                    throw std::invalid_argument("training fold too small for PCA (" +
                                                std::to_string(n_train) + " samples)");
                const PcaModel pca = pca_fit_clamped(train_x, settings.pca_components);
                if (pca.components.dim(0) < settings.pca_components)
                    report.notes.push_back(context + ": PCA components clamped to " +
                                           std::to_string(pca.components.dim(0)));
                const Standardizer std_fit = standardizer_fit(pca_transform(pca, train_x));
                const Tensor train_s =
                    standardizer_transform(std_fit, pca_transform(pca, train_x));
                const Tensor val_s = standardizer_transform(std_fit, pca_transform(pca, val_x));
                const Tensor test_s = standardizer_transform(std_fit, pca_transform(pca, test_x));
                if (r == 0 && rep_knorau) {
                    rep0_val = val_s;
                    rep0_test = test_s;
                }

                ClassifierPtr bag_model;
                ClassifierPtr rf_model;
                for (std::size_t c = 0; c < columns.size(); ++c) {
                    const ColumnKind kind = columns[c].kind;
                    PosteriorMatrix val_post;
                    PosteriorMatrix test_post;
                    if (kind == ColumnKind::svm) {
                        SvmConfig cfg = settings.svm_config;
                        cfg.seed = fold_stream.child("svm", static_cast<std::uint64_t>(r)).seed();
                        const ClassifierPtr model = svm_train(train_s, train_labels, cfg);
                        val_post = expand_posterior(model->predict_proba(val_s), all_classes);
                        test_post = expand_posterior(model->predict_proba(test_s), all_classes);
                    } else if (kind == ColumnKind::bagging) {
                        BaggingConfig cfg = settings.bagging_config;
                        cfg.seed =
                            fold_stream.child("bagging", static_cast<std::uint64_t>(r)).seed();
                        bag_model = bagging_train(train_s, train_labels, cfg);
                        val_post = expand_posterior(bag_model->predict_proba(val_s), all_classes);
                        test_post =
                            expand_posterior(bag_model->predict_proba(test_s), all_classes);
                    } else if (kind == ColumnKind::forest) {
                        ForestConfig cfg = settings.forest_config;
                        cfg.seed =
                            fold_stream.child("forest", static_cast<std::uint64_t>(r)).seed();
                        rf_model = forest_train(train_s, train_labels, cfg);
                        val_post = expand_posterior(rf_model->predict_proba(val_s), all_classes);
                        test_post = expand_posterior(rf_model->predict_proba(test_s), all_classes);
                    } else {
                        // dynamic selection over one representation's ensemble members
                        const int n_members =
                            kind == ColumnKind::knorau_dt
                                ? static_cast<const BaggingClassifier*>(bag_model.get())
                                      ->members()
                                      .size()
                                : static_cast<const ForestClassifier*>(rf_model.get())
                                      ->members()
                                      .size();
                        std::vector<PosteriorMatrix> valp;
                        std::vector<PosteriorMatrix> testp;
                        valp.reserve(static_cast<std::size_t>(n_members));
                        testp.reserve(static_cast<std::size_t>(n_members));
                        for (int mi = 0; mi < n_members; ++mi) {
                            if (kind == ColumnKind::knorau_dt) {
                                const auto* bag =
                                    static_cast<const BaggingClassifier*>(bag_model.get());
                                valp.push_back(
                                    expand_posterior(bag->member_proba(mi, val_s), all_classes));
                                testp.push_back(
                                    expand_posterior(bag->member_proba(mi, test_s), all_classes));
                            } else {
                                const auto* rf =
                                    static_cast<const ForestClassifier*>(rf_model.get());
                                valp.push_back(
                                    expand_posterior(rf->member_proba(mi, val_s), all_classes));
                                testp.push_back(
                                    expand_posterior(rf->member_proba(mi, test_s), all_classes));
                            }
                        }
                        test_post = knorau_select(valp, val_labels, val_s, testp, test_s,
                                                  settings.knorau_k)
                                        .posteriors;
                        val_post = knorau_select(valp, val_labels, val_s, valp, val_s,
                                                 settings.knorau_k)
                                       .posteriors;
                    }
                    fold_correct.at(r, static_cast<int>(c)) +=
                        count_correct(test_post, test_labels);
                    val_by_col[c].push_back(std::move(val_post));
                    test_by_col[c].push_back(std::move(test_post));
                }
            });
        }

        // fusion rows, per column
        for (std::size_t c = 0; c < columns.size(); ++c) {
            for (int f = 0; f < n_fusion; ++f) {
                const std::string& rule = fusion_rows[static_cast<std::size_t>(f)];
                const std::string context = fold_context + ", " + rule + "/" + columns[c].label;
                const PosteriorMatrix fused = with_context(context, [&]() -> PosteriorMatrix {
                    if (rule == "Sum") return fuse_sum(test_by_col[c]);
                    if (rule == "Product") return fuse_product(test_by_col[c]);
                    if (rule == "Stacking") {
                        const ClassifierPtr meta =
                            stack_train(val_by_col[c], val_labels, settings.stacking_config);
                        return stack_predict(*meta, test_by_col[c]);
                    }
                    return knorau_select(val_by_col[c], val_labels, rep0_val, test_by_col[c],
                                         rep0_test, settings.knorau_k)
                        .posteriors;
                });
                fold_correct.at(n_reps + f, static_cast<int>(c)) +=
                    count_correct(fused, test_labels);
                auto& sink = pooled[static_cast<std::size_t>(f)][c];
                sink.insert(sink.end(), fused.rows.values().begin(), fused.rows.values().end());
            }
        }

        pooled_labels.insert(pooled_labels.end(), test_labels.begin(), test_labels.end());
        for (std::size_t i = 0; i < total_correct.size(); ++i)
            total_correct[i] += fold_correct[i];
        total_test += static_cast<int>(fold.test.size());
        report.fold_subjects.push_back(fold.test_subject);
        report.fold_correct.push_back(std::move(fold_correct));
        report.fold_test_counts.push_back(static_cast<int>(fold.test.size()));
    }

    report.accuracies = Tensor({n_rows, n_cols});
    for (std::size_t i = 0; i < total_correct.size(); ++i)
        report.accuracies[i] = total_correct[i] / static_cast<double>(total_test);

    for (int f = 0; f < n_fusion; ++f)
        for (std::size_t c = 0; c < columns.size(); ++c) {
            PosteriorMatrix pm;
            pm.classes = all_classes;
            pm.rows = Tensor({total_test, n_classes}, pooled[static_cast<std::size_t>(f)][c]);
            report.aucs.push_back({fusion_rows[static_cast<std::size_t>(f)], columns[c].label,
                                   auc_ovr(pm, pooled_labels)});
        }

    // configuration echo, in a fixed order so reports are byte-stable
    const std::set<std::string> subject_set(first.subject_ids.begin(), first.subject_ids.end());
    auto& echo = report.config_echo;
    echo.push_back("subjects = " + std::to_string(subject_set.size()));
    echo.push_back("samples = " + std::to_string(n_samples));
    echo.push_back("classes = " + join(first.class_names, ", "));
    echo.push_back("representations = " + std::to_string(n_reps));
    echo.push_back("pca_components = " + std::to_string(settings.pca_components));
    echo.push_back("validation_fraction = " + fmt("%g", settings.validation_fraction));
    echo.push_back("seed = " + std::to_string(settings.seed));
    {
        std::vector<std::string> cls;
        if (settings.svm) cls.push_back("svm");
        if (settings.bagging) cls.push_back("bagging");
        if (settings.forest) cls.push_back("forest");
        echo.push_back("classifiers = " + join(cls, ", "));
        std::vector<std::string> fus;
        if (settings.fusion_sum) fus.push_back("sum");
        if (settings.fusion_product) fus.push_back("product");
        if (settings.fusion_stacking) fus.push_back("stacking");
        echo.push_back("fusions = " + (fus.empty() ? "none" : join(fus, ", ")));
    }
    echo.push_back(settings.knorau
                       ? "knorau = " +
                             std::string(member_knorau ? "members" : "representations") +
                             " (k = " + std::to_string(settings.knorau_k) + ")"
                       : "knorau = off");
    if (settings.svm) {
        echo.push_back("svm.C = " + fmt("%g", settings.svm_config.C));
        echo.push_back("svm.balanced = " +
                       std::string(settings.svm_config.balanced ? "true" : "false"));
        echo.push_back("svm.iterations = " + std::to_string(settings.svm_config.iterations));
        echo.push_back("svm.batch_size = " + std::to_string(settings.svm_config.batch_size));
    }
    if (settings.bagging) {
        echo.push_back("bagging.estimators = " +
                       std::to_string(settings.bagging_config.n_estimators));
        echo.push_back("bagging.tree_depth = " +
                       std::to_string(settings.bagging_config.tree.max_depth));
    }
    if (settings.forest) {
        echo.push_back("forest.trees = " + std::to_string(settings.forest_config.n_trees));
        echo.push_back("forest.depth = " + std::to_string(settings.forest_config.max_depth));
        echo.push_back("forest.oob = " +
                       std::string(settings.forest_config.oob ? "true" : "false"));
    }
    if (settings.fusion_stacking)
        echo.push_back("stacking.C = " + fmt("%g", settings.stacking_config.C));

    return report;
}

std::string render_report(const ExperimentReport& report) {
    std::string out;
    out += "Self-Taught Expression Ensembles - Experiment Report\n";
    out += "=====================================================\n\n";

    out += "Configuration\n-------------\n";
    for (const auto& line : report.config_echo) out += line + "\n";
    out += "\n";

    out += "Accuracy (%)\n------------\n";
    {
        std::vector<std::vector<std::string>> table;
        std::vector<std::string> header{"Repr."};
        for (const auto& col : report.column_labels) header.push_back(col);
        table.push_back(std::move(header));
        for (std::size_t r = 0; r < report.row_labels.size(); ++r) {
            std::vector<std::string> row{report.row_labels[r]};
            for (int c = 0; c < report.accuracies.dim(1); ++c)
                row.push_back(fmt("%.2f", report.accuracies.at(static_cast<int>(r), c) * 100.0));
            table.push_back(std::move(row));
        }
        const int tail =
            static_cast<int>(report.row_labels.size()) - report.representation_rows;
        out += render_table(table, tail);
    }
    out += "\n";

    if (!report.aucs.empty()) {
        out += "Per-class AUC (pooled over folds)\n---------------------------------\n";
        std::vector<std::vector<std::string>> table;
        std::vector<std::string> header{"Fusion", "Classifier"};
        for (const auto& name : report.class_names) header.push_back(name);
        header.push_back("Mean");
        table.push_back(std::move(header));
        for (const auto& entry : report.aucs) {
            std::vector<std::string> row{entry.row, entry.column};
            for (const auto& cls : entry.summary.per_class)
                row.push_back(cls.present ? fmt("%.4f", cls.auc) : "absent");
            row.push_back(entry.summary.present_classes > 0 ? fmt("%.4f", entry.summary.mean)
                                                            : "absent");
            table.push_back(std::move(row));
        }
        out += render_table(table, 0);
        out += "\n";
    }

    out += "Folds\n-----\n";
    {
        std::vector<std::vector<std::string>> table;
        table.push_back({"Subject", "Test samples"});
        for (std::size_t f = 0; f < report.fold_subjects.size(); ++f)
            table.push_back(
                {report.fold_subjects[f], std::to_string(report.fold_test_counts[f])});
        out += render_table(table, 0);
    }
    out += "\n";

    out += "Notes\n-----\n";
    if (report.notes.empty())
        out += "(none)\n";
    else
        for (const auto& note : report.notes) out += "- " + note + "\n";
    return out;
}

std::string report_accuracy_csv(const ExperimentReport& report) {
    std::string out = "row,column,accuracy\n";
    for (std::size_t r = 0; r < report.row_labels.size(); ++r)
        for (std::size_t c = 0; c < report.column_labels.size(); ++c)
            out += report.row_labels[r] + "," + report.column_labels[c] + "," +
                   fmt("%.10f", report.accuracies.at(static_cast<int>(r), static_cast<int>(c))) +
                   "\n";
    return out;
}

std::string report_auc_csv(const ExperimentReport& report) {
    std::string out = "row,column,class,present,auc\n";
    for (const auto& entry : report.aucs)
        for (const auto& cls : entry.summary.per_class) {
            const auto& name = report.class_names[static_cast<std::size_t>(cls.class_id)];
            out += entry.row + "," + entry.column + "," + name + "," +
                   (cls.present ? "1," + fmt("%.10f", cls.auc) : "0,") + "\n";
        }
    return out;
}

std::string report_folds_csv(const ExperimentReport& report) {
    std::string out = "fold,row,column,correct,total\n";
    for (std::size_t f = 0; f < report.fold_subjects.size(); ++f)
        for (std::size_t r = 0; r < report.row_labels.size(); ++r)
            for (std::size_t c = 0; c < report.column_labels.size(); ++c) {
                const double correct =
                    report.fold_correct[f].at(static_cast<int>(r), static_cast<int>(c));
                out += report.fold_subjects[f] + "," + report.row_labels[r] + "," +
                       report.column_labels[c] + "," +
                       std::to_string(static_cast<long long>(correct)) + "," +
                       std::to_string(report.fold_test_counts[f]) + "\n";
            }
    return out;
}

void save_report(const ExperimentReport& report, const std::string& path) {
    BinaryWriter w;
    write_model_header(w, "report");
    write_string_list(w, report.class_names);
    write_string_list(w, report.row_labels);
    w.i32(report.representation_rows);
    write_string_list(w, report.column_labels);
    w.tensor(report.accuracies);
    write_string_list(w, report.fold_subjects);
    w.u32(static_cast<std::uint32_t>(report.fold_correct.size()));
    for (const auto& t : report.fold_correct) w.tensor(t);
    w.u32(static_cast<std::uint32_t>(report.fold_test_counts.size()));
    for (int n : report.fold_test_counts) w.i32(n);
    w.u32(static_cast<std::uint32_t>(report.aucs.size()));
    for (const auto& entry : report.aucs) {
        w.str(entry.row);
        w.str(entry.column);
        w.u32(static_cast<std::uint32_t>(entry.summary.per_class.size()));
        for (const auto& cls : entry.summary.per_class) {
            w.i32(cls.class_id);
            w.u8(cls.present ? 1 : 0);
            w.f64(cls.auc);
        }
        w.f64(entry.summary.mean);
        w.i32(entry.summary.present_classes);
    }
    write_string_list(w, report.notes);
    write_string_list(w, report.config_echo);
    w.save(path);
}

ExperimentReport load_report(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);
    require_kind(read_model_header(r), "report");
    ExperimentReport report;
    report.class_names = read_string_list(r);
    report.row_labels = read_string_list(r);
    report.representation_rows = r.i32();
    report.column_labels = read_string_list(r);
    report.accuracies = r.tensor();
    report.fold_subjects = read_string_list(r);
    report.fold_correct.resize(r.u32());
    for (auto& t : report.fold_correct) t = r.tensor();
    report.fold_test_counts.resize(r.u32());
    for (auto& n : report.fold_test_counts) n = r.i32();
    report.aucs.resize(r.u32());
    for (auto& entry : report.aucs) {
        entry.row = r.str();
        entry.column = r.str();
        entry.summary.per_class.resize(r.u32());
        for (auto& cls : entry.summary.per_class) {
            cls.class_id = r.i32();
            cls.present = r.u8() != 0;
            cls.auc = r.f64();
        }
        entry.summary.mean = r.f64();
        entry.summary.present_classes = r.i32();
    }
    report.notes = read_string_list(r);
    report.config_echo = read_string_list(r);
    return report;
}

}  // namespace stlfer
