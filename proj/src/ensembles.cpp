#include "stlfer/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace stlfer {

namespace {

constexpr double kProductFloor = 1e-12;

void require_fusable(const std::vector<PosteriorMatrix>& posteriors) {
    if (posteriors.empty()) throw std::invalid_argument("fusion needs at least one posterior");
    const PosteriorMatrix& first = posteriors.front();
    if (first.rows.rank() != 2)
        throw std::invalid_argument("posterior matrices must be rank-2, got " +
                                    first.rows.shape_str());
    for (std::size_t i = 1; i < posteriors.size(); ++i) {
        if (!posteriors[i].rows.same_shape(first.rows))
            throw std::invalid_argument("posterior " + std::to_string(i) + " has shape " +
                                        posteriors[i].rows.shape_str() + ", expected " +
                                        first.rows.shape_str());
        if (posteriors[i].classes != first.classes)
            throw std::invalid_argument("posterior " + std::to_string(i) +
                                        " disagrees on the class list");
    }
}

int argmax_row(const Tensor& rows, int r) {
    int best = 0;
    for (int c = 1; c < rows.dim(1); ++c)
        if (rows.at(r, c) > rows.at(r, best)) best = c;
    return best;
}

Tensor concat_columns(const std::vector<PosteriorMatrix>& posteriors) {
    const int m = posteriors.front().rows.dim(0);
    const int k = posteriors.front().rows.dim(1);
    const int n = static_cast<int>(posteriors.size());
    Tensor out({m, n * k});
    for (int r = 0; r < m; ++r)
        for (int j = 0; j < n; ++j)
            for (int c = 0; c < k; ++c) out.at(r, j * k + c) = posteriors[j].rows.at(r, c);
    return out;
}

}  // namespace

PosteriorMatrix fuse_sum(const std::vector<PosteriorMatrix>& posteriors) {
    require_fusable(posteriors);
    const int m = posteriors.front().rows.dim(0);
    const int k = posteriors.front().rows.dim(1);
    Tensor out({m, k});
    const double inv = 1.0 / static_cast<double>(posteriors.size());
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < k; ++c) {
            double s = 0.0;
            for (const PosteriorMatrix& p : posteriors) s += p.rows.at(r, c);
            out.at(r, c) = s * inv;
        }
    return {std::move(out), posteriors.front().classes};
}

PosteriorMatrix fuse_product(const std::vector<PosteriorMatrix>& posteriors) {
    require_fusable(posteriors);
    const int m = posteriors.front().rows.dim(0);
    const int k = posteriors.front().rows.dim(1);
    Tensor out({m, k});
    for (int r = 0; r < m; ++r) {
        double total = 0.0;
        for (int c = 0; c < k; ++c) {
            double prod = 1.0;
            for (const PosteriorMatrix& p : posteriors)
                prod *= std::max(p.rows.at(r, c), kProductFloor);
            out.at(r, c) = prod;
            total += prod;
        }
        // total >= k * floor^members > 0, so the division is safe
        for (int c = 0; c < k; ++c) out.at(r, c) /= total;
    }
    return {std::move(out), posteriors.front().classes};
}

ClassifierPtr stack_train(const std::vector<PosteriorMatrix>& validation_posteriors,
                          const std::vector<int>& validation_labels, const LogRegConfig& config) {
    require_fusable(validation_posteriors);
    const int m = validation_posteriors.front().rows.dim(0);
    if (static_cast<int>(validation_labels.size()) != m)
        throw std::invalid_argument("stacking: " + std::to_string(validation_labels.size()) +
                                    " labels for " + std::to_string(m) + " posterior rows");
    const std::set<int> distinct(validation_labels.begin(), validation_labels.end());
    if (distinct.size() < 2)
        throw std::invalid_argument("stacking needs validation labels from at least two classes");
    return logreg_train(concat_columns(validation_posteriors), validation_labels, config);
}

PosteriorMatrix stack_predict(const Classifier& meta,
                              const std::vector<PosteriorMatrix>& test_posteriors) {
    require_fusable(test_posteriors);
    return meta.predict_proba(concat_columns(test_posteriors));
}

// ---------------------------------------------------------------------------
// KNORA-U
// ---------------------------------------------------------------------------

KnorauBatchResult knorau_select(const std::vector<PosteriorMatrix>& validation_posteriors,
                                const std::vector<int>& validation_labels,
                                const Tensor& validation_features,
                                const std::vector<PosteriorMatrix>& test_posteriors,
                                const Tensor& test_features, int k) {
    require_fusable(validation_posteriors);
    require_fusable(test_posteriors);
    if (validation_posteriors.size() != test_posteriors.size())
        throw std::invalid_argument("knora-u: validation and test posterior counts differ");
    if (validation_posteriors.front().classes != test_posteriors.front().classes)
        throw std::invalid_argument("knora-u: validation and test class lists differ");
    if (validation_features.rank() != 2 || test_features.rank() != 2)
        throw std::invalid_argument("knora-u feature matrices must be rank-2");
    if (validation_features.dim(1) != test_features.dim(1))
        throw std::invalid_argument("knora-u: validation and test feature widths differ");
    const int n_val = validation_features.dim(0);
    const int n_test = test_features.dim(0);
    if (validation_posteriors.front().rows.dim(0) != n_val)
        throw std::invalid_argument("knora-u: validation posterior rows do not match features");
    if (test_posteriors.front().rows.dim(0) != n_test)
        throw std::invalid_argument("knora-u: test posterior rows do not match features");
    if (static_cast<int>(validation_labels.size()) != n_val)
        throw std::invalid_argument("knora-u: " + std::to_string(validation_labels.size()) +
                                    " validation labels for " + std::to_string(n_val) + " rows");
    if (k < 1) throw std::invalid_argument("knora-u needs k >= 1, got " + std::to_string(k));
    if (n_val < k)
        throw std::invalid_argument("knora-u needs at least k=" + std::to_string(k) +
                                    " validation rows, got " + std::to_string(n_val));

    const std::vector<int>& classes = validation_posteriors.front().classes;
    const std::size_t members = validation_posteriors.size();
    const int d = validation_features.dim(1);

    // per-member correctness on every validation row
    std::vector<std::vector<char>> correct(
        static_cast<std::size_t>(n_val), std::vector<char>(members, static_cast<char>(0)));
    for (std::size_t j = 0; j < members; ++j)
        for (int r = 0; r < n_val; ++r) {
            const int predicted =
                classes[static_cast<std::size_t>(argmax_row(validation_posteriors[j].rows, r))];
            correct[static_cast<std::size_t>(r)][j] =
                static_cast<char>(predicted == validation_labels[static_cast<std::size_t>(r)]);
        }

    KnorauBatchResult result;
    result.posteriors.classes = classes;
    result.posteriors.rows = Tensor({n_test, static_cast<int>(classes.size())});
    result.profiles.resize(static_cast<std::size_t>(n_test));

    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n_val));
    for (int t = 0; t < n_test; ++t) {
        for (int r = 0; r < n_val; ++r) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = validation_features.at(r, c) - test_features.at(t, c);
                s += diff * diff;
            }
            dist[static_cast<std::size_t>(r)] = {s, r};
        }
        // pair ordering makes equal distances resolve to the lowest row index
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

        CompetenceProfile& profile = result.profiles[static_cast<std::size_t>(t)];
        profile.weights.assign(members, 0);
        for (int n = 0; n < k; ++n) {
            const int row = dist[static_cast<std::size_t>(n)].second;
            for (std::size_t j = 0; j < members; ++j)
                profile.weights[j] += correct[static_cast<std::size_t>(row)][j];
        }

        double total = 0.0;
        for (int w : profile.weights) total += w;
        if (total == 0.0) {
            // no member was competent near this query: average the whole pool
            for (int c = 0; c < static_cast<int>(classes.size()); ++c) {
                double s = 0.0;
                for (const PosteriorMatrix& p : test_posteriors) s += p.rows.at(t, c);
                result.posteriors.rows.at(t, c) = s / static_cast<double>(members);
            }
            continue;
        }
        std::vector<double> votes(classes.size(), 0.0);
        for (std::size_t j = 0; j < members; ++j) {
            if (profile.weights[j] == 0) continue;
            votes[static_cast<std::size_t>(argmax_row(test_posteriors[j].rows, t))] +=
                profile.weights[j];
        }
        for (int c = 0; c < static_cast<int>(classes.size()); ++c)
            result.posteriors.rows.at(t, c) = votes[static_cast<std::size_t>(c)] / total;
    }
    return result;
}

KnorauEnsemble::KnorauEnsemble(std::vector<const Classifier*> members, Tensor validation_features,
                               std::vector<int> validation_labels, int k)
    : members_(std::move(members)),
      validation_features_(std::move(validation_features)),
      validation_labels_(std::move(validation_labels)),
      k_(k) {
    if (members_.empty()) throw std::invalid_argument("knora-u pool is empty");
    for (const Classifier* c : members_)
        if (c == nullptr) throw std::invalid_argument("knora-u pool holds a null member");
    if (k_ < 1) throw std::invalid_argument("knora-u needs k >= 1, got " + std::to_string(k_));
    if (validation_features_.rank() != 2)
        throw std::invalid_argument("knora-u validation features must be rank-2, got " +
                                    validation_features_.shape_str());
    const int n_val = validation_features_.dim(0);
    if (static_cast<int>(validation_labels_.size()) != n_val)
        throw std::invalid_argument("knora-u: " + std::to_string(validation_labels_.size()) +
                                    " validation labels for " + std::to_string(n_val) + " rows");
    if (n_val < k_)
        throw std::invalid_argument("knora-u needs at least k=" + std::to_string(k_) +
                                    " validation rows, got " + std::to_string(n_val));

    std::set<int> all;
    for (const Classifier* c : members_) all.insert(c->classes().begin(), c->classes().end());
    classes_.assign(all.begin(), all.end());

    validation_posteriors_.reserve(members_.size());
    for (const Classifier* c : members_)
        validation_posteriors_.push_back(
            expand_posterior(c->predict_proba(validation_features_), classes_));
}

KnorauBatchResult KnorauEnsemble::select(const Tensor& rows) const {
    std::vector<PosteriorMatrix> test_posteriors;
    test_posteriors.reserve(members_.size());
    for (const Classifier* c : members_)
        test_posteriors.push_back(expand_posterior(c->predict_proba(rows), classes_));
    return knorau_select(validation_posteriors_, validation_labels_, validation_features_,
                         test_posteriors, rows, k_);
}

std::pair<int, CompetenceProfile> KnorauEnsemble::predict_one(const Tensor& row) const {
    const int d = validation_features_.dim(1);
    Tensor query = row;
    if (query.rank() == 1) query = reshape(query, {1, query.dim(0)});
    if (query.rank() != 2 || query.dim(0) != 1 || query.dim(1) != d)
        throw std::invalid_argument("knora-u query must hold " + std::to_string(d) +
                                    " features, got shape " + row.shape_str());
    KnorauBatchResult result = select(query);
    const int best = argmax_row(result.posteriors.rows, 0);
    return {classes_[static_cast<std::size_t>(best)], std::move(result.profiles.front())};
}

PosteriorMatrix KnorauEnsemble::predict_proba(const Tensor& rows) const {
    if (rows.rank() != 2)
        throw std::invalid_argument("knora-u queries must be rank-2, got " + rows.shape_str());
    if (rows.dim(1) != validation_features_.dim(1))
        throw std::invalid_argument("knora-u queries must hold " +
                                    std::to_string(validation_features_.dim(1)) +
                                    " features, got " + std::to_string(rows.dim(1)));
    return select(rows).posteriors;
}

}  // namespace stlfer
