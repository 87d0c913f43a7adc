#include "stlfer/classifiers.hpp"

#include "classifiers_common.hpp"
#include "stlfer/random.hpp"
#include "stlfer/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace stlfer {

namespace {

double gini(const std::vector<int>& counts, int total) {
    double g = 1.0;
    for (int c : counts) {
        double p = static_cast<double>(c) / total;
        g -= p * p;
    }
    return g;
}

struct TreeBuilder {
    const Tensor& x;
    const std::vector<int>& class_index;  // label mapped to 0..k-1
    int k;
    TreeConfig cfg;
    RandomStream rng;
    std::vector<TreeClassifier::Node> nodes;

    int make_leaf(const std::vector<int>& counts, int total) {
        TreeClassifier::Node leaf;
        leaf.probs.resize(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c)
            leaf.probs[static_cast<std::size_t>(c)] =
                static_cast<double>(counts[static_cast<std::size_t>(c)]) / total;
        nodes.push_back(std::move(leaf));
        return static_cast<int>(nodes.size()) - 1;
    }

    /// floor(sqrt(width)) distinct candidate features from the tree's
    /// stream; the full set, in natural order, when nothing is left out.
    std::vector<int> candidate_features() {
        int width = x.dim(1);
        int n = cfg.sqrt_features
                    ? std::max(1, static_cast<int>(std::floor(std::sqrt(width))))
                    : width;
        std::vector<int> all(static_cast<std::size_t>(width));
        std::iota(all.begin(), all.end(), 0);
        if (n >= width) return all;
        // Partial Fisher-Yates: the first n slots become the sample.
        for (int i = 0; i < n; ++i) {
            int j = rng.uniform_int(i, width - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
        }
        all.resize(static_cast<std::size_t>(n));
        return all;
    }

    int build(std::vector<int> idx, int depth) {
        const int total = static_cast<int>(idx.size());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int i : idx) ++counts[static_cast<std::size_t>(class_index[static_cast<std::size_t>(i)])];
        bool pure = std::count(counts.begin(), counts.end(), 0) == k - 1;
        if (pure || depth >= cfg.max_depth || total < 2) return make_leaf(counts, total);

        double parent = gini(counts, total);
        double best_gain = -1.0;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> ordered(idx.size());
        std::vector<int> left_counts(static_cast<std::size_t>(k));
        for (int f : candidate_features()) {
            for (std::size_t i = 0; i < idx.size(); ++i) {
                int sample = idx[i];
                ordered[i] = {x.at(sample, f), class_index[static_cast<std::size_t>(sample)]};
            }
            std::sort(ordered.begin(), ordered.end());
            std::fill(left_counts.begin(), left_counts.end(), 0);
            for (int i = 0; i + 1 < total; ++i) {
                ++left_counts[static_cast<std::size_t>(ordered[static_cast<std::size_t>(i)].second)];
                double v = ordered[static_cast<std::size_t>(i)].first;
                double next = ordered[static_cast<std::size_t>(i + 1)].first;
                if (v == next) continue;  // no boundary between equal values
                int nl = i + 1;
                int nr = total - nl;
                double gl = 1.0, gr = 1.0;
                for (int c = 0; c < k; ++c) {
                    double pl = static_cast<double>(left_counts[static_cast<std::size_t>(c)]) / nl;
                    double pr = static_cast<double>(counts[static_cast<std::size_t>(c)] -
                                                    left_counts[static_cast<std::size_t>(c)]) /
                                nr;
                    gl -= pl * pl;
                    gr -= pr * pr;
                }
                double gain = parent - (nl * gl + nr * gr) / total;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = (v + next) / 2.0;
                }
            }
        }
        // Zero-gain splits are still taken (they can enable a useful split
        // one level down); only a node with no separating boundary becomes
        // a leaf.
        if (best_feature < 0) return make_leaf(counts, total);

        std::vector<int> left_idx, right_idx;
        for (int i : idx)
            (x.at(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        TreeClassifier::Node node;
        node.feature = best_feature;
        node.threshold = best_threshold;
        nodes.push_back(node);
        int self = static_cast<int>(nodes.size()) - 1;
        int left = build(std::move(left_idx), depth + 1);
        int right = build(std::move(right_idx), depth + 1);
        nodes[static_cast<std::size_t>(self)].left = left;
        nodes[static_cast<std::size_t>(self)].right = right;
        return self;
    }
};

int subtree_depth(const std::vector<TreeClassifier::Node>& nodes, int at) {
    const auto& n = nodes[static_cast<std::size_t>(at)];
    if (n.feature < 0) return 0;
    return 1 + std::max(subtree_depth(nodes, n.left), subtree_depth(nodes, n.right));
}

std::vector<int> map_class_indices(const std::vector<int>& labels,
                                   const std::vector<int>& classes) {
    std::map<int, int> index_of;
    for (std::size_t c = 0; c < classes.size(); ++c) index_of[classes[c]] = static_cast<int>(c);
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = index_of.at(labels[i]);
    return out;
}

PosteriorMatrix mean_member_posterior(const std::vector<TreeClassifier>& members,
                                      const std::vector<int>& classes, const Tensor& rows) {
    const int m = rows.dim(0);
    const int k = static_cast<int>(classes.size());
    Tensor acc({m, k});
    for (const auto& member : members) {
        PosteriorMatrix p = expand_posterior(member.predict_proba(rows), classes);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p.rows[i];
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= static_cast<double>(members.size());
    return {std::move(acc), classes};
}

}  // namespace

TreeClassifier::TreeClassifier(std::vector<int> classes, std::vector<Node> nodes)
    : classes_(std::move(classes)), nodes_(std::move(nodes)) {}

PosteriorMatrix TreeClassifier::predict_proba(const Tensor& rows) const {
    if (rows.rank() != 2) throw std::invalid_argument("tree: expected an M x d matrix");
    const int m = rows.dim(0);
    const int k = static_cast<int>(classes_.size());
    Tensor out({m, k});
    for (int i = 0; i < m; ++i) {
        int at = 0;
        while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
            const auto& n = nodes_[static_cast<std::size_t>(at)];
            at = rows.at(i, n.feature) <= n.threshold ? n.left : n.right;
        }
        const auto& probs = nodes_[static_cast<std::size_t>(at)].probs;
        for (int c = 0; c < k; ++c) out.at(i, c) = probs[static_cast<std::size_t>(c)];
    }
    return {std::move(out), classes_};
}

int TreeClassifier::depth() const { return nodes_.empty() ? 0 : subtree_depth(nodes_, 0); }

void TreeClassifier::save(const std::string& path) const {
    BinaryWriter w;
    write_model_header(w, "tree");
    detail::write_tree_payload(w, *this);
    w.save(path);
}

TreeClassifier tree_train_value(const Tensor& features, const std::vector<int>& labels,
                                const TreeConfig& config) {
    std::vector<int> classes = distinct_classes(features, labels);
    if (config.max_depth < 1) throw std::invalid_argument("tree_train: max_depth must be >= 1");
    TreeBuilder builder{features,
                        map_class_indices(labels, classes),
                        static_cast<int>(classes.size()),
                        config,
                        RandomStream(config.seed).child("tree"),
                        {}};
    std::vector<int> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    builder.build(std::move(idx), 0);
    return TreeClassifier(std::move(classes), std::move(builder.nodes));
}

ClassifierPtr tree_train(const Tensor& features, const std::vector<int>& labels,
                         const TreeConfig& config) {
    return std::make_unique<TreeClassifier>(tree_train_value(features, labels, config));
}

BaggingClassifier::BaggingClassifier(std::vector<int> classes,
                                     std::vector<TreeClassifier> members)
    : classes_(std::move(classes)), members_(std::move(members)) {}

PosteriorMatrix BaggingClassifier::predict_proba(const Tensor& rows) const {
    return mean_member_posterior(members_, classes_, rows);
}

PosteriorMatrix BaggingClassifier::member_proba(int index, const Tensor& rows) const {
    return expand_posterior(members_[static_cast<std::size_t>(index)].predict_proba(rows),
                            classes_);
}

void BaggingClassifier::save(const std::string& path) const {
    BinaryWriter w;
    write_model_header(w, "bagging");
    detail::write_classes(w, classes_);
    w.u32(static_cast<std::uint32_t>(members_.size()));
    for (const auto& member : members_) detail::write_tree_payload(w, member);
    w.save(path);
}

namespace {

/// Bootstrap + train one member; `in_bag` (when given) records coverage.
TreeClassifier train_member(const Tensor& x, const std::vector<int>& labels, int boot_size,
                            const TreeConfig& tree_cfg, RandomStream bootstrap_rng,
                            std::vector<char>* in_bag) {
    const int m = x.dim(0);
    const int d = x.dim(1);
    Tensor bx({boot_size, d});
    std::vector<int> by(static_cast<std::size_t>(boot_size));
    for (int i = 0; i < boot_size; ++i) {
        int pick = bootstrap_rng.uniform_int(0, m - 1);
        if (in_bag) (*in_bag)[static_cast<std::size_t>(pick)] = 1;
        for (int j = 0; j < d; ++j) bx.at(i, j) = x.at(pick, j);
        by[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(pick)];
    }
    return tree_train_value(bx, by, tree_cfg);
}

}  // namespace

ClassifierPtr bagging_train(const Tensor& features, const std::vector<int>& labels,
                            const BaggingConfig& config) {
    std::vector<int> classes = distinct_classes(features, labels);
    if (config.n_estimators < 1)
        throw std::invalid_argument("bagging_train: n_estimators must be >= 1");
    if (!(config.sample_fraction > 0.0) || config.sample_fraction > 1.0)
        throw std::invalid_argument("bagging_train: sample_fraction must lie in (0, 1]");

    const int m = features.dim(0);
    int boot_size = std::max(1, static_cast<int>(std::lround(config.sample_fraction * m)));
    RandomStream root(config.seed);
    std::vector<TreeClassifier> members;
    members.reserve(static_cast<std::size_t>(config.n_estimators));
    for (int e = 0; e < config.n_estimators; ++e) {
        TreeConfig tree_cfg = config.tree;
        tree_cfg.seed = root.child("tree", static_cast<std::uint64_t>(e)).seed();
        members.push_back(train_member(features, labels, boot_size, tree_cfg,
                                       root.child("bootstrap", static_cast<std::uint64_t>(e)),
                                       nullptr));
    }
    return std::make_unique<BaggingClassifier>(std::move(classes), std::move(members));
}

ForestClassifier::ForestClassifier(std::vector<int> classes, std::vector<TreeClassifier> members,
                                   double oob_score)
    : classes_(std::move(classes)), members_(std::move(members)), oob_score_(oob_score) {}

PosteriorMatrix ForestClassifier::predict_proba(const Tensor& rows) const {
    return mean_member_posterior(members_, classes_, rows);
}

PosteriorMatrix ForestClassifier::member_proba(int index, const Tensor& rows) const {
    return expand_posterior(members_[static_cast<std::size_t>(index)].predict_proba(rows),
                            classes_);
}

void ForestClassifier::save(const std::string& path) const {
    BinaryWriter w;
    write_model_header(w, "forest");
    detail::write_classes(w, classes_);
    w.u32(static_cast<std::uint32_t>(members_.size()));
    for (const auto& member : members_) detail::write_tree_payload(w, member);
    w.f64(oob_score_);
    w.save(path);
}

ClassifierPtr forest_train(const Tensor& features, const std::vector<int>& labels,
                           const ForestConfig& config) {
    std::vector<int> classes = distinct_classes(features, labels);
    if (config.n_trees < 1) throw std::invalid_argument("forest_train: n_trees must be >= 1");
    if (config.max_depth < 1) throw std::invalid_argument("forest_train: max_depth must be >= 1");

    const int m = features.dim(0);
    const int k = static_cast<int>(classes.size());
    RandomStream root(config.seed);
    std::vector<TreeClassifier> members;
    members.reserve(static_cast<std::size_t>(config.n_trees));
    std::vector<std::vector<char>> in_bag(
        static_cast<std::size_t>(config.n_trees),
        std::vector<char>(static_cast<std::size_t>(m), 0));
    for (int e = 0; e < config.n_trees; ++e) {
        TreeConfig tree_cfg;
        tree_cfg.max_depth = config.max_depth;
        tree_cfg.sqrt_features = true;
        tree_cfg.seed = root.child("tree", static_cast<std::uint64_t>(e)).seed();
        members.push_back(train_member(features, labels, m, tree_cfg,
                                       root.child("bootstrap", static_cast<std::uint64_t>(e)),
                                       &in_bag[static_cast<std::size_t>(e)]));
    }

    double oob = -1.0;
    if (config.oob) {
        std::map<int, int> index_of;
        for (int c = 0; c < k; ++c) index_of[classes[static_cast<std::size_t>(c)]] = c;
        int voted = 0, correct = 0;
        std::vector<int> votes(static_cast<std::size_t>(k));
        for (int i = 0; i < m; ++i) {
            std::fill(votes.begin(), votes.end(), 0);
            bool any = false;
            Tensor row({1, features.dim(1)});
            for (int j = 0; j < features.dim(1); ++j) row.at(0, j) = features.at(i, j);
            for (int e = 0; e < config.n_trees; ++e) {
                if (in_bag[static_cast<std::size_t>(e)][static_cast<std::size_t>(i)]) continue;
                PosteriorMatrix p = expand_posterior(
                    members[static_cast<std::size_t>(e)].predict_proba(row), classes);
                int arg = 0;
                for (int c = 1; c < k; ++c)
                    if (p.rows.at(0, c) > p.rows.at(0, arg)) arg = c;
                ++votes[static_cast<std::size_t>(arg)];
                any = true;
            }
            if (!any) continue;
            ++voted;
            int win = 0;
            for (int c = 1; c < k; ++c)
                if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(win)])
                    win = c;
            if (classes[static_cast<std::size_t>(win)] == labels[static_cast<std::size_t>(i)])
                ++correct;
        }
        // No sample left out of every bag is a degenerate micro-dataset case.
        oob = voted > 0 ? static_cast<double>(correct) / voted : 0.0;
    }
    return std::make_unique<ForestClassifier>(std::move(classes), std::move(members), oob);
}

namespace detail {

void write_tree_payload(BinaryWriter& w, const TreeClassifier& tree) {
    write_classes(w, tree.classes());
    w.u32(static_cast<std::uint32_t>(tree.nodes().size()));
    for (const auto& n : tree.nodes()) {
        w.i32(n.feature);
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
        w.u32(static_cast<std::uint32_t>(n.probs.size()));
        for (double p : n.probs) w.f64(p);
    }
}

TreeClassifier read_tree_payload(BinaryReader& r) {
    std::vector<int> classes = read_classes(r);
    std::vector<TreeClassifier::Node> nodes(r.u32());
    for (auto& n : nodes) {
        n.feature = r.i32();
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        n.probs.resize(r.u32());
        for (auto& p : n.probs) p = r.f64();
    }
    return TreeClassifier(std::move(classes), std::move(nodes));
}

ClassifierPtr load_tree_payload(BinaryReader& r) {
    return std::make_unique<TreeClassifier>(read_tree_payload(r));
}

ClassifierPtr load_bagging_payload(BinaryReader& r) {
    std::vector<int> classes = read_classes(r);
    std::vector<TreeClassifier> members;
    std::uint32_t count = r.u32();
    members.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) members.push_back(read_tree_payload(r));
    return std::make_unique<BaggingClassifier>(std::move(classes), std::move(members));
}

ClassifierPtr load_forest_payload(BinaryReader& r) {
    std::vector<int> classes = read_classes(r);
    std::vector<TreeClassifier> members;
    std::uint32_t count = r.u32();
    members.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) members.push_back(read_tree_payload(r));
    double oob = r.f64();
    return std::make_unique<ForestClassifier>(std::move(classes), std::move(members), oob);
}

}  // namespace detail

}  // namespace stlfer
