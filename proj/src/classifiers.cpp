#include "stlfer/classifiers.hpp"

#include "classifiers_common.hpp"
#include "stlfer/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace stlfer {

std::vector<int> distinct_classes(const Tensor& features, const std::vector<int>& labels) {
    if (features.rank() != 2)
        throw std::invalid_argument("classifier training: expected an M x d feature matrix");
    if (labels.empty()) throw std::invalid_argument("classifier training: no labels");
    if (static_cast<std::size_t>(features.dim(0)) != labels.size())
        throw std::invalid_argument("classifier training: " + std::to_string(features.dim(0)) +
                                    " rows vs " + std::to_string(labels.size()) + " labels");
    std::set<int> seen(labels.begin(), labels.end());
    return {seen.begin(), seen.end()};
}

PosteriorMatrix expand_posterior(const PosteriorMatrix& p, const std::vector<int>& target) {
    if (p.classes == target) return p;
    const int m = p.rows.dim(0);
    Tensor out({m, static_cast<int>(target.size())});
    for (std::size_t c = 0; c < p.classes.size(); ++c) {
        auto it = std::find(target.begin(), target.end(), p.classes[c]);
        if (it == target.end())
            throw std::invalid_argument("expand_posterior: class " +
                                        std::to_string(p.classes[c]) +
                                        " missing from the target class list");
        int j = static_cast<int>(it - target.begin());
        for (int i = 0; i < m; ++i) out.at(i, j) = p.rows.at(i, static_cast<int>(c));
    }
    return {std::move(out), target};
}

ClassifierPtr load_classifier(const std::string& path) {
    BinaryReader r = BinaryReader::from_file(path);
    std::string kind = read_model_header(r);
    if (kind == "svm") return detail::load_svm_payload(r);
    if (kind == "tree") return detail::load_tree_payload(r);
    if (kind == "bagging") return detail::load_bagging_payload(r);
    if (kind == "forest") return detail::load_forest_payload(r);
    if (kind == "logreg") return detail::load_logreg_payload(r);
    throw std::runtime_error("unknown classifier kind '" + kind + "' in " + path);
}

namespace detail {

void write_classes(BinaryWriter& w, const std::vector<int>& classes) {
    w.u32(static_cast<std::uint32_t>(classes.size()));
    for (int c : classes) w.i32(c);
}

std::vector<int> read_classes(BinaryReader& r) {
    std::vector<int> classes(r.u32());
    for (auto& c : classes) c = r.i32();
    return classes;
}

Tensor softmax_rows(const Tensor& logits) {
    const int m = logits.dim(0);
    const int k = logits.dim(1);
    Tensor out(logits.shape());
    for (int i = 0; i < m; ++i) {
        double mx = logits.at(i, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            double e = std::exp(logits.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < k; ++j) out.at(i, j) /= sum;
    }
    return out;
}

}  // namespace detail

}  // namespace stlfer
