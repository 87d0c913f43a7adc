#pragma once

#include "stlfer/classifiers.hpp"
#include "stlfer/serialize.hpp"

namespace stlfer::detail {

void write_classes(BinaryWriter& w, const std::vector<int>& classes);
std::vector<int> read_classes(BinaryReader& r);

void write_tree_payload(BinaryWriter& w, const TreeClassifier& tree);
TreeClassifier read_tree_payload(BinaryReader& r);

ClassifierPtr load_svm_payload(BinaryReader& r);
ClassifierPtr load_tree_payload(BinaryReader& r);
ClassifierPtr load_bagging_payload(BinaryReader& r);
ClassifierPtr load_forest_payload(BinaryReader& r);
ClassifierPtr load_logreg_payload(BinaryReader& r);

/// Row-wise softmax with max subtraction; never produces NaN for finite input.
Tensor softmax_rows(const Tensor& logits);

}  // namespace stlfer::detail
