#include "stlfer/classifiers.hpp"

#include "classifiers_common.hpp"
#include "stlfer/random.hpp"
#include "stlfer/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace stlfer {

namespace {

/// Primal sub-gradient descent on the weighted hinge objective
///   lambda/2 ||w||^2 + (1/S) sum_i s_i max(0, 1 - y_i (w.x_i + b)),
/// minibatch estimates, step 1/(lambda t), iterates averaged over the last
/// half of the budget. The heavy regularization of the default C keeps this
/// simple solver well inside its comfort zone.
void train_binary(const Tensor& x, const std::vector<double>& target,
                  const std::vector<double>& sample_weight, double lambda, int iterations,
                  int batch_size, RandomStream& rng, std::vector<double>& w_out, double& b_out) {
    const int m = x.dim(0);
    const int d = x.dim(1);
    std::vector<double> w(static_cast<std::size_t>(d), 0.0);
    double b = 0.0;
    std::vector<double> w_sum(static_cast<std::size_t>(d), 0.0);
    double b_sum = 0.0;
    int averaged = 0;
    const double radius = 1.0 / std::sqrt(lambda);

    std::vector<int> batch(static_cast<std::size_t>(batch_size));
    for (int t = 1; t <= iterations; ++t) {
        for (auto& idx : batch) idx = rng.uniform_int(0, m - 1);
        double batch_weight = 0.0;
        for (int idx : batch) batch_weight += sample_weight[static_cast<std::size_t>(idx)];

        // Data term: violators only. Accumulated in batch order.
        std::vector<double> push(static_cast<std::size_t>(d), 0.0);
        double push_b = 0.0;
        for (int idx : batch) {
            auto si = static_cast<std::size_t>(idx);
            double margin = b;
            for (int j = 0; j < d; ++j) margin += w[static_cast<std::size_t>(j)] * x.at(idx, j);
            margin *= target[si];
            if (margin < 1.0) {
                double coeff = sample_weight[si] * target[si];
                for (int j = 0; j < d; ++j)
                    push[static_cast<std::size_t>(j)] += coeff * x.at(idx, j);
                push_b += coeff;
            }
        }
        double eta = 1.0 / (lambda * t);
        double keep = 1.0 - eta * lambda;
        double norm_sq = 0.0;
        for (int j = 0; j < d; ++j) {
            auto sj = static_cast<std::size_t>(j);
            w[sj] = keep * w[sj] + eta * push[sj] / batch_weight;
            norm_sq += w[sj] * w[sj];
        }
        b += eta * push_b / batch_weight;
        if (norm_sq > radius * radius) {
            double scale = radius / std::sqrt(norm_sq);
            for (auto& v : w) v *= scale;
        }
        if (t > iterations / 2) {
            for (int j = 0; j < d; ++j) w_sum[static_cast<std::size_t>(j)] += w[static_cast<std::size_t>(j)];
            b_sum += b;
            ++averaged;
        }
    }
    for (int j = 0; j < d; ++j) w_out[static_cast<std::size_t>(j)] = w_sum[static_cast<std::size_t>(j)] / averaged;
    b_out = b_sum / averaged;
}

/// Negative log-likelihood of softmax(beta * decisions) against the labels.
double calibration_nll(const Tensor& decisions, const std::vector<int>& class_index,
                       double beta) {
    const int m = decisions.dim(0);
    const int k = decisions.dim(1);
    double nll = 0.0;
    for (int i = 0; i < m; ++i) {
        double mx = decisions.at(i, 0);
        for (int j = 1; j < k; ++j) mx = std::max(mx, decisions.at(i, j));
        double lse = 0.0;
        for (int j = 0; j < k; ++j) lse += std::exp(beta * (decisions.at(i, j) - mx));
        nll += std::log(lse) - beta * (decisions.at(i, class_index[static_cast<std::size_t>(i)]) - mx);
    }
    return nll;
}

/// Golden-section minimization of the (convex) calibration NLL over
/// log(beta) in [ln 1e-3, ln 1e3].
double fit_temperature(const Tensor& decisions, const std::vector<int>& class_index) {
    double lo = std::log(1e-3), hi = std::log(1e3);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    double fa = calibration_nll(decisions, class_index, std::exp(a));
    double fb = calibration_nll(decisions, class_index, std::exp(b));
    for (int it = 0; it < 80; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = calibration_nll(decisions, class_index, std::exp(a));
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = calibration_nll(decisions, class_index, std::exp(b));
        }
    }
    double beta = std::exp((lo + hi) / 2.0);
    return 1.0 / beta;
}

}  // namespace

SvmClassifier::SvmClassifier(std::vector<int> classes, Tensor weights, Tensor bias,
                             double temperature)
    : classes_(std::move(classes)),
      weights_(std::move(weights)),
      bias_(std::move(bias)),
      temperature_(temperature) {}

Tensor SvmClassifier::decision_values(const Tensor& rows) const {
    if (rows.rank() != 2 || rows.dim(1) != weights_.dim(1))
        throw std::invalid_argument("svm: feature width " +
                                    std::to_string(rows.rank() == 2 ? rows.dim(1) : -1) +
                                    " does not match trained width " +
                                    std::to_string(weights_.dim(1)));
    const int m = rows.dim(0);
    const int k = weights_.dim(0);
    const int d = weights_.dim(1);
    Tensor out({m, k});
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < k; ++c) {
            double acc = bias_[static_cast<std::size_t>(c)];
            for (int j = 0; j < d; ++j) acc += weights_.at(c, j) * rows.at(i, j);
            out.at(i, c) = acc;
        }
    return out;
}

PosteriorMatrix SvmClassifier::predict_proba(const Tensor& rows) const {
    Tensor decisions = decision_values(rows);
    for (std::size_t i = 0; i < decisions.size(); ++i) decisions[i] /= temperature_;
    return {detail::softmax_rows(decisions), classes_};
}

void SvmClassifier::save(const std::string& path) const {
    BinaryWriter w;
    write_model_header(w, "svm");
    detail::write_classes(w, classes_);
    w.tensor(weights_);
    w.tensor(bias_);
    w.f64(temperature_);
    w.save(path);
}

ClassifierPtr svm_train(const Tensor& features, const std::vector<int>& labels,
                        const SvmConfig& config) {
    std::vector<int> classes = distinct_classes(features, labels);
    if (classes.size() < 2)
        throw std::invalid_argument("svm_train: training data holds a single class");
    if (config.C <= 0.0) throw std::invalid_argument("svm_train: C must be positive");
    if (config.iterations < 1 || config.batch_size < 1)
        throw std::invalid_argument("svm_train: iteration and batch counts must be >= 1");

    const int m = features.dim(0);
    const int d = features.dim(1);
    const int k = static_cast<int>(classes.size());

    std::map<int, int> index_of;
    for (int c = 0; c < k; ++c) index_of[classes[static_cast<std::size_t>(c)]] = c;
    std::vector<int> class_index(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) class_index[i] = index_of.at(labels[i]);

    std::vector<double> sample_weight(labels.size(), 1.0);
    if (config.balanced) {
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (int ci : class_index) ++counts[static_cast<std::size_t>(ci)];
        for (std::size_t i = 0; i < labels.size(); ++i)
            sample_weight[i] = static_cast<double>(m) /
                               (k * counts[static_cast<std::size_t>(class_index[i])]);
    }
    double total_weight = 0.0;
    for (double s : sample_weight) total_weight += s;
    double lambda = 1.0 / (config.C * total_weight);

    RandomStream root(config.seed);
    Tensor weights({k, d});
    Tensor bias({k});
    std::vector<double> target(labels.size());
    std::vector<double> w(static_cast<std::size_t>(d));
    for (int c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            target[i] = class_index[i] == c ? 1.0 : -1.0;
        RandomStream rng = root.child("svm-class", static_cast<std::uint64_t>(c));
        double b = 0.0;
        train_binary(features, target, sample_weight, lambda, config.iterations,
                     config.batch_size, rng, w, b);
        for (int j = 0; j < d; ++j) weights.at(c, j) = w[static_cast<std::size_t>(j)];
        bias[static_cast<std::size_t>(c)] = b;
    }

    SvmClassifier probe(classes, weights, bias, 1.0);
    double temperature = fit_temperature(probe.decision_values(features), class_index);
    return std::make_unique<SvmClassifier>(std::move(classes), std::move(weights),
                                           std::move(bias), temperature);
}

namespace detail {

ClassifierPtr load_svm_payload(BinaryReader& r) {
    std::vector<int> classes = read_classes(r);
    Tensor weights = r.tensor();
    Tensor bias = r.tensor();
    double temperature = r.f64();
    return std::make_unique<SvmClassifier>(std::move(classes), std::move(weights),
                                           std::move(bias), temperature);
}

}  // namespace detail

}  // namespace stlfer
