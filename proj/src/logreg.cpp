#include "stlfer/classifiers.hpp"

#include "classifiers_common.hpp"
#include "stlfer/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

namespace stlfer {

namespace {

/// Penalized multinomial likelihood over a flat parameter vector:
/// theta = [W (k x d, row-major) | b (k)], J = sum NLL_i + ||W||^2 / (2C).
struct LogRegObjective {
    const Tensor& x;
    const std::vector<int>& class_index;
    int k, m, d;
    double C;

    double eval(const std::vector<double>& theta, std::vector<double>& grad) const {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        std::vector<double> z(static_cast<std::size_t>(k));
        const std::size_t bias_at = static_cast<std::size_t>(k) * static_cast<std::size_t>(d);
        for (int i = 0; i < m; ++i) {
            for (int c = 0; c < k; ++c) {
                double acc = theta[bias_at + static_cast<std::size_t>(c)];
                const std::size_t row = static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
                for (int j = 0; j < d; ++j)
                    acc += theta[row + static_cast<std::size_t>(j)] * x.at(i, j);
                z[static_cast<std::size_t>(c)] = acc;
            }
            double mx = *std::max_element(z.begin(), z.end());
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                z[static_cast<std::size_t>(c)] = std::exp(z[static_cast<std::size_t>(c)] - mx);
                sum += z[static_cast<std::size_t>(c)];
            }
            int yi = class_index[static_cast<std::size_t>(i)];
            loss += std::log(sum) - std::log(z[static_cast<std::size_t>(yi)]);
            for (int c = 0; c < k; ++c) {
                double coeff = z[static_cast<std::size_t>(c)] / sum - (c == yi ? 1.0 : 0.0);
                grad[bias_at + static_cast<std::size_t>(c)] += coeff;
                const std::size_t row = static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
                for (int j = 0; j < d; ++j)
                    grad[row + static_cast<std::size_t>(j)] += coeff * x.at(i, j);
            }
        }
        for (std::size_t w = 0; w < bias_at; ++w) {
            loss += theta[w] * theta[w] / (2.0 * C);
            grad[w] += theta[w] / C;
        }
        return loss;
    }
};

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// Limited-memory BFGS with Armijo backtracking. Curvature pairs with
/// non-positive s.y are skipped, which keeps the direction a descent one.
void lbfgs_minimize(const LogRegObjective& obj, std::vector<double>& theta, int max_iterations,
                    double tolerance) {
    const std::size_t n = theta.size();
    std::vector<double> grad(n), new_theta(n), new_grad(n), direction(n);
    std::deque<std::pair<std::vector<double>, std::vector<double>>> pairs;  // (s, y)
    double value = obj.eval(theta, grad);

    for (int it = 0; it < max_iterations; ++it) {
        if (norm2(grad) < tolerance) break;

        // Two-loop recursion for the quasi-Newton direction.
        for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
        std::vector<double> alpha(pairs.size());
        for (std::size_t p = pairs.size(); p-- > 0;) {
            const auto& [s, y] = pairs[p];
            double rho = 1.0 / dot(y, s);
            alpha[p] = rho * dot(s, direction);
            for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha[p] * y[i];
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            double gamma = dot(s, y) / dot(y, y);
            for (std::size_t i = 0; i < n; ++i) direction[i] *= gamma;
        }
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto& [s, y] = pairs[p];
            double rho = 1.0 / dot(y, s);
            double beta = rho * dot(y, direction);
            for (std::size_t i = 0; i < n; ++i) direction[i] += s[i] * (alpha[p] - beta);
        }
        double descent = dot(direction, grad);
        if (descent >= 0.0) {  // fall back to steepest descent
            for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
            descent = -dot(grad, grad);
        }

        double step = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            for (std::size_t i = 0; i < n; ++i) new_theta[i] = theta[i] + step * direction[i];
            double new_value = obj.eval(new_theta, new_grad);
            if (std::isfinite(new_value) && new_value <= value + 1e-4 * step * descent) {
                std::vector<double> s(n), y(n);
                for (std::size_t i = 0; i < n; ++i) {
                    s[i] = new_theta[i] - theta[i];
                    y[i] = new_grad[i] - grad[i];
                }
                if (dot(s, y) > 1e-12) {
                    pairs.emplace_back(std::move(s), std::move(y));
                    if (pairs.size() > 10) pairs.pop_front();
                }
                theta.swap(new_theta);
                grad.swap(new_grad);
                value = new_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no further progress possible at fp precision
    }
}

}  // namespace

LogRegClassifier::LogRegClassifier(std::vector<int> classes, Tensor weights, Tensor bias)
    : classes_(std::move(classes)), weights_(std::move(weights)), bias_(std::move(bias)) {}

PosteriorMatrix LogRegClassifier::predict_proba(const Tensor& rows) const {
    if (rows.rank() != 2 || rows.dim(1) != weights_.dim(1))
        throw std::invalid_argument("logreg: feature width mismatch");
    const int m = rows.dim(0);
    const int k = weights_.dim(0);
    const int d = weights_.dim(1);
    Tensor logits({m, k});
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < k; ++c) {
            double acc = bias_[static_cast<std::size_t>(c)];
            for (int j = 0; j < d; ++j) acc += weights_.at(c, j) * rows.at(i, j);
            logits.at(i, c) = acc;
        }
    return {detail::softmax_rows(logits), classes_};
}

void LogRegClassifier::save(const std::string& path) const {
    BinaryWriter w;
    write_model_header(w, "logreg");
    detail::write_classes(w, classes_);
    w.tensor(weights_);
    w.tensor(bias_);
    w.save(path);
}

ClassifierPtr logreg_train(const Tensor& features, const std::vector<int>& labels,
                           const LogRegConfig& config) {
    std::vector<int> classes = distinct_classes(features, labels);
    if (config.C <= 0.0) throw std::invalid_argument("logreg_train: C must be positive");

    const int m = features.dim(0);
    const int d = features.dim(1);
    const int k = static_cast<int>(classes.size());

    if (k == 1) {  // degenerate but reachable through odd validation folds
        return std::make_unique<LogRegClassifier>(std::move(classes), Tensor({1, d}),
                                                  Tensor({1}));
    }

    std::map<int, int> index_of;
    for (int c = 0; c < k; ++c) index_of[classes[static_cast<std::size_t>(c)]] = c;
    std::vector<int> class_index(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) class_index[i] = index_of.at(labels[i]);

    LogRegObjective obj{features, class_index, k, m, d, config.C};
    std::vector<double> theta(static_cast<std::size_t>(k) * static_cast<std::size_t>(d + 1), 0.0);
    lbfgs_minimize(obj, theta, config.max_iterations, config.tolerance);

    Tensor weights({k, d});
    Tensor bias({k});
    for (int c = 0; c < k; ++c) {
        for (int j = 0; j < d; ++j)
            weights.at(c, j) =
                theta[static_cast<std::size_t>(c) * static_cast<std::size_t>(d) +
                      static_cast<std::size_t>(j)];
        bias[static_cast<std::size_t>(c)] =
            theta[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) +
                  static_cast<std::size_t>(c)];
    }
    return std::make_unique<LogRegClassifier>(std::move(classes), std::move(weights),
                                              std::move(bias));
}

double logreg_gradient_norm(const Tensor& features, const std::vector<int>& labels,
                            const std::vector<int>& classes, const Tensor& weights,
                            const Tensor& bias, double C) {
    const int k = static_cast<int>(classes.size());
    const int d = weights.dim(1);
    std::map<int, int> index_of;
    for (int c = 0; c < k; ++c) index_of[classes[static_cast<std::size_t>(c)]] = c;
    std::vector<int> class_index(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) class_index[i] = index_of.at(labels[i]);

    LogRegObjective obj{features, class_index, k, features.dim(0), d, C};
    std::vector<double> theta(static_cast<std::size_t>(k) * static_cast<std::size_t>(d + 1));
    for (int c = 0; c < k; ++c) {
        for (int j = 0; j < d; ++j)
            theta[static_cast<std::size_t>(c) * static_cast<std::size_t>(d) +
                  static_cast<std::size_t>(j)] = weights.at(c, j);
        theta[static_cast<std::size_t>(k) * static_cast<std::size_t>(d) +
              static_cast<std::size_t>(c)] = bias[static_cast<std::size_t>(c)];
    }
    std::vector<double> grad(theta.size());
    obj.eval(theta, grad);
    double acc = 0.0;
    for (double g : grad) acc += g * g;
    return std::sqrt(acc);
}

namespace detail {

ClassifierPtr load_logreg_payload(BinaryReader& r) {
    std::vector<int> classes = read_classes(r);
    Tensor weights = r.tensor();
    Tensor bias = r.tensor();
    return std::make_unique<LogRegClassifier>(std::move(classes), std::move(weights),
                                              std::move(bias));
}

}  // namespace detail

}  // namespace stlfer
