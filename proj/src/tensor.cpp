#include "stlfer/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace stlfer {

std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("tensor dimension must be non-negative");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)) {
    if (shape_product(shape_) != data.size())
        throw std::invalid_argument("tensor data length does not match shape product");
    data_ = std::move(data);
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = value;
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::string s;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape_[i]);
    }
    return s.empty() ? "scalar" : s;
}

Tensor reshape(const Tensor& t, std::vector<int> new_shape) {
    if (shape_product(new_shape) != t.size())
        throw std::invalid_argument("reshape: element count mismatch, " + t.shape_str() +
                                    " has " + std::to_string(t.size()) + " elements");
    return Tensor(std::move(new_shape), t.values());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite())
        throw std::runtime_error(std::string(what) + ": non-finite values encountered");
}

}  // namespace stlfer
