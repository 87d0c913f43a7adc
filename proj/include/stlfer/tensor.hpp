#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace stlfer {

/// Dense row-major tensor of doubles. Rank is the number of dimensions;
/// images are stored HxWxC, conv kernels khxkwxCinxCout, matrices rows x cols.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double value);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-D accessors (rows x cols)
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * dim(1) + c]; }

    // 3-D accessors (H x W x C)
    double& at(int h, int w, int c) {
        return data_[(static_cast<std::size_t>(h) * dim(1) + w) * dim(2) + c];
    }
    double at(int h, int w, int c) const {
        return data_[(static_cast<std::size_t>(h) * dim(1) + w) * dim(2) + c];
    }

    // 4-D accessors (kh x kw x Cin x Cout)
    double& at(int a, int b, int c, int d) {
        return data_[((static_cast<std::size_t>(a) * dim(1) + b) * dim(2) + c) * dim(3) + d];
    }
    double at(int a, int b, int c, int d) const {
        return data_[((static_cast<std::size_t>(a) * dim(1) + b) * dim(2) + c) * dim(3) + d];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    /// "HxWxC" style rendering of the shape for error messages.
    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<int>& shape);

/// Same data, new shape; element counts must match.
Tensor reshape(const Tensor& t, std::vector<int> new_shape);

/// Throws std::invalid_argument naming `what` when the shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Throws std::runtime_error naming `what` if the tensor holds NaN or Inf.
void require_finite(const Tensor& t, const char* what);

}  // namespace stlfer
