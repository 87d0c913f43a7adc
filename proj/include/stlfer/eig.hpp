#pragma once

#include "stlfer/tensor.hpp"

#include <vector>

namespace stlfer {

struct EigResult {
    std::vector<double> values;  // non-increasing
    Tensor vectors;              // KxK, column j is the eigenvector for values[j]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Input must be square and symmetric within 1e-9. Eigenvalues are sorted
/// non-increasing; each eigenvector's largest-magnitude component is made
/// positive so the decomposition is deterministic.
EigResult sym_eig(const Tensor& matrix);

}  // namespace stlfer
