#pragma once

#include "stlfer/tensor.hpp"

#include <vector>

namespace stlfer {

enum class Padding { kValid, kSame };

struct ConvGradients {
    Tensor kernels;  // khxkwxCinxCout, same shape as the forward kernels
    Tensor input;    // HxWxC, same shape as the forward input
};

struct DenseGradients {
    Tensor weights;  // out x in
    Tensor bias;     // out
    Tensor input;    // in
};

struct MaxPoolResult {
    Tensor output;            // ceil(H/2) x ceil(W/2) x C
    std::vector<int> argmax;  // flat input index per output element
};

// ---------------------------------------------------------------------------
// Primary kernels. OpenMP-parallel when built with OpenMP; every output
// element is computed with a fixed accumulation order, so results are
// bit-identical for any thread count (and match the serial reference).
// ---------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, int stride, Padding padding);
ConvGradients conv2d_backward(const Tensor& input, const Tensor& kernels,
                              const Tensor& upstream, int stride, Padding padding);

MaxPoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const std::vector<int>& argmax, const Tensor& upstream,
                           const std::vector<int>& input_shape);

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
DenseGradients dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream);

Tensor relu(const Tensor& x);
/// Gradient of relu w.r.t. its input; the subgradient at 0 is 0.
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

Tensor sigmoid(const Tensor& x);
/// Takes the forward *output*, not the input.
Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream);

/// Nearest-neighbour 2x spatial upsampling of an HxWxC tensor.
Tensor upsample2x_forward(const Tensor& input);
Tensor upsample2x_backward(const Tensor& upstream);

/// Adds bias[c] to every spatial position of channel c.
Tensor add_channel_bias(const Tensor& input, const Tensor& bias);
/// Per-channel sum of the upstream gradient.
Tensor channel_bias_backward(const Tensor& upstream);

double mse(const Tensor& pred, const Tensor& target);
Tensor mse_backward(const Tensor& pred, const Tensor& target);

/// p' = p - lr * g, elementwise.
Tensor sgd_step(const Tensor& params, const Tensor& grads, double learning_rate);
void sgd_step_inplace(Tensor& params, const Tensor& grads, double learning_rate);

// ---------------------------------------------------------------------------
// Serial reference implementations, kept for tests and the kernel benchmark.
// Plain nested loops, no pragmas. Must agree bitwise with the primary path.
// ---------------------------------------------------------------------------
namespace serial {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, int stride, Padding padding);
ConvGradients conv2d_backward(const Tensor& input, const Tensor& kernels,
                              const Tensor& upstream, int stride, Padding padding);
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
DenseGradients dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream);
MaxPoolResult maxpool2x2_forward(const Tensor& input);
Tensor upsample2x_forward(const Tensor& input);

}  // namespace serial

}  // namespace stlfer
