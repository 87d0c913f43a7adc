#include "stlfer/kernels.hpp"

#include "kernels_common.hpp"

#include <cmath>
#include <stdexcept>

// Parallelization rule used throughout: each output element is produced by
// exactly one thread, with an accumulation order that does not depend on the
// thread count. No floating-point OpenMP reductions anywhere.

namespace stlfer {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, int stride, Padding padding) {
    const detail::ConvGeometry g = detail::conv_geometry(input, kernels, stride, padding);
    Tensor out({g.OH, g.OW, g.F});
    const double* in = input.data();
    const double* ker = kernels.data();
    double* o = out.data();

#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < g.OH; ++oy) {
        for (int ox = 0; ox < g.OW; ++ox) {
            for (int f = 0; f < g.F; ++f) {
                double acc = 0.0;
                for (int ky = 0; ky < g.kh; ++ky) {
                    const int y = oy * stride + ky - g.pad_top;
                    if (y < 0 || y >= g.H) continue;
                    for (int kx = 0; kx < g.kw; ++kx) {
                        const int x = ox * stride + kx - g.pad_left;
                        if (x < 0 || x >= g.W) continue;
                        const double* in_px = in + (static_cast<std::size_t>(y) * g.W + x) * g.C;
                        const double* k_px =
                            ker + (static_cast<std::size_t>(ky) * g.kw + kx) * g.C * g.F + f;
                        for (int c = 0; c < g.C; ++c) acc += in_px[c] * k_px[static_cast<std::size_t>(c) * g.F];
                    }
                }
                o[(static_cast<std::size_t>(oy) * g.OW + ox) * g.F + f] = acc;
            }
        }
    }
    return out;
}

ConvGradients conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& upstream,
                              int stride, Padding padding) {
    const detail::ConvGeometry g = detail::conv_geometry(input, kernels, stride, padding);
    if (upstream.rank() != 3 || upstream.dim(0) != g.OH || upstream.dim(1) != g.OW ||
        upstream.dim(2) != g.F)
        throw std::invalid_argument("conv2d_backward: upstream shape " + upstream.shape_str() +
                                    " does not match forward output");

    ConvGradients grads{Tensor({g.kh, g.kw, g.C, g.F}), Tensor(input.shape())};
    const double* in = input.data();
    const double* ker = kernels.data();
    const double* up = upstream.data();

    // Kernel gradient: gather over output positions, one (ky,kx,c,f) per task.
    double* gk = grads.kernels.data();
#pragma omp parallel for schedule(static)
    for (int ky = 0; ky < g.kh; ++ky) {
        for (int kx = 0; kx < g.kw; ++kx) {
            for (int c = 0; c < g.C; ++c) {
                for (int f = 0; f < g.F; ++f) {
                    double acc = 0.0;
                    for (int oy = 0; oy < g.OH; ++oy) {
                        const int y = oy * stride + ky - g.pad_top;
                        if (y < 0 || y >= g.H) continue;
                        for (int ox = 0; ox < g.OW; ++ox) {
                            const int x = ox * stride + kx - g.pad_left;
                            if (x < 0 || x >= g.W) continue;
                            acc += up[(static_cast<std::size_t>(oy) * g.OW + ox) * g.F + f] *
                                   in[(static_cast<std::size_t>(y) * g.W + x) * g.C + c];
                        }
                    }
                    gk[((static_cast<std::size_t>(ky) * g.kw + kx) * g.C + c) * g.F + f] = acc;
                }
            }
        }
    }

    // Input gradient: gather over the kernel taps that cover each input cell.
    double* gi = grads.input.data();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < g.H; ++y) {
        for (int x = 0; x < g.W; ++x) {
            for (int c = 0; c < g.C; ++c) {
                double acc = 0.0;
                for (int ky = 0; ky < g.kh; ++ky) {
                    const int oy_num = y - ky + g.pad_top;
                    if (oy_num < 0 || oy_num % stride != 0) continue;
                    const int oy = oy_num / stride;
                    if (oy >= g.OH) continue;
                    for (int kx = 0; kx < g.kw; ++kx) {
                        const int ox_num = x - kx + g.pad_left;
                        if (ox_num < 0 || ox_num % stride != 0) continue;
                        const int ox = ox_num / stride;
                        if (ox >= g.OW) continue;
                        const double* up_px =
                            up + (static_cast<std::size_t>(oy) * g.OW + ox) * g.F;
                        const double* k_px =
                            ker + ((static_cast<std::size_t>(ky) * g.kw + kx) * g.C + c) * g.F;
                        for (int f = 0; f < g.F; ++f) acc += up_px[f] * k_px[f];
                    }
                }
                gi[(static_cast<std::size_t>(y) * g.W + x) * g.C + c] = acc;
            }
        }
    }
    return grads;
}

MaxPoolResult maxpool2x2_forward(const Tensor& input) {
    if (input.rank() != 3)
        throw std::invalid_argument("maxpool2x2: input must be HxWxC, got " + input.shape_str());
    const int H = input.dim(0), W = input.dim(1), C = input.dim(2);
    const int OH = (H + 1) / 2, OW = (W + 1) / 2;
    MaxPoolResult res{Tensor({OH, OW, C}), std::vector<int>(static_cast<std::size_t>(OH) * OW * C)};
    const double* in = input.data();
    double* out = res.output.data();
    int* arg = res.argmax.data();

#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < OH; ++oy) {
        for (int ox = 0; ox < OW; ++ox) {
            for (int c = 0; c < C; ++c) {
                double best = -1.0;
                int best_idx = -1;
                // Cells outside the image act as -inf; ties keep the first
                // index in row-major scan order.
                for (int dy = 0; dy < 2; ++dy) {
                    const int y = oy * 2 + dy;
                    if (y >= H) continue;
                    for (int dx = 0; dx < 2; ++dx) {
                        const int x = ox * 2 + dx;
                        if (x >= W) continue;
                        const int idx = (y * W + x) * C + c;
                        if (best_idx < 0 || in[idx] > best) {
                            best = in[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t oidx = (static_cast<std::size_t>(oy) * OW + ox) * C + c;
                out[oidx] = best;
                arg[oidx] = best_idx;
            }
        }
    }
    return res;
}

Tensor maxpool2x2_backward(const std::vector<int>& argmax, const Tensor& upstream,
                           const std::vector<int>& input_shape) {
    if (upstream.size() != argmax.size())
        throw std::invalid_argument("maxpool2x2_backward: upstream size does not match argmax");
    Tensor grad(input_shape);
    double* g = grad.data();
    const double* up = upstream.data();
    // Argmax positions are unique per output element, so the scatter is
    // race-free and order-independent.
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        g[static_cast<std::size_t>(argmax[i])] += up[i];
    }
    return grad;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    detail::check_dense_shapes(input, weights, &bias);
    const int out_n = weights.dim(0), in_n = weights.dim(1);
    Tensor out({out_n});
    const double* w = weights.data();
    const double* x = input.data();
    double* o = out.data();
#pragma omp parallel for schedule(static)
    for (int r = 0; r < out_n; ++r) {
        const double* row = w + static_cast<std::size_t>(r) * in_n;
        double acc = 0.0;
        for (int c = 0; c < in_n; ++c) acc += row[c] * x[c];
        o[r] = acc + bias[static_cast<std::size_t>(r)];
    }
    return out;
}

DenseGradients dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream) {
    detail::check_dense_shapes(input, weights, nullptr);
    const int out_n = weights.dim(0), in_n = weights.dim(1);
    if (upstream.rank() != 1 || upstream.dim(0) != out_n)
        throw std::invalid_argument("dense_backward: upstream shape " + upstream.shape_str() +
                                    " does not match output length " + std::to_string(out_n));
    DenseGradients g{Tensor({out_n, in_n}), Tensor({out_n}), Tensor({in_n})};
    const double* w = weights.data();
    const double* x = input.data();
    const double* up = upstream.data();

    double* gw = g.weights.data();
#pragma omp parallel for schedule(static)
    for (int r = 0; r < out_n; ++r) {
        const double u = up[r];
        double* row = gw + static_cast<std::size_t>(r) * in_n;
        for (int c = 0; c < in_n; ++c) row[c] = u * x[c];
    }
    for (int r = 0; r < out_n; ++r) g.bias[static_cast<std::size_t>(r)] = up[r];

    double* gx = g.input.data();
#pragma omp parallel for schedule(static)
    for (int c = 0; c < in_n; ++c) {
        double acc = 0.0;
        for (int r = 0; r < out_n; ++r) acc += w[static_cast<std::size_t>(r) * in_n + c] * up[r];
        gx[c] = acc;
    }
    return g;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    const double* in = x.data();
    double* o = out.data();
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
    require_same_shape(input, upstream, "relu_backward");
    Tensor out(input.shape());
    const double* in = input.data();
    const double* up = upstream.data();
    double* o = out.data();
    const std::size_t n = input.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0 ? up[i] : 0.0;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out(x.shape());
    const double* in = x.data();
    double* o = out.data();
    const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) o[i] = 1.0 / (1.0 + std::exp(-in[i]));
    return out;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream) {
    require_same_shape(output, upstream, "sigmoid_backward");
    Tensor out(output.shape());
    const double* s = output.data();
    const double* up = upstream.data();
    double* o = out.data();
    const std::size_t n = output.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) o[i] = up[i] * s[i] * (1.0 - s[i]);
    return out;
}

Tensor upsample2x_forward(const Tensor& input) {
    if (input.rank() != 3)
        throw std::invalid_argument("upsample2x: input must be HxWxC, got " + input.shape_str());
    const int H = input.dim(0), W = input.dim(1), C = input.dim(2);
    Tensor out({H * 2, W * 2, C});
    const double* in = input.data();
    double* o = out.data();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < 2 * H; ++y) {
        for (int x = 0; x < 2 * W; ++x) {
            const double* src = in + (static_cast<std::size_t>(y / 2) * W + x / 2) * C;
            double* dst = o + (static_cast<std::size_t>(y) * 2 * W + x) * C;
            for (int c = 0; c < C; ++c) dst[c] = src[c];
        }
    }
    return out;
}

Tensor upsample2x_backward(const Tensor& upstream) {
    if (upstream.rank() != 3 || upstream.dim(0) % 2 != 0 || upstream.dim(1) % 2 != 0)
        throw std::invalid_argument("upsample2x_backward: upstream must have even spatial dims");
    const int H = upstream.dim(0) / 2, W = upstream.dim(1) / 2, C = upstream.dim(2);
    Tensor grad({H, W, C});
    const double* up = upstream.data();
    double* g = grad.data();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        acc += up[(static_cast<std::size_t>(2 * y + dy) * 2 * W + 2 * x + dx) * C + c];
                g[(static_cast<std::size_t>(y) * W + x) * C + c] = acc;
            }
        }
    }
    return grad;
}

Tensor add_channel_bias(const Tensor& input, const Tensor& bias) {
    if (input.rank() != 3 || bias.rank() != 1 || bias.dim(0) != input.dim(2))
        throw std::invalid_argument("add_channel_bias: bias length must equal channel count");
    Tensor out(input.shape());
    const int C = input.dim(2);
    const std::size_t pixels = input.size() / static_cast<std::size_t>(C);
    const double* in = input.data();
    const double* b = bias.data();
    double* o = out.data();
#pragma omp parallel for schedule(static)
    for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < C; ++c) o[p * C + c] = in[p * C + c] + b[c];
    }
    return out;
}

Tensor channel_bias_backward(const Tensor& upstream) {
    if (upstream.rank() != 3)
        throw std::invalid_argument("channel_bias_backward: upstream must be HxWxC");
    const int C = upstream.dim(2);
    const std::size_t pixels = upstream.size() / static_cast<std::size_t>(C);
    Tensor grad({C});
    const double* up = upstream.data();
    double* g = grad.data();
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) acc += up[p * C + c];
        g[c] = acc;
    }
    return grad;
}

double mse(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    if (pred.size() == 0) throw std::invalid_argument("mse: empty tensors");
    const double* p = pred.data();
    const double* t = target.data();
    double acc = 0.0;  // fixed-order accumulation
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = p[i] - t[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

Tensor mse_backward(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse_backward");
    Tensor grad(pred.shape());
    const double inv_n = 2.0 / static_cast<double>(pred.size());
    const double* p = pred.data();
    const double* t = target.data();
    double* g = grad.data();
    const std::size_t n = pred.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) g[i] = inv_n * (p[i] - t[i]);
    return grad;
}

Tensor sgd_step(const Tensor& params, const Tensor& grads, double learning_rate) {
    Tensor out = params;
    sgd_step_inplace(out, grads, learning_rate);
    return out;
}

void sgd_step_inplace(Tensor& params, const Tensor& grads, double learning_rate) {
    require_same_shape(params, grads, "sgd_step");
    double* p = params.data();
    const double* g = grads.data();
    const std::size_t n = params.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) p[i] -= learning_rate * g[i];
}

}  // namespace stlfer
