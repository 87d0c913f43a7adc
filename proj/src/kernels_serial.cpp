#include "kernels_common.hpp"
#include "stlfer/kernels.hpp"

#include <stdexcept>

// Straight-line reference kernels. No pragmas, no pointer tricks. The test
// suite checks the OpenMP kernels against these bit-for-bit, and the kernel
// benchmark times the two side by side.

namespace stlfer::serial {

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, int stride, Padding padding) {
    const detail::ConvGeometry g = detail::conv_geometry(input, kernels, stride, padding);
    Tensor out({g.OH, g.OW, g.F});
    for (int oy = 0; oy < g.OH; ++oy)
        for (int ox = 0; ox < g.OW; ++ox)
            for (int f = 0; f < g.F; ++f) {
                double acc = 0.0;
                for (int ky = 0; ky < g.kh; ++ky)
                    for (int kx = 0; kx < g.kw; ++kx) {
                        const int y = oy * stride + ky - g.pad_top;
                        const int x = ox * stride + kx - g.pad_left;
                        if (y < 0 || y >= g.H || x < 0 || x >= g.W) continue;
                        for (int c = 0; c < g.C; ++c)
                            acc += input.at(y, x, c) * kernels.at(ky, kx, c, f);
                    }
                out.at(oy, ox, f) = acc;
            }
    return out;
}

ConvGradients conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& upstream,
                              int stride, Padding padding) {
    const detail::ConvGeometry g = detail::conv_geometry(input, kernels, stride, padding);
    if (upstream.rank() != 3 || upstream.dim(0) != g.OH || upstream.dim(1) != g.OW ||
        upstream.dim(2) != g.F)
        throw std::invalid_argument("conv2d_backward: upstream shape mismatch");

    ConvGradients grads{Tensor({g.kh, g.kw, g.C, g.F}), Tensor(input.shape())};
    for (int ky = 0; ky < g.kh; ++ky)
        for (int kx = 0; kx < g.kw; ++kx)
            for (int c = 0; c < g.C; ++c)
                for (int f = 0; f < g.F; ++f) {
                    double acc = 0.0;
                    for (int oy = 0; oy < g.OH; ++oy)
                        for (int ox = 0; ox < g.OW; ++ox) {
                            const int y = oy * stride + ky - g.pad_top;
                            const int x = ox * stride + kx - g.pad_left;
                            if (y < 0 || y >= g.H || x < 0 || x >= g.W) continue;
                            acc += upstream.at(oy, ox, f) * input.at(y, x, c);
                        }
                    grads.kernels.at(ky, kx, c, f) = acc;
                }

    for (int y = 0; y < g.H; ++y)
        for (int x = 0; x < g.W; ++x)
            for (int c = 0; c < g.C; ++c) {
                double acc = 0.0;
                for (int ky = 0; ky < g.kh; ++ky)
                    for (int kx = 0; kx < g.kw; ++kx) {
                        const int oy_num = y - ky + g.pad_top;
                        const int ox_num = x - kx + g.pad_left;
                        if (oy_num < 0 || ox_num < 0) continue;
                        if (oy_num % stride != 0 || ox_num % stride != 0) continue;
                        const int oy = oy_num / stride;
                        const int ox = ox_num / stride;
                        if (oy >= g.OH || ox >= g.OW) continue;
                        for (int f = 0; f < g.F; ++f)
                            acc += upstream.at(oy, ox, f) * kernels.at(ky, kx, c, f);
                    }
                grads.input.at(y, x, c) = acc;
            }
    return grads;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    detail::check_dense_shapes(input, weights, &bias);
    const int out_n = weights.dim(0), in_n = weights.dim(1);
    Tensor out({out_n});
    for (int r = 0; r < out_n; ++r) {
        double acc = 0.0;
        for (int c = 0; c < in_n; ++c) acc += weights.at(r, c) * input[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = acc + bias[static_cast<std::size_t>(r)];
    }
    return out;
}

DenseGradients dense_backward(const Tensor& input, const Tensor& weights, const Tensor& upstream) {
    detail::check_dense_shapes(input, weights, nullptr);
    const int out_n = weights.dim(0), in_n = weights.dim(1);
    if (upstream.rank() != 1 || upstream.dim(0) != out_n)
        throw std::invalid_argument("dense_backward: upstream shape mismatch");
    DenseGradients g{Tensor({out_n, in_n}), Tensor({out_n}), Tensor({in_n})};
    for (int r = 0; r < out_n; ++r) {
        for (int c = 0; c < in_n; ++c)
            g.weights.at(r, c) = upstream[static_cast<std::size_t>(r)] * input[static_cast<std::size_t>(c)];
        g.bias[static_cast<std::size_t>(r)] = upstream[static_cast<std::size_t>(r)];
    }
    for (int c = 0; c < in_n; ++c) {
        double acc = 0.0;
        for (int r = 0; r < out_n; ++r) acc += weights.at(r, c) * upstream[static_cast<std::size_t>(r)];
        g.input[static_cast<std::size_t>(c)] = acc;
    }
    return g;
}

MaxPoolResult maxpool2x2_forward(const Tensor& input) {
    if (input.rank() != 3)
        throw std::invalid_argument("maxpool2x2: input must be HxWxC");
    const int H = input.dim(0), W = input.dim(1), C = input.dim(2);
    const int OH = (H + 1) / 2, OW = (W + 1) / 2;
    MaxPoolResult res{Tensor({OH, OW, C}), std::vector<int>(static_cast<std::size_t>(OH) * OW * C)};
    for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox)
            for (int c = 0; c < C; ++c) {
                double best = 0.0;
                int best_idx = -1;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int y = oy * 2 + dy, x = ox * 2 + dx;
                        if (y >= H || x >= W) continue;
                        const int idx = (y * W + x) * C + c;
                        if (best_idx < 0 || input[static_cast<std::size_t>(idx)] > best) {
                            best = input[static_cast<std::size_t>(idx)];
                            best_idx = idx;
                        }
                    }
                res.output.at(oy, ox, c) = best;
                res.argmax[(static_cast<std::size_t>(oy) * OW + ox) * C + c] = best_idx;
            }
    return res;
}

Tensor upsample2x_forward(const Tensor& input) {
    if (input.rank() != 3)
        throw std::invalid_argument("upsample2x: input must be HxWxC");
    const int H = input.dim(0), W = input.dim(1), C = input.dim(2);
    Tensor out({H * 2, W * 2, C});
    for (int y = 0; y < 2 * H; ++y)
        for (int x = 0; x < 2 * W; ++x)
            for (int c = 0; c < C; ++c) out.at(y, x, c) = input.at(y / 2, x / 2, c);
    return out;
}

}  // namespace stlfer::serial
