#pragma once

#include "stlfer/kernels.hpp"

#include <stdexcept>
#include <string>

namespace stlfer::detail {

struct ConvGeometry {
    int H, W, C, kh, kw, F;
    int OH, OW;
    int pad_top, pad_left;
};

inline ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernels, int stride,
                                  Padding padding) {
    if (input.rank() != 3)
        throw std::invalid_argument("conv2d: input must be HxWxC, got " + input.shape_str());
    if (kernels.rank() != 4)
        throw std::invalid_argument("conv2d: kernels must be khxkwxCinxCout, got " +
                                    kernels.shape_str());
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");

    ConvGeometry g{};
    g.H = input.dim(0);
    g.W = input.dim(1);
    g.C = input.dim(2);
    g.kh = kernels.dim(0);
    g.kw = kernels.dim(1);
    g.F = kernels.dim(3);
    if (kernels.dim(2) != g.C)
        throw std::invalid_argument("conv2d: kernel channel count " +
                                    std::to_string(kernels.dim(2)) + " does not match input " +
                                    std::to_string(g.C));

    if (padding == Padding::kValid) {
        if (g.kh > g.H || g.kw > g.W)
            throw std::invalid_argument("conv2d: kernel " + kernels.shape_str() +
                                        " larger than input " + input.shape_str());
        g.OH = (g.H - g.kh) / stride + 1;
        g.OW = (g.W - g.kw) / stride + 1;
        g.pad_top = 0;
        g.pad_left = 0;
    } else {
        g.OH = (g.H + stride - 1) / stride;
        g.OW = (g.W + stride - 1) / stride;
        int pad_h = std::max(0, (g.OH - 1) * stride + g.kh - g.H);
        int pad_w = std::max(0, (g.OW - 1) * stride + g.kw - g.W);
        if (g.kh > g.H + pad_h || g.kw > g.W + pad_w)
            throw std::invalid_argument("conv2d: kernel larger than padded input");
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
    }
    return g;
}

inline void check_dense_shapes(const Tensor& input, const Tensor& weights, const Tensor* bias) {
    if (weights.rank() != 2)
        throw std::invalid_argument("dense: weights must be out x in, got " + weights.shape_str());
    if (input.rank() != 1)
        throw std::invalid_argument("dense: input must be a vector, got " + input.shape_str());
    if (input.dim(0) != weights.dim(1))
        throw std::invalid_argument("dense: input length " + std::to_string(input.dim(0)) +
                                    " does not match weight columns " +
                                    std::to_string(weights.dim(1)));
    if (bias && (bias->rank() != 1 || bias->dim(0) != weights.dim(0)))
        throw std::invalid_argument("dense: bias length does not match weight rows");
}

}  // namespace stlfer::detail
