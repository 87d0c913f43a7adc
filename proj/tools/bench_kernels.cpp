// Micro-benchmark for the data-parallel kernels: primary (OpenMP when
// available) vs the serial reference. Also asserts the two implementations
// agree bit-for-bit on every benchmarked case, so a mismatch fails loudly
// here long before it could skew an experiment.

#include "stlfer/kernels.hpp"
#include "stlfer/random.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace {

using stlfer::RandomStream;
using stlfer::Tensor;

Tensor random_tensor(std::vector<int> shape, RandomStream& rng) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform_real(-1.0, 1.0);
    return t;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

double time_ms(const std::function<void()>& fn, int repeats) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(end - start).count() / repeats;
}

void report(const char* name, double serial_ms, double primary_ms) {
    std::printf("%-22s serial %8.3f ms   primary %8.3f ms   speedup %5.2fx\n", name, serial_ms,
                primary_ms, primary_ms > 0.0 ? serial_ms / primary_ms : 0.0);
}

}  // namespace

int main() {
#if defined(_OPENMP)
    std::printf("OpenMP enabled, max threads = %d\n\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; primary == serial\n\n");
#endif

    RandomStream rng(2024);
    const int repeats = 5;

    {
        const Tensor input = random_tensor({96, 96, 16}, rng);
        const Tensor kernels = random_tensor({3, 3, 16, 32}, rng);
        const Tensor forward =
            stlfer::conv2d_forward(input, kernels, 1, stlfer::Padding::kSame);
        const Tensor reference =
            stlfer::serial::conv2d_forward(input, kernels, 1, stlfer::Padding::kSame);
        if (!bitwise_equal(forward, reference))
            throw std::runtime_error("conv2d_forward: primary and serial disagree");
        report("conv2d_forward",
               time_ms([&] { stlfer::serial::conv2d_forward(input, kernels, 1,
                                                            stlfer::Padding::kSame); },
                       repeats),
               time_ms([&] { stlfer::conv2d_forward(input, kernels, 1,
                                                    stlfer::Padding::kSame); },
                       repeats));

        const Tensor upstream = random_tensor({96, 96, 32}, rng);
        const auto grads =
            stlfer::conv2d_backward(input, kernels, upstream, 1, stlfer::Padding::kSame);
        const auto grads_ref =
            stlfer::serial::conv2d_backward(input, kernels, upstream, 1, stlfer::Padding::kSame);
        if (!bitwise_equal(grads.kernels, grads_ref.kernels) ||
            !bitwise_equal(grads.input, grads_ref.input))
            throw std::runtime_error("conv2d_backward: primary and serial disagree");
        report("conv2d_backward",
               time_ms([&] { stlfer::serial::conv2d_backward(input, kernels, upstream, 1,
                                                             stlfer::Padding::kSame); },
                       repeats),
               time_ms([&] { stlfer::conv2d_backward(input, kernels, upstream, 1,
                                                     stlfer::Padding::kSame); },
                       repeats));
    }

    {
        const Tensor input = random_tensor({4096}, rng);
        const Tensor weights = random_tensor({2500, 4096}, rng);
        const Tensor bias = random_tensor({2500}, rng);
        const Tensor forward = stlfer::dense_forward(input, weights, bias);
        const Tensor reference = stlfer::serial::dense_forward(input, weights, bias);
        if (!bitwise_equal(forward, reference))
            throw std::runtime_error("dense_forward: primary and serial disagree");
        report("dense_forward",
               time_ms([&] { stlfer::serial::dense_forward(input, weights, bias); }, repeats),
               time_ms([&] { stlfer::dense_forward(input, weights, bias); }, repeats));

        const Tensor upstream = random_tensor({2500}, rng);
        const auto grads = stlfer::dense_backward(input, weights, upstream);
        const auto grads_ref = stlfer::serial::dense_backward(input, weights, upstream);
        if (!bitwise_equal(grads.weights, grads_ref.weights) ||
            !bitwise_equal(grads.bias, grads_ref.bias) ||
            !bitwise_equal(grads.input, grads_ref.input))
            throw std::runtime_error("dense_backward: primary and serial disagree");
        report("dense_backward",
               time_ms([&] { stlfer::serial::dense_backward(input, weights, upstream); },
                       repeats),
               time_ms([&] { stlfer::dense_backward(input, weights, upstream); }, repeats));
    }

    {
        const Tensor input = random_tensor({96, 96, 32}, rng);
        const auto pooled = stlfer::maxpool2x2_forward(input);
        const auto pooled_ref = stlfer::serial::maxpool2x2_forward(input);
        if (!bitwise_equal(pooled.output, pooled_ref.output) ||
            pooled.argmax != pooled_ref.argmax)
            throw std::runtime_error("maxpool2x2_forward: primary and serial disagree");
        report("maxpool2x2_forward",
               time_ms([&] { stlfer::serial::maxpool2x2_forward(input); }, repeats),
               time_ms([&] { stlfer::maxpool2x2_forward(input); }, repeats));

        const Tensor small = random_tensor({48, 48, 32}, rng);
        const Tensor up = stlfer::upsample2x_forward(small);
        const Tensor up_ref = stlfer::serial::upsample2x_forward(small);
        if (!bitwise_equal(up, up_ref))
            throw std::runtime_error("upsample2x_forward: primary and serial disagree");
        report("upsample2x_forward",
               time_ms([&] { stlfer::serial::upsample2x_forward(small); }, repeats),
               time_ms([&] { stlfer::upsample2x_forward(small); }, repeats));
    }

    std::printf("\nall primary/serial outputs bit-identical\n");
    return 0;
}
