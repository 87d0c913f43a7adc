#include "stlfer/eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stlfer {

namespace {

double offdiag_frobenius(const Tensor& a, int n) {
    double s = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) s += 2.0 * a.at(p, q) * a.at(p, q);
    return std::sqrt(s);
}

}  // namespace

EigResult sym_eig(const Tensor& matrix) {
    if (matrix.rank() != 2 || matrix.dim(0) != matrix.dim(1))
        throw std::invalid_argument("sym_eig: matrix must be square, got " + matrix.shape_str());
    const int n = matrix.dim(0);
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q)
            if (std::abs(matrix.at(p, q) - matrix.at(q, p)) > 1e-9)
                throw std::invalid_argument("sym_eig: matrix is not symmetric within 1e-9");

    Tensor a = matrix;
    // Symmetrize exactly so both Jacobi updates see identical off-diagonals.
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
            const double m = 0.5 * (a.at(p, q) + a.at(q, p));
            a.at(p, q) = m;
            a.at(q, p) = m;
        }

    Tensor v({n, n});
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    const double tol = 1e-10;
    const int max_sweeps = 100;
    double prev_off = offdiag_frobenius(a, n);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (prev_off < tol) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double app = a.at(p, p);
                const double aqq = a.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                // Smaller-angle root keeps the rotation stable.
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v.at(k, p);
                    const double vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
        const double off = offdiag_frobenius(a, n);
        if (off < tol || off >= prev_off) {
            prev_off = off;
            break;
        }
        prev_off = off;
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return a.at(i, i) > a.at(j, j); });

    EigResult res{std::vector<double>(static_cast<std::size_t>(n)), Tensor({n, n})};
    for (int j = 0; j < n; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        res.values[static_cast<std::size_t>(j)] = a.at(src, src);
        // Sign convention: largest-magnitude component positive.
        int pivot = 0;
        double best = std::abs(v.at(0, src));
        for (int k = 1; k < n; ++k) {
            const double m = std::abs(v.at(k, src));
            if (m > best) {
                best = m;
                pivot = k;
            }
        }
        const double sign = v.at(pivot, src) < 0.0 ? -1.0 : 1.0;
        for (int k = 0; k < n; ++k) res.vectors.at(k, j) = sign * v.at(k, src);
    }
    return res;
}

}  // namespace stlfer
