#include "slicesim/kernels.hpp"

#include <cmath>

// Scalar reference kernels. These define the numeric semantics: the SIMD
// variants must reproduce them bit for bit, so accumulation orders here are
// deliberate and fixed.

namespace slicesim::kernels {
namespace {

void matvec_bias_scalar(const double* w, const double* b, const double* x,
                        double* y, std::size_t in, std::size_t out) {
    for (std::size_t r = 0; r < out; ++r) y[r] = b[r];
    for (std::size_t c = 0; c < in; ++c) {
        const double xc = x[c];
        const double* col = w + c * out;
        for (std::size_t r = 0; r < out; ++r) y[r] += col[r] * xc;
    }
}

void matvec_t_scalar(const double* w, const double* g, double* gx,
                     std::size_t in, std::size_t out) {
    for (std::size_t c = 0; c < in; ++c) {
        const double* col = w + c * out;
        double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
        std::size_t r = 0;
        for (; r + 4 <= out; r += 4) {
            p0 += col[r] * g[r];
            p1 += col[r + 1] * g[r + 1];
            p2 += col[r + 2] * g[r + 2];
            p3 += col[r + 3] * g[r + 3];
        }
        for (; r < out; ++r) {
            switch (r % 4) {
                case 0: p0 += col[r] * g[r]; break;
                case 1: p1 += col[r] * g[r]; break;
                case 2: p2 += col[r] * g[r]; break;
                default: p3 += col[r] * g[r]; break;
            }
        }
        gx[c] = (p0 + p1) + (p2 + p3);
    }
}

void ger_acc_scalar(double* dw, const double* x, const double* g,
                    std::size_t in, std::size_t out) {
    for (std::size_t c = 0; c < in; ++c) {
        const double xc = x[c];
        double* col = dw + c * out;
        for (std::size_t r = 0; r < out; ++r) col[r] += xc * g[r];
    }
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void relu_scalar(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_scalar(const double* pre, const double* g, double* out,
                          std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

// Double-double sum of squares. Products are made exact with a Dekker split
// (hence the hard project-wide ban on fp contraction), sums with a two-sum;
// the low-order words ride along in s_lo. Permutations of the same diff
// multiset therefore produce the same rounded result, which the projection
// tie-break depends on.
void sqdist_scan_scalar(const double* coords, std::size_t count,
                        std::size_t dim, const double* q, double* out) {
    constexpr double kSplit = 134217729.0;  // 2^27 + 1
    for (std::size_t i = 0; i < count; ++i) {
        double s_hi = 0.0, s_lo = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double t = coords[d * count + i] - q[d];
            const double p = t * t;
            const double c = kSplit * t;
            const double t_hi = c - (c - t);
            const double t_lo = t - t_hi;
            const double e =
                ((t_hi * t_hi - p) + 2.0 * (t_hi * t_lo)) + t_lo * t_lo;
            const double sum = s_hi + p;
            const double bv = sum - s_hi;
            const double err = (s_hi - (sum - bv)) + (p - bv);
            s_lo += err + e;
            s_hi = sum;
        }
        out[i] = s_hi + s_lo;
    }
}

void adam_update_scalar(double* theta, const double* g, double* m, double* v,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    const double omb1 = 1.0 - beta1;
    const double omb2 = 1.0 - beta2;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + omb1 * g[i];
        v[i] = beta2 * v[i] + omb2 * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= (lr * mhat) / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

namespace detail {
const KernelTable scalar_table = {
    "scalar",          matvec_bias_scalar, matvec_t_scalar,
    ger_acc_scalar,    axpy_scalar,        relu_scalar,
    relu_backward_scalar, sqdist_scan_scalar, adam_update_scalar,
};
}  // namespace detail

}  // namespace slicesim::kernels
