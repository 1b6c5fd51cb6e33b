#include "slicesim/kernels.hpp"

#if defined(__x86_64__)

#include <immintrin.h>

// AVX2 kernels. Lane assignment mirrors the scalar reference exactly:
// independent outputs go to lanes, per-output accumulation order is the
// scalar one, and no FMA is used, so results are bit-identical to scalar.

namespace slicesim::kernels {
namespace {

void matvec_bias_avx2(const double* w, const double* b, const double* x,
                      double* y, std::size_t in, std::size_t out) {
    std::size_t r = 0;
    for (; r + 4 <= out; r += 4) _mm256_storeu_pd(y + r, _mm256_loadu_pd(b + r));
    for (; r < out; ++r) y[r] = b[r];
    for (std::size_t c = 0; c < in; ++c) {
        const __m256d xc = _mm256_set1_pd(x[c]);
        const double* col = w + c * out;
        std::size_t i = 0;
        for (; i + 4 <= out; i += 4) {
            __m256d acc = _mm256_loadu_pd(y + i);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(col + i), xc));
            _mm256_storeu_pd(y + i, acc);
        }
        for (; i < out; ++i) y[i] += col[i] * x[c];
    }
}

void matvec_t_avx2(const double* w, const double* g, double* gx,
                   std::size_t in, std::size_t out) {
    for (std::size_t c = 0; c < in; ++c) {
        const double* col = w + c * out;
        __m256d acc = _mm256_setzero_pd();
        std::size_t r = 0;
        for (; r + 4 <= out; r += 4) {
            acc = _mm256_add_pd(
                acc, _mm256_mul_pd(_mm256_loadu_pd(col + r), _mm256_loadu_pd(g + r)));
        }
        alignas(32) double p[4];
        _mm256_store_pd(p, acc);
        for (; r < out; ++r) p[r % 4] += col[r] * g[r];
        gx[c] = (p[0] + p[1]) + (p[2] + p[3]);
    }
}

void ger_acc_avx2(double* dw, const double* x, const double* g,
                  std::size_t in, std::size_t out) {
    for (std::size_t c = 0; c < in; ++c) {
        const __m256d xc = _mm256_set1_pd(x[c]);
        double* col = dw + c * out;
        std::size_t r = 0;
        for (; r + 4 <= out; r += 4) {
            __m256d acc = _mm256_loadu_pd(col + r);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(xc, _mm256_loadu_pd(g + r)));
            _mm256_storeu_pd(col + r, acc);
        }
        for (; r < out; ++r) col[r] += x[c] * g[r];
    }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_loadu_pd(y + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, acc);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void relu_avx2(const double* x, double* y, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(y + i, _mm256_and_pd(mask, v));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_avx2(const double* pre, const double* g, double* out,
                        std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask =
            _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
    }
    for (; i < n; ++i) out[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

// Same double-double sum-of-squares as the scalar reference, four points per
// iteration. Every lane runs the identical op sequence, so results match
// scalar bit for bit.
void sqdist_scan_avx2(const double* coords, std::size_t count, std::size_t dim,
                      const double* q, double* out) {
    const __m256d split = _mm256_set1_pd(134217729.0);  // 2^27 + 1
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        __m256d s_hi = _mm256_setzero_pd();
        __m256d s_lo = _mm256_setzero_pd();
        for (std::size_t d = 0; d < dim; ++d) {
            const __m256d qd = _mm256_set1_pd(q[d]);
            const __m256d t =
                _mm256_sub_pd(_mm256_loadu_pd(coords + d * count + i), qd);
            const __m256d p = _mm256_mul_pd(t, t);
            const __m256d c = _mm256_mul_pd(split, t);
            const __m256d t_hi = _mm256_sub_pd(c, _mm256_sub_pd(c, t));
            const __m256d t_lo = _mm256_sub_pd(t, t_hi);
            const __m256d e = _mm256_add_pd(
                _mm256_add_pd(
                    _mm256_sub_pd(_mm256_mul_pd(t_hi, t_hi), p),
                    _mm256_mul_pd(two, _mm256_mul_pd(t_hi, t_lo))),
                _mm256_mul_pd(t_lo, t_lo));
            const __m256d sum = _mm256_add_pd(s_hi, p);
            const __m256d bv = _mm256_sub_pd(sum, s_hi);
            const __m256d err =
                _mm256_add_pd(_mm256_sub_pd(s_hi, _mm256_sub_pd(sum, bv)),
                              _mm256_sub_pd(p, bv));
            s_lo = _mm256_add_pd(s_lo, _mm256_add_pd(err, e));
            s_hi = sum;
        }
        _mm256_storeu_pd(out + i, _mm256_add_pd(s_hi, s_lo));
    }
    for (; i < count; ++i) {
        double s_hi = 0.0, s_lo = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double t = coords[d * count + i] - q[d];
            const double p = t * t;
            const double c = 134217729.0 * t;
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

void adam_update_avx2(double* theta, const double* g, double* m, double* v,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2) {
    const __m256d b1 = _mm256_set1_pd(beta1);
    const __m256d b2 = _mm256_set1_pd(beta2);
    const __m256d omb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d omb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d lrv = _mm256_set1_pd(lr);
    const __m256d epsv = _mm256_set1_pd(eps);
    const __m256d bc1v = _mm256_set1_pd(bc1);
    const __m256d bc2v = _mm256_set1_pd(bc2);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gi = _mm256_loadu_pd(g + i);
        __m256d mi = _mm256_loadu_pd(m + i);
        __m256d vi = _mm256_loadu_pd(v + i);
        mi = _mm256_add_pd(_mm256_mul_pd(b1, mi), _mm256_mul_pd(omb1, gi));
        vi = _mm256_add_pd(_mm256_mul_pd(b2, vi),
                           _mm256_mul_pd(omb2, _mm256_mul_pd(gi, gi)));
        _mm256_storeu_pd(m + i, mi);
        _mm256_storeu_pd(v + i, vi);
        const __m256d mhat = _mm256_div_pd(mi, bc1v);
        const __m256d vhat = _mm256_div_pd(vi, bc2v);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom);
        _mm256_storeu_pd(theta + i,
                         _mm256_sub_pd(_mm256_loadu_pd(theta + i), step));
    }
    if (i < n) {
        detail::scalar_table.adam_update(theta + i, g + i, m + i, v + i, n - i,
                                         lr, beta1, beta2, eps, bc1, bc2);
    }
}

}  // namespace

namespace detail {
const KernelTable avx2_table = {
    "avx2",          matvec_bias_avx2, matvec_t_avx2,
    ger_acc_avx2,    axpy_avx2,        relu_avx2,
    relu_backward_avx2, sqdist_scan_avx2, adam_update_avx2,
};
}  // namespace detail

}  // namespace slicesim::kernels

#endif  // __x86_64__
