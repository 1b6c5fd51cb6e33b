#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace slicesim::kernels {

// Data-parallel inner loops behind the neural and action-projection code.
// Every operation has a scalar reference implementation and, on x86-64, an
// AVX2 variant selected at runtime. The two are bit-identical by
// construction: SIMD lanes follow the exact accumulation order the scalar
// reference defines (the whole project is compiled with -ffp-contract=off so
// neither side fuses multiply-add). Equivalence is enforced by tests.
//
// Weight matrices are stored input-major: W[c * out + r] is the weight from
// input c to output r. This makes both the forward matvec and the outer-
// product accumulation contiguous across outputs.

struct KernelTable {
    const char* name;

    // y[r] = b[r] + sum_c W[c*out+r] * x[c], terms added in ascending c.
    void (*matvec_bias)(const double* w, const double* b, const double* x,
                        double* y, std::size_t in, std::size_t out);

    // gx[c] = sum_r W[c*out+r] * g[r], accumulated in four interleaved
    // partial sums p[r % 4], combined as (p0+p1)+(p2+p3).
    void (*matvec_t)(const double* w, const double* g, double* gx,
                     std::size_t in, std::size_t out);

    // dW[c*out+r] += x[c] * g[r]
    void (*ger_acc)(double* dw, const double* x, const double* g,
                    std::size_t in, std::size_t out);

    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);

    // y[i] = x[i] > 0 ? x[i] : 0
    void (*relu)(const double* x, double* y, std::size_t n);

    // out[i] = pre[i] > 0 ? g[i] : 0
    void (*relu_backward)(const double* pre, const double* g, double* out,
                          std::size_t n);

    // out[i] = sum_d (coords[d*count+i] - q[d])^2.
    // coords is dimension-major: all points' d-th components are contiguous.
    // The per-point sum is accumulated in double-double arithmetic (Dekker
    // two-product plus two-sum, which is why -ffp-contract=off matters), so
    // points whose coordinate differences are permutations of each other get
    // bit-identical distances. Nearest-neighbour tie-breaking on the action
    // lattice relies on that: an equal-split query must tie against all
    // rotations of the same multiplier multiset instead of favouring
    // whichever one the summation order happens to flatter.
    void (*sqdist_scan)(const double* coords, std::size_t count,
                        std::size_t dim, const double* q, double* out);

    // Adam step with bias correction; bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
    void (*adam_update)(double* theta, const double* g, double* m, double* v,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2);
};

/// Active dispatch table. Defaults to the best backend the CPU supports;
/// override with the SLICESIM_KERNELS environment variable (scalar | avx2).
const KernelTable& active();

const char* backend_name();

/// Backends compiled into this binary and usable on this CPU.
std::vector<std::string> available_backends();

/// Force a backend by name (used by the equivalence tests). Throws
/// ArgumentError if the backend is unknown or unusable on this CPU.
void force_backend(const std::string& name);

/// Undo force_backend: back to the default selection.
void reset_backend();

// Convenience wrappers over the active table.
inline void matvec_bias(const double* w, const double* b, const double* x,
                        double* y, std::size_t in, std::size_t out) {
    active().matvec_bias(w, b, x, y, in, out);
}
inline void matvec_t(const double* w, const double* g, double* gx,
                     std::size_t in, std::size_t out) {
    active().matvec_t(w, g, gx, in, out);
}
inline void ger_acc(double* dw, const double* x, const double* g,
                    std::size_t in, std::size_t out) {
    active().ger_acc(dw, x, g, in, out);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void relu(const double* x, double* y, std::size_t n) {
    active().relu(x, y, n);
}
inline void relu_backward(const double* pre, const double* g, double* out,
                          std::size_t n) {
    active().relu_backward(pre, g, out, n);
}
inline void sqdist_scan(const double* coords, std::size_t count,
                        std::size_t dim, const double* q, double* out) {
    active().sqdist_scan(coords, count, dim, q, out);
}
inline void adam_update(double* theta, const double* g, double* m, double* v,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2) {
    active().adam_update(theta, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}

namespace detail {
extern const KernelTable scalar_table;
#if defined(__x86_64__)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace slicesim::kernels
