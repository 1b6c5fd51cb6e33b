#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <vector>

#include "slicesim/errors.hpp"
#include "slicesim/kernels.hpp"
#include "slicesim/rng.hpp"

using namespace slicesim;

namespace {

std::vector<double> random_vec(RngStream& rng, std::size_t n, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform01();
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    if (a.empty()) return true;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct BackendGuard {
    ~BackendGuard() { kernels::reset_backend(); }
};

bool backend_available(const char* name) {
    for (const auto& n : kernels::available_backends())
        if (n == name) return true;
    return false;
}

}  // namespace

TEST_CASE("kernel backends: scalar is always available") {
    CHECK(backend_available("scalar"));
}

TEST_CASE("kernel backends: force_backend rejects unknown names") {
    BackendGuard guard;
    CHECK_THROWS_AS(kernels::force_backend("no-such-backend"), ArgumentError);
}

TEST_CASE("matvec_bias matches a plain double loop") {
    BackendGuard guard;
    kernels::force_backend("scalar");
    RngStream rng = RngStream::derive(99, "kernel-ref", 0, 0);
    const std::size_t in_dim = 7, out_dim = 5;
    auto w = random_vec(rng, in_dim * out_dim);
    auto b = random_vec(rng, out_dim);
    auto x = random_vec(rng, in_dim);
    std::vector<double> y(out_dim);
    kernels::matvec_bias(w.data(), b.data(), x.data(), y.data(), in_dim, out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
        double acc = b[r];
        for (std::size_t c = 0; c < in_dim; ++c) acc += w[c * out_dim + r] * x[c];
        CHECK(y[r] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("matvec_t is the transpose of matvec_bias") {
    BackendGuard guard;
    kernels::force_backend("scalar");
    RngStream rng = RngStream::derive(100, "kernel-ref", 0, 0);
    const std::size_t in_dim = 9, out_dim = 6;
    auto w = random_vec(rng, in_dim * out_dim);
    auto g = random_vec(rng, out_dim);
    std::vector<double> gx(in_dim);
    kernels::matvec_t(w.data(), g.data(), gx.data(), in_dim, out_dim);
    for (std::size_t c = 0; c < in_dim; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < out_dim; ++r) acc += w[c * out_dim + r] * g[r];
        CHECK(gx[c] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("relu and relu_backward semantics") {
    BackendGuard guard;
    kernels::force_backend("scalar");
    const double x[5] = {-1.0, 0.0, 2.5, -0.0, 3.0};
    const double g[5] = {1.0, 1.0, 1.0, 1.0, 1.0};
    double y[5], dx[5];
    kernels::relu(x, y, 5);
    kernels::relu_backward(x, g, dx, 5);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.5);
    CHECK(y[3] == 0.0);
    CHECK(y[4] == 3.0);
    CHECK(dx[0] == 0.0);
    CHECK(dx[1] == 0.0);
    CHECK(dx[2] == 1.0);
    CHECK(dx[3] == 0.0);
    CHECK(dx[4] == 1.0);
}

TEST_CASE("adam_update single step matches closed form") {
    BackendGuard guard;
    kernels::force_backend("scalar");
    double theta = 1.0, m = 0.0, v = 0.0;
    const double g = 0.5, lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    kernels::adam_update(&theta, &g, &m, &v, 1, lr, b1, b2, eps, 1.0 - b1, 1.0 - b2);
    const double m1 = (1 - b1) * g;
    const double v1 = (1 - b2) * g * g;
    const double mhat = m1 / (1 - b1);
    const double vhat = v1 / (1 - b2);
    CHECK(theta == doctest::Approx(1.0 - lr * mhat / (std::sqrt(vhat) + eps)).epsilon(1e-14));
    CHECK(m == doctest::Approx(m1).epsilon(1e-14));
    CHECK(v == doctest::Approx(v1).epsilon(1e-14));
}

TEST_CASE("sqdist_scan matches a long double reference") {
    BackendGuard guard;
    kernels::force_backend("scalar");
    RngStream rng = RngStream::derive(101, "kernel-ref", 0, 0);
    const std::size_t dim = 3, count = 57;
    auto coords = random_vec(rng, dim * count, 0.0, 10.0);
    auto q = random_vec(rng, dim, 0.0, 10.0);
    std::vector<double> d(count);
    kernels::sqdist_scan(coords.data(), count, dim, q.data(), d.data());
    for (std::size_t i = 0; i < count; ++i) {
        long double acc = 0.0L;
        for (std::size_t k = 0; k < dim; ++k) {
            const long double t =
                static_cast<long double>(coords[k * count + i]) - static_cast<long double>(q[k]);
            acc += t * t;
        }
        CHECK(d[i] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-14));
    }
}

TEST_CASE("sqdist_scan is invariant under coordinate permutation for symmetric queries") {
    BackendGuard guard;
    RngStream rng = RngStream::derive(102, "kernel-ref", 0, 0);
    for (const auto& backend : kernels::available_backends()) {
        kernels::force_backend(backend);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t dim = 3;
            double base[3] = {0.2 * (1 + rng.below(50)), 0.2 * (1 + rng.below(50)),
                              0.2 * (1 + rng.below(50))};
            std::vector<double> perms;  // dimension-major, 6 points
            std::vector<std::array<double, 3>> rows;
            std::array<double, 3> p{base[0], base[1], base[2]};
            std::sort(p.begin(), p.end());
            do {
                rows.push_back(p);
            } while (std::next_permutation(p.begin(), p.end()));
            const std::size_t count = rows.size();
            perms.resize(dim * count);
            for (std::size_t i = 0; i < count; ++i)
                for (std::size_t k = 0; k < dim; ++k) perms[k * count + i] = rows[i][k];
            const double qv = (10.0 / 3.0) * rng.uniform01();
            const double q[3] = {qv, qv, qv};
            std::vector<double> d(count);
            kernels::sqdist_scan(perms.data(), count, dim, q, d.data());
            for (std::size_t i = 1; i < count; ++i) {
                REQUIRE(std::memcmp(&d[0], &d[i], sizeof(double)) == 0);
            }
        }
    }
}

#if defined(__x86_64__)
TEST_CASE("scalar and avx2 kernels agree bitwise") {
    if (!backend_available("avx2")) {
        MESSAGE("avx2 not available on this host, skipping");
        return;
    }
    BackendGuard guard;
    RngStream rng = RngStream::derive(1234, "kernel-test", 0, 0);

    // Sizes that are not multiples of 4 exercise the SIMD tails.
    const std::size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 13, 16, 31, 64, 100};

    for (std::size_t in_dim : dims) {
        for (std::size_t out_dim : dims) {
            auto w = random_vec(rng, in_dim * out_dim);
            auto b = random_vec(rng, out_dim);
            auto x = random_vec(rng, in_dim);
            auto dy = random_vec(rng, out_dim);

            std::vector<double> y_s(out_dim), y_v(out_dim);
            std::vector<double> dx_s(in_dim), dx_v(in_dim);
            std::vector<double> gw_s(in_dim * out_dim, 0.5), gw_v(in_dim * out_dim, 0.5);

            kernels::force_backend("scalar");
            kernels::matvec_bias(w.data(), b.data(), x.data(), y_s.data(), in_dim, out_dim);
            kernels::matvec_t(w.data(), dy.data(), dx_s.data(), in_dim, out_dim);
            kernels::ger_acc(gw_s.data(), x.data(), dy.data(), in_dim, out_dim);

            kernels::force_backend("avx2");
            kernels::matvec_bias(w.data(), b.data(), x.data(), y_v.data(), in_dim, out_dim);
            kernels::matvec_t(w.data(), dy.data(), dx_v.data(), in_dim, out_dim);
            kernels::ger_acc(gw_v.data(), x.data(), dy.data(), in_dim, out_dim);

            REQUIRE(bitwise_equal(y_s, y_v));
            REQUIRE(bitwise_equal(dx_s, dx_v));
            REQUIRE(bitwise_equal(gw_s, gw_v));
        }
    }

    for (std::size_t n : dims) {
        auto x = random_vec(rng, n);
        auto g = random_vec(rng, n);
        auto pre = random_vec(rng, n);

        std::vector<double> r_s(n), r_v(n), rb_s(n), rb_v(n);
        std::vector<double> ax_s = x, ax_v = x;
        std::vector<double> th_s = x, th_v = x;
        std::vector<double> m_s(n, 0.01), m_v(n, 0.01), v_s(n, 0.02), v_v(n, 0.02);
        const double bc1 = 1.0 - std::pow(0.9, 5), bc2 = 1.0 - std::pow(0.999, 5);

        kernels::force_backend("scalar");
        kernels::relu(x.data(), r_s.data(), n);
        kernels::relu_backward(pre.data(), g.data(), rb_s.data(), n);
        kernels::axpy(0.37, g.data(), ax_s.data(), n);
        kernels::adam_update(th_s.data(), g.data(), m_s.data(), v_s.data(), n, 1e-3, 0.9, 0.999,
                             1e-8, bc1, bc2);

        kernels::force_backend("avx2");
        kernels::relu(x.data(), r_v.data(), n);
        kernels::relu_backward(pre.data(), g.data(), rb_v.data(), n);
        kernels::axpy(0.37, g.data(), ax_v.data(), n);
        kernels::adam_update(th_v.data(), g.data(), m_v.data(), v_v.data(), n, 1e-3, 0.9, 0.999,
                             1e-8, bc1, bc2);

        REQUIRE(bitwise_equal(r_s, r_v));
        REQUIRE(bitwise_equal(rb_s, rb_v));
        REQUIRE(bitwise_equal(ax_s, ax_v));
        REQUIRE(bitwise_equal(th_s, th_v));
        REQUIRE(bitwise_equal(m_s, m_v));
        REQUIRE(bitwise_equal(v_s, v_v));
    }

    const std::size_t counts[] = {1, 3, 5, 8, 17, 100, 1176};
    for (std::size_t count : counts) {
        const std::size_t dim = 3;
        auto coords = random_vec(rng, dim * count, 0.0, 10.0);
        auto q = random_vec(rng, dim, 0.0, 10.0);
        std::vector<double> d_s(count), d_v(count);
        kernels::force_backend("scalar");
        kernels::sqdist_scan(coords.data(), count, dim, q.data(), d_s.data());
        kernels::force_backend("avx2");
        kernels::sqdist_scan(coords.data(), count, dim, q.data(), d_v.data());
        REQUIRE(bitwise_equal(d_s, d_v));
    }
}
#endif
