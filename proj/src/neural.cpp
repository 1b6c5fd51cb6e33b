#include "slicesim/neural.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "slicesim/errors.hpp"
#include "slicesim/kernels.hpp"

namespace slicesim::neural {

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

DenseNetwork::DenseNetwork(const std::vector<std::size_t>& dims, RngStream& rng) {
    if (dims.size() < 2) throw ArgumentError("network needs at least input and output dims");
    for (std::size_t d : dims)
        if (d == 0) throw ArgumentError("network dims must be positive");
    layers_.resize(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer& layer = layers_[l];
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.w.resize(layer.in * layer.out);
        layer.b.assign(layer.out, 0.0);
        const double lim = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        for (double& w : layer.w) w = lim * (2.0 * rng.uniform01() - 1.0);
    }
}

std::vector<std::size_t> DenseNetwork::dims() const {
    std::vector<std::size_t> d;
    if (layers_.empty()) return d;
    d.reserve(layers_.size() + 1);
    d.push_back(layers_.front().in);
    for (const auto& l : layers_) d.push_back(l.out);
    return d;
}

std::size_t DenseNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.w.size() + l.b.size();
    return n;
}

std::vector<double> DenseNetwork::forward(std::span<const double> x) const {
    Trace t;
    return forward(x, t);
}

const std::vector<double>& DenseNetwork::forward(std::span<const double> x, Trace& t) const {
    if (layers_.empty()) throw ArgumentError("forward on an empty network");
    if (x.size() != layers_.front().in) throw ShapeError("forward: input dim mismatch");
    t.act.resize(layers_.size() + 1);
    t.pre.resize(layers_.size());
    t.act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        t.pre[l].resize(layer.out);
        kernels::matvec_bias(layer.w.data(), layer.b.data(), t.act[l].data(),
                             t.pre[l].data(), layer.in, layer.out);
        t.act[l + 1].resize(layer.out);
        if (l + 1 == layers_.size()) {
            t.act[l + 1] = t.pre[l];
        } else {
            kernels::relu(t.pre[l].data(), t.act[l + 1].data(), layer.out);
        }
    }
    return t.act.back();
}

void DenseNetwork::Gradients::reset() {
    for (auto& g : dw) std::fill(g.begin(), g.end(), 0.0);
    for (auto& g : db) std::fill(g.begin(), g.end(), 0.0);
    std::fill(dx.begin(), dx.end(), 0.0);
}

void DenseNetwork::Gradients::scale(double factor) {
    for (auto& g : dw)
        for (double& x : g) x *= factor;
    for (auto& g : db)
        for (double& x : g) x *= factor;
    for (double& x : dx) x *= factor;
}

DenseNetwork::Gradients DenseNetwork::make_gradients() const {
    Gradients g;
    g.dw.resize(layers_.size());
    g.db.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        g.dw[l].assign(layers_[l].w.size(), 0.0);
        g.db[l].assign(layers_[l].b.size(), 0.0);
    }
    g.dx.assign(input_dim(), 0.0);
    return g;
}

void DenseNetwork::backward(const Trace& t, std::span<const double> dy, Gradients& g) const {
    if (t.act.size() != layers_.size() + 1)
        throw ShapeError("backward: trace does not match network");
    if (dy.size() != output_dim()) throw ShapeError("backward: upstream gradient dim mismatch");
    if (g.dw.size() != layers_.size()) {
        Gradients fresh = make_gradients();
        g.dw = std::move(fresh.dw);
        g.db = std::move(fresh.db);
        g.dx = std::move(fresh.dx);
    }

    std::vector<double> g_pre(dy.begin(), dy.end());  // output layer is identity
    std::vector<double> g_act;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const Layer& layer = layers_[l];
        kernels::ger_acc(g.dw[l].data(), t.act[l].data(), g_pre.data(), layer.in, layer.out);
        kernels::axpy(1.0, g_pre.data(), g.db[l].data(), layer.out);
        g_act.resize(layer.in);
        kernels::matvec_t(layer.w.data(), g_pre.data(), g_act.data(), layer.in, layer.out);
        if (l > 0) {
            g_pre.resize(layer.in);
            kernels::relu_backward(t.pre[l - 1].data(), g_act.data(), g_pre.data(), layer.in);
        }
    }
    kernels::axpy(1.0, g_act.data(), g.dx.data(), input_dim());
}

void DenseNetwork::check_finite(const char* context) const {
    for (const auto& l : layers_) {
        if (!all_finite(l.w) || !all_finite(l.b))
            throw NumericError(std::string("non-finite network parameters: ") + context);
    }
}

bool DenseNetwork::same_shape(const DenseNetwork& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l)
        if (layers_[l].in != other.layers_[l].in || layers_[l].out != other.layers_[l].out)
            return false;
    return true;
}

// lr 0 is allowed as a degenerate identity update so "zero step leaves
// parameters unchanged" holds; negatives are configuration mistakes.
Optimizer::Optimizer(SgdConfig cfg) : adam_(false), lr_(cfg.learning_rate) {
    if (!(lr_ >= 0.0)) throw ConfigError("optimizer: learning rate must be non-negative");
}

Optimizer::Optimizer(AdamConfig cfg)
    : adam_(true), lr_(cfg.learning_rate), beta1_(cfg.beta1), beta2_(cfg.beta2), eps_(cfg.eps) {
    if (!(lr_ >= 0.0)) throw ConfigError("optimizer: learning rate must be non-negative");
    if (!(beta1_ >= 0.0 && beta1_ < 1.0 && beta2_ >= 0.0 && beta2_ < 1.0))
        throw ConfigError("optimizer: betas must lie in [0, 1)");
}

void Optimizer::apply(DenseNetwork& net, const DenseNetwork::Gradients& g) {
    auto& layers = net.layers();
    if (g.dw.size() != layers.size()) throw ShapeError("optimizer: gradient shape mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (!all_finite(g.dw[l]) || !all_finite(g.db[l]))
            throw NumericError("non-finite gradients in optimizer step");
    }

    if (adam_) {
        if (m_w_.empty()) {
            m_w_.resize(layers.size());
            m_b_.resize(layers.size());
            v_w_.resize(layers.size());
            v_b_.resize(layers.size());
            for (std::size_t l = 0; l < layers.size(); ++l) {
                m_w_[l].assign(layers[l].w.size(), 0.0);
                m_b_[l].assign(layers[l].b.size(), 0.0);
                v_w_[l].assign(layers[l].w.size(), 0.0);
                v_b_[l].assign(layers[l].b.size(), 0.0);
            }
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
        for (std::size_t l = 0; l < layers.size(); ++l) {
            kernels::adam_update(layers[l].w.data(), g.dw[l].data(), m_w_[l].data(),
                                 v_w_[l].data(), layers[l].w.size(), lr_, beta1_, beta2_, eps_,
                                 bc1, bc2);
            kernels::adam_update(layers[l].b.data(), g.db[l].data(), m_b_[l].data(),
                                 v_b_[l].data(), layers[l].b.size(), lr_, beta1_, beta2_, eps_,
                                 bc1, bc2);
        }
    } else {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            kernels::axpy(-lr_, g.dw[l].data(), layers[l].w.data(), layers[l].w.size());
            kernels::axpy(-lr_, g.db[l].data(), layers[l].b.data(), layers[l].b.size());
        }
    }
    net.check_finite("after optimizer step");
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw FormatError("checkpoint truncated");
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) |
           (static_cast<std::uint32_t>(buf[3]) << 24);
}

void put_f64(std::ostream& out, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

double get_f64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw FormatError("checkpoint truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

}  // namespace

void write_network(std::ostream& out, const DenseNetwork& net) {
    const auto& layers = net.layers();
    out.write(kMagic, 4);
    put_u32(out, kFormatVersion);
    put_u32(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
        put_u32(out, static_cast<std::uint32_t>(l.in));
        put_u32(out, static_cast<std::uint32_t>(l.out));
    }
    for (const auto& l : layers) {
        // row-major on disk: all of output r's incoming weights contiguous
        for (std::size_t r = 0; r < l.out; ++r)
            for (std::size_t c = 0; c < l.in; ++c) put_f64(out, l.w[c * l.out + r]);
        for (double b : l.b) put_f64(out, b);
    }
    if (!out) throw FileError("checkpoint write failed");
}

DenseNetwork read_network(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad checkpoint magic");
    const std::uint32_t version = get_u32(in);
    if (version != kFormatVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t n_layers = get_u32(in);
    if (n_layers == 0 || n_layers > 1024) throw FormatError("implausible layer count");

    DenseNetwork net;
    auto& layers = net.layers();
    layers.resize(n_layers);
    for (auto& l : layers) {
        l.in = get_u32(in);
        l.out = get_u32(in);
        if (l.in == 0 || l.out == 0) throw FormatError("zero layer dimension");
    }
    for (std::size_t l = 1; l < layers.size(); ++l)
        if (layers[l].in != layers[l - 1].out)
            throw FormatError("layer dims do not chain");
    for (auto& l : layers) {
        l.w.resize(l.in * l.out);
        l.b.resize(l.out);
        for (std::size_t r = 0; r < l.out; ++r)
            for (std::size_t c = 0; c < l.in; ++c) l.w[c * l.out + r] = get_f64(in);
        for (double& b : l.b) b = get_f64(in);
    }
    return net;
}

void save(const DenseNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot open for write: " + path);
    write_network(out, net);
}

DenseNetwork load(const std::string& path, const std::vector<std::size_t>& expected_dims) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open: " + path);
    DenseNetwork net = read_network(in);
    if (!expected_dims.empty() && net.dims() != expected_dims)
        throw ShapeError("checkpoint dims do not match the expected architecture");
    return net;
}

}  // namespace slicesim::neural
