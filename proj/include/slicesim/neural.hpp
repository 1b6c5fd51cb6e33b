#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "slicesim/rng.hpp"

namespace slicesim::neural {

/// Dense feed-forward net: rectifier hidden layers, identity output, f64.
/// Weights are stored input-major (w[c*out + r]) to match the kernel layout;
/// the checkpoint format on disk is row-major, transposed on the way in/out.
class DenseNetwork {
public:
    struct Layer {
        std::size_t in = 0, out = 0;
        std::vector<double> w;  // in*out, input-major
        std::vector<double> b;  // out
    };

    /// Activations recorded by forward() for the matching backward().
    struct Trace {
        std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
        std::vector<std::vector<double>> pre;  // pre-activation per layer
    };

    /// Parameter gradients plus the gradient w.r.t. the input vector.
    /// Accumulates across backward() calls until reset().
    struct Gradients {
        std::vector<std::vector<double>> dw, db;
        std::vector<double> dx;

        void reset();
        void scale(double factor);
    };

    DenseNetwork() = default;
    /// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
    DenseNetwork(const std::vector<std::size_t>& dims, RngStream& rng);

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    std::vector<std::size_t> dims() const;
    std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
    std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
    std::size_t parameter_count() const;

    std::vector<double> forward(std::span<const double> x) const;
    /// forward() that records activations; returns the output (t.act.back()).
    const std::vector<double>& forward(std::span<const double> x, Trace& t) const;

    /// Exact reverse-mode gradients for the trace; dy is dL/d(output).
    /// Gradients are accumulated (shapes are set up on first use).
    void backward(const Trace& t, std::span<const double> dy, Gradients& g) const;

    Gradients make_gradients() const;  // zeroed, correctly shaped

    /// Throws NumericError if any parameter is NaN/Inf.
    void check_finite(const char* context) const;

    bool same_shape(const DenseNetwork& other) const;

private:
    std::vector<Layer> layers_;
};

struct SgdConfig {
    double learning_rate = 1e-3;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Gradient-descent update: theta -= lr * grad, or Adam when configured.
/// Owns the moment accumulators; one optimizer per network.
class Optimizer {
public:
    explicit Optimizer(SgdConfig cfg);
    explicit Optimizer(AdamConfig cfg);

    /// Applies accumulated gradients (callers scale() them to means first).
    /// Throws NumericError on non-finite gradients or resulting parameters.
    void apply(DenseNetwork& net, const DenseNetwork::Gradients& g);

    double learning_rate() const { return lr_; }
    bool is_adam() const { return adam_; }

private:
    bool adam_ = false;
    double lr_ = 1e-3;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long step_ = 0;
    std::vector<std::vector<double>> m_w_, m_b_, v_w_, v_b_;
};

// Checkpoint format (see README): "DNAF" magic, u32 version, u32 layer
// count, u32 in/out dims per layer, then per layer the row-major weight
// matrix and the bias vector as little-endian f64. Round trips bit-exactly.
inline constexpr char kMagic[4] = {'D', 'N', 'A', 'F'};
inline constexpr std::uint32_t kFormatVersion = 1;

void write_network(std::ostream& out, const DenseNetwork& net);
DenseNetwork read_network(std::istream& in);

void save(const DenseNetwork& net, const std::string& path);
/// expected_dims, when nonempty, is enforced with a ShapeError.
DenseNetwork load(const std::string& path,
                  const std::vector<std::size_t>& expected_dims = {});

}  // namespace slicesim::neural
