#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "slicesim/rng.hpp"

namespace slicesim::traffic {

// Sampling models for inter-arrival times (ms) and packet sizes (bytes).
// Constant doubles as the deterministic test model for arrivals.

struct Constant {
    double value;
};

struct Uniform {
    double lo, hi;  // samples in [lo, hi)
};

struct Exponential {
    double mean;
};

/// Bounded Pareto on (scale, cap]. Built via make_truncated_pareto, which
/// solves the scale from a target mean.
struct TruncatedPareto {
    double exponent;  // shape alpha > 1
    double scale;     // lower bound L
    double cap;       // upper bound H
};

/// Lognormal with the underlying normal's (mu, sigma), rejection-sampled
/// against the cap. Built via make_truncated_lognormal from mean/std.
struct TruncatedLognormal {
    double mu;
    double sigma;
    double cap;
};

using Model = std::variant<Constant, Uniform, Exponential, TruncatedPareto, TruncatedLognormal>;

/// Solve the bounded-Pareto scale so that the distribution with the given
/// shape and cap has the target mean. Throws ConfigError when the target is
/// unreachable (mean >= cap, exponent <= 1, nonpositive parameters).
TruncatedPareto make_truncated_pareto(double exponent, double mean, double cap);

/// Underlying normal parameters from the untruncated lognormal mean/std;
/// samples above the cap are rejected and redrawn. With the default URLLC numbers
/// the rejection rate is ~0.3% and the mean shift well under 1%.
TruncatedLognormal make_truncated_lognormal(double mean, double stddev, double cap);

/// Analytic mean of the model. For TruncatedLognormal this is the mean of
/// the capped distribution (computed from the censored-normal integral).
double model_mean(const Model& model);

double sample(const Model& model, RngStream& rng);

// Named for the two traffic dimensions; both defer to sample().
double sample_inter_arrival(const Model& model, RngStream& rng);
double sample_packet_size(const Model& model, RngStream& rng);

struct SliceSpec {
    std::string name;
    int user_count = 1;
    Model inter_arrival_ms{Constant{1.0}};
    Model packet_bytes{Constant{40.0}};
    double sla_rate_bps = 1.0;
    double sla_latency_ms = 1.0;

    void validate() const;  // throws ConfigError
};

struct Packet {
    double arrival_ms = 0.0;
    std::int64_t size_bits = 0;
    double remaining_bits = 0.0;  // fractional delivery cursor
};

/// Per-user renewal state: the absolute time of the next arrival. Streams
/// are continuous across adjustment intervals.
struct ArrivalState {
    double next_arrival_ms = 0.0;
};

/// First arrival = one inter-arrival draw from t = 0 (nothing at t = 0
/// itself).
ArrivalState init_arrival_state(const SliceSpec& spec, RngStream& rng);

/// All packets of one user with arrival_ms in [t0, t1), sizes drawn per the
/// slice's packet model, state advanced past t1. Sizes are rounded to whole
/// bits (at least 1) so downstream accounting stays exact.
std::vector<Packet> generate_arrivals(const SliceSpec& spec, double t0, double t1,
                                      RngStream& rng, ArrivalState& state);

/// Default mix: VoLTE, Video, URLLC.
std::vector<SliceSpec> default_scenario();

}  // namespace slicesim::traffic
