#include "slicesim/traffic.hpp"

#include <cmath>
#include <string>

#include "slicesim/errors.hpp"

namespace slicesim::traffic {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double bounded_pareto_mean(double alpha, double lo, double hi) {
    // E[X] for the Pareto(alpha, lo) conditioned on X <= hi.
    const double ratio_pow = std::pow(lo / hi, alpha);
    return alpha * std::pow(lo, alpha) *
           (std::pow(lo, 1.0 - alpha) - std::pow(hi, 1.0 - alpha)) /
           ((alpha - 1.0) * (1.0 - ratio_pow));
}

}  // namespace

TruncatedPareto make_truncated_pareto(double exponent, double mean, double cap) {
    if (!(exponent > 1.0))
        throw ConfigError("truncated pareto: exponent must exceed 1");
    if (!(mean > 0.0) || !(cap > 0.0) || !(mean < cap))
        throw ConfigError("truncated pareto: need 0 < mean < max");
    // bounded_pareto_mean is strictly increasing in the scale and sweeps
    // (0, cap) as the scale does, so bisection on (0, mean] is safe: the
    // mean always exceeds the scale.
    double lo = mean * 1e-12, hi = mean;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (bounded_pareto_mean(exponent, mid, cap) < mean)
            lo = mid;
        else
            hi = mid;
    }
    return TruncatedPareto{exponent, 0.5 * (lo + hi), cap};
}

TruncatedLognormal make_truncated_lognormal(double mean, double stddev, double cap) {
    if (!(mean > 0.0) || !(stddev > 0.0))
        throw ConfigError("truncated lognormal: mean and std must be positive");
    if (!(cap >= mean))
        throw ConfigError("truncated lognormal: max must be >= mean");
    const double cv2 = (stddev / mean) * (stddev / mean);
    const double sigma2 = std::log1p(cv2);
    const double mu = std::log(mean) - 0.5 * sigma2;
    return TruncatedLognormal{mu, std::sqrt(sigma2), cap};
}

double model_mean(const Model& model) {
    struct Visitor {
        double operator()(const Constant& m) const { return m.value; }
        double operator()(const Uniform& m) const { return 0.5 * (m.lo + m.hi); }
        double operator()(const Exponential& m) const { return m.mean; }
        double operator()(const TruncatedPareto& m) const {
            return bounded_pareto_mean(m.exponent, m.scale, m.cap);
        }
        double operator()(const TruncatedLognormal& m) const {
            // E[X | X <= cap] for lognormal(mu, sigma).
            const double z = (std::log(m.cap) - m.mu) / m.sigma;
            const double untruncated = std::exp(m.mu + 0.5 * m.sigma * m.sigma);
            return untruncated * normal_cdf(z - m.sigma) / normal_cdf(z);
        }
    };
    return std::visit(Visitor{}, model);
}

double sample(const Model& model, RngStream& rng) {
    struct Visitor {
        RngStream& rng;
        double operator()(const Constant& m) const { return m.value; }
        double operator()(const Uniform& m) const { return rng.uniform(m.lo, m.hi); }
        double operator()(const Exponential& m) const { return rng.exponential(m.mean); }
        double operator()(const TruncatedPareto& m) const {
            // Inverse CDF with u in (0, 1]: support (scale, cap].
            const double u = 1.0 - rng.uniform01();
            const double ratio_pow = std::pow(m.scale / m.cap, m.exponent);
            return m.scale * std::pow(1.0 - u * (1.0 - ratio_pow), -1.0 / m.exponent);
        }
        double operator()(const TruncatedLognormal& m) const {
            for (;;) {
                const double x = std::exp(m.mu + m.sigma * rng.normal());
                if (x <= m.cap) return x;
            }
        }
    };
    return std::visit(Visitor{rng}, model);
}

double sample_inter_arrival(const Model& model, RngStream& rng) {
    return sample(model, rng);
}

double sample_packet_size(const Model& model, RngStream& rng) {
    return sample(model, rng);
}

void SliceSpec::validate() const {
    if (name.empty()) throw ConfigError("slice spec: empty name");
    if (user_count < 1)
        throw ConfigError("slice '" + name + "': user_count must be positive");
    if (!(sla_rate_bps > 0.0))
        throw ConfigError("slice '" + name + "': sla_rate must be positive");
    if (!(sla_latency_ms > 0.0))
        throw ConfigError("slice '" + name + "': sla_latency must be positive");
}

ArrivalState init_arrival_state(const SliceSpec& spec, RngStream& rng) {
    return ArrivalState{sample_inter_arrival(spec.inter_arrival_ms, rng)};
}

std::vector<Packet> generate_arrivals(const SliceSpec& spec, double t0, double t1,
                                      RngStream& rng, ArrivalState& state) {
    std::vector<Packet> out;
    while (state.next_arrival_ms < t1) {
        if (state.next_arrival_ms >= t0) {
            const double bytes = sample_packet_size(spec.packet_bytes, rng);
            const std::int64_t bits = std::max<std::int64_t>(1, std::llround(bytes * 8.0));
            out.push_back(Packet{state.next_arrival_ms, bits, static_cast<double>(bits)});
        }
        state.next_arrival_ms += sample_inter_arrival(spec.inter_arrival_ms, rng);
    }
    return out;
}

std::vector<SliceSpec> default_scenario() {
    SliceSpec volte;
    volte.name = "volte";
    volte.user_count = 46;
    volte.inter_arrival_ms = Uniform{0.0, 160.0};
    volte.packet_bytes = Constant{40.0};
    volte.sla_rate_bps = 51e3;
    volte.sla_latency_ms = 10.0;

    SliceSpec video;
    video.name = "video";
    video.user_count = 46;
    video.inter_arrival_ms = make_truncated_pareto(1.2, 6.0, 12.5);
    video.packet_bytes = make_truncated_pareto(1.2, 100.0, 250.0);
    video.sla_rate_bps = 5e6;
    video.sla_latency_ms = 10.0;

    SliceSpec urllc;
    urllc.name = "urllc";
    urllc.user_count = 8;
    urllc.inter_arrival_ms = Exponential{180.0};
    urllc.packet_bytes = make_truncated_lognormal(2e6, 0.722e6, 5e6);
    urllc.sla_rate_bps = 10e6;
    urllc.sla_latency_ms = 5.0;

    return {volte, video, urllc};
}

}  // namespace slicesim::traffic
