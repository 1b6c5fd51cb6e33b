#include "slicesim/env.hpp"

#include <cmath>
#include <cstdio>

#include "slicesim/errors.hpp"

namespace slicesim::env {

void RewardWeights::validate() const {
    if (se_weight < 0.0 || qoe_weight < 0.0)
        throw ConfigError("reward weights must be nonnegative");
    if (se_weight == 0.0 && qoe_weight == 0.0)
        throw ConfigError("reward weights must not both be zero");
}

double compute_se(const linksim::IntervalStats& stats, double total_bandwidth_hz,
                  double interval_s) {
    return static_cast<double>(stats.total_delivered_bits()) /
           (total_bandwidth_hz * interval_s);
}

QoeResult compute_qoe(const linksim::IntervalStats& stats) {
    QoeResult out;
    out.per_slice.reserve(stats.slices.size());
    std::int64_t satisfied = 0, arrived = 0;
    for (const auto& st : stats.slices) {
        out.per_slice.push_back(
            st.arrived_packets == 0
                ? 1.0
                : static_cast<double>(st.satisfied_packets) /
                      static_cast<double>(st.arrived_packets));
        satisfied += st.satisfied_packets;
        arrived += st.arrived_packets;
    }
    out.aggregate = arrived == 0 ? 1.0
                                 : static_cast<double>(satisfied) /
                                       static_cast<double>(arrived);
    return out;
}

SliceEnv::SliceEnv(std::vector<traffic::SliceSpec> scenario, EnvConfig config,
                   std::uint64_t seed)
    : scenario_(std::move(scenario)), config_(std::move(config)), seed_(seed) {
    if (scenario_.empty()) throw ConfigError("env: empty scenario");
    config_.grid.validate();
    config_.slots.validate();
    config_.weights.validate();
    if (static_cast<int>(scenario_.size()) != config_.grid.slice_count)
        throw ConfigError("env: scenario and grid disagree on slice count");
    for (const auto& s : scenario_) s.validate();

    if (config_.normalizers.empty()) {
        normalizers_.reserve(scenario_.size());
        for (const auto& s : scenario_) {
            const double per_user =
                config_.slots.interval_ms() / traffic::model_mean(s.inter_arrival_ms);
            double expected = s.user_count * per_user;
            if (config_.demand_unit == DemandUnit::bytes)
                expected *= traffic::model_mean(s.packet_bytes);
            normalizers_.push_back(expected);
        }
    } else {
        if (config_.normalizers.size() != scenario_.size())
            throw ConfigError("env: need one normalizer per slice");
        for (double n : config_.normalizers)
            if (!(n > 0.0)) throw ConfigError("env: normalizers must be positive");
        normalizers_ = config_.normalizers;
    }

    std::vector<double> proto(scenario_.size(),
                              config_.grid.total_mhz / config_.grid.slice_count);
    equal_alloc_ = actions::project_knn(proto, config_.grid, 1).front();
}

SliceEnv::~SliceEnv() = default;
SliceEnv::SliceEnv(SliceEnv&&) noexcept = default;
SliceEnv& SliceEnv::operator=(SliceEnv&&) noexcept = default;

Observation SliceEnv::observe(const linksim::IntervalStats& stats) const {
    Observation obs(scenario_.size());
    for (std::size_t s = 0; s < scenario_.size(); ++s) {
        const double demand =
            config_.demand_unit == DemandUnit::packets
                ? static_cast<double>(stats.slices[s].arrived_packets)
                : static_cast<double>(stats.slices[s].arrived_bits) / 8.0;
        obs[s] = demand / normalizers_[s];
    }
    return obs;
}

Observation SliceEnv::reset() {
    sim_ = std::make_unique<linksim::LinkSimulator>(scenario_, config_.grid, config_.slots,
                                                    config_.channels, seed_);
    sim_->set_trace(trace_);
    episode_ = 0;
    return observe(sim_->run_interval(equal_alloc_));
}

void SliceEnv::set_trace(std::ostream* out) {
    trace_ = out;
    if (sim_) sim_->set_trace(out);
}

StepResult SliceEnv::step(const actions::Allocation& action) {
    if (!sim_) throw ArgumentError("env: step() before reset()");
    auto stats = sim_->run_interval(action);

    StepResult out;
    out.metrics.episode = episode_++;
    out.metrics.se = compute_se(stats, config_.grid.total_mhz * 1e6,
                                config_.slots.interval_ms() / 1000.0);
    QoeResult qoe = compute_qoe(stats);
    out.metrics.qoe_aggregate = qoe.aggregate;
    out.metrics.qoe_slice = std::move(qoe.per_slice);
    out.metrics.w_mhz = action.mhz(config_.grid);
    out.metrics.reward = config_.weights.reward(out.metrics.se, out.metrics.qoe_aggregate);
    out.reward = out.metrics.reward;
    out.next_observation = observe(stats);
    out.metrics.stats = std::move(stats);
    return out;
}

namespace {

void append_g17(std::string& s, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += buf;
}

}  // namespace

std::string metrics_csv_header(const std::vector<traffic::SliceSpec>& scenario) {
    std::string s = "episode,reward,se,qoe_aggregate";
    for (const auto& spec : scenario) s += ",qoe_" + spec.name;
    for (const auto& spec : scenario) s += ",w_" + spec.name;
    s += ",exploration";
    return s;
}

std::string metrics_csv_row(const EpisodeMetrics& m) {
    std::string s = std::to_string(m.episode);
    s += ',';
    append_g17(s, m.reward);
    s += ',';
    append_g17(s, m.se);
    s += ',';
    append_g17(s, m.qoe_aggregate);
    for (double q : m.qoe_slice) {
        s += ',';
        append_g17(s, q);
    }
    for (double w : m.w_mhz) {
        s += ',';
        append_g17(s, w);
    }
    s += ',';
    append_g17(s, m.exploration);
    return s;
}

}  // namespace slicesim::env
