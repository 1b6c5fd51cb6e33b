#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "slicesim/action_space.hpp"
#include "slicesim/link_sim.hpp"
#include "slicesim/traffic.hpp"

namespace slicesim::env {

/// Reward = se_weight * SE + qoe_weight * QoE.
struct RewardWeights {
    double se_weight = 0.01;
    double qoe_weight = 1.0;

    double reward(double se, double qoe) const {
        return se_weight * se + qoe_weight * qoe;
    }
    void validate() const;  // throws ConfigError
};

/// Per-slice demand of the last interval, divided by fixed normalizers.
using Observation = std::vector<double>;

struct QoeResult {
    std::vector<double> per_slice;  // vacuously 1 for idle slices
    double aggregate = 1.0;         // arrival-weighted
};

/// SE in bit/s/Hz: everything delivered across slices over W * T.
double compute_se(const linksim::IntervalStats& stats, double total_bandwidth_hz,
                  double interval_s);

/// Satisfied/arrived per slice; stalled (discarded) arrivals stay in the
/// denominator as unsatisfied demand.
QoeResult compute_qoe(const linksim::IntervalStats& stats);

struct EpisodeMetrics {
    long episode = 0;
    double reward = 0.0;
    double se = 0.0;
    double qoe_aggregate = 1.0;
    std::vector<double> qoe_slice;
    std::vector<double> w_mhz;
    double exploration = 0.0;  // noise sigma or epsilon, filled by the agent loop
    linksim::IntervalStats stats;
};

struct StepResult {
    Observation next_observation;
    double reward = 0.0;
    EpisodeMetrics metrics;
};

enum class DemandUnit { packets, bytes };

struct EnvConfig {
    actions::AllocationGrid grid;
    linksim::SlotConfig slots;
    std::vector<linksim::ChannelModel> channels{linksim::ChannelModel{}};
    RewardWeights weights;
    DemandUnit demand_unit = DemandUnit::packets;
    /// Per-slice observation normalizers; empty = expected demand per
    /// interval from the scenario's analytic means.
    std::vector<double> normalizers;
};

/// One adjustment interval per step, continuing task: reset() builds a fresh
/// simulator (same seed, same trajectory) and runs one warm-up interval
/// under the equal allocation so the first observation is populated.
class SliceEnv {
public:
    SliceEnv(std::vector<traffic::SliceSpec> scenario, EnvConfig config, std::uint64_t seed);
    ~SliceEnv();
    SliceEnv(SliceEnv&&) noexcept;
    SliceEnv& operator=(SliceEnv&&) noexcept;

    Observation reset();
    /// Throws InvalidActionError for off-lattice actions, ArgumentError if
    /// called before reset().
    StepResult step(const actions::Allocation& action);

    /// Per-slot scheduling trace (see LinkSimulator::set_trace); survives
    /// reset(). nullptr disables.
    void set_trace(std::ostream* out);

    const actions::AllocationGrid& grid() const { return config_.grid; }
    const std::vector<traffic::SliceSpec>& scenario() const { return scenario_; }
    const std::vector<double>& normalizers() const { return normalizers_; }
    const actions::Allocation& equal_allocation() const { return equal_alloc_; }
    int slice_count() const { return static_cast<int>(scenario_.size()); }
    long episodes_run() const { return episode_; }

private:
    Observation observe(const linksim::IntervalStats& stats) const;

    std::vector<traffic::SliceSpec> scenario_;
    EnvConfig config_;
    std::uint64_t seed_ = 0;
    std::vector<double> normalizers_;
    actions::Allocation equal_alloc_;
    std::unique_ptr<linksim::LinkSimulator> sim_;
    long episode_ = 0;
    std::ostream* trace_ = nullptr;
};

/// Fixed CSV schema: episode,reward,se,qoe_aggregate,qoe_<slice>...,
/// w_<slice>...,exploration. Values print as %.17g so replays are
/// byte-identical.
std::string metrics_csv_header(const std::vector<traffic::SliceSpec>& scenario);
std::string metrics_csv_row(const EpisodeMetrics& m);

}  // namespace slicesim::env
