#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <vector>

#include "slicesim/action_space.hpp"
#include "slicesim/rng.hpp"
#include "slicesim/traffic.hpp"

namespace slicesim::linksim {

struct ChannelModel {
    double mean_snr_db = 20.0;
    /// Debug/test override: use this gain for every user and slot instead of
    /// the per-slot Rayleigh draw.
    std::optional<double> fixed_gain;

    double snr_linear() const;
    void validate() const;  // throws ConfigError
};

struct SlotConfig {
    double slot_ms = 0.5;
    int slots_per_interval = 2000;

    double interval_ms() const { return slot_ms * slots_per_interval; }
    void validate() const;  // throws ConfigError
};

/// Shannon rate over the slice band for the scheduled user.
double instantaneous_rate(double bandwidth_hz, double mean_snr_linear, double gain);

struct SliceStats {
    std::int64_t arrived_packets = 0;
    std::int64_t arrived_bits = 0;
    std::int64_t delivered_packets = 0;
    std::int64_t delivered_bits = 0;
    std::int64_t satisfied_packets = 0;
    std::int64_t expired_packets = 0;
    std::int64_t expired_bits = 0;
    std::int64_t stalled_arrivals = 0;
    std::int64_t stalled_bits = 0;
    std::int64_t pending_start_packets = 0;
    std::int64_t pending_start_bits = 0;
    std::int64_t pending_end_packets = 0;
    std::int64_t pending_end_bits = 0;
    int max_pending = 0;  // largest queue seen on any user this interval
    std::vector<double> user_rate_bps;
};

struct IntervalStats {
    std::vector<SliceStats> slices;
    std::int64_t total_delivered_bits() const;
};

/// Slot-level downlink simulator. Owns the traffic streams, user queues and
/// round-robin cursors; time runs continuously across run_interval calls.
/// All randomness comes from streams derived from the seed per
/// ("traffic"|"fading", slice, user), so results are reproducible and
/// independent of evaluation order.
class LinkSimulator {
public:
    /// One channel entry per slice, or a single entry shared by all.
    LinkSimulator(std::vector<traffic::SliceSpec> specs, actions::AllocationGrid grid,
                  SlotConfig slots, std::vector<ChannelModel> channels, std::uint64_t seed);

    /// Simulate slots_per_interval slots under the given allocation.
    /// Per slot: inject due arrivals (a user at >= 5 pending discards new
    /// ones as stalled), expire overdue head-of-line packets, then serve one
    /// user per slice round-robin with the full slice bandwidth.
    IntervalStats run_interval(const actions::Allocation& alloc);

    double now_ms() const;
    const SlotConfig& slot_config() const { return slots_; }
    const std::vector<traffic::SliceSpec>& specs() const { return specs_; }

    /// Optional per-slot CSV trace (header written on first row).
    void set_trace(std::ostream* sink) { trace_ = sink; }

    static constexpr int kStallLimit = 5;

private:
    struct UserRuntime {
        std::deque<traffic::Packet> pending;
        traffic::ArrivalState arrivals;
        RngStream traffic_rng;
        RngStream fading_rng;
    };
    struct SliceRuntime {
        traffic::SliceSpec spec;
        ChannelModel channel;
        std::vector<UserRuntime> users;
        std::size_t rr_cursor = 0;
    };

    std::vector<traffic::SliceSpec> specs_;
    actions::AllocationGrid grid_;
    SlotConfig slots_;
    std::vector<SliceRuntime> slices_;
    std::int64_t global_slot_ = 0;
    std::ostream* trace_ = nullptr;
    bool trace_header_done_ = false;
};

}  // namespace slicesim::linksim
