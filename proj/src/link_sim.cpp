#include "slicesim/link_sim.hpp"

#include <cmath>
#include <string>

#include "slicesim/errors.hpp"

namespace slicesim::linksim {

double ChannelModel::snr_linear() const { return std::pow(10.0, mean_snr_db / 10.0); }

void ChannelModel::validate() const {
    if (!std::isfinite(mean_snr_db))
        throw ConfigError("channel: mean_snr_db must be finite");
    if (fixed_gain && *fixed_gain < 0.0)
        throw ConfigError("channel: fixed gain must be nonnegative");
}

void SlotConfig::validate() const {
    if (!(slot_ms > 0.0)) throw ConfigError("slots: slot_ms must be positive");
    if (slots_per_interval < 1)
        throw ConfigError("slots: slots_per_interval must be positive");
}

double instantaneous_rate(double bandwidth_hz, double mean_snr_linear, double gain) {
    return bandwidth_hz * std::log2(1.0 + mean_snr_linear * gain);
}

std::int64_t IntervalStats::total_delivered_bits() const {
    std::int64_t acc = 0;
    for (const auto& s : slices) acc += s.delivered_bits;
    return acc;
}

LinkSimulator::LinkSimulator(std::vector<traffic::SliceSpec> specs,
                             actions::AllocationGrid grid, SlotConfig slots,
                             std::vector<ChannelModel> channels, std::uint64_t seed)
    : specs_(std::move(specs)), grid_(grid), slots_(slots) {
    grid_.validate();
    slots_.validate();
    if (specs_.empty()) throw ConfigError("link sim: no slices");
    if (static_cast<int>(specs_.size()) != grid_.slice_count)
        throw ConfigError("link sim: grid is for " + std::to_string(grid_.slice_count) +
                          " slices, scenario has " + std::to_string(specs_.size()));
    if (channels.size() == 1) channels.resize(specs_.size(), channels[0]);
    if (channels.size() != specs_.size())
        throw ConfigError("link sim: need one channel model per slice (or one shared)");

    slices_.reserve(specs_.size());
    for (std::size_t s = 0; s < specs_.size(); ++s) {
        specs_[s].validate();
        channels[s].validate();
        SliceRuntime rt;
        rt.spec = specs_[s];
        rt.channel = channels[s];
        rt.users.resize(static_cast<std::size_t>(specs_[s].user_count));
        for (std::size_t u = 0; u < rt.users.size(); ++u) {
            UserRuntime& user = rt.users[u];
            user.traffic_rng = RngStream::derive(seed, "traffic", s, u);
            user.fading_rng = RngStream::derive(seed, "fading", s, u);
            user.arrivals = traffic::init_arrival_state(rt.spec, user.traffic_rng);
        }
        slices_.push_back(std::move(rt));
    }
}

double LinkSimulator::now_ms() const {
    return static_cast<double>(global_slot_) * slots_.slot_ms;
}

IntervalStats LinkSimulator::run_interval(const actions::Allocation& alloc) {
    if (alloc.units.size() != slices_.size())
        throw InvalidActionError("allocation has wrong slice count");
    int unit_sum = 0;
    for (int k : alloc.units) {
        if (k < 1) throw InvalidActionError("allocation has a zero-unit slice");
        unit_sum += k;
    }
    if (unit_sum != grid_.units())
        throw InvalidActionError("allocation does not sum to the total bandwidth");

    const auto bw_mhz = alloc.mhz(grid_);
    const double slot_s = slots_.slot_ms / 1000.0;

    IntervalStats stats;
    stats.slices.resize(slices_.size());
    std::vector<std::vector<std::int64_t>> user_bits(slices_.size());
    for (std::size_t s = 0; s < slices_.size(); ++s) {
        SliceStats& st = stats.slices[s];
        user_bits[s].assign(slices_[s].users.size(), 0);
        for (const auto& user : slices_[s].users) {
            st.pending_start_packets += static_cast<std::int64_t>(user.pending.size());
            for (const auto& p : user.pending) st.pending_start_bits += p.size_bits;
            st.max_pending = std::max(st.max_pending, static_cast<int>(user.pending.size()));
        }
    }

    for (int slot = 0; slot < slots_.slots_per_interval; ++slot) {
        const double t0 = now_ms() + slot * slots_.slot_ms;
        const double t1 = t0 + slots_.slot_ms;

        for (std::size_t s = 0; s < slices_.size(); ++s) {
            SliceRuntime& slice = slices_[s];
            SliceStats& st = stats.slices[s];

            // 1) inject arrivals due this slot
            for (auto& user : slice.users) {
                auto pkts = traffic::generate_arrivals(slice.spec, t0, t1, user.traffic_rng,
                                                       user.arrivals);
                for (auto& p : pkts) {
                    ++st.arrived_packets;
                    st.arrived_bits += p.size_bits;
                    if (static_cast<int>(user.pending.size()) >= kStallLimit) {
                        ++st.stalled_arrivals;
                        st.stalled_bits += p.size_bits;
                    } else {
                        user.pending.push_back(p);
                        st.max_pending =
                            std::max(st.max_pending, static_cast<int>(user.pending.size()));
                    }
                }
            }

            // 2) expire overdue head-of-line packets (frees stall slots now)
            for (auto& user : slice.users) {
                while (!user.pending.empty() &&
                       t0 - user.pending.front().arrival_ms > slice.spec.sla_latency_ms) {
                    ++st.expired_packets;
                    st.expired_bits += user.pending.front().size_bits;
                    user.pending.pop_front();
                }
            }

            // 3) serve one user round-robin with the full slice band.
            // Fading is drawn for every user every slot, scheduled or not, so
            // the draw sequence does not depend on the allocation.
            double gain_of_served = 0.0;
            std::size_t served = slice.users.size();
            const std::size_t n_users = slice.users.size();
            for (std::size_t off = 0; off < n_users; ++off) {
                const std::size_t u = (slice.rr_cursor + off) % n_users;
                if (!slice.users[u].pending.empty() && served == n_users) served = u;
            }
            for (std::size_t u = 0; u < n_users; ++u) {
                const double g = slice.channel.fixed_gain
                                     ? *slice.channel.fixed_gain
                                     : slice.users[u].fading_rng.exponential(1.0);
                if (u == served) gain_of_served = g;
            }

            double progressed = 0.0;
            if (served < n_users) {
                UserRuntime& user = slice.users[served];
                const double rate =
                    instantaneous_rate(bw_mhz[s] * 1e6, slice.channel.snr_linear(),
                                       gain_of_served);
                double budget = rate * slot_s;
                while (budget > 0.0 && !user.pending.empty()) {
                    traffic::Packet& head = user.pending.front();
                    if (head.remaining_bits <= budget) {
                        budget -= head.remaining_bits;
                        progressed += head.remaining_bits;
                        ++st.delivered_packets;
                        st.delivered_bits += head.size_bits;
                        user_bits[s][served] += head.size_bits;
                        const double sojourn_ms = t1 - head.arrival_ms;
                        const double rate_bps =
                            static_cast<double>(head.size_bits) / (sojourn_ms / 1000.0);
                        if (sojourn_ms <= slice.spec.sla_latency_ms &&
                            rate_bps >= slice.spec.sla_rate_bps)
                            ++st.satisfied_packets;
                        user.pending.pop_front();
                    } else {
                        head.remaining_bits -= budget;
                        progressed += budget;
                        budget = 0.0;
                    }
                }
                slice.rr_cursor = (served + 1) % n_users;
            }

            if (trace_) {
                if (!trace_header_done_) {
                    *trace_ << "slot,t0_ms,slice,served_user,gain,bw_mhz,progressed_bits\n";
                    trace_header_done_ = true;
                }
                *trace_ << global_slot_ + slot << ',' << t0 << ',' << slice.spec.name << ','
                        << (served < n_users ? static_cast<long>(served) : -1L) << ','
                        << gain_of_served << ',' << bw_mhz[s] << ',' << progressed << '\n';
            }
        }
    }

    global_slot_ += slots_.slots_per_interval;
    const double interval_s = slots_.interval_ms() / 1000.0;
    for (std::size_t s = 0; s < slices_.size(); ++s) {
        SliceStats& st = stats.slices[s];
        for (const auto& user : slices_[s].users) {
            st.pending_end_packets += static_cast<std::int64_t>(user.pending.size());
            for (const auto& p : user.pending) st.pending_end_bits += p.size_bits;
        }
        st.user_rate_bps.resize(user_bits[s].size());
        for (std::size_t u = 0; u < user_bits[s].size(); ++u)
            st.user_rate_bps[u] = static_cast<double>(user_bits[s][u]) / interval_s;
    }
    return stats;
}

}  // namespace slicesim::linksim
