#include <doctest.h>

#include <cmath>
#include <vector>

#include "slicesim/env.hpp"
#include "slicesim/errors.hpp"

using namespace slicesim;
using namespace slicesim::env;
using slicesim::actions::Allocation;
using slicesim::actions::AllocationGrid;
using slicesim::traffic::Constant;
using slicesim::traffic::SliceSpec;

namespace {

AllocationGrid grid_of(double w, double delta, int n) {
    AllocationGrid g;
    g.total_mhz = w;
    g.resolution_mhz = delta;
    g.slice_count = n;
    return g;
}

SliceSpec simple_spec(const char* name, int users, double ia_ms, double bytes,
                      double sla_rate = 51e3, double sla_latency = 10.0) {
    SliceSpec s;
    s.name = name;
    s.user_count = users;
    s.inter_arrival_ms = Constant{ia_ms};
    s.packet_bytes = Constant{bytes};
    s.sla_rate_bps = sla_rate;
    s.sla_latency_ms = sla_latency;
    return s;
}

EnvConfig config_for(const AllocationGrid& grid) {
    EnvConfig cfg;
    cfg.grid = grid;
    return cfg;
}

}  // namespace

TEST_CASE("reward weights validate and combine") {
    RewardWeights w;
    CHECK_NOTHROW(w.validate());
    const RewardWeights fig4{0.01, 1.0};
    CHECK(fig4.reward(2.0, 0.5) == doctest::Approx(0.52));
    const RewardWeights negative{-0.1, 1.0};
    CHECK_THROWS_AS(negative.validate(), ConfigError);
    const RewardWeights zero{0.0, 0.0};
    CHECK_THROWS_AS(zero.validate(), ConfigError);
}

TEST_CASE("compute_se arithmetic") {
    linksim::IntervalStats stats;
    stats.slices.resize(2);
    CHECK(compute_se(stats, 10e6, 1.0) == 0.0);
    stats.slices[0].delivered_bits = 6'000'000;
    stats.slices[1].delivered_bits = 4'000'000;
    CHECK(compute_se(stats, 10e6, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("compute_qoe ratios, idle slices, aggregate weighting") {
    linksim::IntervalStats stats;
    stats.slices.resize(3);
    auto qoe = compute_qoe(stats);
    CHECK(qoe.per_slice == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(qoe.aggregate == 1.0);

    stats.slices[0].arrived_packets = 4;
    stats.slices[0].satisfied_packets = 3;
    qoe = compute_qoe(stats);
    CHECK(qoe.per_slice[0] == doctest::Approx(0.75));
    CHECK(qoe.per_slice[1] == 1.0);
    CHECK(qoe.aggregate == doctest::Approx(0.75));

    // Arrival weighting: 3/4 and 0/12 -> 3/16, not the mean of the ratios.
    stats.slices[1].arrived_packets = 12;
    qoe = compute_qoe(stats);
    CHECK(qoe.aggregate == doctest::Approx(3.0 / 16.0));
}

TEST_CASE("zero-traffic environment: SE 0, QoE 1, reward beta") {
    auto grid = grid_of(10.0, 0.2, 2);
    auto idle1 = simple_spec("a", 1, 1e9, 40.0);
    auto idle2 = simple_spec("b", 1, 1e9, 40.0);
    EnvConfig cfg = config_for(grid);
    cfg.normalizers = {1.0, 1.0};  // analytic mean of a silent slice is huge
    SliceEnv env({idle1, idle2}, cfg, 5);
    auto obs = env.reset();
    CHECK(obs == Observation{0.0, 0.0});
    auto res = env.step(Allocation{{25, 25}});
    CHECK(res.metrics.se == 0.0);
    CHECK(res.metrics.qoe_aggregate == 1.0);
    CHECK(res.reward == doctest::Approx(cfg.weights.qoe_weight));
    CHECK(res.next_observation == Observation{0.0, 0.0});
}

TEST_CASE("single-packet hand trace through the env") {
    auto grid = grid_of(10.0, 0.2, 1);
    auto spec = simple_spec("one", 1, 600.0, 40.0);
    EnvConfig cfg = config_for(grid);
    cfg.channels[0].mean_snr_db = 0.0;
    cfg.channels[0].fixed_gain = 1.0;
    cfg.normalizers = {1.0};
    SliceEnv env({spec}, cfg, 5);
    auto obs = env.reset();  // warm-up interval sees the packet at 600 ms
    CHECK(obs == Observation{1.0});
    // Next interval has arrivals at 1200 and 1800.
    auto res = env.step(Allocation{{50}});
    CHECK(res.metrics.se == doctest::Approx(2 * 320.0 / 10e6));
    CHECK(res.metrics.qoe_aggregate == 1.0);
    CHECK(res.reward ==
          doctest::Approx(cfg.weights.se_weight * res.metrics.se + cfg.weights.qoe_weight));
    CHECK(res.metrics.w_mhz.size() == 1);
    CHECK(res.metrics.stats.slices[0].delivered_packets == 2);
}

TEST_CASE("reward is recomputable from metrics") {
    auto grid = grid_of(10.0, 0.2, 3);
    auto scenario = traffic::default_scenario();
    EnvConfig cfg = config_for(grid);
    cfg.weights = RewardWeights{0.1, 1.0};
    SliceEnv env(scenario, cfg, 11);
    env.reset();
    auto res = env.step(env.equal_allocation());
    CHECK(res.metrics.reward ==
          cfg.weights.se_weight * res.metrics.se +
              cfg.weights.qoe_weight * res.metrics.qoe_aggregate);
    CHECK(res.metrics.qoe_aggregate >= 0.0);
    CHECK(res.metrics.qoe_aggregate <= 1.0);
    CHECK(res.metrics.se >= 0.0);
}

TEST_CASE("default normalizers come from the analytic demand means") {
    auto grid = grid_of(10.0, 0.2, 3);
    auto scenario = traffic::default_scenario();
    SliceEnv env(scenario, config_for(grid), 1);
    const auto& n = env.normalizers();
    REQUIRE(n.size() == 3);
    CHECK(n[0] == doctest::Approx(46.0 * 1000.0 / 80.0));    // 575
    CHECK(n[1] == doctest::Approx(46.0 * 1000.0 / 6.0));     // ~7667
    CHECK(n[2] == doctest::Approx(8.0 * 1000.0 / 180.0));    // ~44.4
    CHECK(env.equal_allocation().units == std::vector<int>{16, 17, 17});
}

TEST_CASE("observations track arrivals of the interval just simulated") {
    auto grid = grid_of(10.0, 0.2, 1);
    auto spec = simple_spec("t", 1, 100.0, 40.0);
    EnvConfig cfg = config_for(grid);
    SliceEnv env({spec}, cfg, 1);
    auto obs = env.reset();
    // Constant 100 ms inter-arrival, first arrival one draw past t=0: the
    // warm-up interval sees 100..900 (9 packets) against the expected 10.
    CHECK(obs == Observation{0.9});
    auto res = env.step(Allocation{{50}});
    CHECK(res.next_observation == Observation{1.0});  // 1000..1900
    CHECK(res.metrics.stats.slices[0].arrived_packets == 10);
}

TEST_CASE("environment is deterministic across resets and instances") {
    auto grid = grid_of(10.0, 0.2, 3);
    auto scenario = traffic::default_scenario();
    SliceEnv env1(scenario, config_for(grid), 77);
    SliceEnv env2(scenario, config_for(grid), 77);
    auto o1 = env1.reset();
    auto o2 = env2.reset();
    REQUIRE(o1 == o2);
    Allocation a{{10, 30, 10}};
    auto r1 = env1.step(a);
    auto r2 = env2.step(a);
    CHECK(r1.reward == r2.reward);
    CHECK(r1.next_observation == r2.next_observation);
    // reset replays the exact same trajectory
    auto o1b = env1.reset();
    CHECK(o1b == o1);
    auto r1b = env1.step(a);
    CHECK(r1b.reward == r1.reward);
}

TEST_CASE("env argument errors") {
    auto grid = grid_of(10.0, 0.2, 3);
    auto scenario = traffic::default_scenario();
    SliceEnv env(scenario, config_for(grid), 1);
    CHECK_THROWS_AS(env.step(Allocation{{16, 17, 17}}), ArgumentError);  // before reset
    env.reset();
    CHECK_THROWS_AS(env.step(Allocation{{10, 10, 10}}), InvalidActionError);

    EnvConfig bad = config_for(grid);
    bad.normalizers = {1.0};  // wrong length
    CHECK_THROWS_AS(SliceEnv(scenario, bad, 1), ConfigError);
    EnvConfig bad2 = config_for(grid_of(10.0, 0.2, 2));
    CHECK_THROWS_AS(SliceEnv(scenario, bad2, 1), ConfigError);
}

TEST_CASE("csv schema and formatting") {
    auto scenario = traffic::default_scenario();
    CHECK(metrics_csv_header(scenario) ==
          "episode,reward,se,qoe_aggregate,qoe_volte,qoe_video,qoe_urllc,"
          "w_volte,w_video,w_urllc,exploration");
    EpisodeMetrics m;
    m.episode = 3;
    m.reward = 1.0 / 3.0;
    m.se = 0.5;
    m.qoe_aggregate = 1.0;
    m.qoe_slice = {1.0, 0.25, 0.0};
    m.w_mhz = {3.2, 3.4, 3.4};
    m.exploration = 0.15;
    const std::string row = metrics_csv_row(m);
    CHECK(row.substr(0, 2) == "3,");
    CHECK(row.find("0.33333333333333331") != std::string::npos);  // %.17g
    CHECK(row.find(",0.14999999999999999") != std::string::npos);
    // Same metrics, same bytes.
    CHECK(metrics_csv_row(m) == row);
}
