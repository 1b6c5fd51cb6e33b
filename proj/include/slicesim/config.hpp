#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicesim/action_space.hpp"
#include "slicesim/agents.hpp"
#include "slicesim/env.hpp"
#include "slicesim/link_sim.hpp"
#include "slicesim/traffic.hpp"

namespace slicesim::config {

/// Everything a run needs, resolved from defaults + config file + overrides.
/// Sections and keys are described in the README; unknown keys are hard
/// errors so hyperparameter typos cannot pass silently.
struct RunConfig {
    actions::AllocationGrid grid;                       // [grid]
    std::vector<traffic::SliceSpec> slices;             // [slice.<name>] sections
    env::RewardWeights weights;                         // [reward]
    linksim::ChannelModel channel;                      // [channel]
    linksim::SlotConfig slots;                          // [sim]
    env::DemandUnit demand_unit = env::DemandUnit::packets;  // [env]
    std::vector<double> normalizers;                    // [env] optional
    agents::AgentConfig agent;                          // [agent]
    std::string agent_kind = "dnaf";                    // [run]
    long episodes = 3000;                               // [run]
    std::uint64_t seed = 1;                             // [run]
    std::string output_dir = "runs/out";                // [run]
    int runs = 1;                                       // [run]

    void validate() const;  // throws ConfigError
};

/// full-scale scenario with the documented defaults for everything else.
RunConfig default_config();

/// Parse a model expression:
///   constant(v) | uniform(lo,hi) | exp(mean) | tpareto(exponent,mean,cap)
///   | tlognormal(mean,stddev,cap)
/// plus the exact parameterizations the JSON echo emits:
///   tpareto_scale(exponent,scale,cap) | tlognormal_params(mu,sigma,cap)
traffic::Model parse_model(const std::string& expr);

/// Canonical expression for a model; truncated distributions use the exact
/// forms so a reparse reproduces the model bit-for-bit.
std::string model_to_string(const traffic::Model& m);

/// Parse INI-style text ([section] headers, key = value lines, # comments).
/// overrides are "section.key=value" records applied after the file.
RunConfig parse_config(const std::string& text,
                       const std::vector<std::string>& overrides = {});

RunConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides = {});

/// JSON object echoing every resolved setting; reparsing the equivalent
/// config reproduces the run.
std::string config_json(const RunConfig& cfg);

}  // namespace slicesim::config
