#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicesim/config.hpp"
#include "slicesim/env.hpp"

namespace slicesim::runner {

/// Outcome of one training or evaluation run. Trailing means are taken over
/// the last min(window, episodes) episodes.
struct RunSummary {
    std::uint64_t seed = 0;
    std::string out_dir;  // empty when outputs were not written
    double wall_seconds = 0.0;
    double final_mean_reward = 0.0;
    double final_mean_se = 0.0;
    double final_mean_qoe = 0.0;
    std::vector<double> final_mean_qoe_slice;
    double final_loss = 0.0;  // agent's last training loss (the y-Q gap)
    std::vector<env::EpisodeMetrics> log;
};

inline constexpr long kTrailingWindow = 200;

/// Train one seeded run. When out_dir is nonempty, writes metrics.csv,
/// summary.json and checkpoint.bin there (creating directories as needed).
RunSummary run_one(const config::RunConfig& cfg, std::uint64_t seed,
                   const std::string& out_dir);

/// cfg.runs concurrent runs with seeds cfg.seed + i. A single run writes to
/// cfg.output_dir directly; multiple runs write to run-<seed> subdirectories.
std::vector<RunSummary> run_many(const config::RunConfig& cfg);

/// Zero-noise greedy rollout of a saved checkpoint (the agent kind comes
/// from the checkpoint manifest). Writes eval_metrics.csv/eval_summary.json
/// when out_dir is nonempty; slot_trace_path, when nonempty, streams the
/// per-slot scheduling trace there.
RunSummary eval_checkpoint(const config::RunConfig& cfg,
                           const std::string& checkpoint_path, long episodes,
                           const std::string& out_dir,
                           const std::string& slot_trace_path = "");

}  // namespace slicesim::runner
