#include "slicesim/runner.hpp"

#include <json.hpp>

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "slicesim/agents.hpp"
#include "slicesim/errors.hpp"

namespace slicesim::runner {

namespace {

using nlohmann::json;

env::SliceEnv build_env(const config::RunConfig& cfg, std::uint64_t seed) {
    env::EnvConfig ec;
    ec.grid = cfg.grid;
    ec.slots = cfg.slots;
    ec.channels = {cfg.channel};
    ec.weights = cfg.weights;
    ec.demand_unit = cfg.demand_unit;
    ec.normalizers = cfg.normalizers;
    return env::SliceEnv(cfg.slices, ec, seed);
}

void summarize(RunSummary& rs, const config::RunConfig& cfg) {
    const long n = static_cast<long>(rs.log.size());
    const long window = std::min<long>(kTrailingWindow, n);
    rs.final_mean_qoe_slice.assign(cfg.slices.size(), 0.0);
    if (window == 0) return;
    double reward = 0.0, se = 0.0, qoe = 0.0;
    for (long i = n - window; i < n; ++i) {
        reward += rs.log[i].reward;
        se += rs.log[i].se;
        qoe += rs.log[i].qoe_aggregate;
        for (std::size_t s = 0; s < rs.final_mean_qoe_slice.size(); ++s)
            rs.final_mean_qoe_slice[s] += rs.log[i].qoe_slice[s];
    }
    rs.final_mean_reward = reward / window;
    rs.final_mean_se = se / window;
    rs.final_mean_qoe = qoe / window;
    for (auto& q : rs.final_mean_qoe_slice) q /= window;
}

json summary_json(const RunSummary& rs, const config::RunConfig& cfg,
                  const std::string& agent_kind, long episodes) {
    json j;
    j["agent"] = agent_kind;
    j["episodes"] = episodes;
    j["seed"] = rs.seed;
    j["wall_clock_s"] = rs.wall_seconds;
    j["trailing_window"] = std::min<long>(kTrailingWindow, episodes);
    j["final_mean_reward"] = rs.final_mean_reward;
    j["final_mean_se"] = rs.final_mean_se;
    j["final_mean_qoe"] = rs.final_mean_qoe;
    j["final_mean_qoe_per_slice"] = rs.final_mean_qoe_slice;
    j["final_loss"] = rs.final_loss;
    j["config"] = json::parse(config_json(cfg));
    return j;
}

void write_summary_file(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw FileError("cannot write summary: " + path);
    f << j.dump(2) << '\n';
}

}  // namespace

RunSummary run_one(const config::RunConfig& cfg, std::uint64_t seed,
                   const std::string& out_dir) {
    cfg.validate();
    env::SliceEnv environment = build_env(cfg, seed);
    auto agent = agents::make_agent(cfg.agent_kind, cfg.grid, cfg.slices.size(),
                                    cfg.agent, seed);

    RunSummary rs;
    rs.seed = seed;
    rs.out_dir = out_dir;

    std::ofstream metrics;
    std::vector<agents::MetricsSink> sinks;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        metrics.open(out_dir + "/metrics.csv");
        if (!metrics) throw FileError("cannot write metrics: " + out_dir + "/metrics.csv");
        metrics << env::metrics_csv_header(cfg.slices) << '\n';
        sinks.push_back([&metrics](const env::EpisodeMetrics& m) {
            metrics << env::metrics_csv_row(m) << '\n';
        });
    }

    const auto t0 = std::chrono::steady_clock::now();
    rs.log = agents::run_training(environment, *agent, cfg.episodes, sinks);
    rs.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rs.final_loss = agent->last_loss();
    summarize(rs, cfg);

    if (!out_dir.empty()) {
        metrics.close();
        if (!metrics) throw FileError("failed writing metrics.csv in " + out_dir);
        agent->save(out_dir + "/checkpoint.bin");
        write_summary_file(out_dir + "/summary.json",
                           summary_json(rs, cfg, cfg.agent_kind, cfg.episodes));
    }
    return rs;
}

std::vector<RunSummary> run_many(const config::RunConfig& cfg) {
    cfg.validate();
    const int runs = cfg.runs;
    std::vector<RunSummary> results(runs);
    std::vector<std::exception_ptr> errors(runs);
    std::vector<std::thread> threads;
    threads.reserve(runs);
    for (int i = 0; i < runs; ++i) {
        threads.emplace_back([&, i] {
            try {
                const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
                const std::string dir =
                    runs == 1 ? cfg.output_dir
                              : cfg.output_dir + "/run-" + std::to_string(seed);
                results[i] = run_one(cfg, seed, dir);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

RunSummary eval_checkpoint(const config::RunConfig& cfg,
                           const std::string& checkpoint_path, long episodes,
                           const std::string& out_dir,
                           const std::string& slot_trace_path) {
    cfg.validate();
    if (episodes < 0) throw ArgumentError("eval: negative episode budget");
    const std::string kind = agents::load_agent_checkpoint(checkpoint_path).kind;
    auto agent =
        agents::make_agent(kind, cfg.grid, cfg.slices.size(), cfg.agent, cfg.seed);
    agent->load(checkpoint_path);

    env::SliceEnv environment = build_env(cfg, cfg.seed);
    std::ofstream trace;
    if (!slot_trace_path.empty()) {
        trace.open(slot_trace_path);
        if (!trace) throw FileError("cannot write slot trace: " + slot_trace_path);
        environment.set_trace(&trace);
    }

    std::ofstream metrics;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        metrics.open(out_dir + "/eval_metrics.csv");
        if (!metrics) throw FileError("cannot write eval metrics in " + out_dir);
        metrics << env::metrics_csv_header(cfg.slices) << '\n';
    }

    RunSummary rs;
    rs.seed = cfg.seed;
    rs.out_dir = out_dir;
    rs.log.reserve(static_cast<std::size_t>(episodes));
    const auto t0 = std::chrono::steady_clock::now();
    env::Observation s = environment.reset();
    for (long t = 0; t < episodes; ++t) {
        const auto a = agent->greedy(s);
        env::StepResult res = environment.step(a);
        res.metrics.exploration = 0.0;
        if (metrics.is_open()) metrics << env::metrics_csv_row(res.metrics) << '\n';
        s = std::move(res.next_observation);
        rs.log.push_back(std::move(res.metrics));
    }
    rs.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summarize(rs, cfg);

    if (!out_dir.empty()) {
        metrics.close();
        if (!metrics) throw FileError("failed writing eval_metrics.csv in " + out_dir);
        write_summary_file(out_dir + "/eval_summary.json",
                           summary_json(rs, cfg, kind, episodes));
    }
    return rs;
}

}  // namespace slicesim::runner
