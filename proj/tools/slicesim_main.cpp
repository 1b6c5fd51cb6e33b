// slicesim: train and evaluate bandwidth-slicing agents, plus small
// introspection commands for the action lattice and traffic calibration.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "slicesim/action_space.hpp"
#include "slicesim/config.hpp"
#include "slicesim/errors.hpp"
#include "slicesim/rng.hpp"
#include "slicesim/runner.hpp"
#include "slicesim/traffic.hpp"

namespace {

using namespace slicesim;

// Leftover args must all be config overrides spelled --section.key=value.
std::vector<std::string> collect_overrides(const std::vector<std::string>& extras) {
    std::vector<std::string> out;
    for (const auto& arg : extras) {
        if (arg.rfind("--", 0) != 0 || arg.find('=') == std::string::npos)
            throw ConfigError("unrecognized argument '" + arg +
                              "' (overrides are spelled --section.key=value)");
        out.push_back(arg.substr(2));
    }
    return out;
}

config::RunConfig make_config(const std::string& path,
                              std::vector<std::string> overrides) {
    if (path.empty()) return config::parse_config("", overrides);
    return config::load_config_file(path, overrides);
}

void print_summary(const runner::RunSummary& rs, const std::string& label) {
    std::printf("%s seed=%llu episodes=%zu final_mean_reward=%.6f "
                "final_mean_se=%.6f final_mean_qoe=%.6f wall=%.2fs%s%s\n",
                label.c_str(), static_cast<unsigned long long>(rs.seed),
                rs.log.size(), rs.final_mean_reward, rs.final_mean_se,
                rs.final_mean_qoe, rs.wall_seconds,
                rs.out_dir.empty() ? "" : " -> ",
                rs.out_dir.c_str());
}

int cmd_train(const std::string& config_path, std::vector<std::string> overrides) {
    const auto cfg = make_config(config_path, std::move(overrides));
    const auto results = runner::run_many(cfg);
    for (const auto& rs : results) print_summary(rs, "train");
    return 0;
}

int cmd_eval(const std::string& config_path, std::vector<std::string> overrides,
             const std::string& checkpoint, long episodes,
             const std::string& out_dir, const std::string& slot_trace) {
    const auto cfg = make_config(config_path, std::move(overrides));
    const auto rs = runner::eval_checkpoint(cfg, checkpoint, episodes, out_dir,
                                            slot_trace);
    print_summary(rs, "eval");
    for (std::size_t i = 0; i < cfg.slices.size(); ++i)
        std::printf("eval qoe[%s]=%.6f\n", cfg.slices[i].name.c_str(),
                    rs.final_mean_qoe_slice[i]);
    return 0;
}

int cmd_actions(double W, double delta, int N, bool list) {
    actions::AllocationGrid grid;
    grid.total_mhz = W;
    grid.resolution_mhz = delta;
    grid.slice_count = N;
    grid.validate();
    if (!list) {
        std::printf("%llu\n",
                    static_cast<unsigned long long>(actions::action_count(grid)));
        return 0;
    }
    for (const auto& a : actions::enumerate_actions(grid)) {
        const auto mhz = a.mhz(grid);
        for (std::size_t i = 0; i < mhz.size(); ++i)
            std::printf("%s%g", i ? " " : "", mhz[i]);
        std::printf("\n");
    }
    return 0;
}

int cmd_traffic_stats(const std::string& config_path,
                      std::vector<std::string> overrides,
                      const std::string& slice_name, long n, std::uint64_t seed) {
    const auto cfg = make_config(config_path, std::move(overrides));
    const traffic::SliceSpec* spec = nullptr;
    for (const auto& s : cfg.slices)
        if (s.name == slice_name) spec = &s;
    if (!spec) throw ConfigError("traffic-stats: no slice named '" + slice_name + "'");
    if (n <= 0) throw ConfigError("traffic-stats: sample count must be positive");

    std::printf("slice,field,model,n,empirical_mean,analytic_mean\n");
    const std::pair<const char*, const traffic::Model*> fields[] = {
        {"inter_arrival_ms", &spec->inter_arrival_ms},
        {"packet_bytes", &spec->packet_bytes},
    };
    for (std::size_t f = 0; f < 2; ++f) {
        auto rng = RngStream::derive(seed, "traffic-stats", f, 0);
        double sum = 0.0;
        for (long i = 0; i < n; ++i) sum += traffic::sample(*fields[f].second, rng);
        std::printf("%s,%s,%s,%ld,%.17g,%.17g\n", slice_name.c_str(), fields[f].first,
                    config::model_to_string(*fields[f].second).c_str(), n, sum / n,
                    traffic::model_mean(*fields[f].second));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bandwidth-slicing RL testbed"};
    app.require_subcommand(1);

    std::string config_path;
    std::string agent, output;
    std::string checkpoint, slot_trace;
    std::string slice_name;
    long episodes = -1;
    long eval_episodes = 100;
    long samples = 100000;
    int runs = -1;
    std::uint64_t seed = 0;
    bool seed_set = false, count_flag = false, list_flag = false;
    double W = 10.0, delta = 0.2;
    int N = 3;

    auto* train = app.add_subcommand("train", "train an agent and log per-episode metrics");
    train->allow_extras();
    train->add_option("--config", config_path, "run configuration file");
    train->add_option("--agent", agent, "agent kind: dnaf | dqn | equal");
    train->add_option("--seed", seed, "base RNG seed")->each([&](const std::string&) {
        seed_set = true;
    });
    train->add_option("--episodes", episodes, "training episodes");
    train->add_option("--output", output, "output directory");
    train->add_option("--runs", runs, "independent seeded runs (seed, seed+1, ...)");

    auto* eval = app.add_subcommand("eval", "greedy rollout from a saved checkpoint");
    eval->allow_extras();
    eval->add_option("--checkpoint", checkpoint, "agent checkpoint file")->required();
    eval->add_option("--config", config_path, "run configuration file");
    eval->add_option("--episodes", eval_episodes, "evaluation episodes");
    eval->add_option("--output", output, "output directory (empty: no files)");
    eval->add_option("--slot-trace", slot_trace, "per-slot scheduler trace CSV");

    auto* actions = app.add_subcommand("actions", "inspect the discrete allocation lattice");
    actions->add_option("--W", W, "total bandwidth (MHz)");
    actions->add_option("--delta", delta, "allocation resolution (MHz)");
    actions->add_option("--N", N, "number of slices");
    actions->add_flag("--count", count_flag, "print the number of valid allocations");
    actions->add_flag("--list", list_flag, "print every allocation, one per line");

    auto* tstats = app.add_subcommand("traffic-stats",
                                      "empirical vs analytic traffic model means");
    tstats->allow_extras();
    tstats->add_option("--config", config_path, "run configuration file");
    tstats->add_option("--slice", slice_name, "slice name to sample")->required();
    tstats->add_option("-n,--samples", samples, "number of samples");
    tstats->add_option("--seed", seed, "RNG seed");

    try {
        app.parse(argc, argv);

        if (train->parsed()) {
            auto overrides = collect_overrides(train->remaining());
            if (!agent.empty()) overrides.push_back("run.agent=" + agent);
            if (seed_set) overrides.push_back("run.seed=" + std::to_string(seed));
            if (episodes >= 0) overrides.push_back("run.episodes=" + std::to_string(episodes));
            if (!output.empty()) overrides.push_back("run.output_dir=" + output);
            if (runs >= 0) overrides.push_back("run.runs=" + std::to_string(runs));
            return cmd_train(config_path, std::move(overrides));
        }
        if (eval->parsed())
            return cmd_eval(config_path, collect_overrides(eval->remaining()),
                            checkpoint, eval_episodes, output, slot_trace);
        if (actions->parsed()) {
            if (count_flag && list_flag)
                throw ConfigError("actions: choose one of --count or --list");
            return cmd_actions(W, delta, N, list_flag);
        }
        if (tstats->parsed())
            return cmd_traffic_stats(config_path, collect_overrides(tstats->remaining()),
                                     slice_name, samples, seed);
        return 2;  // unreachable with require_subcommand(1)
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
