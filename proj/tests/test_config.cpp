#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <variant>

#include "slicesim/config.hpp"
#include "slicesim/errors.hpp"

using namespace slicesim;
using namespace slicesim::config;

TEST_CASE("default config is the full-scale scenario") {
    const RunConfig cfg = default_config();
    cfg.validate();
    CHECK(cfg.grid.total_mhz == 10.0);
    CHECK(cfg.grid.resolution_mhz == 0.2);
    CHECK(cfg.grid.slice_count == 3);
    REQUIRE(cfg.slices.size() == 3);
    CHECK(cfg.slices[0].name == "volte");
    CHECK(cfg.slices[1].name == "video");
    CHECK(cfg.slices[2].name == "urllc");
    CHECK(cfg.slices[0].user_count == 46);
    CHECK(cfg.slices[2].user_count == 8);
    CHECK(cfg.agent_kind == "dnaf");
    CHECK(cfg.episodes == 3000);
    CHECK(cfg.agent.discount == 0.9);
    CHECK(cfg.agent.noise.initial_scale == 0.15);
    CHECK(cfg.weights.se_weight == 0.01);
    CHECK(cfg.weights.qoe_weight == 1.0);
}

TEST_CASE("model expressions parse and round trip") {
    auto c = parse_model("constant(40)");
    CHECK(std::get<traffic::Constant>(c).value == 40.0);
    auto u = parse_model(" uniform( 0 , 160 ) ");
    CHECK(std::get<traffic::Uniform>(u).lo == 0.0);
    CHECK(std::get<traffic::Uniform>(u).hi == 160.0);
    auto e = parse_model("exp(180)");
    CHECK(std::get<traffic::Exponential>(e).mean == 180.0);

    auto p = parse_model("tpareto(1.2,6,12.5)");
    const auto& tp = std::get<traffic::TruncatedPareto>(p);
    CHECK(tp.exponent == 1.2);
    CHECK(tp.cap == 12.5);
    CHECK(traffic::model_mean(p) == doctest::Approx(6.0).epsilon(1e-9));

    auto l = parse_model("tlognormal(2e6,0.722e6,5e6)");
    CHECK(std::get<traffic::TruncatedLognormal>(l).cap == 5e6);

    // exact forms round trip bit-for-bit
    for (const auto& m : {c, u, e, p, l}) {
        const std::string s = model_to_string(m);
        const auto back = parse_model(s);
        CHECK(model_to_string(back) == s);
        CHECK(back.index() == m.index());
    }
    const auto& tp2 = std::get<traffic::TruncatedPareto>(parse_model(model_to_string(p)));
    CHECK(tp2.scale == tp.scale);

    CHECK_THROWS_AS(parse_model("gamma(1,2)"), ConfigError);
    CHECK_THROWS_AS(parse_model("uniform(1)"), ConfigError);
    CHECK_THROWS_AS(parse_model("uniform"), ConfigError);
    CHECK_THROWS_AS(parse_model("constant(abc)"), ConfigError);
    CHECK_THROWS_AS(parse_model("tpareto_scale(1.2,5,3)"), ConfigError);
}

TEST_CASE("ini parsing applies sections, comments and types") {
    const std::string text = R"(# experiment
[grid]
total_mhz = 6
resolution_mhz = 1   # coarse lattice
slice_count = 2

[agent]
hidden = 16, 8
optimizer = adam
knn_k = 2

[run]
agent = dqn
episodes = 42
seed = 9

[slice.a]
users = 3
inter_arrival_ms = constant(50)
packet_bytes = constant(100)
sla_rate_bps = 1e4
sla_latency_ms = 10

[slice.b]
users = 2
inter_arrival_ms = exp(30)
packet_bytes = uniform(50,150)
sla_rate_bps = 2e4
sla_latency_ms = 5
)";
    const RunConfig cfg = parse_config(text);
    CHECK(cfg.grid.total_mhz == 6.0);
    CHECK(cfg.grid.slice_count == 2);
    CHECK(cfg.agent.hidden == std::vector<std::size_t>{16, 8});
    CHECK(cfg.agent.optimizer == "adam");
    CHECK(cfg.agent.knn_k == 2);
    CHECK(cfg.agent_kind == "dqn");
    CHECK(cfg.episodes == 42);
    CHECK(cfg.seed == 9);
    REQUIRE(cfg.slices.size() == 2);
    CHECK(cfg.slices[0].name == "a");
    CHECK(cfg.slices[0].user_count == 3);
    CHECK(cfg.slices[1].name == "b");
    CHECK(std::get<traffic::Exponential>(cfg.slices[1].inter_arrival_ms).mean == 30.0);
}

TEST_CASE("parser rejects malformed input with line numbers") {
    auto expect_line = [](const std::string& text, const std::string& needle) {
        try {
            parse_config(text);
            FAIL_CHECK("expected ConfigError for: " << needle);
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_line("[grid]\nbogus_key = 1\n", "line 2");
    expect_line("[grid]\nbogus_key = 1\n", "bogus_key");
    expect_line("[nosuch]\n", "unknown section");
    expect_line("key = 1\n", "outside any section");
    expect_line("[grid]\ntotal_mhz\n", "expected key = value");
    expect_line("[grid\n", "unterminated");
    expect_line("[grid]\ntotal_mhz = ten\n", "expected a number");
    expect_line("[env]\ndemand_unit = furlongs\n", "packets or bytes");
}

TEST_CASE("mismatched slice count fails validation") {
    const std::string text = R"(
[grid]
slice_count = 3
total_mhz = 4
resolution_mhz = 1

[slice.only]
users = 1
inter_arrival_ms = constant(50)
packet_bytes = constant(100)
sla_rate_bps = 1e4
sla_latency_ms = 10
)";
    CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("overrides apply after the file and reject unknown keys") {
    const RunConfig cfg = parse_config("", {"grid.total_mhz=4", "grid.resolution_mhz=0.5",
                                            "run.seed=77", "agent.learning_rate=0.01"});
    CHECK(cfg.grid.total_mhz == 4.0);
    CHECK(cfg.grid.resolution_mhz == 0.5);
    CHECK(cfg.seed == 77);
    CHECK(cfg.agent.learning_rate == 0.01);

    CHECK_THROWS_AS(parse_config("", {"grid.speed=4"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"nonsense"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"grid=4"}), ConfigError);
    CHECK_THROWS_AS(parse_config("", {"nosection.key=4"}), ConfigError);

    // last dot splits section and key, so slice names may contain dots
    const RunConfig cfg2 = parse_config("", {"slice.volte.users=10", "slice.video.users=10",
                                             "slice.urllc.users=2"});
    CHECK(cfg2.slices.size() == 3);
    CHECK(cfg2.slices[0].user_count == 10);
    CHECK(cfg2.slices[2].user_count == 2);
}

TEST_CASE("empty input yields the validated defaults") {
    const RunConfig cfg = parse_config("");
    CHECK(cfg.grid.total_mhz == 10.0);
    CHECK(cfg.slices.size() == 3);
}

TEST_CASE("config json echoes every resolved setting") {
    RunConfig cfg = default_config();
    cfg.seed = 123;
    cfg.agent.optimizer = "adam";
    const std::string s = config_json(cfg);
    CHECK(s.find("\"total_mhz\": 10.0") != std::string::npos);
    CHECK(s.find("\"seed\": 123") != std::string::npos);
    CHECK(s.find("\"optimizer\": \"adam\"") != std::string::npos);
    CHECK(s.find("volte") != std::string::npos);
    CHECK(s.find("tpareto_scale(") != std::string::npos);
    CHECK(s.find("tlognormal_params(") != std::string::npos);
    // stable across calls
    CHECK(config_json(cfg) == s);

    // the echoed model expressions reparse to the identical models
    for (const auto& slice : cfg.slices) {
        const auto ia = parse_model(model_to_string(slice.inter_arrival_ms));
        CHECK(model_to_string(ia) == model_to_string(slice.inter_arrival_ms));
        const auto pb = parse_model(model_to_string(slice.packet_bytes));
        CHECK(model_to_string(pb) == model_to_string(slice.packet_bytes));
    }
}

TEST_CASE("load_config_file reads from disk and reports missing files") {
    const std::string path = "config_tmp_test.cfg";
    {
        std::ofstream f(path);
        f << "[run]\nseed = 31\n";
    }
    const RunConfig cfg = load_config_file(path, {"run.episodes=5"});
    CHECK(cfg.seed == 31);
    CHECK(cfg.episodes == 5);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_config_file("no_such_file.cfg"), FileError);
}
