#include "slicesim/config.hpp"

#include <json.hpp>

#include <cctype>
#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slicesim/errors.hpp"

namespace slicesim::config {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& v, const std::string& where) {
    try {
        std::size_t idx = 0;
        const double x = std::stod(v, &idx);
        if (idx != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + v + "'");
    }
}

long to_long(const std::string& v, const std::string& where) {
    try {
        std::size_t idx = 0;
        const long x = std::stol(v, &idx);
        if (idx != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected an integer, got '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& where) {
    const long x = to_long(v, where);
    if (x < INT_MIN || x > INT_MAX)
        throw ConfigError(where + ": integer out of range: '" + v + "'");
    return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v, const std::string& where) {
    try {
        std::size_t idx = 0;
        const unsigned long long x = std::stoull(v, &idx);
        if (idx != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected an unsigned integer, got '" + v + "'");
    }
}

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool known_section(const std::string& s) {
    return s == "grid" || s == "reward" || s == "channel" || s == "sim" ||
           s == "env" || s == "agent" || s == "run" ||
           (s.rfind("slice.", 0) == 0 && s.size() > 6);
}

struct ParseState {
    RunConfig cfg = default_config();
    bool slices_from_input = false;

    traffic::SliceSpec& slice(const std::string& name) {
        if (!slices_from_input) {
            cfg.slices.clear();  // input scenario replaces the default one
            slices_from_input = true;
        }
        for (auto& s : cfg.slices)
            if (s.name == name) return s;
        traffic::SliceSpec spec;
        spec.name = name;
        cfg.slices.push_back(std::move(spec));
        return cfg.slices.back();
    }

    void apply(const std::string& section, const std::string& key,
               const std::string& value, const std::string& where);
};

void ParseState::apply(const std::string& section, const std::string& key,
                       const std::string& value, const std::string& where) {
    auto unknown = [&]() -> ConfigError {
        return ConfigError(where + ": unknown key '" + key + "' in [" + section + "]");
    };

    if (section == "grid") {
        if (key == "total_mhz") cfg.grid.total_mhz = to_double(value, where);
        else if (key == "resolution_mhz") cfg.grid.resolution_mhz = to_double(value, where);
        else if (key == "slice_count") cfg.grid.slice_count = to_int(value, where);
        else throw unknown();
    } else if (section == "reward") {
        if (key == "se_weight") cfg.weights.se_weight = to_double(value, where);
        else if (key == "qoe_weight") cfg.weights.qoe_weight = to_double(value, where);
        else throw unknown();
    } else if (section == "channel") {
        if (key == "mean_snr_db") cfg.channel.mean_snr_db = to_double(value, where);
        else if (key == "fixed_gain") {
            if (value == "none") cfg.channel.fixed_gain.reset();
            else cfg.channel.fixed_gain = to_double(value, where);
        } else throw unknown();
    } else if (section == "sim") {
        if (key == "slot_ms") cfg.slots.slot_ms = to_double(value, where);
        else if (key == "slots_per_interval") cfg.slots.slots_per_interval = to_int(value, where);
        else throw unknown();
    } else if (section == "env") {
        if (key == "demand_unit") {
            if (value == "packets") cfg.demand_unit = env::DemandUnit::packets;
            else if (value == "bytes") cfg.demand_unit = env::DemandUnit::bytes;
            else throw ConfigError(where + ": demand_unit must be packets or bytes");
        } else if (key == "normalizers") {
            cfg.normalizers.clear();
            for (const auto& part : split(value, ','))
                cfg.normalizers.push_back(to_double(part, where));
        } else throw unknown();
    } else if (section == "agent") {
        auto& a = cfg.agent;
        if (key == "discount") a.discount = to_double(value, where);
        else if (key == "learning_rate") a.learning_rate = to_double(value, where);
        else if (key == "optimizer") a.optimizer = value;
        else if (key == "hidden") {
            a.hidden.clear();
            for (const auto& part : split(value, ',')) {
                const long h = to_long(part, where);
                if (h < 1) throw ConfigError(where + ": hidden sizes must be positive");
                a.hidden.push_back(static_cast<std::size_t>(h));
            }
        } else if (key == "target_sync_period") a.target_sync_period = to_long(value, where);
        else if (key == "minibatch_size") a.minibatch_size = static_cast<std::size_t>(to_long(value, where));
        else if (key == "buffer_capacity") a.buffer_capacity = static_cast<std::size_t>(to_long(value, where));
        else if (key == "knn_k") a.knn_k = to_int(value, where);
        else if (key == "noise_distribution") {
            if (value == "normal") a.noise.distribution = agents::NoiseSchedule::Kind::normal;
            else if (value == "uniform") a.noise.distribution = agents::NoiseSchedule::Kind::uniform;
            else throw ConfigError(where + ": noise_distribution must be normal or uniform");
        } else if (key == "noise_initial_scale") a.noise.initial_scale = to_double(value, where);
        else if (key == "noise_decay_horizon") a.noise.decay_horizon = to_long(value, where);
        else if (key == "epsilon_initial") a.epsilon_initial = to_double(value, where);
        else if (key == "epsilon_horizon") a.epsilon_horizon = to_long(value, where);
        else throw unknown();
    } else if (section == "run") {
        if (key == "agent") cfg.agent_kind = value;
        else if (key == "episodes") cfg.episodes = to_long(value, where);
        else if (key == "seed") cfg.seed = to_u64(value, where);
        else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "runs") cfg.runs = to_int(value, where);
        else throw unknown();
    } else if (section.rfind("slice.", 0) == 0) {
        auto& s = slice(section.substr(6));
        if (key == "users") s.user_count = to_int(value, where);
        else if (key == "inter_arrival_ms") {
            try {
                s.inter_arrival_ms = parse_model(value);
            } catch (const ConfigError& e) {
                throw ConfigError(where + ": " + e.what());
            }
        } else if (key == "packet_bytes") {
            try {
                s.packet_bytes = parse_model(value);
            } catch (const ConfigError& e) {
                throw ConfigError(where + ": " + e.what());
            }
        } else if (key == "sla_rate_bps") s.sla_rate_bps = to_double(value, where);
        else if (key == "sla_latency_ms") s.sla_latency_ms = to_double(value, where);
        else throw unknown();
    } else {
        throw ConfigError(where + ": unknown section [" + section + "]");
    }
}

}  // namespace

RunConfig default_config() {
    RunConfig cfg;
    cfg.grid = actions::AllocationGrid{10.0, 0.2, 3};
    cfg.slices = traffic::default_scenario();
    return cfg;
}

void RunConfig::validate() const {
    grid.validate();
    weights.validate();
    channel.validate();
    slots.validate();
    agent.validate();
    if (slices.empty()) throw ConfigError("config: no slices defined");
    for (const auto& s : slices) s.validate();
    for (std::size_t i = 0; i < slices.size(); ++i)
        for (std::size_t j = i + 1; j < slices.size(); ++j)
            if (slices[i].name == slices[j].name)
                throw ConfigError("config: duplicate slice name '" + slices[i].name + "'");
    if (static_cast<std::size_t>(grid.slice_count) != slices.size())
        throw ConfigError("config: grid slice_count (" + std::to_string(grid.slice_count) +
                          ") does not match the number of slices (" +
                          std::to_string(slices.size()) + ")");
    if (!normalizers.empty() && normalizers.size() != slices.size())
        throw ConfigError("config: normalizers must list one value per slice");
    for (double n : normalizers)
        if (!(n > 0.0)) throw ConfigError("config: normalizers must be positive");
    if (agent_kind != "dnaf" && agent_kind != "dqn" && agent_kind != "equal")
        throw ConfigError("config: run agent must be dnaf, dqn or equal, got '" +
                          agent_kind + "'");
    if (episodes < 0) throw ConfigError("config: episodes must be non-negative");
    if (runs < 1) throw ConfigError("config: runs must be positive");
    if (output_dir.empty()) throw ConfigError("config: output_dir must be non-empty");
}

traffic::Model parse_model(const std::string& expr) {
    const std::string s = trim(expr);
    const std::size_t open = s.find('(');
    if (open == std::string::npos || s.back() != ')')
        throw ConfigError("bad model expression '" + s +
                          "' (expected name(arg, ...))");
    const std::string name = trim(s.substr(0, open));
    const std::string inner = s.substr(open + 1, s.size() - open - 2);
    std::vector<double> args;
    if (!trim(inner).empty())
        for (const auto& part : split(inner, ','))
            args.push_back(to_double(part, "model '" + name + "'"));

    auto need = [&](std::size_t n) {
        if (args.size() != n)
            throw ConfigError("model '" + name + "' takes " + std::to_string(n) +
                              " arguments, got " + std::to_string(args.size()));
    };
    if (name == "constant") {
        need(1);
        return traffic::Constant{args[0]};
    }
    if (name == "uniform") {
        need(2);
        return traffic::Uniform{args[0], args[1]};
    }
    if (name == "exp") {
        need(1);
        return traffic::Exponential{args[0]};
    }
    if (name == "tpareto") {
        need(3);
        return traffic::make_truncated_pareto(args[0], args[1], args[2]);
    }
    if (name == "tlognormal") {
        need(3);
        return traffic::make_truncated_lognormal(args[0], args[1], args[2]);
    }
    if (name == "tpareto_scale") {
        need(3);
        if (!(args[0] > 1.0) || !(args[1] > 0.0) || !(args[2] > args[1]))
            throw ConfigError("tpareto_scale needs exponent > 1 and 0 < scale < cap");
        return traffic::TruncatedPareto{args[0], args[1], args[2]};
    }
    if (name == "tlognormal_params") {
        need(3);
        if (!(args[1] > 0.0) || !(args[2] > 0.0))
            throw ConfigError("tlognormal_params needs sigma > 0 and cap > 0");
        return traffic::TruncatedLognormal{args[0], args[1], args[2]};
    }
    throw ConfigError("unknown model '" + name +
                      "' (expected constant, uniform, exp, tpareto, tlognormal, "
                      "tpareto_scale or tlognormal_params)");
}

std::string model_to_string(const traffic::Model& m) {
    struct Visitor {
        std::string operator()(const traffic::Constant& c) const {
            return "constant(" + g17(c.value) + ")";
        }
        std::string operator()(const traffic::Uniform& u) const {
            return "uniform(" + g17(u.lo) + "," + g17(u.hi) + ")";
        }
        std::string operator()(const traffic::Exponential& e) const {
            return "exp(" + g17(e.mean) + ")";
        }
        std::string operator()(const traffic::TruncatedPareto& p) const {
            return "tpareto_scale(" + g17(p.exponent) + "," + g17(p.scale) + "," +
                   g17(p.cap) + ")";
        }
        std::string operator()(const traffic::TruncatedLognormal& l) const {
            return "tlognormal_params(" + g17(l.mu) + "," + g17(l.sigma) + "," +
                   g17(l.cap) + ")";
        }
    };
    return std::visit(Visitor{}, m);
}

RunConfig parse_config(const std::string& text,
                       const std::vector<std::string>& overrides) {
    ParseState state;
    std::istringstream lines(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(lines, raw)) {
        ++line_no;
        const std::string where = "line " + std::to_string(line_no);
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section))
                throw ConfigError(where + ": unknown section [" + section + "]");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (section.empty())
            throw ConfigError(where + ": key '" + key + "' outside any section");
        state.apply(section, key, value, where);
    }

    for (const auto& ov : overrides) {
        const std::string where = "override '" + ov + "'";
        const std::size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected section.key=value");
        const std::string lhs = trim(ov.substr(0, eq));
        const std::string value = trim(ov.substr(eq + 1));
        const std::size_t dot = lhs.rfind('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size())
            throw ConfigError(where + ": expected section.key=value");
        const std::string sec = lhs.substr(0, dot);
        const std::string key = lhs.substr(dot + 1);
        if (!known_section(sec))
            throw ConfigError(where + ": unknown section [" + sec + "]");
        state.apply(sec, key, value, where);
    }

    state.cfg.validate();
    return state.cfg;
}

RunConfig load_config_file(const std::string& path,
                           const std::vector<std::string>& overrides) {
    std::ifstream f(path);
    if (!f) throw FileError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str(), overrides);
}

std::string config_json(const RunConfig& cfg) {
    json j;
    j["grid"] = {{"total_mhz", cfg.grid.total_mhz},
                 {"resolution_mhz", cfg.grid.resolution_mhz},
                 {"slice_count", cfg.grid.slice_count}};
    j["reward"] = {{"se_weight", cfg.weights.se_weight},
                   {"qoe_weight", cfg.weights.qoe_weight}};
    j["channel"] = {{"mean_snr_db", cfg.channel.mean_snr_db},
                    {"fixed_gain", cfg.channel.fixed_gain
                                       ? json(*cfg.channel.fixed_gain)
                                       : json(nullptr)}};
    j["sim"] = {{"slot_ms", cfg.slots.slot_ms},
                {"slots_per_interval", cfg.slots.slots_per_interval}};
    j["env"] = {{"demand_unit",
                 cfg.demand_unit == env::DemandUnit::packets ? "packets" : "bytes"},
                {"normalizers", cfg.normalizers}};
    j["agent"] = {
        {"discount", cfg.agent.discount},
        {"learning_rate", cfg.agent.learning_rate},
        {"optimizer", cfg.agent.optimizer},
        {"hidden", cfg.agent.hidden},
        {"target_sync_period", cfg.agent.target_sync_period},
        {"minibatch_size", cfg.agent.minibatch_size},
        {"buffer_capacity", cfg.agent.buffer_capacity},
        {"knn_k", cfg.agent.knn_k},
        {"noise_distribution",
         cfg.agent.noise.distribution == agents::NoiseSchedule::Kind::normal ? "normal"
                                                                             : "uniform"},
        {"noise_initial_scale", cfg.agent.noise.initial_scale},
        {"noise_decay_horizon", cfg.agent.noise.decay_horizon},
        {"epsilon_initial", cfg.agent.epsilon_initial},
        {"epsilon_horizon", cfg.agent.epsilon_horizon}};
    j["run"] = {{"agent", cfg.agent_kind},
                {"episodes", cfg.episodes},
                {"seed", cfg.seed},
                {"output_dir", cfg.output_dir},
                {"runs", cfg.runs}};
    json slices = json::array();
    for (const auto& s : cfg.slices) {
        slices.push_back({{"name", s.name},
                          {"users", s.user_count},
                          {"inter_arrival_ms", model_to_string(s.inter_arrival_ms)},
                          {"packet_bytes", model_to_string(s.packet_bytes)},
                          {"sla_rate_bps", s.sla_rate_bps},
                          {"sla_latency_ms", s.sla_latency_ms}});
    }
    j["slices"] = std::move(slices);
    return j.dump(2);
}

}  // namespace slicesim::config
