#include "slicesim/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "slicesim/errors.hpp"
#include "slicesim/kernels.hpp"

namespace slicesim::agents {

namespace {

// Packed lower-triangle index for row-major (0,0),(1,0),(1,1),(2,0),...
inline std::size_t tri(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

void add_into(neural::DenseNetwork::Gradients& master,
              const neural::DenseNetwork::Gradients& part) {
    for (std::size_t l = 0; l < master.dw.size(); ++l) {
        kernels::axpy(1.0, part.dw[l].data(), master.dw[l].data(), master.dw[l].size());
        kernels::axpy(1.0, part.db[l].data(), master.db[l].data(), master.db[l].size());
    }
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
    char b[4];
    if (!in.read(b, 4)) throw FormatError("agent checkpoint: truncated field");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

std::string dims_string(const neural::DenseNetwork& net) {
    std::string s;
    auto d = net.dims();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(d[i]);
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    storage_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(std::move(t));
    } else {
        storage_[head_] = std::move(t);
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= storage_.size()) throw ArgumentError("replay buffer index out of range");
    if (storage_.size() < capacity_) return storage_[i];
    return storage_[(head_ + i) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(RngStream& rng,
                                                    std::size_t batch) const {
    if (storage_.empty()) throw ArgumentError("cannot sample from an empty replay buffer");
    std::vector<const Transition*> out(batch);
    for (std::size_t i = 0; i < batch; ++i)
        out[i] = &storage_[rng.below(storage_.size())];
    return out;
}

// ---------------------------------------------------------------------------
// Schedules and config

double NoiseSchedule::scale_at(long t) const {
    if (t <= 0) return initial_scale;
    const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(decay_horizon);
    return initial_scale * std::max(0.0, frac);
}

double NoiseSchedule::draw(RngStream& rng, long t) const {
    const double scale = scale_at(t);
    if (distribution == Kind::uniform)
        return rng.uniform(-std::sqrt(3.0), std::sqrt(3.0)) * scale;
    return rng.normal() * scale;
}

void NoiseSchedule::validate() const {
    if (!(initial_scale >= 0.0) || !std::isfinite(initial_scale))
        throw ConfigError("noise: initial scale must be non-negative");
    if (decay_horizon < 1) throw ConfigError("noise: decay horizon must be positive");
}

void AgentConfig::validate() const {
    if (!(discount >= 0.0 && discount < 1.0))
        throw ConfigError("agent: discount must lie in [0, 1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("agent: learning rate must be non-negative");
    if (optimizer != "sgd" && optimizer != "adam")
        throw ConfigError("agent: optimizer must be sgd or adam, got '" + optimizer + "'");
    if (hidden.empty()) throw ConfigError("agent: hidden layer list must be non-empty");
    for (std::size_t h : hidden)
        if (h == 0) throw ConfigError("agent: hidden layer sizes must be positive");
    if (target_sync_period < 1) throw ConfigError("agent: target sync period must be positive");
    if (minibatch_size == 0) throw ConfigError("agent: minibatch size must be positive");
    if (buffer_capacity < minibatch_size)
        throw ConfigError("agent: buffer capacity must be at least the minibatch size");
    if (knn_k < 1) throw ConfigError("agent: knn_k must be positive");
    noise.validate();
    if (!(epsilon_initial >= 0.0 && epsilon_initial <= 1.0))
        throw ConfigError("agent: epsilon_initial must lie in [0, 1]");
    if (epsilon_horizon < 1) throw ConfigError("agent: epsilon horizon must be positive");
}

// ---------------------------------------------------------------------------
// NAF heads

NafHeads NafHeads::create(std::size_t obs_dim, std::size_t action_dim,
                          const std::vector<std::size_t>& hidden, RngStream& rng) {
    if (obs_dim == 0 || action_dim == 0)
        throw ConfigError("NAF heads need positive observation and action dims");
    if (hidden.empty()) throw ConfigError("NAF heads need at least one hidden layer");
    std::vector<std::size_t> trunk_dims;
    trunk_dims.reserve(hidden.size() + 1);
    trunk_dims.push_back(obs_dim);
    trunk_dims.insert(trunk_dims.end(), hidden.begin(), hidden.end());
    const std::size_t feat = hidden.back();
    const std::size_t tri_count = action_dim * (action_dim + 1) / 2;

    NafHeads h;
    h.trunk = neural::DenseNetwork(trunk_dims, rng);
    h.value_head = neural::DenseNetwork({feat, 1}, rng);
    h.policy_head = neural::DenseNetwork({feat, action_dim}, rng);
    h.factor_head = neural::DenseNetwork({feat, tri_count}, rng);
    return h;
}

namespace {

void finish_eval(const NafHeads& heads, NafEval& ev) {
    const std::size_t n = heads.action_dim();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t d = tri(i, i);
        ev.lambda[d] = std::exp(ev.lambda[d]);
    }
}

}  // namespace

NafEval naf_eval(const NafHeads& heads, std::span<const double> s) {
    NafEval ev;
    ev.feat_pre = heads.trunk.forward(s);
    ev.feat.resize(ev.feat_pre.size());
    kernels::relu(ev.feat_pre.data(), ev.feat.data(), ev.feat.size());
    ev.value = heads.value_head.forward(ev.feat)[0];
    ev.mu = heads.policy_head.forward(ev.feat);
    ev.lambda = heads.factor_head.forward(ev.feat);
    finish_eval(heads, ev);
    return ev;
}

NafEval naf_eval(const NafHeads& heads, std::span<const double> s, NafTraces& traces) {
    NafEval ev;
    ev.feat_pre = heads.trunk.forward(s, traces.trunk);
    ev.feat.resize(ev.feat_pre.size());
    kernels::relu(ev.feat_pre.data(), ev.feat.data(), ev.feat.size());
    ev.value = heads.value_head.forward(ev.feat, traces.value)[0];
    ev.mu = heads.policy_head.forward(ev.feat, traces.policy);
    ev.lambda = heads.factor_head.forward(ev.feat, traces.factor);
    finish_eval(heads, ev);
    return ev;
}

double advantage_at(const NafEval& eval, std::span<const double> a) {
    const std::size_t n = eval.mu.size();
    if (a.size() != n) throw ShapeError("advantage: action dimension mismatch");
    // u = Lambda' (a - mu); A = -1/2 |u|^2
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double u = 0.0;
        for (std::size_t i = j; i < n; ++i)
            u += eval.lambda[tri(i, j)] * (a[i] - eval.mu[i]);
        acc += u * u;
    }
    return -0.5 * acc;
}

double advantage(const NafHeads& heads, std::span<const double> s,
                 std::span<const double> a) {
    return advantage_at(naf_eval(heads, s), a);
}

double q_value(const NafHeads& heads, std::span<const double> s,
               std::span<const double> a) {
    const NafEval ev = naf_eval(heads, s);
    return ev.value + advantage_at(ev, a);
}

// ---------------------------------------------------------------------------
// Action selection

Allocation select_among(const NafEval& eval, const actions::ActionSet& aset,
                        std::span<const double> proto_norm, int k) {
    const auto& grid = aset.grid();
    std::vector<double> proto_mhz(proto_norm.size());
    for (std::size_t i = 0; i < proto_norm.size(); ++i)
        proto_mhz[i] = proto_norm[i] * grid.total_mhz;
    const auto cands = aset.project_indices(proto_mhz, k);
    std::size_t best = cands[0];
    if (cands.size() > 1) {
        double best_a = advantage_at(eval, aset.at(cands[0]).normalized(grid));
        for (std::size_t c = 1; c < cands.size(); ++c) {
            const double a = advantage_at(eval, aset.at(cands[c]).normalized(grid));
            if (a > best_a) {
                best_a = a;
                best = cands[c];
            }
        }
    }
    return aset.at(best);
}

ActResult act(const NafHeads& heads, const actions::ActionSet& aset,
              std::span<const double> s, long t, const NoiseSchedule& schedule,
              RngStream& rng) {
    const NafEval ev = naf_eval(heads, s);
    ActResult r;
    r.proto.resize(ev.mu.size());
    for (std::size_t i = 0; i < ev.mu.size(); ++i)
        r.proto[i] = ev.mu[i] + schedule.draw(rng, t);
    r.chosen = select_among(ev, aset, r.proto, 1);
    return r;
}

Allocation act_wolpertinger(const NafHeads& heads, const actions::ActionSet& aset,
                            std::span<const double> s, int k) {
    const NafEval ev = naf_eval(heads, s);
    return select_among(ev, aset, ev.mu, k);
}

// ---------------------------------------------------------------------------
// DNAF training

NafOptimizer NafOptimizer::make(const AgentConfig& cfg) {
    if (cfg.optimizer == "adam") {
        neural::AdamConfig a;
        a.learning_rate = cfg.learning_rate;
        return NafOptimizer{neural::Optimizer(a), neural::Optimizer(a),
                            neural::Optimizer(a), neural::Optimizer(a)};
    }
    neural::SgdConfig s{cfg.learning_rate};
    return NafOptimizer{neural::Optimizer(s), neural::Optimizer(s),
                        neural::Optimizer(s), neural::Optimizer(s)};
}

NafBatchGrads naf_loss_gradients(const NafHeads& heads, const NafHeads& target,
                                 std::span<const Transition* const> minibatch,
                                 double discount,
                                 const actions::AllocationGrid& grid) {
    if (minibatch.empty()) throw ArgumentError("train_step: empty minibatch");
    const std::size_t batch = minibatch.size();
    const std::size_t n = heads.action_dim();
    const std::size_t feat_dim = heads.trunk.output_dim();

    NafBatchGrads g{heads.trunk.make_gradients(), heads.value_head.make_gradients(),
                    heads.policy_head.make_gradients(), heads.factor_head.make_gradients(),
                    0.0};
    auto scratch_v = heads.value_head.make_gradients();
    auto scratch_mu = heads.policy_head.make_gradients();
    auto scratch_f = heads.factor_head.make_gradients();
    std::vector<double> u(n), lu(n), dy_mu(n), dy_f(n * (n + 1) / 2);
    std::vector<double> g_feat(feat_dim), g_back(feat_dim);

    double loss = 0.0;
    for (const Transition* tr : minibatch) {
        const double y = tr->reward + discount * naf_eval(target, tr->next_state).value;

        NafTraces traces;
        const NafEval ev = naf_eval(heads, tr->state, traces);
        const std::vector<double> a = tr->action.normalized(grid);
        if (a.size() != n) throw ShapeError("train_step: action dimension mismatch");

        // u = Lambda'(a - mu), A = -1/2 |u|^2, Q = V + A
        double advantage_term = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = j; i < n; ++i)
                acc += ev.lambda[tri(i, j)] * (a[i] - ev.mu[i]);
            u[j] = acc;
            advantage_term += acc * acc;
        }
        const double q = ev.value - 0.5 * advantage_term;
        const double err = q - y;
        loss += err * err;
        const double dq = 2.0 * err / static_cast<double>(batch);

        // dQ/dV = 1
        scratch_v.reset();
        const double dy_v[1] = {dq};
        heads.value_head.backward(traces.value, dy_v, scratch_v);

        // dQ/dmu = Lambda u (the quadratic form's gradient back through delta)
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) acc += ev.lambda[tri(i, j)] * u[j];
            lu[i] = acc;
            dy_mu[i] = dq * acc;
        }
        scratch_mu.reset();
        heads.policy_head.backward(traces.policy, dy_mu, scratch_mu);

        // dQ/dLambda_ij = -delta_i u_j; diagonal chains through exp
        for (std::size_t i = 0; i < n; ++i) {
            const double delta_i = a[i] - ev.mu[i];
            for (std::size_t j = 0; j <= i; ++j) {
                double d = -dq * delta_i * u[j];
                if (i == j) d *= ev.lambda[tri(i, i)];
                dy_f[tri(i, j)] = d;
            }
        }
        scratch_f.reset();
        heads.factor_head.backward(traces.factor, dy_f, scratch_f);

        add_into(g.value, scratch_v);
        add_into(g.policy, scratch_mu);
        add_into(g.factor, scratch_f);

        for (std::size_t f = 0; f < feat_dim; ++f)
            g_feat[f] = scratch_v.dx[f] + scratch_mu.dx[f] + scratch_f.dx[f];
        kernels::relu_backward(ev.feat_pre.data(), g_feat.data(), g_back.data(), feat_dim);
        heads.trunk.backward(traces.trunk, g_back, g.trunk);
    }
    g.loss = loss / static_cast<double>(batch);
    return g;
}

double train_step(NafHeads& heads, const NafHeads& target,
                  std::span<const Transition* const> minibatch,
                  NafOptimizer& opt, double discount,
                  const actions::AllocationGrid& grid) {
    NafBatchGrads g = naf_loss_gradients(heads, target, minibatch, discount, grid);
    if (!std::isfinite(g.loss)) throw NumericError("non-finite DNAF training loss");
    opt.trunk.apply(heads.trunk, g.trunk);
    opt.value.apply(heads.value_head, g.value);
    opt.policy.apply(heads.policy_head, g.policy);
    opt.factor.apply(heads.factor_head, g.factor);
    return g.loss;
}

void sync_target(const NafHeads& online, NafHeads& target) { target = online; }

// ---------------------------------------------------------------------------
// DQN baseline

Allocation dqn_act(const neural::DenseNetwork& q_net, const actions::ActionSet& aset,
                   std::span<const double> s, double epsilon, RngStream& rng) {
    if (epsilon > 0.0 && rng.uniform01() < epsilon)
        return aset.at(rng.below(aset.size()));
    const auto out = q_net.forward(s);
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] > out[best]) best = i;
    return aset.at(best);
}

double dqn_train_step(neural::DenseNetwork& q_net, const neural::DenseNetwork& target,
                      std::span<const Transition* const> minibatch,
                      neural::Optimizer& opt, double discount,
                      const actions::ActionSet& aset) {
    if (minibatch.empty()) throw ArgumentError("dqn_train_step: empty minibatch");
    const std::size_t batch = minibatch.size();
    auto grads = q_net.make_gradients();
    std::vector<double> dy(q_net.output_dim());

    double loss = 0.0;
    neural::DenseNetwork::Trace trace;
    for (const Transition* tr : minibatch) {
        const auto tgt = target.forward(tr->next_state);
        const double max_next = *std::max_element(tgt.begin(), tgt.end());
        const double y = tr->reward + discount * max_next;

        const auto& out = q_net.forward(tr->state, trace);
        const std::size_t idx = actions::action_index(tr->action, aset.grid());
        const double err = out[idx] - y;
        loss += err * err;

        std::fill(dy.begin(), dy.end(), 0.0);
        dy[idx] = 2.0 * err / static_cast<double>(batch);
        q_net.backward(trace, dy, grads);
    }
    loss /= static_cast<double>(batch);
    if (!std::isfinite(loss)) throw NumericError("non-finite DQN training loss");
    opt.apply(q_net, grads);
    return loss;
}

Allocation equal_allocation(const actions::AllocationGrid& grid) {
    grid.validate();
    const std::vector<double> proto(
        grid.slice_count, grid.total_mhz / static_cast<double>(grid.slice_count));
    return actions::project_knn(proto, grid, 1)[0];
}

// ---------------------------------------------------------------------------
// Agents

DnafAgent::DnafAgent(const actions::AllocationGrid& grid, std::size_t obs_dim,
                     AgentConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      aset_(grid),
      opt_(NafOptimizer::make(cfg_)),
      buffer_(cfg_.buffer_capacity),
      noise_rng_(RngStream::derive(seed, "agent-noise")),
      replay_rng_(RngStream::derive(seed, "agent-replay")) {
    cfg_.validate();
    if (static_cast<std::size_t>(cfg_.knn_k) > aset_.size())
        throw ConfigError("agent: knn_k exceeds the action count");
    RngStream init = RngStream::derive(seed, "agent-init");
    heads_ = NafHeads::create(obs_dim, static_cast<std::size_t>(grid.slice_count),
                              cfg_.hidden, init);
    target_ = heads_;
}

Allocation DnafAgent::act(const Observation& s, long t) {
    const NafEval ev = naf_eval(heads_, s);
    std::vector<double> proto(ev.mu.size());
    for (std::size_t i = 0; i < ev.mu.size(); ++i)
        proto[i] = ev.mu[i] + cfg_.noise.draw(noise_rng_, t);
    return select_among(ev, aset_, proto, cfg_.knn_k);
}

Allocation DnafAgent::greedy(const Observation& s) {
    return act_wolpertinger(heads_, aset_, s, cfg_.knn_k);
}

void DnafAgent::observe(const Transition& tr, long t) {
    buffer_.push(tr);
    if (buffer_.size() >= cfg_.minibatch_size) {
        const auto batch = buffer_.sample(replay_rng_, cfg_.minibatch_size);
        last_loss_ = train_step(heads_, target_, batch, opt_, cfg_.discount, aset_.grid());
    }
    if ((t + 1) % cfg_.target_sync_period == 0) sync_target(heads_, target_);
}

void DnafAgent::save(const std::string& path) const {
    save_agent_checkpoint(path, "dnaf",
                          {{"trunk", &heads_.trunk},
                           {"value", &heads_.value_head},
                           {"policy", &heads_.policy_head},
                           {"factor", &heads_.factor_head}});
}

void DnafAgent::load(const std::string& path) {
    const AgentCheckpoint ck = load_agent_checkpoint(path);
    if (ck.kind != "dnaf")
        throw FormatError("checkpoint is for agent kind '" + ck.kind + "', expected dnaf");
    const struct {
        const char* name;
        neural::DenseNetwork* net;
    } parts[] = {{"trunk", &heads_.trunk},
                 {"value", &heads_.value_head},
                 {"policy", &heads_.policy_head},
                 {"factor", &heads_.factor_head}};
    for (const auto& p : parts) {
        const auto& loaded = ck.section(p.name);
        if (loaded.dims() != p.net->dims())
            throw ShapeError(std::string("checkpoint section '") + p.name +
                             "' has mismatched dims");
        *p.net = loaded;
    }
    target_ = heads_;
}

DqnAgent::DqnAgent(const actions::AllocationGrid& grid, std::size_t obs_dim,
                   AgentConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      aset_(grid),
      opt_(cfg_.optimizer == "adam"
               ? neural::Optimizer(neural::AdamConfig{cfg_.learning_rate, 0.9, 0.999, 1e-8})
               : neural::Optimizer(neural::SgdConfig{cfg_.learning_rate})),
      buffer_(cfg_.buffer_capacity),
      explore_rng_(RngStream::derive(seed, "agent-epsilon")),
      replay_rng_(RngStream::derive(seed, "agent-replay")) {
    cfg_.validate();
    RngStream init = RngStream::derive(seed, "agent-init");
    std::vector<std::size_t> dims;
    dims.reserve(cfg_.hidden.size() + 2);
    dims.push_back(obs_dim);
    dims.insert(dims.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    dims.push_back(aset_.size());
    q_net_ = neural::DenseNetwork(dims, init);
    target_ = q_net_;
}

double DqnAgent::epsilon_at(long t) const {
    if (t <= 0) return cfg_.epsilon_initial;
    const double frac =
        1.0 - static_cast<double>(t) / static_cast<double>(cfg_.epsilon_horizon);
    return cfg_.epsilon_initial * std::max(0.0, frac);
}

Allocation DqnAgent::act(const Observation& s, long t) {
    return dqn_act(q_net_, aset_, s, epsilon_at(t), explore_rng_);
}

Allocation DqnAgent::greedy(const Observation& s) {
    return dqn_act(q_net_, aset_, s, 0.0, explore_rng_);
}

void DqnAgent::observe(const Transition& tr, long t) {
    buffer_.push(tr);
    if (buffer_.size() >= cfg_.minibatch_size) {
        const auto batch = buffer_.sample(replay_rng_, cfg_.minibatch_size);
        last_loss_ = dqn_train_step(q_net_, target_, batch, opt_, cfg_.discount, aset_);
    }
    if ((t + 1) % cfg_.target_sync_period == 0) target_ = q_net_;
}

void DqnAgent::save(const std::string& path) const {
    save_agent_checkpoint(path, "dqn", {{"q", &q_net_}});
}

void DqnAgent::load(const std::string& path) {
    const AgentCheckpoint ck = load_agent_checkpoint(path);
    if (ck.kind != "dqn")
        throw FormatError("checkpoint is for agent kind '" + ck.kind + "', expected dqn");
    const auto& loaded = ck.section("q");
    if (loaded.dims() != q_net_.dims())
        throw ShapeError("checkpoint section 'q' has mismatched dims");
    q_net_ = loaded;
    target_ = q_net_;
}

EqualAgent::EqualAgent(const actions::AllocationGrid& grid)
    : alloc_(equal_allocation(grid)) {}

void EqualAgent::save(const std::string& path) const {
    save_agent_checkpoint(path, "equal", {});
}

void EqualAgent::load(const std::string& path) {
    const AgentCheckpoint ck = load_agent_checkpoint(path);
    if (ck.kind != "equal")
        throw FormatError("checkpoint is for agent kind '" + ck.kind + "', expected equal");
}

std::unique_ptr<Agent> make_agent(const std::string& kind,
                                  const actions::AllocationGrid& grid,
                                  std::size_t obs_dim, const AgentConfig& cfg,
                                  std::uint64_t seed) {
    if (kind == "dnaf") return std::make_unique<DnafAgent>(grid, obs_dim, cfg, seed);
    if (kind == "dqn") return std::make_unique<DqnAgent>(grid, obs_dim, cfg, seed);
    if (kind == "equal") return std::make_unique<EqualAgent>(grid);
    throw ConfigError("unknown agent kind '" + kind + "' (expected dnaf, dqn or equal)");
}

// ---------------------------------------------------------------------------
// Training loop

std::vector<env::EpisodeMetrics> run_training(env::SliceEnv& environment,
                                              Agent& agent, long episodes,
                                              const std::vector<MetricsSink>& sinks) {
    if (episodes < 0) throw ArgumentError("run_training: negative episode budget");
    std::vector<env::EpisodeMetrics> log;
    log.reserve(static_cast<std::size_t>(episodes));
    Observation s = environment.reset();
    for (long t = 0; t < episodes; ++t) {
        try {
            const Allocation a = agent.act(s, t);
            env::StepResult res = environment.step(a);
            agent.observe(Transition{s, a, res.reward, res.next_observation}, t);
            res.metrics.exploration = agent.exploration(t);
            s = std::move(res.next_observation);
            for (const auto& sink : sinks)
                if (sink) sink(res.metrics);
            log.push_back(std::move(res.metrics));
        } catch (const NumericError& e) {
            throw NumericError("episode " + std::to_string(t) + ": " + e.what());
        } catch (const InvalidActionError& e) {
            throw InvalidActionError("episode " + std::to_string(t) + ": " + e.what());
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// Agent checkpoints

void save_agent_checkpoint(const std::string& path, const std::string& kind,
                           const std::vector<NamedNetwork>& sections) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot open checkpoint for writing: " + path);

    std::string manifest = "kind=" + kind + "\n";
    for (const auto& [name, net] : sections)
        manifest += "section " + name + " dims=" + dims_string(*net) + "\n";

    f.write(kAgentMagic, 4);
    put_u32(f, kAgentFormatVersion);
    put_u32(f, static_cast<std::uint32_t>(manifest.size()));
    f.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    put_u32(f, static_cast<std::uint32_t>(sections.size()));
    for (const auto& [name, net] : sections) {
        put_u32(f, static_cast<std::uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        neural::write_network(f, *net);
    }
    f.flush();
    if (!f) throw FileError("failed writing checkpoint: " + path);
}

const neural::DenseNetwork& AgentCheckpoint::section(const std::string& name) const {
    for (const auto& [n, net] : sections)
        if (n == name) return net;
    throw FormatError("checkpoint is missing section '" + name + "'");
}

AgentCheckpoint load_agent_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot open checkpoint: " + path);

    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, kAgentMagic, 4) != 0)
        throw FormatError("bad agent checkpoint magic");
    const std::uint32_t version = get_u32(f);
    if (version != kAgentFormatVersion)
        throw FormatError("unsupported agent checkpoint version " + std::to_string(version));

    const std::uint32_t manifest_len = get_u32(f);
    if (manifest_len > (1u << 20)) throw FormatError("agent checkpoint manifest too large");
    std::string manifest(manifest_len, '\0');
    if (!f.read(manifest.data(), manifest_len))
        throw FormatError("agent checkpoint: truncated manifest");

    AgentCheckpoint ck;
    std::istringstream lines(manifest);
    for (std::string line; std::getline(lines, line);) {
        if (line.rfind("kind=", 0) == 0) {
            ck.kind = line.substr(5);
            break;
        }
    }
    if (ck.kind.empty()) throw FormatError("agent checkpoint manifest lacks a kind record");

    const std::uint32_t count = get_u32(f);
    if (count > 64) throw FormatError("agent checkpoint section count implausible");
    ck.sections.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = get_u32(f);
        if (name_len == 0 || name_len > 256)
            throw FormatError("agent checkpoint: bad section name length");
        std::string name(name_len, '\0');
        if (!f.read(name.data(), name_len))
            throw FormatError("agent checkpoint: truncated section name");
        ck.sections.emplace_back(std::move(name), neural::read_network(f));
    }
    return ck;
}

}  // namespace slicesim::agents
