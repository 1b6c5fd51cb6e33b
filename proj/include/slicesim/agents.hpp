#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slicesim/action_space.hpp"
#include "slicesim/env.hpp"
#include "slicesim/neural.hpp"
#include "slicesim/rng.hpp"

namespace slicesim::agents {

using actions::Allocation;
using env::Observation;

struct Transition {
    Observation state;
    Allocation action;
    double reward = 0.0;
    Observation next_state;
};

/// Fixed-capacity FIFO ring; push evicts the oldest once full.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// i = 0 is the oldest stored transition.
    const Transition& at(std::size_t i) const;
    /// batch independent uniform picks (with replacement).
    std::vector<const Transition*> sample(RngStream& rng, std::size_t batch) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // next slot to overwrite once full
    std::vector<Transition> storage_;
};

/// Exploration noise added to the proto-action, linearly attenuated to zero.
struct NoiseSchedule {
    enum class Kind { normal, uniform };
    Kind distribution = Kind::normal;
    double initial_scale = 0.15;  // sigma_0, in normalized bandwidth units
    long decay_horizon = 3000;

    /// sigma_0 * max(0, 1 - t/horizon); exactly zero from t = horizon on.
    double scale_at(long t) const;
    /// One noise component with standard deviation scale_at(t); the uniform
    /// variant spans +-sqrt(3)*sigma so both kinds are std-matched.
    double draw(RngStream& rng, long t) const;
    void validate() const;  // throws ConfigError
};

struct AgentConfig {
    double discount = 0.9;  // gamma
    double learning_rate = 1e-3;
    std::string optimizer = "sgd";  // sgd | adam
    std::vector<std::size_t> hidden = {64, 64};
    long target_sync_period = 50;  // C, in environment steps
    std::size_t minibatch_size = 32;
    std::size_t buffer_capacity = 10000;
    int knn_k = 1;
    NoiseSchedule noise;
    double epsilon_initial = 1.0;  // DQN only
    long epsilon_horizon = 3000;   // DQN only

    void validate() const;  // throws ConfigError
};

/// The NAF decomposition networks. A shared trunk maps the observation to a
/// feature vector (a rectifier is applied on top of the trunk output, so
/// every hidden layer is rectified); three linear heads read the features:
///   value_head  -> V(s)            (1 output)
///   policy_head -> mu(s)           (N outputs, normalized bandwidths)
///   factor_head -> packed Lambda   (N(N+1)/2 outputs, row-major lower
///                                   triangle (0,0),(1,0),(1,1),...; the
///                                   diagonal passes through exp)
struct NafHeads {
    neural::DenseNetwork trunk;
    neural::DenseNetwork value_head;
    neural::DenseNetwork policy_head;
    neural::DenseNetwork factor_head;

    static NafHeads create(std::size_t obs_dim, std::size_t action_dim,
                           const std::vector<std::size_t>& hidden, RngStream& rng);

    std::size_t obs_dim() const { return trunk.input_dim(); }
    std::size_t action_dim() const { return policy_head.output_dim(); }
};

/// Products of one forward pass through all heads.
struct NafEval {
    std::vector<double> feat_pre;  // trunk output before the glue rectifier
    std::vector<double> feat;      // rectified features the heads consume
    double value = 0.0;
    std::vector<double> mu;      // N
    std::vector<double> lambda;  // packed lower triangle, diagonal already exp'd
};

struct NafTraces {
    neural::DenseNetwork::Trace trunk, value, policy, factor;
};

NafEval naf_eval(const NafHeads& heads, std::span<const double> s);
NafEval naf_eval(const NafHeads& heads, std::span<const double> s, NafTraces& traces);

/// A(s,a) = -1/2 (a-mu)' Lambda Lambda' (a-mu), computed as -1/2 |Lambda'(a-mu)|^2
/// so it is <= 0 in floating point too. Actions are normalized bandwidths.
double advantage(const NafHeads& heads, std::span<const double> s,
                 std::span<const double> a);
/// Advantage from an existing forward pass (shared V/mu/Lambda).
double advantage_at(const NafEval& eval, std::span<const double> a);

/// Q(s,a) = V(s) + A(s,a).
double q_value(const NafHeads& heads, std::span<const double> s,
               std::span<const double> a);

struct ActResult {
    std::vector<double> proto;  // normalized, mu(s) + noise
    Allocation chosen;
};

/// Proto-action (mu + attenuated noise) projected to the nearest lattice
/// point. The k-candidate variant below re-ranks by Q.
ActResult act(const NafHeads& heads, const actions::ActionSet& aset,
              std::span<const double> s, long t, const NoiseSchedule& schedule,
              RngStream& rng);

/// Among the k nearest lattice points to mu(s), return the one with maximal
/// Q(s,.); ties keep the nearer candidate. k = 1 reduces to a zero-noise act.
Allocation act_wolpertinger(const NafHeads& heads, const actions::ActionSet& aset,
                            std::span<const double> s, int k);

/// Q-ranked selection among the k nearest lattice points to an arbitrary
/// normalized proto-action, reusing a forward pass.
Allocation select_among(const NafEval& eval, const actions::ActionSet& aset,
                        std::span<const double> proto_norm, int k);

/// One optimizer instance per network (each owns its moment accumulators).
struct NafOptimizer {
    neural::Optimizer trunk, value, policy, factor;

    static NafOptimizer make(const AgentConfig& cfg);
};

struct NafBatchGrads {
    neural::DenseNetwork::Gradients trunk, value, policy, factor;
    double loss = 0.0;
};

/// Loss and exact parameter gradients of mean_i (y_i - Q(s_i,a_i))^2 with
/// y_i = r_i + discount * V_target(s'_i). Exposed separately from train_step
/// so gradients can be checked against finite differences.
NafBatchGrads naf_loss_gradients(const NafHeads& heads, const NafHeads& target,
                                 std::span<const Transition* const> minibatch,
                                 double discount,
                                 const actions::AllocationGrid& grid);

/// One gradient step on trunk + all heads; target parameters untouched.
/// Returns the minibatch loss. Throws ArgumentError on an empty minibatch,
/// NumericError on a non-finite loss.
double train_step(NafHeads& heads, const NafHeads& target,
                  std::span<const Transition* const> minibatch,
                  NafOptimizer& opt, double discount,
                  const actions::AllocationGrid& grid);

/// Full periodic clone; target becomes bit-equal to the online parameters.
void sync_target(const NafHeads& online, NafHeads& target);

/// epsilon-greedy over a value network with one output per action.
Allocation dqn_act(const neural::DenseNetwork& q_net, const actions::ActionSet& aset,
                   std::span<const double> s, double epsilon, RngStream& rng);

/// TD(0) step: y = r + discount * max_a' Q_target(s'); returns the loss.
double dqn_train_step(neural::DenseNetwork& q_net, const neural::DenseNetwork& target,
                      std::span<const Transition* const> minibatch,
                      neural::Optimizer& opt, double discount,
                      const actions::ActionSet& aset);

/// The valid allocation nearest to the even split (W/N, ..., W/N).
Allocation equal_allocation(const actions::AllocationGrid& grid);

// ---------------------------------------------------------------------------
// Training-loop agents. One agent per run, single-threaded.

class Agent {
public:
    virtual ~Agent() = default;

    virtual Allocation act(const Observation& s, long t) = 0;
    virtual Allocation greedy(const Observation& s) = 0;
    /// Store the transition and do whatever learning is due at step t
    /// (train once the buffer holds a minibatch, sync the target every C).
    virtual void observe(const Transition& tr, long t) = 0;
    /// Value for the metrics "exploration" column (noise sigma or epsilon).
    virtual double exploration(long t) const = 0;
    virtual double last_loss() const = 0;
    virtual std::string kind() const = 0;
    virtual void save(const std::string& path) const = 0;
    virtual void load(const std::string& path) = 0;
};

class DnafAgent : public Agent {
public:
    DnafAgent(const actions::AllocationGrid& grid, std::size_t obs_dim,
              AgentConfig cfg, std::uint64_t seed);

    Allocation act(const Observation& s, long t) override;
    Allocation greedy(const Observation& s) override;
    void observe(const Transition& tr, long t) override;
    double exploration(long t) const override { return cfg_.noise.scale_at(t); }
    double last_loss() const override { return last_loss_; }
    std::string kind() const override { return "dnaf"; }
    void save(const std::string& path) const override;
    void load(const std::string& path) override;

    const NafHeads& heads() const { return heads_; }
    NafHeads& heads() { return heads_; }
    const AgentConfig& config() const { return cfg_; }
    const ReplayBuffer& buffer() const { return buffer_; }

private:
    AgentConfig cfg_;
    actions::ActionSet aset_;
    NafHeads heads_;
    NafHeads target_;
    NafOptimizer opt_;
    ReplayBuffer buffer_;
    RngStream noise_rng_;
    RngStream replay_rng_;
    double last_loss_ = 0.0;
};

class DqnAgent : public Agent {
public:
    DqnAgent(const actions::AllocationGrid& grid, std::size_t obs_dim,
             AgentConfig cfg, std::uint64_t seed);

    Allocation act(const Observation& s, long t) override;
    Allocation greedy(const Observation& s) override;
    void observe(const Transition& tr, long t) override;
    double exploration(long t) const override { return epsilon_at(t); }
    double last_loss() const override { return last_loss_; }
    std::string kind() const override { return "dqn"; }
    void save(const std::string& path) const override;
    void load(const std::string& path) override;

    double epsilon_at(long t) const;
    const neural::DenseNetwork& q_net() const { return q_net_; }

private:
    AgentConfig cfg_;
    actions::ActionSet aset_;
    neural::DenseNetwork q_net_;
    neural::DenseNetwork target_;
    neural::Optimizer opt_;
    ReplayBuffer buffer_;
    RngStream explore_rng_;
    RngStream replay_rng_;
    double last_loss_ = 0.0;
};

class EqualAgent : public Agent {
public:
    explicit EqualAgent(const actions::AllocationGrid& grid);

    Allocation act(const Observation&, long) override { return alloc_; }
    Allocation greedy(const Observation&) override { return alloc_; }
    void observe(const Transition&, long) override {}
    double exploration(long) const override { return 0.0; }
    double last_loss() const override { return 0.0; }
    std::string kind() const override { return "equal"; }
    void save(const std::string& path) const override;
    void load(const std::string& path) override;

private:
    Allocation alloc_;
};

/// kind: dnaf | dqn | equal. Throws ConfigError on anything else.
std::unique_ptr<Agent> make_agent(const std::string& kind,
                                  const actions::AllocationGrid& grid,
                                  std::size_t obs_dim, const AgentConfig& cfg,
                                  std::uint64_t seed);

using MetricsSink = std::function<void(const env::EpisodeMetrics&)>;

/// Algorithm main loop: act, step, store, train, periodic target sync, for
/// an episode budget. Environment and numeric errors are rethrown with the
/// episode index attached.
std::vector<env::EpisodeMetrics> run_training(env::SliceEnv& environment,
                                              Agent& agent, long episodes,
                                              const std::vector<MetricsSink>& sinks = {});

// ---------------------------------------------------------------------------
// Agent checkpoints: an outer container with a text manifest naming each
// network section; sections reuse the neural module's format.
//   "DNAG" | u32 version | u32 manifest_len | manifest text
//   | u32 section_count | per section: u32 name_len, name, network blob
inline constexpr char kAgentMagic[4] = {'D', 'N', 'A', 'G'};
inline constexpr std::uint32_t kAgentFormatVersion = 1;

using NamedNetwork = std::pair<std::string, const neural::DenseNetwork*>;

void save_agent_checkpoint(const std::string& path, const std::string& kind,
                           const std::vector<NamedNetwork>& sections);

struct AgentCheckpoint {
    std::string kind;
    std::vector<std::pair<std::string, neural::DenseNetwork>> sections;

    const neural::DenseNetwork& section(const std::string& name) const;
};

AgentCheckpoint load_agent_checkpoint(const std::string& path);

}  // namespace slicesim::agents
