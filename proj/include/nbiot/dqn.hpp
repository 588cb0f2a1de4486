#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "nbiot/config.hpp"
#include "nbiot/controllers.hpp"
#include "nbiot/env.hpp"
#include "nbiot/mlp.hpp"
#include "nbiot/rng.hpp"

namespace nbiot::dqn {

// States are shared between the nine per-agent buffers and between
// consecutive transitions (s_next of one TTI is s of the next).
struct Transition {
  std::shared_ptr<const StateVector> s;
  std::shared_ptr<const StateVector> s_next;
  int action = 0;
  double reward = 0.0;
  bool terminal = false;
};

// Fixed-capacity ring; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return ring_.size(); }
  // i = 0 is the oldest stored transition.
  const Transition& oldest_first(std::size_t i) const;
  // Uniform draws with replacement from the stored transitions.
  std::vector<const Transition*> sample(std::size_t n, RngStream& rng) const;

 private:
  std::vector<Transition> ring_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
};

// Lowest index among the maxima.
int greedy_action(std::span<const double> q);

// Bootstrapped targets r + gamma * Q_target(s', a*). In kDdqn mode a* is
// the online network's argmax, in kDqnMax the target network's own max.
std::vector<double> td_targets(std::span<const Transition* const> batch, const Mlp& online, const Mlp& target,
                               double gamma, TargetMode mode, double reward_scale = 1.0);

// 1/(2B) sum_b (target_b - Q(s_b, a_b))^2 and its parameter gradient.
// `states` is batch x input, row-major.
double td_loss_and_gradient(const Mlp& net, std::span<const double> states, std::span<const int> actions,
                            std::span<const double> targets, ParamBuffers& grads);
double td_loss(const Mlp& net, std::span<const double> states, std::span<const int> actions,
               std::span<const double> targets);

// One RMSProp step on td_loss; returns the loss before the update.
double fit_batch(Mlp& net, RmsPropState& opt, std::span<const double> states, std::span<const int> actions,
                 std::span<const double> targets);

enum class Variable { kNRach, kFPrea, kNRepe };

struct AgentRole {
  Variable variable = Variable::kNRach;
  int group = 0;
};

inline constexpr int kNumAgents = 3 * kNumGroups;

// Agents 0-2 pick n_rach of groups 0-2, 3-5 f_prea, 6-8 n_repe.
AgentRole agent_role(int k);
const std::vector<int>& action_set(const SimConfig& cfg, Variable v);

struct Agent {
  AgentRole role;
  Mlp online;
  Mlp target;
  RmsPropState opt;
  ReplayBuffer replay;
  RngStream replay_rng;
  long train_steps = 0;
};

// Samples a minibatch and applies one update; no-op while the buffer holds
// fewer than a minibatch. Returns the pre-update loss when trained.
std::optional<double> train_step(Agent& agent, const DqnConfig& cfg);
void sync_target(Agent& agent);

// Linear decay from epsilon_start to epsilon_end over the first
// epsilon_decay_fraction of total_steps, constant afterwards.
double anneal_epsilon(const DqnConfig& cfg, long step, long total_steps);

class AgentEnsemble {
 public:
  AgentEnsemble(const SimConfig& sim, const DqnConfig& cfg, std::uint64_t seed);

  struct Selection {
    ActionVector action;
    std::array<int, kNumAgents> indices{};
  };

  // Independent epsilon-greedy choice per agent.
  Selection select_actions(const StateVector& s, double epsilon, RngStream& rng) const;
  ActionVector to_action(const std::array<int, kNumAgents>& indices) const;

  // Stores the shared (s, r, s') with each agent's own action.
  void store(const std::shared_ptr<const StateVector>& s, const std::array<int, kNumAgents>& indices,
             double reward, const std::shared_ptr<const StateVector>& s_next, bool terminal);

  // One train_step per agent, then target sync for agents that are due.
  void train_all();

  std::array<Agent, kNumAgents>& agents() { return agents_; }
  const std::array<Agent, kNumAgents>& agents() const { return agents_; }
  const DqnConfig& config() const { return cfg_; }
  const SimConfig& sim_config() const { return sim_; }

  void set_backend(kernels::Backend be);

  // Bookkeeping persisted in checkpoints.
  double epsilon = 1.0;
  long env_steps = 0;
  long episodes_done = 0;

  // Versioned little-endian binary dump of weights, optimizer state,
  // epsilon and counters. Replay memory is not persisted.
  void save(std::ostream& os) const;
  void load(std::istream& is);
  void save_file(const std::string& path) const;
  void load_file(const std::string& path);

 private:
  SimConfig sim_;
  DqnConfig cfg_;
  std::array<Agent, kNumAgents> agents_;
};

// Greedy/epsilon-greedy controller over a (trained) ensemble; keeps its own
// observation window to build the state.
class CmaDqnController final : public Controller {
 public:
  CmaDqnController(const AgentEnsemble& ensemble, double epsilon, RngStream rng);
  void reset() override { history_.clear(); }
  ActionVector decide() override;
  void observe(const ObservationU& obs, const ActionVector& a, double reward) override;

 private:
  const AgentEnsemble& ensemble_;
  double epsilon_;
  RngStream rng_;
  std::vector<HistoryEntry> history_;
};

struct TrainingOptions {
  int episodes = 1;
  // First episode index (continuing a checkpointed run).
  long first_episode = 0;
  // Horizon used by the epsilon schedule; defaults to `episodes`.
  long schedule_episodes = 0;
};

using EpisodeCallback = std::function<void(long episode, const EpisodeStats& stats, const AgentEnsemble& ensemble)>;

// Trains the ensemble online: per TTI select -> step -> store -> train.
void run_training(AgentEnsemble& ensemble, const TrainingOptions& opts, const EpisodeCallback& on_episode = {});

}  // namespace nbiot::dqn
