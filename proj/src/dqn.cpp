#include "nbiot/dqn.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace nbiot::dqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : ring_(capacity) {
  if (capacity == 0) throw ContractViolation("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  ring_[next_] = std::move(t);
  next_ = (next_ + 1) % ring_.size();
  size_ = std::min(size_ + 1, ring_.size());
}

const Transition& ReplayBuffer::oldest_first(std::size_t i) const {
  if (i >= size_) throw ContractViolation("replay index out of range");
  const std::size_t start = size_ < ring_.size() ? 0 : next_;
  return ring_[(start + i) % ring_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, RngStream& rng) const {
  if (size_ == 0) throw ContractViolation("sampling from an empty replay buffer");
  std::vector<const Transition*> out(n);
  for (auto& p : out) p = &ring_[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(size_)))];
  return out;
}

int greedy_action(std::span<const double> q) {
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

namespace {

std::vector<double> stack_states(std::span<const Transition* const> batch, bool next) {
  std::vector<double> x;
  for (const auto* t : batch) {
    const auto& s = next ? *t->s_next : *t->s;
    x.insert(x.end(), s.begin(), s.end());
  }
  return x;
}

}  // namespace

std::vector<double> td_targets(std::span<const Transition* const> batch, const Mlp& online, const Mlp& target,
                               double gamma, TargetMode mode, double reward_scale) {
  if (batch.empty()) throw ContractViolation("td_targets: empty batch");
  const int n = static_cast<int>(batch.size());
  const int a_dim = target.output_size();
  const auto x_next = stack_states(batch, true);
  const auto q_target = target.forward_batch(x_next, n);
  std::vector<double> q_online;
  if (mode == TargetMode::kDdqn) q_online = online.forward_batch(x_next, n);

  std::vector<double> y(batch.size());
  for (int i = 0; i < n; ++i) {
    const auto* t = batch[static_cast<std::size_t>(i)];
    const double r = t->reward * reward_scale;
    if (t->terminal) {
      y[static_cast<std::size_t>(i)] = r;
      continue;
    }
    std::span<const double> qt(q_target.data() + static_cast<long>(i) * a_dim, static_cast<std::size_t>(a_dim));
    double bootstrap;
    if (mode == TargetMode::kDdqn) {
      std::span<const double> qo(q_online.data() + static_cast<long>(i) * a_dim, static_cast<std::size_t>(a_dim));
      bootstrap = qt[static_cast<std::size_t>(greedy_action(qo))];
    } else {
      bootstrap = *std::max_element(qt.begin(), qt.end());
    }
    y[static_cast<std::size_t>(i)] = r + gamma * bootstrap;
  }
  return y;
}

double td_loss_and_gradient(const Mlp& net, std::span<const double> states, std::span<const int> actions,
                            std::span<const double> targets, ParamBuffers& grads) {
  const int n = static_cast<int>(actions.size());
  const int a_dim = net.output_size();
  Mlp::Tape tape;
  net.forward_tape(states, n, tape);
  const auto& q = tape.acts.back();
  std::vector<double> d_out(q.size(), 0.0);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(a_dim) +
                     static_cast<std::size_t>(actions[static_cast<std::size_t>(i)]);
    const double err = q[idx] - targets[static_cast<std::size_t>(i)];
    loss += 0.5 * err * err;
    d_out[idx] = err / n;
  }
  net.backward(tape, d_out, grads);
  return loss / n;
}

double td_loss(const Mlp& net, std::span<const double> states, std::span<const int> actions,
               std::span<const double> targets) {
  const int n = static_cast<int>(actions.size());
  const int a_dim = net.output_size();
  const auto q = net.forward_batch(states, n);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double err = q[static_cast<std::size_t>(i * a_dim + actions[static_cast<std::size_t>(i)])] -
                       targets[static_cast<std::size_t>(i)];
    loss += 0.5 * err * err;
  }
  return loss / n;
}

double fit_batch(Mlp& net, RmsPropState& opt, std::span<const double> states, std::span<const int> actions,
                 std::span<const double> targets) {
  ParamBuffers grads;
  const double loss = td_loss_and_gradient(net, states, actions, targets, grads);
  opt.apply(net, grads);
  return loss;
}

AgentRole agent_role(int k) {
  if (k < 0 || k >= kNumAgents) throw ContractViolation("agent index out of range");
  return {static_cast<Variable>(k / kNumGroups), k % kNumGroups};
}

const std::vector<int>& action_set(const SimConfig& cfg, Variable v) {
  switch (v) {
    case Variable::kNRach: return cfg.rach_set;
    case Variable::kFPrea: return cfg.prea_set;
    case Variable::kNRepe: return cfg.repe_set;
  }
  throw ContractViolation("unknown action variable");
}

std::optional<double> train_step(Agent& agent, const DqnConfig& cfg) {
  if (agent.replay.size() < static_cast<std::size_t>(cfg.minibatch)) return std::nullopt;
  const auto batch = agent.replay.sample(static_cast<std::size_t>(cfg.minibatch), agent.replay_rng);
  const auto y = td_targets(batch, agent.online, agent.target, cfg.discount, cfg.target_mode, cfg.reward_scale);
  const auto x = stack_states(batch, false);
  std::vector<int> actions;
  actions.reserve(batch.size());
  for (const auto* t : batch) actions.push_back(t->action);
  const double loss = fit_batch(agent.online, agent.opt, x, actions, y);
  ++agent.train_steps;
  return loss;
}

void sync_target(Agent& agent) { agent.target = agent.online; }

double anneal_epsilon(const DqnConfig& cfg, long step, long total_steps) {
  const double horizon = std::max(1.0, cfg.epsilon_decay_fraction * static_cast<double>(total_steps));
  const double frac = std::clamp(static_cast<double>(step) / horizon, 0.0, 1.0);
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

AgentEnsemble::AgentEnsemble(const SimConfig& sim, const DqnConfig& cfg, std::uint64_t seed)
    : sim_(sim), cfg_(cfg), epsilon(cfg.epsilon_start) {
  require_valid(sim_);
  if (auto errs = validate_config(cfg_); !errs.empty()) {
    throw ConfigError("invalid DQN config: " + errs.front().field + ": " + errs.front().message);
  }
  for (int k = 0; k < kNumAgents; ++k) {
    auto& a = agents_[static_cast<std::size_t>(k)];
    a.role = agent_role(k);
    std::vector<int> sizes{state_size(sim_)};
    sizes.insert(sizes.end(), cfg_.hidden_layers.begin(), cfg_.hidden_layers.end());
    sizes.push_back(static_cast<int>(action_set(sim_, a.role.variable).size()));
    a.online = Mlp(sizes);
    RngStream init(seed, Stream::kInit, static_cast<std::uint64_t>(k));
    a.online.init_uniform(init);
    a.target = a.online;
    a.opt = RmsPropState(a.online, cfg_.learning_rate, cfg_.rms_decay, cfg_.rms_epsilon);
    a.replay = ReplayBuffer(static_cast<std::size_t>(cfg_.replay_capacity));
    a.replay_rng = RngStream(seed, Stream::kReplaySampling, static_cast<std::uint64_t>(k));
  }
}

void AgentEnsemble::set_backend(kernels::Backend be) {
  for (auto& a : agents_) {
    a.online.set_backend(be);
    a.target.set_backend(be);
  }
}

ActionVector AgentEnsemble::to_action(const std::array<int, kNumAgents>& indices) const {
  ActionVector a;
  for (int k = 0; k < kNumAgents; ++k) {
    const auto role = agent_role(k);
    const int v = action_set(sim_, role.variable)[static_cast<std::size_t>(indices[static_cast<std::size_t>(k)])];
    auto& ga = a[role.group];
    switch (role.variable) {
      case Variable::kNRach: ga.n_rach = v; break;
      case Variable::kFPrea: ga.f_prea = v; break;
      case Variable::kNRepe: ga.n_repe = v; break;
    }
  }
  return a;
}

AgentEnsemble::Selection AgentEnsemble::select_actions(const StateVector& s, double eps, RngStream& rng) const {
  Selection sel;
  for (int k = 0; k < kNumAgents; ++k) {
    const auto& agent = agents_[static_cast<std::size_t>(k)];
    const int n_actions = agent.online.output_size();
    // Both draws are always consumed so the stream position does not
    // depend on the network outputs.
    const bool explore = rng.uniform() < eps;
    const int random_pick = rng.below(n_actions);
    sel.indices[static_cast<std::size_t>(k)] = explore ? random_pick : greedy_action(agent.online.forward(s));
  }
  sel.action = to_action(sel.indices);
  return sel;
}

void AgentEnsemble::store(const std::shared_ptr<const StateVector>& s, const std::array<int, kNumAgents>& indices,
                          double reward, const std::shared_ptr<const StateVector>& s_next, bool terminal) {
  for (int k = 0; k < kNumAgents; ++k) {
    agents_[static_cast<std::size_t>(k)].replay.push({s, s_next, indices[static_cast<std::size_t>(k)], reward, terminal});
  }
}

void AgentEnsemble::train_all() {
  // Agents are independent: each owns its networks, optimizer, buffer and
  // sampling stream, so the result does not depend on the thread count.
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < kNumAgents; ++k) {
    auto& agent = agents_[static_cast<std::size_t>(k)];
    if (train_step(agent, cfg_) && agent.train_steps % cfg_.target_sync_period == 0) sync_target(agent);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'N', 'B', 'D', 'Q', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("checkpoint truncated");
  return v;
}

void put_vec(std::ostream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_vec(std::istream& is, std::vector<double>& v) {
  const auto n = get<std::uint64_t>(is);
  if (n != v.size()) throw ConfigError("checkpoint tensor size does not match the network");
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw ConfigError("checkpoint truncated");
  }
}

void put_net(std::ostream& os, const Mlp& net) {
  for (const auto& l : net.layers()) {
    put_vec(os, l.w);
    put_vec(os, l.b);
  }
}

void get_net(std::istream& is, Mlp& net) {
  for (auto& l : net.layers()) {
    get_vec(is, l.w);
    get_vec(is, l.b);
  }
}

}  // namespace

void AgentEnsemble::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  put(os, kVersion);
  put<std::uint32_t>(os, kNumAgents);
  put(os, epsilon);
  put<std::int64_t>(os, env_steps);
  put<std::int64_t>(os, episodes_done);
  for (const auto& a : agents_) {
    const auto& sizes = a.online.sizes();
    put<std::uint32_t>(os, static_cast<std::uint32_t>(sizes.size()));
    for (int s : sizes) put<std::int32_t>(os, s);
    put<std::int64_t>(os, a.train_steps);
    put(os, a.opt.learning_rate);
    put(os, a.opt.decay);
    put(os, a.opt.epsilon);
    put_net(os, a.online);
    put_net(os, a.target);
    for (std::size_t l = 0; l < a.opt.cache.w.size(); ++l) {
      put_vec(os, a.opt.cache.w[l]);
      put_vec(os, a.opt.cache.b[l]);
    }
    put<std::uint64_t>(os, a.replay_rng.position());
  }
  if (!os) throw ConfigError("checkpoint write failed");
}

void AgentEnsemble::load(std::istream& is) {
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("not a CMA-DQN checkpoint");
  }
  if (get<std::uint32_t>(is) != kVersion) throw ConfigError("unsupported checkpoint version");
  if (get<std::uint32_t>(is) != kNumAgents) throw ConfigError("checkpoint agent count mismatch");
  epsilon = get<double>(is);
  env_steps = get<std::int64_t>(is);
  episodes_done = get<std::int64_t>(is);
  for (auto& a : agents_) {
    const auto n_layers = get<std::uint32_t>(is);
    std::vector<int> sizes(n_layers);
    for (auto& s : sizes) s = get<std::int32_t>(is);
    if (sizes != a.online.sizes()) throw ConfigError("checkpoint topology does not match the configuration");
    a.train_steps = get<std::int64_t>(is);
    a.opt.learning_rate = get<double>(is);
    a.opt.decay = get<double>(is);
    a.opt.epsilon = get<double>(is);
    get_net(is, a.online);
    get_net(is, a.target);
    for (std::size_t l = 0; l < a.opt.cache.w.size(); ++l) {
      get_vec(is, a.opt.cache.w[l]);
      get_vec(is, a.opt.cache.b[l]);
    }
    a.replay_rng.seek(get<std::uint64_t>(is));
  }
}

void AgentEnsemble::save_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write checkpoint: " + path);
  save(f);
}

void AgentEnsemble::load_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read checkpoint: " + path);
  load(f);
}

// ---------------------------------------------------------------------------

CmaDqnController::CmaDqnController(const AgentEnsemble& ensemble, double epsilon, RngStream rng)
    : ensemble_(ensemble), epsilon_(epsilon), rng_(rng) {}

ActionVector CmaDqnController::decide() {
  const auto s = build_state(history_, ensemble_.sim_config());
  return ensemble_.select_actions(s, epsilon_, rng_).action;
}

void CmaDqnController::observe(const ObservationU& obs, const ActionVector& a, double) {
  history_.push_back({obs, a});
  const auto window = static_cast<std::size_t>(ensemble_.sim_config().history_window);
  if (history_.size() > window) history_.erase(history_.begin());
}

void run_training(AgentEnsemble& ensemble, const TrainingOptions& opts, const EpisodeCallback& on_episode) {
  Environment env(ensemble.sim_config());
  const long schedule_eps = opts.schedule_episodes > 0 ? opts.schedule_episodes : opts.episodes;
  const long total_steps = schedule_eps * ensemble.sim_config().n_tti_per_episode;
  RngStream explore(ensemble.sim_config().seed, Stream::kExploration,
                    static_cast<std::uint64_t>(opts.first_episode));

  for (long ep = opts.first_episode; ep < opts.first_episode + opts.episodes; ++ep) {
    auto s = std::make_shared<const StateVector>(env.reset(static_cast<std::uint64_t>(ep)));
    while (!env.terminal()) {
      ensemble.epsilon = anneal_epsilon(ensemble.config(), ensemble.env_steps, total_steps);
      const auto sel = ensemble.select_actions(*s, ensemble.epsilon, explore);
      auto res = env.step(sel.action);
      auto s_next = std::make_shared<const StateVector>(std::move(res.state));
      ensemble.store(s, sel.indices, res.reward, s_next, res.terminal);
      ensemble.train_all();
      ++ensemble.env_steps;
      s = std::move(s_next);
    }
    ++ensemble.episodes_done;
    if (on_episode) on_episode(ep, env.stats(), ensemble);
  }
}

}  // namespace nbiot::dqn
