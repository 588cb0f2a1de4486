#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "nbiot/dqn.hpp"

using namespace nbiot;
using namespace nbiot::dqn;

namespace {

std::shared_ptr<const StateVector> state_of(std::vector<double> v) {
  return std::make_shared<const StateVector>(std::move(v));
}

SimConfig tiny_sim() {
  SimConfig cfg;
  cfg.n_devices = 300;
  cfg.n_tti_per_episode = 40;
  return cfg;
}

DqnConfig tiny_dqn() {
  DqnConfig cfg;
  cfg.hidden_layers = {16, 16};
  cfg.minibatch = 8;
  cfg.replay_capacity = 200;
  cfg.target_sync_period = 10;
  return cfg;
}

}  // namespace

TEST_SUITE("dqn") {

TEST_CASE("replay ring evicts the oldest transition") {
  ReplayBuffer buf(3);
  CHECK(buf.capacity() == 3);
  const auto s = state_of({0.0});
  for (int i = 0; i < 5; ++i) buf.push({s, s, i, 0.0, false});
  CHECK(buf.size() == 3);
  CHECK(buf.oldest_first(0).action == 2);
  CHECK(buf.oldest_first(2).action == 4);
  RngStream rng(1, Stream::kReplaySampling);
  const auto draw = buf.sample(1000, rng);
  std::map<int, int> seen;
  for (const auto* t : draw) ++seen[t->action];
  CHECK(seen.size() == 3);
  CHECK(seen.begin()->first == 2);
}

TEST_CASE("greedy action breaks ties toward the lowest index") {
  CHECK(greedy_action(std::vector<double>{1.0, 3.0, 3.0, 2.0}) == 1);
  CHECK(greedy_action(std::vector<double>{0.0, 0.0}) == 0);
  CHECK(greedy_action(std::vector<double>{-5.0}) == 0);
}

TEST_CASE("TD targets") {
  // Network with zero weights and output biases c_a gives Q(s, a) = c_a.
  Mlp net({2, 3, 3});
  net.layers()[1].b = {1.0, 4.0, 2.0};
  Mlp shifted = net;
  shifted.layers()[1].b = {5.0, 0.0, 3.0};
  const auto s = state_of({0.3, 0.7});
  const Transition term{s, s, 0, 2.5, true};
  const Transition live{s, s, 1, 2.0, false};
  const std::vector<const Transition*> batch{&term, &live};

  auto y = td_targets(batch, net, net, 0.5, TargetMode::kDdqn);
  CHECK(y[0] == 2.5);
  CHECK(y[1] == doctest::Approx(2.0 + 0.5 * 4.0));
  y = td_targets(batch, net, net, 0.0, TargetMode::kDdqn);
  CHECK(y[1] == 2.0);
  // online argmax is action 1, the target network scores it 0
  y = td_targets(batch, net, shifted, 0.5, TargetMode::kDdqn);
  CHECK(y[1] == doctest::Approx(2.0));
  // plain max uses the target network's own best action
  y = td_targets(batch, net, shifted, 0.5, TargetMode::kDqnMax);
  CHECK(y[1] == doctest::Approx(2.0 + 2.5));
  y = td_targets(batch, net, net, 0.5, TargetMode::kDdqn, 0.1);
  CHECK(y[0] == doctest::Approx(0.25));

  // constant Q = c everywhere gives 1 + 0.5 c in both modes
  Mlp flat({2, 3, 3});
  flat.layers()[1].b = {7.0, 7.0, 7.0};
  const Transition one{s, s, 2, 1.0, false};
  const std::vector<const Transition*> b1{&one};
  CHECK(td_targets(b1, flat, flat, 0.5, TargetMode::kDdqn)[0] == doctest::Approx(4.5));
  CHECK(td_targets(b1, flat, flat, 0.5, TargetMode::kDqnMax)[0] == doctest::Approx(4.5));
}

TEST_CASE("loss and gradient touch only the chosen action") {
  Mlp net({2, 3, 3}, kernels::Backend::kSerial);
  RngStream rng(3, "dqn-loss");
  net.init_uniform(rng);
  const std::vector<double> x{0.2, 0.9, 0.5, 0.1};
  const std::vector<int> a{1, 2};
  const auto q = net.forward_batch(x, 2);
  const std::vector<double> y{q[1] + 1.0, q[5] - 2.0};
  ParamBuffers g;
  CHECK(td_loss_and_gradient(net, x, a, y, g) == doctest::Approx((1.0 + 4.0) / 4.0));
  CHECK(td_loss(net, x, a, y) == doctest::Approx(1.25));
  // output row 0 never chosen
  for (int i = 0; i < 3; ++i) CHECK(g.w[1][static_cast<std::size_t>(i)] == 0.0);
  CHECK(g.b[1][0] == 0.0);
  CHECK(g.b[1][1] == doctest::Approx(-1.0 / 2));
  CHECK(g.b[1][2] == doctest::Approx(2.0 / 2));
}

TEST_CASE("zero TD error leaves parameters unchanged") {
  Mlp net({4, 8, 3});
  RngStream rng(5, "dqn");
  net.init_uniform(rng);
  const Mlp before = net;
  RmsPropState opt(net, 1e-2, 0.9, 1e-6);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const std::vector<int> a{2};
  const auto q = net.forward(x);
  const std::vector<double> y{q[2]};
  CHECK(fit_batch(net, opt, x, a, y) == 0.0);
  CHECK(net == before);
}

TEST_CASE("fitting a fixed batch lowers the loss") {
  int improved = 0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    RngStream rng(static_cast<std::uint64_t>(seed), "dqn-fit");
    Mlp net({6, 16, 16, 4});
    net.init_uniform(rng);
    RmsPropState opt(net, 1e-3, 0.9, 1e-6);
    const int batch = 16;
    std::vector<double> x(static_cast<std::size_t>(batch * 6)), y(static_cast<std::size_t>(batch));
    std::vector<int> a(static_cast<std::size_t>(batch));
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform() * 4.0;
    for (auto& v : a) v = rng.below(4);
    const double first = td_loss(net, x, a, y);
    for (int step = 0; step < 50; ++step) fit_batch(net, opt, x, a, y);
    improved += td_loss(net, x, a, y) < first ? 1 : 0;
  }
  CHECK(improved >= 38);
}

TEST_CASE("agent roles and action sets") {
  const SimConfig cfg;
  for (int k = 0; k < kNumAgents; ++k) {
    const auto r = agent_role(k);
    CHECK(r.group == k % 3);
    CHECK(static_cast<int>(r.variable) == k / 3);
  }
  CHECK(action_set(cfg, Variable::kNRach).size() == 3);
  CHECK(action_set(cfg, Variable::kFPrea).size() == 4);
  CHECK(action_set(cfg, Variable::kNRepe).size() == 6);
}

TEST_CASE("exploration extremes") {
  AgentEnsemble ens(tiny_sim(), tiny_dqn(), 1);
  const StateVector s(96, 0.2);
  RngStream rng(1, Stream::kExploration);
  const auto greedy = ens.select_actions(s, 0.0, rng).indices;
  for (int i = 0; i < 20; ++i) CHECK(ens.select_actions(s, 0.0, rng).indices == greedy);

  std::map<int, int> counts;
  const int n = 6000;
  for (int i = 0; i < n; ++i) ++counts[ens.select_actions(s, 1.0, rng).indices[6]];
  REQUIRE(counts.size() == 6);
  for (auto [v, c] : counts) {
    const double p = 1.0 / 6;
    CHECK(std::abs(c - n * p) < 3.0 * std::sqrt(n * p * (1 - p)));
  }
}

TEST_CASE("greedy choice is invariant to a constant shift of Q") {
  AgentEnsemble ens(tiny_sim(), tiny_dqn(), 2);
  RngStream rng(2, Stream::kExploration);
  const StateVector s(96, 0.4);
  const auto before = ens.select_actions(s, 0.0, rng).indices;
  for (auto& a : ens.agents()) {
    for (auto& b : a.online.layers().back().b) b += 3.25;
  }
  CHECK(ens.select_actions(s, 0.0, rng).indices == before);
}

TEST_CASE("target sync copies the online network") {
  AgentEnsemble ens(tiny_sim(), tiny_dqn(), 3);
  auto& a = ens.agents()[0];
  a.online.layers()[0].w[0] += 1.0;
  CHECK_FALSE(a.online == a.target);
  sync_target(a);
  CHECK(a.online == a.target);
}

TEST_CASE("epsilon schedule") {
  const DqnConfig cfg;
  CHECK(anneal_epsilon(cfg, 0, 1000) == 1.0);
  CHECK(anneal_epsilon(cfg, 250, 1000) == doctest::Approx(0.55));
  CHECK(anneal_epsilon(cfg, 500, 1000) == doctest::Approx(0.1));
  CHECK(anneal_epsilon(cfg, 900, 1000) == doctest::Approx(0.1));
  double prev = 2.0;
  for (long t = 0; t <= 1000; t += 7) {
    const double e = anneal_epsilon(cfg, t, 1000);
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("training fills each buffer and is reproducible") {
  auto run = [] {
    AgentEnsemble ens(tiny_sim(), tiny_dqn(), 7);
    std::vector<double> rewards;
    run_training(ens, {2, 0, 0}, [&](long, const EpisodeStats& st, const AgentEnsemble&) {
      rewards.push_back(st.total_reward());
    });
    return std::make_pair(rewards, std::move(ens));
  };
  auto [r1, e1] = run();
  auto [r2, e2] = run();
  CHECK(r1 == r2);
  CHECK(e1.episodes_done == 2);
  CHECK(e1.env_steps == 80);
  for (int k = 0; k < kNumAgents; ++k) {
    CHECK(e1.agents()[static_cast<std::size_t>(k)].replay.size() == 80);
    CHECK(e1.agents()[static_cast<std::size_t>(k)].online == e2.agents()[static_cast<std::size_t>(k)].online);
    CHECK(e1.agents()[static_cast<std::size_t>(k)].train_steps == 80 - 8 + 1);
  }
  CHECK(e1.agents()[0].replay.oldest_first(39).terminal);
  CHECK_FALSE(e1.agents()[0].replay.oldest_first(38).terminal);
}

TEST_CASE("checkpoint round trip is bit exact") {
  AgentEnsemble ens(tiny_sim(), tiny_dqn(), 11);
  run_training(ens, {1, 0, 0});
  std::stringstream buf;
  ens.save(buf);
  AgentEnsemble back(tiny_sim(), tiny_dqn(), 99);
  back.load(buf);
  CHECK(back.epsilon == ens.epsilon);
  CHECK(back.env_steps == ens.env_steps);
  CHECK(back.episodes_done == ens.episodes_done);
  for (int k = 0; k < kNumAgents; ++k) {
    const auto& a = ens.agents()[static_cast<std::size_t>(k)];
    const auto& b = back.agents()[static_cast<std::size_t>(k)];
    CHECK(a.online == b.online);
    CHECK(a.target == b.target);
    CHECK(a.opt.cache.w == b.opt.cache.w);
    CHECK(a.train_steps == b.train_steps);
  }
  std::stringstream again;
  back.save(again);
  std::stringstream first;
  ens.save(first);
  CHECK(again.str() == first.str());

  std::stringstream junk("not a checkpoint at all");
  CHECK_THROWS_AS(back.load(junk), ConfigError);
  std::string truncated = first.str();
  truncated.resize(truncated.size() / 2);
  std::stringstream half(truncated);
  CHECK_THROWS_AS(back.load(half), ConfigError);

  auto other = tiny_dqn();
  other.hidden_layers = {16};
  AgentEnsemble wrong(tiny_sim(), other, 1);
  std::stringstream again2(first.str());
  CHECK_THROWS_AS(wrong.load(again2), ConfigError);
}

}
