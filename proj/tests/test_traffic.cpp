#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nbiot/traffic.hpp"

using namespace nbiot;
using namespace nbiot::traffic;

namespace {

Device backlogged(int ce, int in_ce, int total) {
  Device d;
  d.state = DeviceState::kBacklogged;
  d.ce_group = ce;
  d.initial_group = ce;
  d.attempts_in_ce = in_ce;
  d.attempts_total = total;
  return d;
}

}  // namespace

TEST_SUITE("traffic") {

TEST_CASE("activation masses integrate the Beta(3,4) density") {
  const auto m = activation_masses({3.0, 4.0, 937});
  REQUIRE(m.size() == 937);
  CHECK(std::accumulate(m.begin(), m.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : m) CHECK(x >= 0.0);
  // Beta(3,4) CDF = sum_{j=3}^{6} C(6,j) x^j (1-x)^(6-j); check one TTI by hand.
  auto cdf = [](double x) {
    double s = 0.0;
    const int c[7] = {1, 6, 15, 20, 15, 6, 1};
    for (int j = 3; j <= 6; ++j) s += c[j] * std::pow(x, j) * std::pow(1 - x, 6 - j);
    return s;
  };
  CHECK(m[374] == doctest::Approx(cdf(375.0 / 937) - cdf(374.0 / 937)).epsilon(1e-9));
  CHECK(activation_masses({3, 4, 1}) == std::vector<double>{1.0});
  CHECK_THROWS_AS(activation_masses({3, 4, 0}), ContractViolation);
}

TEST_CASE("sampled activations follow the profile") {
  RngStream rng(1, Stream::kTraffic);
  const auto t = sample_activation_ttis(30000, {3.0, 4.0, 937}, rng);
  REQUIRE(t.size() == 30000);
  for (int x : t) {
    REQUIRE(x >= 1);
    REQUIRE(x <= 937);
  }
  double mean = 0.0;
  for (int x : t) mean += (x - 0.5) / 937.0;
  mean /= 30000.0;
  CHECK(std::abs(mean - 3.0 / 7.0) < 0.01);

  // mode of a 20-TTI moving histogram
  std::vector<int> hist(938, 0);
  for (int x : t) ++hist[static_cast<std::size_t>(x)];
  int best = 0, best_t = 0;
  for (int c = 10; c <= 927; ++c) {
    int s = 0;
    for (int k = c - 10; k < c + 10; ++k) s += hist[static_cast<std::size_t>(k)];
    if (s > best) best = s, best_t = c;
  }
  CHECK(best_t >= 330);
  CHECK(best_t <= 420);

  const auto single = sample_activation_ttis(50, {3.0, 4.0, 1}, rng);
  CHECK(std::all_of(single.begin(), single.end(), [](int x) { return x == 1; }));
}

TEST_CASE("failure escalates after the per-group limit") {
  const SimConfig cfg;
  auto d = register_rach_failure(backlogged(0, 4, 4), cfg, 7);
  CHECK(d.ce_group == 1);
  CHECK(d.attempts_in_ce == 0);
  CHECK(d.attempts_total == 5);
  CHECK(d.state == DeviceState::kBacklogged);
  CHECK(d.next_attempt_tti == 8);

  d = register_rach_failure(backlogged(2, 4, 9), cfg, 7);
  CHECK(d.state == DeviceState::kDropped);

  d = register_rach_failure(backlogged(1, 0, 0), cfg, 7);
  CHECK(d.ce_group == 1);
  CHECK(d.attempts_in_ce == 1);
  CHECK(d.attempts_total == 1);
}

TEST_CASE("failure in the top group keeps the per-group counter bounded") {
  const SimConfig cfg;
  auto d = register_rach_failure(backlogged(2, 4, 5), cfg, 1);
  CHECK(d.ce_group == 2);
  CHECK(d.attempts_in_ce == cfg.max_attempts_per_ce);
  CHECK(d.state == DeviceState::kBacklogged);
}

TEST_CASE("backoff delays the next attempt") {
  SimConfig cfg;
  cfg.backoff_ttis = 3;
  const auto d = register_rach_failure(backlogged(0, 0, 0), cfg, 10);
  CHECK(d.next_attempt_tti == 14);
}

TEST_CASE("a device never exceeds the attempt limits") {
  const SimConfig cfg;
  auto d = backlogged(0, 0, 0);
  int prev_group = 0;
  int attempts = 0;
  while (d.state == DeviceState::kBacklogged) {
    d = register_rach_failure(d, cfg, attempts + 1);
    ++attempts;
    CHECK(d.ce_group >= prev_group);
    CHECK(d.attempts_in_ce <= cfg.max_attempts_per_ce);
    CHECK(d.attempts_total <= cfg.max_attempts);
    prev_group = d.ce_group;
  }
  CHECK(attempts == cfg.max_attempts);
  CHECK(d.state == DeviceState::kDropped);
}

TEST_CASE("success and state preconditions") {
  const SimConfig cfg;
  auto d = backlogged(1, 2, 3);
  d.rrc_wait = 3;
  const auto s = register_rach_success(d);
  CHECK(s.state == DeviceState::kConnectedWaiting);
  CHECK(s.rrc_wait == 0);
  CHECK(s.attempts_total == 3);
  CHECK(s.attempts_in_ce == 2);
  CHECK_THROWS_AS(register_rach_success(s), ContractViolation);
  CHECK_THROWS_AS(register_rach_failure(s, cfg, 1), ContractViolation);
  Device idle;
  CHECK_THROWS_AS(register_rach_failure(idle, cfg, 1), ContractViolation);
}

TEST_CASE("backlog collection") {
  std::vector<Device> devs(3);
  for (int i = 0; i < 3; ++i) {
    devs[static_cast<std::size_t>(i)].id = i;
    devs[static_cast<std::size_t>(i)].initial_group = i;
    devs[static_cast<std::size_t>(i)].ce_group = i;
  }
  devs[0].activation_tti = 2;
  devs[1].activation_tti = 2;
  devs[2].activation_tti = 5;
  Population pop(devs, 10);
  const SimConfig cfg;

  std::array<int, kNumGroups> arrivals{};
  CHECK(pop.backlogged_at(1, &arrivals).empty());
  CHECK(arrivals == std::array<int, 3>{0, 0, 0});

  const auto at2 = pop.backlogged_at(2, &arrivals);
  CHECK(at2 == std::vector<int>{0, 1});
  CHECK(arrivals == std::array<int, 3>{1, 1, 0});
  CHECK(pop[0].state == DeviceState::kBacklogged);

  pop[0] = register_rach_failure(pop[0], cfg, 2);
  pop[1] = register_rach_success(pop[1]);
  CHECK(pop.backlogged_at(3) == std::vector<int>{0});
  const auto counts = pop.state_counts();
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 3);
  CHECK(counts[static_cast<std::size_t>(DeviceState::kIdle)] == 1);
}

TEST_CASE("RRC expiry") {
  SimConfig cfg;
  std::vector<Device> devs(3);
  for (int i = 0; i < 3; ++i) {
    devs[static_cast<std::size_t>(i)].id = i;
    devs[static_cast<std::size_t>(i)].state = DeviceState::kConnectedWaiting;
  }
  devs[0].rrc_wait = 4;
  devs[1].rrc_wait = 0;
  devs[2].state = DeviceState::kServed;
  Population pop(devs, 5);
  const std::vector<int> unserved{0, 1};
  const auto r = expire_rrc(pop, unserved, cfg);
  CHECK(r.dropped == std::vector<int>{0});
  CHECK(r.retained == std::vector<int>{1});
  CHECK(pop[0].state == DeviceState::kDropped);
  CHECK(pop[1].rrc_wait == 1);
  CHECK(pop[2].state == DeviceState::kServed);
  CHECK(pop[2].rrc_wait == 0);
}

TEST_CASE("success then repeated non-service drops after the retention limit") {
  SimConfig cfg;
  std::vector<Device> devs(1);
  devs[0].state = DeviceState::kBacklogged;
  Population pop(devs, 5);
  pop[0] = register_rach_success(pop[0]);
  const std::vector<int> ids{0};
  for (int k = 1; k < cfg.max_rrc_wait; ++k) {
    CHECK(expire_rrc(pop, ids, cfg).retained.size() == 1);
    CHECK(pop[0].rrc_wait == k);
  }
  CHECK(expire_rrc(pop, ids, cfg).dropped.size() == 1);
  CHECK(pop[0].rrc_wait == cfg.max_rrc_wait);
}

TEST_CASE("activation schedule export") {
  std::vector<Device> devs(2);
  devs[0] = {.id = 0, .activation_tti = 4};
  devs[1] = {.id = 1, .activation_tti = 2};
  Population pop(devs, 5);
  CHECK(activation_schedule_csv(pop) == "tti,device_id\n2,1\n4,0\n");
}

}
