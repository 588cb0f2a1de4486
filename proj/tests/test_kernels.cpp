#include <doctest.h>

#include <cmath>
#include <vector>

#include "nbiot/kernels.hpp"
#include "nbiot/rng.hpp"

using namespace nbiot;
using namespace nbiot::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
  return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  RngStream rng(1, "kernels");
  // odd sizes exercise the row/column tails of the tiled loops
  for (DenseShape s : {DenseShape{1, 96, 128}, DenseShape{32, 128, 128}, DenseShape{37, 13, 7},
                       DenseShape{256, 128, 4}, DenseShape{5, 3, 1}}) {
    const auto w = random_vec(static_cast<std::size_t>(s.in * s.out), rng);
    const auto b = random_vec(static_cast<std::size_t>(s.out), rng);
    const auto x = random_vec(static_cast<std::size_t>(s.batch * s.in), rng);
    const auto dy = random_vec(static_cast<std::size_t>(s.batch * s.out), rng);

    for (bool relu : {false, true}) {
      std::vector<double> y1(static_cast<std::size_t>(s.batch * s.out)), y2(y1.size());
      serial::dense_forward(s, w, b, x, y1, relu);
      omp::dense_forward(s, w, b, x, y2, relu);
      CHECK(y1 == y2);
    }

    std::vector<double> dw1(w.size()), db1(b.size()), dx1(x.size());
    std::vector<double> dw2(w.size()), db2(b.size()), dx2(x.size());
    serial::dense_backward(s, w, x, dy, dw1, db1, dx1);
    omp::dense_backward(s, w, x, dy, dw2, db2, dx2);
    CHECK(dw1 == dw2);
    CHECK(db1 == db2);
    CHECK(dx1 == dx2);

    auto p1 = w, p2 = w;
    std::vector<double> c1(w.size(), 0.1), c2(w.size(), 0.1);
    serial::rmsprop_update(p1, dw1, c1, 1e-3, 0.9, 1e-6);
    omp::rmsprop_update(p2, dw2, c2, 1e-3, 0.9, 1e-6);
    CHECK(p1 == p2);
    CHECK(c1 == c2);
  }
}

TEST_CASE("dense forward matches a naive reference") {
  RngStream rng(2, "kernels");
  const DenseShape s{9, 21, 6};
  const auto w = random_vec(static_cast<std::size_t>(s.in * s.out), rng);
  const auto b = random_vec(static_cast<std::size_t>(s.out), rng);
  const auto x = random_vec(static_cast<std::size_t>(s.batch * s.in), rng);
  std::vector<double> y(static_cast<std::size_t>(s.batch * s.out));
  dense_forward(Backend::kSerial, s, w, b, x, y, true);
  for (int n = 0; n < s.batch; ++n) {
    for (int o = 0; o < s.out; ++o) {
      double acc = b[static_cast<std::size_t>(o)];
      for (int i = 0; i < s.in; ++i) acc += w[static_cast<std::size_t>(o * s.in + i)] * x[static_cast<std::size_t>(n * s.in + i)];
      CHECK(y[static_cast<std::size_t>(n * s.out + o)] == doctest::Approx(std::max(0.0, acc)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dense backward matches a naive reference") {
  RngStream rng(3, "kernels");
  const DenseShape s{4, 11, 5};
  const auto w = random_vec(static_cast<std::size_t>(s.in * s.out), rng);
  const auto x = random_vec(static_cast<std::size_t>(s.batch * s.in), rng);
  const auto dy = random_vec(static_cast<std::size_t>(s.batch * s.out), rng);
  std::vector<double> dw(w.size()), db(static_cast<std::size_t>(s.out)), dx(x.size());
  dense_backward(Backend::kOpenMP, s, w, x, dy, dw, db, dx);
  for (int o = 0; o < s.out; ++o) {
    double bsum = 0;
    for (int n = 0; n < s.batch; ++n) bsum += dy[static_cast<std::size_t>(n * s.out + o)];
    CHECK(db[static_cast<std::size_t>(o)] == doctest::Approx(bsum));
    for (int i = 0; i < s.in; ++i) {
      double g = 0;
      for (int n = 0; n < s.batch; ++n) g += dy[static_cast<std::size_t>(n * s.out + o)] * x[static_cast<std::size_t>(n * s.in + i)];
      CHECK(dw[static_cast<std::size_t>(o * s.in + i)] == doctest::Approx(g));
    }
  }
  for (int n = 0; n < s.batch; ++n) {
    for (int i = 0; i < s.in; ++i) {
      double g = 0;
      for (int o = 0; o < s.out; ++o) g += dy[static_cast<std::size_t>(n * s.out + o)] * w[static_cast<std::size_t>(o * s.in + i)];
      CHECK(dx[static_cast<std::size_t>(n * s.in + i)] == doctest::Approx(g));
    }
  }
  // dX is optional
  std::vector<double> dw2(w.size()), db2(db.size());
  dense_backward(Backend::kSerial, s, w, x, dy, dw2, db2, {});
  CHECK(dw2 == dw);
}

TEST_CASE("rmsprop step") {
  std::vector<double> p{1.0, -2.0, 0.5}, g{0.5, 0.0, -1.0}, c{0.0, 1.0, 0.0};
  rmsprop_update(Backend::kSerial, p, g, c, 0.1, 0.9, 1e-6);
  CHECK(c[0] == doctest::Approx(0.1 * 0.25));
  CHECK(c[1] == doctest::Approx(0.9));
  CHECK(p[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (std::sqrt(0.025) + 1e-6)));
  CHECK(p[1] == -2.0);
  CHECK(p[2] == doctest::Approx(0.5 + 0.1 / (std::sqrt(0.1) + 1e-6)));
}

TEST_CASE("relu backward masks inactive units") {
  const std::vector<double> y{0.0, 2.0, -1.0, 0.5};
  std::vector<double> dy{1.0, 1.0, 1.0, 1.0};
  relu_backward(y, dy);
  CHECK(dy == std::vector<double>{0.0, 1.0, 0.0, 1.0});
}

}
