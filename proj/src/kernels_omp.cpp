#include "kernel_rows.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nbiot::kernels::omp {
namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr long kMinParallelWork = 1L << 14;

bool worth_it(const DenseShape& s) { return static_cast<long>(s.batch) * s.in * s.out >= kMinParallelWork; }

}  // namespace

void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu) {
  // Tiles of four rows keep the register blocking of the serial kernel.
  const int tiles = (s.batch + 3) / 4;
#pragma omp parallel for schedule(static) if (worth_it(s))
  for (int t = 0; t < tiles; ++t) {
    rows::forward_rows(s, w.data(), b.data(), x.data(), y.data(), relu, 4 * t, std::min(s.batch, 4 * t + 4));
  }
}

void dense_backward(DenseShape s, std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx) {
  const bool par = worth_it(s);
#pragma omp parallel if (par)
  {
#pragma omp for schedule(static)
    for (int o = 0; o < s.out; ++o) {
      rows::weight_grad_row(s, x.data(), dy.data(), o, dw.data() + static_cast<long>(o) * s.in, db.data() + o);
    }
    if (!dx.empty()) {
#pragma omp for schedule(static)
      for (int n = 0; n < s.batch; ++n) {
        rows::input_grad_row(s, w.data(), dy.data() + static_cast<long>(n) * s.out,
                             dx.data() + static_cast<long>(n) * s.in);
      }
    }
  }
}

void rmsprop_update(std::span<double> param, std::span<const double> grad, std::span<double> cache, double lr,
                    double decay, double eps) {
  const long n = static_cast<long>(param.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallelWork)
  for (long i = 0; i < n; ++i) {
    rows::rmsprop_element(param[static_cast<std::size_t>(i)], grad[static_cast<std::size_t>(i)],
                          cache[static_cast<std::size_t>(i)], lr, decay, eps);
  }
}

}  // namespace nbiot::kernels::omp

namespace nbiot::kernels {

void relu_backward(std::span<const double> y, std::span<double> dy) {
  for (std::size_t i = 0; i < dy.size(); ++i) {
    if (!(y[i] > 0.0)) dy[i] = 0.0;
  }
}

void dense_forward(Backend be, DenseShape s, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> y, bool relu) {
  if (be == Backend::kOpenMP) {
    omp::dense_forward(s, w, b, x, y, relu);
  } else {
    serial::dense_forward(s, w, b, x, y, relu);
  }
}

void dense_backward(Backend be, DenseShape s, std::span<const double> w, std::span<const double> x,
                    std::span<const double> dy, std::span<double> dw, std::span<double> db, std::span<double> dx) {
  if (be == Backend::kOpenMP) {
    omp::dense_backward(s, w, x, dy, dw, db, dx);
  } else {
    serial::dense_backward(s, w, x, dy, dw, db, dx);
  }
}

void rmsprop_update(Backend be, std::span<double> param, std::span<const double> grad, std::span<double> cache,
                    double lr, double decay, double eps) {
  if (be == Backend::kOpenMP) {
    omp::rmsprop_update(param, grad, cache, lr, decay, eps);
  } else {
    serial::rmsprop_update(param, grad, cache, lr, decay, eps);
  }
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace nbiot::kernels
