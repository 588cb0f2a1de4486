#pragma once

// Per-row bodies shared by the serial and OpenMP kernels. Keeping a single
// definition guarantees both builds accumulate in the same order.

#include <cmath>
#include <cstring>

#include "nbiot/kernels.hpp"

namespace nbiot::kernels::rows {

// Eight-lane partial sums folded in a fixed order: SIMD-friendly without
// reassociation flags, and reproducible.
using Lanes = double __attribute__((vector_size(64)));
constexpr int kLanes = 8;

inline Lanes load_lanes(const double* p) {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline double fold(Lanes p) { return ((p[0] + p[4]) + (p[1] + p[5])) + ((p[2] + p[6]) + (p[3] + p[7])); }

inline Lanes tail_lanes(const double* a, const double* b, int from, int n) {
  Lanes t = {};
  for (int i = from, k = 0; i < n; ++i, ++k) t[k] = a[i] * b[i];
  return t;
}

inline double dot(const double* a, const double* b, int n) {
  const int main_end = n - n % kLanes;
  Lanes acc = {};
  for (int i = 0; i < main_end; i += kLanes) acc += load_lanes(a + i) * load_lanes(b + i);
  return fold(acc + tail_lanes(a, b, main_end, n));
}

// R batch rows x C outputs held in registers; every element's sum is formed
// exactly as in dot(), so the tiling never changes results.
template <int R, int C>
inline void forward_tile(const DenseShape& s, const double* w, const double* b, const double* x, double* y,
                         bool relu, int n0, int o0) {
  const int main_end = s.in - s.in % kLanes;
  const double* xr[R];
  const double* wr[C];
  for (int r = 0; r < R; ++r) xr[r] = x + static_cast<long>(n0 + r) * s.in;
  for (int c = 0; c < C; ++c) wr[c] = w + static_cast<long>(o0 + c) * s.in;
  Lanes acc[R][C] = {};
  for (int i = 0; i < main_end; i += kLanes) {
    Lanes wv[C];
    for (int c = 0; c < C; ++c) wv[c] = load_lanes(wr[c] + i);
    for (int r = 0; r < R; ++r) {
      const Lanes xv = load_lanes(xr[r] + i);
      for (int c = 0; c < C; ++c) acc[r][c] += wv[c] * xv;
    }
  }
  for (int r = 0; r < R; ++r) {
    for (int c = 0; c < C; ++c) {
      const double v = fold(acc[r][c] + tail_lanes(wr[c], xr[r], main_end, s.in)) + b[o0 + c];
      y[static_cast<long>(n0 + r) * s.out + o0 + c] = relu && v < 0.0 ? 0.0 : v;
    }
  }
}

template <int R>
inline void forward_rows_fixed(const DenseShape& s, const double* w, const double* b, const double* x, double* y,
                               bool relu, int n0) {
  int o = 0;
  for (; o + 4 <= s.out; o += 4) forward_tile<R, 4>(s, w, b, x, y, relu, n0, o);
  for (; o < s.out; ++o) forward_tile<R, 1>(s, w, b, x, y, relu, n0, o);
}

// Rows [n0, n1) of Y = X W^T + b.
inline void forward_rows(const DenseShape& s, const double* w, const double* b, const double* x, double* y,
                         bool relu, int n0, int n1) {
  int n = n0;
  for (; n + 4 <= n1; n += 4) forward_rows_fixed<4>(s, w, b, x, y, relu, n);
  for (; n < n1; ++n) forward_rows_fixed<1>(s, w, b, x, y, relu, n);
}

// Gradient of output neuron o: row o of dW and db[o].
inline void weight_grad_row(const DenseShape& s, const double* x, const double* dy, int o, double* dw_row,
                            double* db_o) {
  for (int i = 0; i < s.in; ++i) dw_row[i] = 0.0;
  double bsum = 0.0;
  for (int n = 0; n < s.batch; ++n) {
    const double g = dy[static_cast<long>(n) * s.out + o];
    bsum += g;
    const double* x_row = x + static_cast<long>(n) * s.in;
    for (int i = 0; i < s.in; ++i) dw_row[i] += g * x_row[i];
  }
  *db_o = bsum;
}

inline void input_grad_row(const DenseShape& s, const double* w, const double* dy_row, double* dx_row) {
  for (int i = 0; i < s.in; ++i) dx_row[i] = 0.0;
  for (int o = 0; o < s.out; ++o) {
    const double g = dy_row[o];
    const double* w_row = w + static_cast<long>(o) * s.in;
    for (int i = 0; i < s.in; ++i) dx_row[i] += g * w_row[i];
  }
}

inline void rmsprop_element(double& p, double g, double& c, double lr, double decay, double eps) {
  c = decay * c + (1.0 - decay) * g * g;
  p -= lr * g / (std::sqrt(c) + eps);
}

}  // namespace nbiot::kernels::rows
