#include "kernel_rows.hpp"

namespace nbiot::kernels::serial {

void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu) {
  rows::forward_rows(s, w.data(), b.data(), x.data(), y.data(), relu, 0, s.batch);
}

void dense_backward(DenseShape s, std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx) {
  for (int o = 0; o < s.out; ++o) {
    rows::weight_grad_row(s, x.data(), dy.data(), o, dw.data() + static_cast<long>(o) * s.in, db.data() + o);
  }
  if (dx.empty()) return;
  for (int n = 0; n < s.batch; ++n) {
    rows::input_grad_row(s, w.data(), dy.data() + static_cast<long>(n) * s.out,
                         dx.data() + static_cast<long>(n) * s.in);
  }
}

void rmsprop_update(std::span<double> param, std::span<const double> grad, std::span<double> cache, double lr,
                    double decay, double eps) {
  for (std::size_t i = 0; i < param.size(); ++i) rows::rmsprop_element(param[i], grad[i], cache[i], lr, decay, eps);
}

}  // namespace nbiot::kernels::serial
