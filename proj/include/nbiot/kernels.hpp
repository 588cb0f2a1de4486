#pragma once

#include <span>

// Dense-layer kernels in two builds: a plain serial reference and an
// OpenMP version. Both evaluate every output element with the same
// accumulation order, so their results are bit-identical; the serial one
// is the oracle in tests and the baseline in the benchmark.
//
// Layouts are row-major: W is out x in, X is batch x in, Y is batch x out.
namespace nbiot::kernels {

enum class Backend { kSerial, kOpenMP };

struct DenseShape {
  int batch = 1;
  int in = 1;
  int out = 1;
};

namespace serial {
// Y = X W^T + b, optionally followed by ReLU.
void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu);
// dW = dY^T X, db = column sums of dY, dX = dY W (skipped when dx is empty).
void dense_backward(DenseShape s, std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx);
// cache = decay*cache + (1-decay)*g^2;  p -= lr * g / (sqrt(cache) + eps)
void rmsprop_update(std::span<double> param, std::span<const double> grad, std::span<double> cache, double lr,
                    double decay, double eps);
}  // namespace serial

namespace omp {
// Y = X W^T + b, optionally followed by ReLU.
void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu);
// dW = dY^T X, db = column sums of dY, dX = dY W (skipped when dx is empty).
void dense_backward(DenseShape s, std::span<const double> w, std::span<const double> x, std::span<const double> dy,
                    std::span<double> dw, std::span<double> db, std::span<double> dx);
// cache = decay*cache + (1-decay)*g^2;  p -= lr * g / (sqrt(cache) + eps)
void rmsprop_update(std::span<double> param, std::span<const double> grad, std::span<double> cache, double lr,
                    double decay, double eps);
}  // namespace omp

// Zeroes dY where the forward ReLU output was not positive.
void relu_backward(std::span<const double> y, std::span<double> dy);

void dense_forward(Backend be, DenseShape s, std::span<const double> w, std::span<const double> b,
                   std::span<const double> x, std::span<double> y, bool relu);
void dense_backward(Backend be, DenseShape s, std::span<const double> w, std::span<const double> x,
                    std::span<const double> dy, std::span<double> dw, std::span<double> db, std::span<double> dx);
void rmsprop_update(Backend be, std::span<double> param, std::span<const double> grad, std::span<double> cache,
                    double lr, double decay, double eps);

// True when the library was built with OpenMP.
bool openmp_enabled();
int max_threads();

}  // namespace nbiot::kernels
