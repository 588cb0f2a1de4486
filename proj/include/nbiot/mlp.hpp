#pragma once

#include <span>
#include <vector>

#include "nbiot/kernels.hpp"
#include "nbiot/rng.hpp"

namespace nbiot {

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Per-layer gradients (or any per-parameter buffer) shaped like an Mlp.
struct ParamBuffers {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;
};

// Fully connected network: ReLU on hidden layers, linear output.
class Mlp {
 public:
  Mlp() = default;
  // Zero-initialised network with the given layer widths (input first).
  explicit Mlp(std::vector<int> sizes, kernels::Backend backend = kernels::Backend::kOpenMP);

  // He-style uniform init: U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
  void init_uniform(RngStream& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  kernels::Backend backend() const { return backend_; }
  void set_backend(kernels::Backend be) { backend_ = be; }

  std::vector<double> forward(std::span<const double> x) const;
  // x is batch x input; returns batch x output.
  std::vector<double> forward_batch(std::span<const double> x, int batch) const;

  // Activations of every layer for one batch, kept for backprop.
  struct Tape {
    int batch = 0;
    std::vector<std::vector<double>> acts;  // acts[0] = input, acts.back() = output
  };
  void forward_tape(std::span<const double> x, int batch, Tape& tape) const;

  // Overwrites `grads` with dLoss/dParams given dLoss/dOutput (batch x output).
  void backward(const Tape& tape, std::span<const double> d_out, ParamBuffers& grads) const;

  ParamBuffers zero_like() const;

  friend bool operator==(const Mlp& a, const Mlp& b) { return a.sizes_ == b.sizes_ && a.layers_ == b.layers_; }

 private:
  std::vector<int> sizes_;
  std::vector<DenseLayer> layers_;
  kernels::Backend backend_ = kernels::Backend::kOpenMP;
};

struct RmsPropState {
  ParamBuffers cache;
  double learning_rate = 1e-4;
  double decay = 0.9;
  double epsilon = 1e-6;

  RmsPropState() = default;
  RmsPropState(const Mlp& net, double lr, double decay, double eps);

  void apply(Mlp& net, const ParamBuffers& grads);
};

}  // namespace nbiot
