#include "nbiot/mlp.hpp"

#include <cmath>

#include "nbiot/config.hpp"

namespace nbiot {

Mlp::Mlp(std::vector<int> sizes, kernels::Backend backend) : sizes_(std::move(sizes)), backend_(backend) {
  if (sizes_.size() < 2) throw ContractViolation("Mlp needs at least an input and an output layer");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    DenseLayer layer;
    layer.in = sizes_[l];
    layer.out = sizes_[l + 1];
    if (layer.in <= 0 || layer.out <= 0) throw ContractViolation("Mlp layer widths must be positive");
    layer.w.assign(static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out), 0.0);
    layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
    layers_.push_back(std::move(layer));
  }
}

void Mlp::init_uniform(RngStream& rng) {
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / layer.in);
    for (auto& w : layer.w) w = (2.0 * rng.uniform() - 1.0) * limit;
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.w.size() + l.b.size();
  return n;
}

std::vector<double> Mlp::forward(std::span<const double> x) const { return forward_batch(x, 1); }

std::vector<double> Mlp::forward_batch(std::span<const double> x, int batch) const {
  Tape tape;
  forward_tape(x, batch, tape);
  return std::move(tape.acts.back());
}

void Mlp::forward_tape(std::span<const double> x, int batch, Tape& tape) const {
  if (batch <= 0 || x.size() != static_cast<std::size_t>(batch) * static_cast<std::size_t>(input_size())) {
    throw ContractViolation("Mlp::forward: input length does not match the network");
  }
  tape.batch = batch;
  tape.acts.resize(layers_.size() + 1);
  tape.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const bool hidden = l + 1 < layers_.size();
    auto& y = tape.acts[l + 1];
    y.resize(static_cast<std::size_t>(batch) * static_cast<std::size_t>(layer.out));
    kernels::dense_forward(backend_, {batch, layer.in, layer.out}, layer.w, layer.b, tape.acts[l], y, hidden);
  }
}

ParamBuffers Mlp::zero_like() const {
  ParamBuffers p;
  for (const auto& l : layers_) {
    p.w.emplace_back(l.w.size(), 0.0);
    p.b.emplace_back(l.b.size(), 0.0);
  }
  return p;
}

void Mlp::backward(const Tape& tape, std::span<const double> d_out, ParamBuffers& grads) const {
  const int batch = tape.batch;
  if (d_out.size() != static_cast<std::size_t>(batch) * static_cast<std::size_t>(output_size())) {
    throw ContractViolation("Mlp::backward: gradient length does not match the output");
  }
  if (grads.w.size() != layers_.size()) grads = zero_like();

  std::vector<double> dy(d_out.begin(), d_out.end());
  std::vector<double> dx;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const bool need_dx = l > 0;
    dx.assign(need_dx ? static_cast<std::size_t>(batch) * static_cast<std::size_t>(layer.in) : 0, 0.0);
    kernels::dense_backward(backend_, {batch, layer.in, layer.out}, layer.w, tape.acts[l], dy, grads.w[l],
                            grads.b[l], dx);
    if (need_dx) {
      // acts[l] is the ReLU output of layer l-1.
      kernels::relu_backward(tape.acts[l], dx);
      dy.swap(dx);
    }
  }
}

RmsPropState::RmsPropState(const Mlp& net, double lr, double decay_rate, double eps)
    : cache(net.zero_like()), learning_rate(lr), decay(decay_rate), epsilon(eps) {}

void RmsPropState::apply(Mlp& net, const ParamBuffers& grads) {
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    kernels::rmsprop_update(net.backend(), layers[l].w, grads.w[l], cache.w[l], learning_rate, decay, epsilon);
    kernels::rmsprop_update(net.backend(), layers[l].b, grads.b[l], cache.b[l], learning_rate, decay, epsilon);
  }
}

}  // namespace nbiot
