#pragma once

// SGD with momentum and coupled L2 weight decay, plus the step learning-rate
// schedule. Weight decay enters the velocity update (classic L2-in-gradient):
//   v <- momentum*v + grad + weight_decay*param
//   param <- param - lr*v

#include <stdexcept>
#include <vector>

#include "odlab/network.hpp"
#include "odlab/tensor.hpp"

namespace odlab {

struct OptState {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::vector<Tensor> velocity_w;  // aligned with network layers
  std::vector<Tensor> velocity_b;

  OptState() = default;
  OptState(const Network& net, double lr, double momentum, double weight_decay)
      : lr(lr), momentum(momentum), weight_decay(weight_decay) {
    velocity_w.resize(net.layers().size());
    velocity_b.resize(net.layers().size());
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
      if (net.layers()[i].has_params()) {
        velocity_w[i] = Tensor(net.layers()[i].weight().shape());
        velocity_b[i] = Tensor(net.layers()[i].bias().shape());
      }
    }
  }
};

namespace detail {
inline void sgd_update(Tensor& param, const Tensor& grad, Tensor& vel,
                       const OptState& opt) {
  if (!grad.same_shape(param) || !vel.same_shape(param)) {
    throw std::invalid_argument("sgd_step: gradient shape " +
                                shape_str(grad.shape()) +
                                " does not mirror parameter shape " +
                                shape_str(param.shape()));
  }
  double* p = param.data();
  const double* g = grad.data();
  double* v = vel.data();
  for (std::size_t k = 0; k < param.size(); ++k) {
    v[k] = opt.momentum * v[k] + g[k] + opt.weight_decay * p[k];
    p[k] -= opt.lr * v[k];
  }
}
}  // namespace detail

inline void sgd_step(Network& net, const ParamGrads& grads, OptState& opt) {
  if (grads.weight.size() != net.layers().size() ||
      opt.velocity_w.size() != net.layers().size()) {
    throw std::invalid_argument("sgd_step: grads/state do not match network");
  }
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    if (!net.layers()[i].has_params()) continue;
    detail::sgd_update(net.layers()[i].weight(), grads.weight[i],
                       opt.velocity_w[i], opt);
    detail::sgd_update(net.layers()[i].bias(), grads.bias[i],
                       opt.velocity_b[i], opt);
  }
}

// lr(epoch) = initial_lr * factor^(number of milestones <= epoch).
// Milestones must be strictly increasing; factor in (0, 1].
inline double step_lr(double initial_lr, std::size_t epoch,
                      const std::vector<std::size_t>& milestones,
                      double factor) {
  double lr = initial_lr;
  for (std::size_t m : milestones) {
    if (m <= epoch) lr *= factor;
  }
  return lr;
}

}  // namespace odlab
