#pragma once

// Ordered layer stack with deterministic initialization, forward pass with a
// cached activation trace, and exact manual backpropagation.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/layers.hpp"
#include "odlab/rng.hpp"
#include "odlab/tensor.hpp"

namespace odlab {

// Everything backward needs, plus the feature map of the last conv layer and
// the bottleneck output for the measurement modules.
struct ActivationTrace {
  Tensor input;
  std::vector<Tensor> outputs;     // outputs[i] = output of layer i
  int last_conv_index = -1;
  int bottleneck_index = -1;

  const Tensor& logits() const { return outputs.back(); }
};

struct ParamGrads {
  std::vector<Tensor> weight;  // aligned with layers; empty when layer has none
  std::vector<Tensor> bias;
};

class Network {
 public:
  // Validates shape compatibility end to end for the given per-sample input
  // shape ([D] for dense stacks, [C,H,W] for conv stacks) and initializes
  // parameters as a pure function of (specs, seed).
  Network(std::vector<LayerSpec> specs, std::vector<std::size_t> input_shape,
          std::uint64_t seed)
      : input_shape_(std::move(input_shape)), seed_(seed) {
    if (specs.empty()) throw std::invalid_argument("network: no layers");
    validate(specs, input_shape_);
    layers_.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
      layers_.emplace_back(specs[i]);
      Rng rng = Rng::keyed(seed_, "init", i);
      layers_.back().init_params(rng);
      if (specs[i].kind == LayerKind::conv3x3) last_conv_ = int(i);
      if (specs[i].kind == LayerKind::bottleneck2d) bottleneck_ = int(i);
    }
  }

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<std::size_t>& input_shape() const { return input_shape_; }
  std::uint64_t seed() const { return seed_; }
  int last_conv_index() const { return last_conv_; }
  int bottleneck_index() const { return bottleneck_; }

  std::size_t n_outputs() const { return output_width_; }

  // Symbolic per-sample shape propagation; throws naming both offending
  // layers on any mismatch.
  static std::vector<std::size_t> propagate_shape(
      const std::vector<LayerSpec>& specs,
      const std::vector<std::size_t>& input_shape) {
    std::vector<std::size_t> cur = input_shape;
    std::string prev = "input " + shape_str(input_shape);
    int bottlenecks = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const LayerSpec& s = specs[i];
      const std::string who =
          "layer " + std::to_string(i) + " " + s.describe();
      auto fail = [&]() {
        throw std::invalid_argument("network: " + who +
                                    " incompatible with " + prev +
                                    " (shape " + shape_str(cur) + ")");
      };
      switch (s.kind) {
        case LayerKind::dense:
        case LayerKind::bottleneck2d: {
          std::size_t width = flat_size(cur);
          if (cur.size() != 1 || width != s.in) fail();
          if (s.kind == LayerKind::bottleneck2d) {
            if (s.out != 2) {
              throw std::invalid_argument("network: " + who +
                                          " must have exactly 2 outputs");
            }
            if (++bottlenecks > 1) {
              throw std::invalid_argument(
                  "network: more than one bottleneck2d layer");
            }
          }
          cur = {s.out};
          break;
        }
        case LayerKind::conv3x3:
          if (cur.size() != 3 || cur[0] != s.in) fail();
          cur = {s.out, cur[1], cur[2]};
          break;
        case LayerKind::relu:
          break;
        case LayerKind::maxpool2x2:
          if (cur.size() != 3 || cur[1] < 2 || cur[2] < 2) fail();
          cur = {cur[0], cur[1] / 2, cur[2] / 2};
          break;
        case LayerKind::flatten:
          if (cur.empty()) fail();
          cur = {flat_size(cur)};
          break;
      }
      prev = who;
    }
    if (cur.size() != 1) {
      throw std::invalid_argument(
          "network: final layer must produce a flat [N] output, got " +
          shape_str(cur));
    }
    return cur;
  }

  std::pair<Tensor, ActivationTrace> forward(const Tensor& x) const {
    check_input(x);
    ActivationTrace trace;
    trace.input = x;
    trace.last_conv_index = last_conv_;
    trace.bottleneck_index = bottleneck_;
    trace.outputs.reserve(layers_.size());
    const Tensor* cur = &x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Tensor y = layers_[i].forward(*cur);
      if (!y.all_finite()) {
        throw std::runtime_error("network: non-finite value in output of layer " +
                                 std::to_string(i) + " (" +
                                 layers_[i].spec().describe() + ")");
      }
      trace.outputs.push_back(std::move(y));
      cur = &trace.outputs.back();
    }
    return {trace.outputs.back(), std::move(trace)};
  }

  ParamGrads backward(const ActivationTrace& trace,
                      const Tensor& grad_logits) const {
    if (trace.outputs.size() != layers_.size()) {
      throw std::invalid_argument("network: trace does not match this network");
    }
    if (!grad_logits.same_shape(trace.outputs.back())) {
      throw std::invalid_argument(
          "network: grad_logits shape " + shape_str(grad_logits.shape()) +
          " does not match logits shape " +
          shape_str(trace.outputs.back().shape()));
    }
    ParamGrads grads;
    grads.weight.resize(layers_.size());
    grads.bias.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].has_params()) {
        grads.weight[i] = Tensor(layers_[i].weight().shape());
        grads.bias[i] = Tensor(layers_[i].bias().shape());
      }
    }
    Tensor grad = grad_logits;
    for (std::size_t ri = layers_.size(); ri-- > 0;) {
      const Tensor& x = ri == 0 ? trace.input : trace.outputs[ri - 1];
      grad = layers_[ri].backward(
          x, grad, layers_[ri].has_params() ? &grads.weight[ri] : nullptr,
          layers_[ri].has_params() ? &grads.bias[ri] : nullptr);
      if (!grad.all_finite()) {
        throw std::runtime_error(
            "network: non-finite gradient below layer " + std::to_string(ri) +
            " (" + layers_[ri].spec().describe() + ")");
      }
    }
    return grads;
  }

  template <class Fn>
  void for_each_param(Fn&& fn) {
    for (Layer& l : layers_) {
      if (!l.has_params()) continue;
      fn(l.weight());
      fn(l.bias());
    }
  }

  template <class Fn>
  void for_each_param(Fn&& fn) const {
    for (const Layer& l : layers_) {
      if (!l.has_params()) continue;
      fn(l.weight());
      fn(l.bias());
    }
  }

 private:
  static std::size_t flat_size(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  void validate(const std::vector<LayerSpec>& specs,
                const std::vector<std::size_t>& input_shape) {
    std::vector<std::size_t> out = propagate_shape(specs, input_shape);
    output_width_ = out[0];
  }

  void check_input(const Tensor& x) const {
    bool ok = x.rank() == input_shape_.size() + 1 && x.dim(0) >= 1;
    if (ok) {
      for (std::size_t i = 0; i < input_shape_.size(); ++i) {
        if (x.dim(i + 1) != input_shape_[i]) ok = false;
      }
    }
    if (!ok) {
      throw std::invalid_argument("network: expected input [B]+" +
                                  shape_str(input_shape_) + ", got " +
                                  shape_str(x.shape()));
    }
  }

  std::vector<Layer> layers_;
  std::vector<std::size_t> input_shape_;
  std::uint64_t seed_ = 0;
  std::size_t output_width_ = 0;
  int last_conv_ = -1;
  int bottleneck_ = -1;
};

}  // namespace odlab
