#pragma once

// Layer kinds and their forward/backward rules. Backward is hand-derived and
// verified against central finite differences in the test suite.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/rng.hpp"
#include "odlab/tensor.hpp"

namespace odlab {

enum class LayerKind {
  dense,
  conv3x3,      // stride 1, padding 1
  relu,
  maxpool2x2,
  flatten,
  bottleneck2d  // dense layer with exactly 2 outputs, activations exported
};

inline std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2x2: return "maxpool2x2";
    case LayerKind::flatten: return "flatten";
    case LayerKind::bottleneck2d: return "bottleneck2d";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;   // dense/bottleneck2d: input width; conv3x3: input channels
  std::size_t out = 0;  // dense: output width; conv3x3: output channels

  static LayerSpec dense(std::size_t in, std::size_t out) {
    return {LayerKind::dense, in, out};
  }
  static LayerSpec conv3x3(std::size_t in_ch, std::size_t out_ch) {
    return {LayerKind::conv3x3, in_ch, out_ch};
  }
  static LayerSpec relu() { return {LayerKind::relu, 0, 0}; }
  static LayerSpec maxpool2x2() { return {LayerKind::maxpool2x2, 0, 0}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, 0}; }
  static LayerSpec bottleneck2d(std::size_t in) {
    return {LayerKind::bottleneck2d, in, 2};
  }

  bool has_params() const {
    return kind == LayerKind::dense || kind == LayerKind::conv3x3 ||
           kind == LayerKind::bottleneck2d;
  }

  std::string describe() const {
    std::string s = layer_kind_name(kind);
    if (has_params()) {
      s += "(" + std::to_string(in) + "," + std::to_string(out) + ")";
    }
    return s;
  }
};

// A layer instance: spec plus parameters (empty tensors when parameterless).
class Layer {
 public:
  explicit Layer(LayerSpec spec) : spec_(spec) {
    switch (spec_.kind) {
      case LayerKind::dense:
      case LayerKind::bottleneck2d:
        weight_ = Tensor({spec_.out, spec_.in});
        bias_ = Tensor({spec_.out});
        break;
      case LayerKind::conv3x3:
        weight_ = Tensor({spec_.out, spec_.in, 3, 3});
        bias_ = Tensor({spec_.out});
        break;
      default:
        break;
    }
  }

  const LayerSpec& spec() const { return spec_; }
  bool has_params() const { return spec_.has_params(); }
  Tensor& weight() { return weight_; }
  const Tensor& weight() const { return weight_; }
  Tensor& bias() { return bias_; }
  const Tensor& bias() const { return bias_; }

  // Fan-in used for the initialization scale.
  std::size_t fan_in() const {
    switch (spec_.kind) {
      case LayerKind::dense:
      case LayerKind::bottleneck2d:
        return spec_.in;
      case LayerKind::conv3x3:
        return spec_.in * 9;
      default:
        return 0;
    }
  }

  // Weights uniform with standard deviation exactly 1/sqrt(fan_in);
  // biases zero.
  void init_params(Rng& rng) {
    if (!has_params()) return;
    const double bound = std::sqrt(3.0) / std::sqrt(double(fan_in()));
    for (double& w : weight_.values()) w = rng.uniform(-bound, bound);
    for (double& b : bias_.values()) b = 0.0;
  }

  Tensor forward(const Tensor& x) const {
    switch (spec_.kind) {
      case LayerKind::dense:
      case LayerKind::bottleneck2d:
        return dense_forward(x);
      case LayerKind::conv3x3:
        return conv_forward(x);
      case LayerKind::relu:
        return relu_forward(x);
      case LayerKind::maxpool2x2:
        return pool_forward(x);
      case LayerKind::flatten:
        return flatten_forward(x);
    }
    throw std::logic_error("unreachable");
  }

  // Returns grad wrt the input; accumulates parameter grads into
  // grad_weight/grad_bias (which must be zero-initialized to the param
  // shapes, or empty for parameterless layers).
  Tensor backward(const Tensor& x, const Tensor& grad_y, Tensor* grad_weight,
                  Tensor* grad_bias) const {
    switch (spec_.kind) {
      case LayerKind::dense:
      case LayerKind::bottleneck2d:
        return dense_backward(x, grad_y, grad_weight, grad_bias);
      case LayerKind::conv3x3:
        return conv_backward(x, grad_y, grad_weight, grad_bias);
      case LayerKind::relu:
        return relu_backward(x, grad_y);
      case LayerKind::maxpool2x2:
        return pool_backward(x, grad_y);
      case LayerKind::flatten: {
        return Tensor(x.shape(), grad_y.values());
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  [[noreturn]] void input_error(const Tensor& x, const std::string& want) const {
    throw std::invalid_argument(spec_.describe() + ": expected input " + want +
                                ", got " + shape_str(x.shape()));
  }

  Tensor dense_forward(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != spec_.in) {
      input_error(x, "[B," + std::to_string(spec_.in) + "]");
    }
    const std::size_t B = x.dim(0), in = spec_.in, out = spec_.out;
    Tensor y({B, out});
    for (std::size_t b = 0; b < B; ++b) {
      const double* xb = x.data() + b * in;
      double* yb = y.data() + b * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = weight_.data() + o * in;
        double acc = bias_[o];
        for (std::size_t i = 0; i < in; ++i) acc += w[i] * xb[i];
        yb[o] = acc;
      }
    }
    return y;
  }

  Tensor dense_backward(const Tensor& x, const Tensor& grad_y,
                        Tensor* grad_weight, Tensor* grad_bias) const {
    const std::size_t B = x.dim(0), in = spec_.in, out = spec_.out;
    Tensor grad_x({B, in});
    for (std::size_t b = 0; b < B; ++b) {
      const double* xb = x.data() + b * in;
      const double* gy = grad_y.data() + b * out;
      double* gx = grad_x.data() + b * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = gy[o];
        const double* w = weight_.data() + o * in;
        double* gw = grad_weight->data() + o * in;
        (*grad_bias)[o] += g;
        for (std::size_t i = 0; i < in; ++i) {
          gw[i] += g * xb[i];
          gx[i] += g * w[i];
        }
      }
    }
    return grad_x;
  }

  Tensor conv_forward(const Tensor& x) const {
    if (x.rank() != 4 || x.dim(1) != spec_.in) {
      input_error(x, "[B," + std::to_string(spec_.in) + ",H,W]");
    }
    const std::size_t B = x.dim(0), Cin = spec_.in, H = x.dim(2), W = x.dim(3);
    const std::size_t Cout = spec_.out;
    Tensor y({B, Cout, H, W});
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t co = 0; co < Cout; ++co) {
        for (std::size_t i = 0; i < H; ++i) {
          for (std::size_t j = 0; j < W; ++j) {
            double acc = bias_[co];
            for (std::size_t ci = 0; ci < Cin; ++ci) {
              for (int di = -1; di <= 1; ++di) {
                const int ii = int(i) + di;
                if (ii < 0 || ii >= int(H)) continue;
                for (int dj = -1; dj <= 1; ++dj) {
                  const int jj = int(j) + dj;
                  if (jj < 0 || jj >= int(W)) continue;
                  acc += weight_(co, ci, std::size_t(di + 1),
                                 std::size_t(dj + 1)) *
                         x(b, ci, std::size_t(ii), std::size_t(jj));
                }
              }
            }
            y(b, co, i, j) = acc;
          }
        }
      }
    }
    return y;
  }

  Tensor conv_backward(const Tensor& x, const Tensor& grad_y,
                       Tensor* grad_weight, Tensor* grad_bias) const {
    const std::size_t B = x.dim(0), Cin = spec_.in, H = x.dim(2), W = x.dim(3);
    const std::size_t Cout = spec_.out;
    Tensor grad_x(x.shape());
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t co = 0; co < Cout; ++co) {
        for (std::size_t i = 0; i < H; ++i) {
          for (std::size_t j = 0; j < W; ++j) {
            const double g = grad_y(b, co, i, j);
            (*grad_bias)[co] += g;
            for (std::size_t ci = 0; ci < Cin; ++ci) {
              for (int di = -1; di <= 1; ++di) {
                const int ii = int(i) + di;
                if (ii < 0 || ii >= int(H)) continue;
                for (int dj = -1; dj <= 1; ++dj) {
                  const int jj = int(j) + dj;
                  if (jj < 0 || jj >= int(W)) continue;
                  (*grad_weight)(co, ci, std::size_t(di + 1),
                                 std::size_t(dj + 1)) +=
                      g * x(b, ci, std::size_t(ii), std::size_t(jj));
                  grad_x(b, ci, std::size_t(ii), std::size_t(jj)) +=
                      g * weight_(co, ci, std::size_t(di + 1),
                                  std::size_t(dj + 1));
                }
              }
            }
          }
        }
      }
    }
    return grad_x;
  }

  Tensor relu_forward(const Tensor& x) const {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
  }

  Tensor relu_backward(const Tensor& x, const Tensor& grad_y) const {
    Tensor grad_x(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      grad_x[i] = x[i] > 0.0 ? grad_y[i] : 0.0;
    }
    return grad_x;
  }

  Tensor pool_forward(const Tensor& x) const {
    if (x.rank() != 4) input_error(x, "[B,C,H,W]");
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H < 2 || W < 2) input_error(x, "[B,C,H>=2,W>=2]");
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor y({B, C, Ho, Wo});
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < Ho; ++i) {
          for (std::size_t j = 0; j < Wo; ++j) {
            double m = x(b, c, 2 * i, 2 * j);
            m = std::max(m, x(b, c, 2 * i, 2 * j + 1));
            m = std::max(m, x(b, c, 2 * i + 1, 2 * j));
            m = std::max(m, x(b, c, 2 * i + 1, 2 * j + 1));
            y(b, c, i, j) = m;
          }
        }
      }
    }
    return y;
  }

  // Gradient is routed to the first maximum in window scan order.
  Tensor pool_backward(const Tensor& x, const Tensor& grad_y) const {
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor grad_x(x.shape());
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < Ho; ++i) {
          for (std::size_t j = 0; j < Wo; ++j) {
            std::size_t bi = 2 * i, bj = 2 * j;
            double best = x(b, c, bi, bj);
            const std::size_t ii[4] = {2 * i, 2 * i, 2 * i + 1, 2 * i + 1};
            const std::size_t jj[4] = {2 * j, 2 * j + 1, 2 * j, 2 * j + 1};
            for (int k = 1; k < 4; ++k) {
              double v = x(b, c, ii[k], jj[k]);
              if (v > best) {
                best = v;
                bi = ii[k];
                bj = jj[k];
              }
            }
            grad_x(b, c, bi, bj) += grad_y(b, c, i, j);
          }
        }
      }
    }
    return grad_x;
  }

  Tensor flatten_forward(const Tensor& x) const {
    if (x.rank() < 2) input_error(x, "[B,...]");
    const std::size_t B = x.dim(0);
    return Tensor({B, x.size() / B}, x.values());
  }

  LayerSpec spec_;
  Tensor weight_;
  Tensor bias_;
};

}  // namespace odlab
