#pragma once

// Shared test oracles: central finite differences and instance generators
// kept away from ReLU/maxpool kinks so numerical derivatives are valid.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "odlab/network.hpp"
#include "odlab/rng.hpp"
#include "odlab/tensor.hpp"

namespace odlab::test {

inline double rel_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// Central finite difference of f with respect to *x.
template <class F>
double central_diff(F&& f, double* x, double step = 1e-4) {
  const double saved = *x;
  *x = saved + step;
  const double up = f();
  *x = saved - step;
  const double down = f();
  *x = saved;
  return (up - down) / (2.0 * step);
}

// Max relative error between an analytic gradient tensor and finite
// differences of `loss` over every entry of `param`.
template <class LossFn>
double max_grad_error(LossFn&& loss, Tensor& param, const Tensor& analytic,
                      double step = 1e-4) {
  if (!analytic.same_shape(param)) {
    throw std::logic_error("gradcheck: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double numeric = central_diff(loss, &param.values()[k], step);
    worst = std::max(worst, rel_error(analytic[k], numeric));
  }
  return worst;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = rng.uniform(lo, hi);
  return t;
}

// True when every relu input is bounded away from 0 and every maxpool window
// has a clear winner, so a finite-difference step cannot cross a kink.
inline bool kink_free(const Network& net, const ActivationTrace& trace,
                      double margin = 5e-3) {
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Tensor& x = i == 0 ? trace.input : trace.outputs[i - 1];
    const LayerKind kind = net.layers()[i].spec().kind;
    if (kind == LayerKind::relu) {
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (std::abs(x[k]) < margin) return false;
      }
    } else if (kind == LayerKind::maxpool2x2) {
      const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t ii = 0; ii + 1 < H; ii += 2) {
            for (std::size_t jj = 0; jj + 1 < W; jj += 2) {
              double v[4] = {x(b, c, ii, jj), x(b, c, ii, jj + 1),
                             x(b, c, ii + 1, jj), x(b, c, ii + 1, jj + 1)};
              double top = v[0], second = -1e300;
              for (int k = 1; k < 4; ++k) {
                if (v[k] > top) {
                  second = top;
                  top = v[k];
                } else {
                  second = std::max(second, v[k]);
                }
              }
              if (top - second < margin) return false;
            }
          }
        }
      }
    }
  }
  return true;
}

}  // namespace odlab::test
