#pragma once

// Loss terms: softmax cross-entropy, the output-decay regularizer
//   L_od = 1/2 * 1/(B*N) * sum_{i,j} (f_{i,j} - c)^2
// combined as L = L_ce + beta * L_od, the kl/l1 variants, the beta
// schedules, and the dynamic decay-level tracker.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/tensor.hpp"

namespace odlab {

enum class OdVariant { mse, kl, l1 };
enum class BetaSchedule { constant, linear_up, linear_down, warmup };

inline std::string od_variant_name(OdVariant v) {
  switch (v) {
    case OdVariant::mse: return "mse";
    case OdVariant::kl: return "kl";
    case OdVariant::l1: return "l1";
  }
  return "?";
}

inline std::string beta_schedule_name(BetaSchedule s) {
  switch (s) {
    case BetaSchedule::constant: return "constant";
    case BetaSchedule::linear_up: return "linear_up";
    case BetaSchedule::linear_down: return "linear_down";
    case BetaSchedule::warmup: return "warmup";
  }
  return "?";
}

struct ODConfig {
  double c = 1e-3;       // decay level
  double beta = 1.0;     // decay coefficient
  OdVariant variant = OdVariant::mse;
  BetaSchedule schedule = BetaSchedule::constant;
  std::size_t warmup_peak_epoch = 75;
  bool dynamic = false;  // recompute c each epoch from the previous epoch's
                         // global logit mean; the configured c is only the
                         // epoch-0 value
};

struct LossBreakdown {
  double ce = 0.0;
  double od = 0.0;       // unweighted regularizer value
  double total = 0.0;    // ce + effective_beta * od
  double effective_beta = 0.0;
  double effective_c = 0.0;
};

namespace detail {
inline void check_logits(const Tensor& logits) {
  if (logits.rank() != 2 || logits.size() == 0) {
    throw std::invalid_argument("loss: logits must be a non-empty [B,N] tensor, got " +
                                shape_str(logits.shape()));
  }
}

inline void check_labels(const Tensor& logits, const std::vector<int>& labels) {
  check_logits(logits);
  if (labels.size() != logits.dim(0)) {
    throw std::invalid_argument("loss: got " + std::to_string(labels.size()) +
                                " labels for batch of " +
                                std::to_string(logits.dim(0)));
  }
  const int n = int(logits.dim(1));
  for (int y : labels) {
    if (y < 0 || y >= n) {
      throw std::invalid_argument("loss: label " + std::to_string(y) +
                                  " out of range [0," + std::to_string(n) + ")");
    }
  }
}
}  // namespace detail

// Row-wise softmax, stabilized by max subtraction.
inline Tensor softmax_rows(const Tensor& logits) {
  detail::check_logits(logits);
  const std::size_t B = logits.dim(0), N = logits.dim(1);
  Tensor probs({B, N});
  for (std::size_t i = 0; i < B; ++i) {
    const double* f = logits.data() + i * N;
    double* p = probs.data() + i * N;
    double m = f[0];
    for (std::size_t j = 1; j < N; ++j) m = std::max(m, f[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      p[j] = std::exp(f[j] - m);
      z += p[j];
    }
    for (std::size_t j = 0; j < N; ++j) p[j] /= z;
  }
  return probs;
}

// Mean cross-entropy over the batch; gradient is (softmax - onehot)/B.
inline std::pair<double, Tensor> softmax_ce(const Tensor& logits,
                                            const std::vector<int>& labels) {
  detail::check_labels(logits, labels);
  const std::size_t B = logits.dim(0), N = logits.dim(1);
  Tensor grad({B, N});
  double loss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const double* f = logits.data() + i * N;
    double* g = grad.data() + i * N;
    double m = f[0];
    for (std::size_t j = 1; j < N; ++j) m = std::max(m, f[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < N; ++j) z += std::exp(f[j] - m);
    const double logz = std::log(z);
    loss += -(f[std::size_t(labels[i])] - m - logz);
    for (std::size_t j = 0; j < N; ++j) {
      g[j] = std::exp(f[j] - m - logz) / double(B);
    }
    g[std::size_t(labels[i])] -= 1.0 / double(B);
  }
  return {loss / double(B), std::move(grad)};
}

inline double od_loss(const Tensor& logits, double c) {
  detail::check_logits(logits);
  const double scale = 1.0 / double(logits.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double r = logits[k] - c;
    acc += r * r;
  }
  return 0.5 * scale * acc;
}

inline Tensor od_grad(const Tensor& logits, double c) {
  detail::check_logits(logits);
  const double scale = 1.0 / double(logits.size());
  Tensor grad(logits.shape());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    grad[k] = (logits[k] - c) * scale;
  }
  return grad;
}

// KL(softmax(f_i) || uniform) averaged over the batch
// = ln N - mean entropy of softmax(f_i).
inline std::pair<double, Tensor> od_kl(const Tensor& logits) {
  detail::check_logits(logits);
  const std::size_t B = logits.dim(0), N = logits.dim(1);
  if (N < 2) {
    throw std::invalid_argument("od_kl: needs at least 2 classes");
  }
  Tensor probs = softmax_rows(logits);
  Tensor grad({B, N});
  double loss = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const double* p = probs.data() + i * N;
    double* g = grad.data() + i * N;
    double plogp = 0.0;  // sum_j p_j ln p_j
    for (std::size_t j = 0; j < N; ++j) {
      if (p[j] > 0.0) plogp += p[j] * std::log(p[j]);
    }
    loss += plogp + std::log(double(N));
    for (std::size_t j = 0; j < N; ++j) {
      g[j] = p[j] > 0.0 ? p[j] * (std::log(p[j]) - plogp) / double(B) : 0.0;
    }
  }
  return {loss / double(B), std::move(grad)};
}

// L1 pull toward c; subgradient 0 at exact ties so the minimum is a fixed
// point.
inline std::pair<double, Tensor> od_l1(const Tensor& logits, double c) {
  detail::check_logits(logits);
  const double scale = 1.0 / double(logits.size());
  Tensor grad(logits.shape());
  double acc = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double r = logits[k] - c;
    acc += std::abs(r);
    grad[k] = r > 0.0 ? scale : (r < 0.0 ? -scale : 0.0);
  }
  return {acc * scale, std::move(grad)};
}

// Effective beta for a given epoch. total_epochs must be >= 2.
inline double beta_schedule(BetaSchedule kind, double base_beta,
                            std::size_t epoch, std::size_t total_epochs,
                            std::size_t warmup_peak_epoch = 75) {
  if (total_epochs < 2) {
    throw std::invalid_argument("beta_schedule: total_epochs must be >= 2");
  }
  if (epoch >= total_epochs) {
    throw std::invalid_argument("beta_schedule: epoch " +
                                std::to_string(epoch) + " out of range");
  }
  const double last = double(total_epochs - 1);
  switch (kind) {
    case BetaSchedule::constant:
      return base_beta;
    case BetaSchedule::linear_up:
      return base_beta * (double(epoch) / last);
    case BetaSchedule::linear_down:
      return base_beta * (1.0 - double(epoch) / last);
    case BetaSchedule::warmup: {
      if (warmup_peak_epoch == 0) {
        throw std::invalid_argument("beta_schedule: warmup peak must be > 0");
      }
      const double peak = double(warmup_peak_epoch);
      if (double(epoch) <= peak) {
        return base_beta * (double(epoch) / peak);
      }
      return base_beta * ((last - double(epoch)) / (last - peak));
    }
  }
  throw std::logic_error("unreachable");
}

// Accumulates every logit entry seen during an epoch; its mean becomes the
// next epoch's decay level when ODConfig.dynamic is set.
class LogitMeanTracker {
 public:
  void observe(const Tensor& logits) {
    for (std::size_t k = 0; k < logits.size(); ++k) sum_ += logits[k];
    count_ += logits.size();
  }

  bool has_data() const { return count_ > 0; }

  double mean() const {
    if (count_ == 0) {
      throw std::runtime_error(
          "dynamic decay level requested before any epoch completed");
    }
    return sum_ / double(count_);
  }

  void reset() {
    sum_ = 0.0;
    count_ = 0;
  }

 private:
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

inline double dynamic_decay_level(const LogitMeanTracker& prev_epoch) {
  return prev_epoch.mean();
}

// L = L_ce + beta * L_od with the variant and schedule from cfg. When
// cfg.dynamic is set, `dynamic_c` (the previous epoch's logit mean) replaces
// cfg.c; epoch 0 passes nullopt and uses the configured c.
inline std::pair<LossBreakdown, Tensor> combined_loss(
    const Tensor& logits, const std::vector<int>& labels, const ODConfig& cfg,
    std::size_t epoch, std::size_t total_epochs,
    std::optional<double> dynamic_c = std::nullopt) {
  LossBreakdown out;
  out.effective_beta = beta_schedule(cfg.schedule, cfg.beta, epoch,
                                     total_epochs, cfg.warmup_peak_epoch);
  out.effective_c = (cfg.dynamic && dynamic_c.has_value()) ? *dynamic_c : cfg.c;

  auto [ce, grad] = softmax_ce(logits, labels);
  out.ce = ce;

  Tensor od_g;
  switch (cfg.variant) {
    case OdVariant::mse:
      out.od = od_loss(logits, out.effective_c);
      od_g = od_grad(logits, out.effective_c);
      break;
    case OdVariant::kl: {
      auto [l, g] = od_kl(logits);
      out.od = l;
      od_g = std::move(g);
      break;
    }
    case OdVariant::l1: {
      auto [l, g] = od_l1(logits, out.effective_c);
      out.od = l;
      od_g = std::move(g);
      break;
    }
  }
  out.total = out.ce + out.effective_beta * out.od;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    grad[k] += out.effective_beta * od_g[k];
  }
  return {out, std::move(grad)};
}

}  // namespace odlab
