#pragma once

// Label-noise machinery: transition matrices for symmetric and pair flipping
// and deterministic label corruption.
//
//   symmetric: T[i][i] = 1-eps, T[i][j] = eps/(N-1) for j != i
//   pair:      T[i][i] = 1-eps, T[i][(i+1) mod N] = eps

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/dataset.hpp"
#include "odlab/rng.hpp"

namespace odlab {

enum class NoiseKind { symmetric, pair };

inline std::string noise_kind_name(NoiseKind k) {
  return k == NoiseKind::symmetric ? "symmetric" : "pair";
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::symmetric;
  double rate = 0.0;  // eps in [0,1)
  std::uint64_t seed = 0;

  void validate() const {
    if (rate < 0.0 || rate > 1.0) {
      throw std::invalid_argument("noise: rate must be in [0,1]");
    }
  }
};

struct TransitionMatrix {
  std::size_t n = 0;
  std::vector<double> t;  // row-major, t[i*n+j] = Pr(noisy=j | clean=i)

  double operator()(std::size_t i, std::size_t j) const { return t[i * n + j]; }
};

inline TransitionMatrix transition_matrix(NoiseKind kind,
                                          std::size_t n_classes, double rate) {
  if (n_classes < 2) {
    throw std::invalid_argument("transition_matrix: need at least 2 classes");
  }
  TransitionMatrix m;
  m.n = n_classes;
  m.t.assign(n_classes * n_classes, 0.0);
  for (std::size_t i = 0; i < n_classes; ++i) {
    m.t[i * n_classes + i] = 1.0 - rate;
    if (kind == NoiseKind::symmetric) {
      const double off = rate / double(n_classes - 1);
      for (std::size_t j = 0; j < n_classes; ++j) {
        if (j != i) m.t[i * n_classes + j] = off;
      }
    } else {
      m.t[i * n_classes + ((i + 1) % n_classes)] = rate;
    }
  }
  return m;
}

// Corrupts label i using variates keyed on (seed, i), so the outcome for each
// element is independent of traversal order. Returns the noisy labels and a
// mask of changed positions.
inline std::pair<std::vector<int>, std::vector<bool>> corrupt_label_list(
    const std::vector<int>& labels, std::size_t n_classes,
    const NoiseSpec& spec) {
  spec.validate();
  if (n_classes < 2) {
    throw std::invalid_argument("corrupt_labels: need at least 2 classes");
  }
  std::vector<int> noisy(labels);
  std::vector<bool> flipped(labels.size(), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Rng rng = Rng::keyed(spec.seed, "corrupt", i);
    const double u = rng.unit();
    if (u >= spec.rate) continue;
    if (spec.kind == NoiseKind::pair) {
      noisy[i] = int((std::size_t(labels[i]) + 1) % n_classes);
    } else {
      // destination uniform over the N-1 other classes
      std::size_t d = std::size_t(rng.below(n_classes - 1));
      if (d >= std::size_t(labels[i])) ++d;
      noisy[i] = int(d);
    }
    flipped[i] = noisy[i] != labels[i];
  }
  return {std::move(noisy), std::move(flipped)};
}

inline std::pair<Dataset, std::vector<bool>> corrupt_labels(
    const Dataset& ds, const NoiseSpec& spec) {
  ds.validate();
  auto [noisy, flipped] = corrupt_label_list(ds.labels, ds.n_classes, spec);
  Dataset out;
  out.images = ds.images;
  out.labels = std::move(noisy);
  out.n_classes = ds.n_classes;
  return {std::move(out), std::move(flipped)};
}

}  // namespace odlab
