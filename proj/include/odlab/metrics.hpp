#pragma once

// Measurement operations: top-1 accuracy, output statistics, 25-bin
// reliability diagrams and ECE, per-position activation counts of a feature
// map, parameter histograms, and 2-D bottleneck feature export.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/dataset.hpp"
#include "odlab/losses.hpp"
#include "odlab/network.hpp"
#include "odlab/tensor.hpp"

namespace odlab {

// Argmax with ties broken by lowest index.
inline std::size_t argmax_row(const double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

inline double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  detail::check_labels(logits, labels);
  const std::size_t B = logits.dim(0), N = logits.dim(1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < B; ++i) {
    if (argmax_row(logits.data() + i * N, N) == std::size_t(labels[i])) {
      ++hits;
    }
  }
  return double(hits) / double(B);
}

struct OutputStats {
  double mean_abs = 0.0;             // mean |f| over all entries
  double sum = 0.0;                  // sum of all entries
  double mean_per_sample_std = 0.0;  // mean over rows of population std
  double expected_mean_abs = 0.0;    // mean |f at the true class|
  double unexpected_mean_abs = 0.0;  // mean of per-row mean |f| off the true class
};

inline OutputStats output_stats(const Tensor& logits,
                                const std::vector<int>& labels) {
  detail::check_labels(logits, labels);
  const std::size_t B = logits.dim(0), N = logits.dim(1);
  if (N < 2) {
    throw std::invalid_argument(
        "output_stats: per-sample std needs at least 2 classes");
  }
  OutputStats s;
  for (std::size_t i = 0; i < B; ++i) {
    const double* f = logits.data() + i * N;
    const std::size_t y = std::size_t(labels[i]);
    double row_sum = 0.0, row_abs = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      row_sum += f[j];
      row_abs += std::abs(f[j]);
    }
    const double mean = row_sum / double(N);
    double var = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      var += (f[j] - mean) * (f[j] - mean);
    }
    s.sum += row_sum;
    s.mean_abs += row_abs;
    s.mean_per_sample_std += std::sqrt(var / double(N));
    s.expected_mean_abs += std::abs(f[y]);
    s.unexpected_mean_abs += (row_abs - std::abs(f[y])) / double(N - 1);
  }
  s.mean_abs /= double(B * N);
  s.mean_per_sample_std /= double(B);
  s.expected_mean_abs /= double(B);
  s.unexpected_mean_abs /= double(B);
  return s;
}

// Bin b covers confidence interval (b/n_bins, (b+1)/n_bins]; bin 0 also
// includes 0. Confidence is the max softmax probability.
struct ReliabilityBins {
  std::size_t n_bins = 25;
  std::size_t total = 0;
  std::vector<std::size_t> count;
  std::vector<double> mean_confidence;
  std::vector<double> empirical_accuracy;
};

inline std::size_t confidence_bin(double conf, std::size_t n_bins) {
  for (std::size_t b = 0; b + 1 < n_bins; ++b) {
    if (conf <= double(b + 1) / double(n_bins)) return b;
  }
  return n_bins - 1;
}

inline ReliabilityBins reliability_bins(const Tensor& probs,
                                        const std::vector<int>& labels,
                                        std::size_t n_bins = 25) {
  detail::check_labels(probs, labels);
  if (n_bins == 0) {
    throw std::invalid_argument("reliability_bins: n_bins must be positive");
  }
  const std::size_t B = probs.dim(0), N = probs.dim(1);
  for (std::size_t i = 0; i < B; ++i) {
    const double* p = probs.data() + i * N;
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (p[j] < 0.0 || p[j] > 1.0) {
        throw std::invalid_argument(
            "reliability_bins: probability out of [0,1] in row " +
            std::to_string(i));
      }
      row += p[j];
    }
    if (std::abs(row - 1.0) > 1e-6) {
      throw std::invalid_argument("reliability_bins: row " +
                                  std::to_string(i) + " sums to " +
                                  std::to_string(row) + ", expected 1");
    }
  }

  ReliabilityBins bins;
  bins.n_bins = n_bins;
  bins.total = B;
  bins.count.assign(n_bins, 0);
  bins.mean_confidence.assign(n_bins, 0.0);
  bins.empirical_accuracy.assign(n_bins, 0.0);
  for (std::size_t i = 0; i < B; ++i) {
    const double* p = probs.data() + i * N;
    const std::size_t pred = argmax_row(p, N);
    const double conf = p[pred];
    const std::size_t b = confidence_bin(conf, n_bins);
    bins.count[b] += 1;
    bins.mean_confidence[b] += conf;
    bins.empirical_accuracy[b] += pred == std::size_t(labels[i]) ? 1.0 : 0.0;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (bins.count[b] > 0) {
      bins.mean_confidence[b] /= double(bins.count[b]);
      bins.empirical_accuracy[b] /= double(bins.count[b]);
    }
  }
  return bins;
}

// Count-weighted mean absolute gap between per-bin accuracy and confidence.
inline double ece(const ReliabilityBins& bins) {
  if (bins.total == 0) {
    throw std::invalid_argument("ece: no samples binned");
  }
  double e = 0.0;
  for (std::size_t b = 0; b < bins.n_bins; ++b) {
    if (bins.count[b] == 0) continue;
    e += (double(bins.count[b]) / double(bins.total)) *
         std::abs(bins.empirical_accuracy[b] - bins.mean_confidence[b]);
  }
  return e;
}

// M[i][j] = number of channels with F[c,i,j] > 0 (strict).
struct ActivationCountMatrix {
  std::size_t h = 0, w = 0;
  std::vector<long> counts;  // row-major

  long operator()(std::size_t i, std::size_t j) const {
    return counts[i * w + j];
  }
  long total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
  }
};

inline ActivationCountMatrix activation_count(const Tensor& feature_map) {
  if (feature_map.rank() != 3) {
    throw std::invalid_argument("activation_count: expected [C,H,W], got " +
                                shape_str(feature_map.shape()));
  }
  const std::size_t C = feature_map.dim(0), H = feature_map.dim(1),
                    W = feature_map.dim(2);
  ActivationCountMatrix m;
  m.h = H;
  m.w = W;
  m.counts.assign(H * W, 0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < H; ++i) {
      for (std::size_t j = 0; j < W; ++j) {
        if (feature_map(c, i, j) > 0.0) m.counts[i * W + j] += 1;
      }
    }
  }
  return m;
}

// Equal-width histogram of a layer's parameters (weights and bias) over
// [-range, +range]; outliers are clamped into the edge bins.
inline std::vector<std::size_t> weight_histogram(const Network& net,
                                                 std::size_t layer_index,
                                                 std::size_t n_bins,
                                                 double range) {
  if (layer_index >= net.layers().size()) {
    throw std::invalid_argument("weight_histogram: layer index out of range");
  }
  const Layer& layer = net.layers()[layer_index];
  if (!layer.has_params()) {
    throw std::invalid_argument("weight_histogram: layer " +
                                std::to_string(layer_index) + " (" +
                                layer.spec().describe() + ") has no parameters");
  }
  if (n_bins == 0 || range <= 0.0) {
    throw std::invalid_argument("weight_histogram: need n_bins > 0, range > 0");
  }
  std::vector<std::size_t> hist(n_bins, 0);
  auto add = [&](const Tensor& t) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      double pos = (t[k] + range) / (2.0 * range) * double(n_bins);
      long b = long(std::floor(pos));
      if (b < 0) b = 0;
      if (b >= long(n_bins)) b = long(n_bins) - 1;
      hist[std::size_t(b)] += 1;
    }
  };
  add(layer.weight());
  add(layer.bias());
  return hist;
}

struct BottleneckFeature {
  double x = 0.0;
  double y = 0.0;
  int label = 0;
};

// One row per sample: the two bottleneck activations plus the true label.
inline std::vector<BottleneckFeature> export_bottleneck_features(
    const Network& net, const Dataset& ds, std::size_t batch_size = 128) {
  if (net.bottleneck_index() < 0) {
    throw std::invalid_argument(
        "export_bottleneck_features: network has no bottleneck2d layer");
  }
  ds.validate();
  std::vector<BottleneckFeature> rows;
  rows.reserve(ds.size());
  const std::size_t bidx = std::size_t(net.bottleneck_index());
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const std::size_t stop = std::min(ds.size(), start + batch_size);
    std::vector<std::size_t> idx(stop - start);
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = start + k;
    auto [x, y] = ds.gather(idx);
    auto [logits, trace] = net.forward(x);
    (void)logits;
    const Tensor& feats = trace.outputs[bidx];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      rows.push_back({feats(k, 0), feats(k, 1), y[k]});
    }
  }
  return rows;
}

}  // namespace odlab
