#pragma once

// Dataset container, synthetic blob generation (a desk-scale stand-in for
// image benchmarks) and per-class subsampling.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/idx.hpp"
#include "odlab/rng.hpp"
#include "odlab/tensor.hpp"

namespace odlab {

struct Dataset {
  Tensor images;            // [M, C, H, W]
  std::vector<int> labels;  // length M, values in [0, n_classes)
  std::size_t n_classes = 0;

  std::size_t size() const { return labels.size(); }

  void validate() const {
    if (labels.empty() || images.rank() != 4 ||
        images.dim(0) != labels.size()) {
      throw std::invalid_argument("dataset: images/labels mismatch");
    }
    for (int y : labels) {
      if (y < 0 || std::size_t(y) >= n_classes) {
        throw std::invalid_argument("dataset: label " + std::to_string(y) +
                                    " out of range [0," +
                                    std::to_string(n_classes) + ")");
      }
    }
  }

  std::vector<std::size_t> input_shape() const {
    return {images.dim(1), images.dim(2), images.dim(3)};
  }

  // Per-sample image slice as [C,H,W].
  Tensor sample_image(std::size_t i) const {
    const std::size_t stride = images.size() / images.dim(0);
    std::vector<double> v(images.data() + i * stride,
                          images.data() + (i + 1) * stride);
    return Tensor({images.dim(1), images.dim(2), images.dim(3)}, std::move(v));
  }

  // Batch gather as [B,C,H,W] plus the matching labels.
  std::pair<Tensor, std::vector<int>> gather(
      const std::vector<std::size_t>& idx) const {
    const std::size_t stride = images.size() / images.dim(0);
    Tensor x({idx.size(), images.dim(1), images.dim(2), images.dim(3)});
    std::vector<int> y(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      std::copy(images.data() + idx[k] * stride,
                images.data() + (idx[k] + 1) * stride,
                x.data() + k * stride);
      y[k] = labels[idx[k]];
    }
    return {std::move(x), std::move(y)};
  }
};

namespace detail {

inline Tensor blob_templates(std::size_t n_classes, std::size_t channels,
                             std::size_t height, std::size_t width,
                             std::uint64_t template_seed) {
  Tensor t({n_classes, channels, height, width});
  const std::size_t per = channels * height * width;
  for (std::size_t k = 0; k < n_classes; ++k) {
    Rng rng = Rng::keyed(template_seed, "template", k);
    for (std::size_t p = 0; p < per; ++p) t[k * per + p] = rng.unit();
  }
  return t;
}

// Sample i of class k is template_k + gaussian noise keyed on (seed, i), so
// each sample is independent of how many others are drawn.
inline Dataset blobs_from_streams(std::size_t n_classes,
                                  std::size_t n_per_class,
                                  const Tensor& templates, double spread,
                                  std::uint64_t sample_seed) {
  const std::size_t per = templates.size() / templates.dim(0);
  const std::size_t m = n_classes * n_per_class;
  Dataset ds;
  ds.n_classes = n_classes;
  ds.images =
      Tensor({m, templates.dim(1), templates.dim(2), templates.dim(3)});
  ds.labels.resize(m);
  for (std::size_t k = 0; k < n_classes; ++k) {
    for (std::size_t s = 0; s < n_per_class; ++s) {
      const std::size_t i = k * n_per_class + s;
      ds.labels[i] = int(k);
      Rng rng = Rng::keyed(sample_seed, "sample", i);
      for (std::size_t p = 0; p < per; ++p) {
        ds.images[i * per + p] =
            templates[k * per + p] +
            (spread > 0.0 ? rng.gaussian(0.0, spread) : 0.0);
      }
    }
  }
  return ds;
}

}  // namespace detail

// Each class gets a fixed random template image; samples are template plus
// gaussian noise of std `spread`. Deterministic in seed.
inline Dataset gen_blobs(std::size_t n_classes, std::size_t n_per_class,
                         std::size_t channels, std::size_t width,
                         std::size_t height, double spread,
                         std::uint64_t seed) {
  if (n_classes == 0 || n_per_class == 0 || channels == 0 || width == 0 ||
      height == 0) {
    throw std::invalid_argument("gen_blobs: all counts must be positive");
  }
  Tensor templates = detail::blob_templates(
      n_classes, channels, height, width, mix64(seed, key_of("templates")));
  return detail::blobs_from_streams(n_classes, n_per_class, templates, spread,
                                    mix64(seed, key_of("samples")));
}

// Train/test pair sharing the class templates but drawn from disjoint sample
// streams, so the two splits are independent draws from the same task.
inline std::pair<Dataset, Dataset> gen_blobs_split(
    std::size_t n_classes, std::size_t n_train_per_class,
    std::size_t n_test_per_class, std::size_t channels, std::size_t width,
    std::size_t height, double spread, std::uint64_t seed) {
  if (n_classes == 0 || n_train_per_class == 0 || n_test_per_class == 0 ||
      channels == 0 || width == 0 || height == 0) {
    throw std::invalid_argument("gen_blobs_split: all counts must be positive");
  }
  Tensor templates = detail::blob_templates(
      n_classes, channels, height, width, mix64(seed, key_of("templates")));
  Dataset train = detail::blobs_from_streams(n_classes, n_train_per_class,
                                             templates, spread,
                                             mix64(seed, key_of("train")));
  Dataset test = detail::blobs_from_streams(n_classes, n_test_per_class,
                                            templates, spread,
                                            mix64(seed, key_of("test")));
  return {std::move(train), std::move(test)};
}

inline Dataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
  Dataset ds;
  ds.images = load_idx_images(images_path);
  ds.labels = load_idx_labels(labels_path);
  if (ds.images.dim(0) != ds.labels.size()) {
    throw std::runtime_error(
        "idx: image count " + std::to_string(ds.images.dim(0)) +
        " does not match label count " + std::to_string(ds.labels.size()));
  }
  int max_label = 0;
  for (int y : ds.labels) max_label = std::max(max_label, y);
  ds.n_classes = std::size_t(max_label) + 1;
  return ds;
}

// Exactly n samples per class, chosen uniformly without replacement,
// deterministic in seed.
inline Dataset subsample_per_class(const Dataset& ds, std::size_t n,
                                   std::uint64_t seed) {
  ds.validate();
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[std::size_t(ds.labels[i])].push_back(i);
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(n * ds.n_classes);
  for (std::size_t k = 0; k < ds.n_classes; ++k) {
    if (by_class[k].size() < n) {
      throw std::invalid_argument(
          "subsample_per_class: class " + std::to_string(k) + " has only " +
          std::to_string(by_class[k].size()) + " samples, need " +
          std::to_string(n));
    }
    Rng rng = Rng::keyed(seed, "subsample", k);
    rng.shuffle(by_class[k]);
    chosen.insert(chosen.end(), by_class[k].begin(), by_class[k].begin() + n);
  }
  auto [images, labels] = ds.gather(chosen);
  Dataset out;
  out.images = std::move(images);
  out.labels = std::move(labels);
  out.n_classes = ds.n_classes;
  return out;
}

}  // namespace odlab
