#pragma once

// Experiment configuration: JSON in, validated + default-filled struct out.
// Unknown keys are rejected so a typo in a hyper-parameter name fails fast
// instead of silently using the default. The fully resolved config is written
// next to the results and can be re-run to reproduce them.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "odlab/layers.hpp"
#include "odlab/losses.hpp"
#include "odlab/noise.hpp"

namespace odlab {

using nlohmann::json;

enum class DatasetKind { blobs, idx };

struct BlobsConfig {
  std::size_t n_classes = 10;
  std::size_t n_per_class = 50;
  std::size_t channels = 1;
  std::size_t width = 8;
  std::size_t height = 8;
  double spread = 0.35;
  std::size_t test_per_class = 0;  // 0 -> n_per_class/5 (5:1 split), min 1
};

struct IdxConfig {
  std::string train_images, train_labels, test_images, test_labels;
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::blobs;
  BlobsConfig blobs;
  IdxConfig idx;
  std::size_t subsample_per_class = 0;  // 0 = off; applied to the train split
  std::optional<NoiseSpec> noise;       // applied to train labels, after subsampling
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<std::string> network;  // layer tokens; empty -> default stack
  ODConfig od;
  std::size_t epochs = 300;
  std::size_t batch_size = 128;
  double initial_lr = 0.1;
  std::vector<std::size_t> milestones = {150, 225};
  double lr_factor = 0.1;
  double momentum = 0.9;  // non-nesterov
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
  std::string output_dir = "run";
};

namespace cfg_detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: " + where + " must be an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw std::invalid_argument("config: unknown key '" + it.key() +
                                  "' in " + where);
    }
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T def) {
  if (!j.contains(key)) return def;
  return j.at(key).get<T>();
}

inline OdVariant parse_variant(const std::string& s) {
  if (s == "mse") return OdVariant::mse;
  if (s == "kl") return OdVariant::kl;
  if (s == "l1") return OdVariant::l1;
  throw std::invalid_argument("config: unknown od variant '" + s +
                              "' (expected mse|kl|l1)");
}

inline BetaSchedule parse_schedule(const std::string& s) {
  if (s == "constant") return BetaSchedule::constant;
  if (s == "linear_up") return BetaSchedule::linear_up;
  if (s == "linear_down") return BetaSchedule::linear_down;
  if (s == "warmup") return BetaSchedule::warmup;
  throw std::invalid_argument("config: unknown beta schedule '" + s +
                              "' (expected constant|linear_up|linear_down|warmup)");
}

inline NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "symmetric") return NoiseKind::symmetric;
  if (s == "pair") return NoiseKind::pair;
  throw std::invalid_argument("config: unknown noise kind '" + s +
                              "' (expected symmetric|pair)");
}

}  // namespace cfg_detail

inline ExperimentConfig parse_config(const json& j) {
  using namespace cfg_detail;
  check_keys(j, {"dataset", "network", "od", "epochs", "batch_size",
                 "initial_lr", "milestones", "lr_factor", "momentum",
                 "weight_decay", "seed", "output_dir"},
             "config");
  ExperimentConfig cfg;

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d,
               {"kind", "n_classes", "n_per_class", "channels", "width",
                "height", "spread", "test_per_class", "train_images",
                "train_labels", "test_images", "test_labels",
                "subsample_per_class", "noise"},
               "dataset");
    const std::string kind = get_or<std::string>(d, "kind", "blobs");
    if (kind == "blobs") {
      cfg.dataset.kind = DatasetKind::blobs;
      BlobsConfig& b = cfg.dataset.blobs;
      b.n_classes = get_or<std::size_t>(d, "n_classes", b.n_classes);
      b.n_per_class = get_or<std::size_t>(d, "n_per_class", b.n_per_class);
      b.channels = get_or<std::size_t>(d, "channels", b.channels);
      b.width = get_or<std::size_t>(d, "width", b.width);
      b.height = get_or<std::size_t>(d, "height", b.height);
      b.spread = get_or<double>(d, "spread", b.spread);
      b.test_per_class = get_or<std::size_t>(d, "test_per_class", 0);
      if (b.n_classes < 2 || b.n_per_class == 0 || b.channels == 0 ||
          b.width == 0 || b.height == 0 || b.spread < 0.0) {
        throw std::invalid_argument("config: invalid blobs dataset settings");
      }
      if (b.test_per_class == 0) {
        b.test_per_class = std::max<std::size_t>(1, b.n_per_class / 5);
      }
    } else if (kind == "idx") {
      cfg.dataset.kind = DatasetKind::idx;
      IdxConfig& p = cfg.dataset.idx;
      for (const char* key :
           {"train_images", "train_labels", "test_images", "test_labels"}) {
        if (!d.contains(key)) {
          throw std::invalid_argument(std::string("config: idx dataset needs '") +
                                      key + "'");
        }
      }
      p.train_images = d.at("train_images").get<std::string>();
      p.train_labels = d.at("train_labels").get<std::string>();
      p.test_images = d.at("test_images").get<std::string>();
      p.test_labels = d.at("test_labels").get<std::string>();
    } else {
      throw std::invalid_argument("config: unknown dataset kind '" + kind +
                                  "' (expected blobs|idx)");
    }
    cfg.dataset.subsample_per_class =
        get_or<std::size_t>(d, "subsample_per_class", 0);
    if (d.contains("noise")) {
      const json& n = d.at("noise");
      check_keys(n, {"kind", "rate", "seed"}, "dataset.noise");
      NoiseSpec spec;
      spec.kind = parse_noise_kind(get_or<std::string>(n, "kind", "symmetric"));
      spec.rate = get_or<double>(n, "rate", 0.0);
      spec.seed = get_or<std::uint64_t>(n, "seed", 0);
      spec.validate();
      cfg.dataset.noise = spec;
    }
  }

  if (j.contains("network")) {
    cfg.network = j.at("network").get<std::vector<std::string>>();
  }

  if (j.contains("od")) {
    const json& o = j.at("od");
    check_keys(o, {"c", "beta", "variant", "schedule", "warmup_peak_epoch",
                   "dynamic"},
               "od");
    cfg.od.c = get_or<double>(o, "c", cfg.od.c);
    cfg.od.beta = get_or<double>(o, "beta", cfg.od.beta);
    cfg.od.variant = parse_variant(get_or<std::string>(o, "variant", "mse"));
    cfg.od.schedule =
        parse_schedule(get_or<std::string>(o, "schedule", "constant"));
    cfg.od.warmup_peak_epoch =
        get_or<std::size_t>(o, "warmup_peak_epoch", cfg.od.warmup_peak_epoch);
    cfg.od.dynamic = get_or<bool>(o, "dynamic", false);
    if (cfg.od.beta < 0.0) {
      throw std::invalid_argument("config: od.beta must be >= 0");
    }
    if (cfg.od.warmup_peak_epoch == 0) {
      throw std::invalid_argument("config: od.warmup_peak_epoch must be > 0");
    }
  }

  cfg.epochs = get_or<std::size_t>(j, "epochs", cfg.epochs);
  cfg.batch_size = get_or<std::size_t>(j, "batch_size", cfg.batch_size);
  cfg.initial_lr = get_or<double>(j, "initial_lr", cfg.initial_lr);
  cfg.milestones = get_or<std::vector<std::size_t>>(j, "milestones",
                                                    cfg.milestones);
  cfg.lr_factor = get_or<double>(j, "lr_factor", cfg.lr_factor);
  cfg.momentum = get_or<double>(j, "momentum", cfg.momentum);
  cfg.weight_decay = get_or<double>(j, "weight_decay", cfg.weight_decay);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);

  if (cfg.epochs == 0) throw std::invalid_argument("config: epochs must be > 0");
  if (cfg.batch_size == 0) {
    throw std::invalid_argument("config: batch_size must be > 0");
  }
  if (cfg.initial_lr <= 0.0) {
    throw std::invalid_argument("config: initial_lr must be > 0");
  }
  if (cfg.lr_factor <= 0.0 || cfg.lr_factor > 1.0) {
    throw std::invalid_argument("config: lr_factor must be in (0,1]");
  }
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw std::invalid_argument("config: momentum must be in [0,1)");
  }
  if (cfg.weight_decay < 0.0) {
    throw std::invalid_argument("config: weight_decay must be >= 0");
  }
  for (std::size_t i = 1; i < cfg.milestones.size(); ++i) {
    if (cfg.milestones[i] <= cfg.milestones[i - 1]) {
      throw std::invalid_argument(
          "config: milestones must be strictly increasing");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

inline json config_to_json(const ExperimentConfig& cfg) {
  json d;
  if (cfg.dataset.kind == DatasetKind::blobs) {
    const BlobsConfig& b = cfg.dataset.blobs;
    d = {{"kind", "blobs"},          {"n_classes", b.n_classes},
         {"n_per_class", b.n_per_class}, {"channels", b.channels},
         {"width", b.width},         {"height", b.height},
         {"spread", b.spread},       {"test_per_class", b.test_per_class}};
  } else {
    const IdxConfig& p = cfg.dataset.idx;
    d = {{"kind", "idx"},
         {"train_images", p.train_images},
         {"train_labels", p.train_labels},
         {"test_images", p.test_images},
         {"test_labels", p.test_labels}};
  }
  d["subsample_per_class"] = cfg.dataset.subsample_per_class;
  if (cfg.dataset.noise) {
    d["noise"] = {{"kind", noise_kind_name(cfg.dataset.noise->kind)},
                  {"rate", cfg.dataset.noise->rate},
                  {"seed", cfg.dataset.noise->seed}};
  }
  return json{
      {"dataset", d},
      {"network", cfg.network},
      {"od",
       {{"c", cfg.od.c},
        {"beta", cfg.od.beta},
        {"variant", od_variant_name(cfg.od.variant)},
        {"schedule", beta_schedule_name(cfg.od.schedule)},
        {"warmup_peak_epoch", cfg.od.warmup_peak_epoch},
        {"dynamic", cfg.od.dynamic}}},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"initial_lr", cfg.initial_lr},
      {"milestones", cfg.milestones},
      {"lr_factor", cfg.lr_factor},
      {"momentum", cfg.momentum},
      {"weight_decay", cfg.weight_decay},
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir}};
}

// --- layer token parsing -------------------------------------------------
//
// Tokens: "dense:OUT" | "dense:IN:OUT" | "conv3x3:OUT_CH" |
// "conv3x3:IN_CH:OUT_CH" | "bottleneck2d" | "bottleneck2d:IN" | "relu" |
// "maxpool2x2" | "flatten". Missing input widths are inferred from the
// incoming shape.

inline std::vector<std::string> default_network_tokens(std::size_t n_classes) {
  return {"conv3x3:8", "relu",    "maxpool2x2",
          "conv3x3:16", "relu",   "flatten",
          "dense:64",  "relu",    "dense:" + std::to_string(n_classes)};
}

namespace cfg_detail {

inline std::vector<std::string> split_token(const std::string& tok) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : tok) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

inline std::size_t parse_count(const std::string& s, const std::string& tok) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || v == 0) throw std::invalid_argument(s);
    return std::size_t(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad layer token '" + tok + "'");
  }
}

}  // namespace cfg_detail

// Resolves layer tokens into explicit LayerSpecs for the given per-sample
// input shape, inferring omitted input widths.
inline std::vector<LayerSpec> resolve_layers(
    const std::vector<std::string>& tokens,
    const std::vector<std::size_t>& input_shape) {
  using namespace cfg_detail;
  std::vector<LayerSpec> specs;
  std::vector<std::size_t> cur = input_shape;
  auto flat = [](const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  };
  for (const std::string& tok : tokens) {
    std::vector<std::string> p = split_token(tok);
    const std::string& kind = p[0];
    if (kind == "relu" || kind == "maxpool2x2" || kind == "flatten") {
      if (p.size() != 1) {
        throw std::invalid_argument("config: bad layer token '" + tok + "'");
      }
      if (kind == "relu") {
        specs.push_back(LayerSpec::relu());
      } else if (kind == "maxpool2x2") {
        specs.push_back(LayerSpec::maxpool2x2());
        if (cur.size() == 3) cur = {cur[0], cur[1] / 2, cur[2] / 2};
      } else {
        specs.push_back(LayerSpec::flatten());
        cur = {flat(cur)};
      }
    } else if (kind == "dense" || kind == "bottleneck2d") {
      std::size_t in = 0, out = 0;
      if (kind == "bottleneck2d") {
        out = 2;
        if (p.size() == 1) {
          in = cur.size() == 1 ? cur[0] : 0;
        } else if (p.size() == 2) {
          in = parse_count(p[1], tok);
        } else {
          throw std::invalid_argument("config: bad layer token '" + tok + "'");
        }
      } else {
        if (p.size() == 2) {
          in = cur.size() == 1 ? cur[0] : 0;
          out = parse_count(p[1], tok);
        } else if (p.size() == 3) {
          in = parse_count(p[1], tok);
          out = parse_count(p[2], tok);
        } else {
          throw std::invalid_argument("config: bad layer token '" + tok + "'");
        }
      }
      if (in == 0) {
        throw std::invalid_argument(
            "config: cannot infer input width for '" + tok +
            "' (insert a flatten layer first or give it explicitly)");
      }
      specs.push_back(kind == "dense" ? LayerSpec::dense(in, out)
                                      : LayerSpec::bottleneck2d(in));
      cur = {out};
    } else if (kind == "conv3x3") {
      std::size_t in = 0, out = 0;
      if (p.size() == 2) {
        in = cur.size() == 3 ? cur[0] : 0;
        out = parse_count(p[1], tok);
      } else if (p.size() == 3) {
        in = parse_count(p[1], tok);
        out = parse_count(p[2], tok);
      } else {
        throw std::invalid_argument("config: bad layer token '" + tok + "'");
      }
      if (in == 0) {
        throw std::invalid_argument("config: cannot infer input channels for '" +
                                    tok + "'");
      }
      specs.push_back(LayerSpec::conv3x3(in, out));
      if (cur.size() == 3) cur = {out, cur[1], cur[2]};
    } else {
      throw std::invalid_argument("config: unknown layer kind '" + kind + "'");
    }
  }
  return specs;
}

// Explicit token for a resolved spec; parsing it back yields the same spec.
inline std::string layer_token(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::dense:
      return "dense:" + std::to_string(s.in) + ":" + std::to_string(s.out);
    case LayerKind::conv3x3:
      return "conv3x3:" + std::to_string(s.in) + ":" + std::to_string(s.out);
    case LayerKind::bottleneck2d:
      return "bottleneck2d:" + std::to_string(s.in);
    default:
      return layer_kind_name(s.kind);
  }
}

}  // namespace odlab
