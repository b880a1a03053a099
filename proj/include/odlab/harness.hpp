#pragma once

// Experiment runner behind the CLI. A run writes, under its output
// directory:
//   resolved_config.json  exact config with every default materialized
//   runlog.csv            one row per epoch (state at the start of the epoch,
//                         before that epoch's updates)
//   model.bin             final parameters, length-prefixed little-endian
//   features2d.csv        test-set bottleneck activations (when present)
//   FAILED                marker with the abort message, on any abort

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "odlab/analysis.hpp"
#include "odlab/config.hpp"
#include "odlab/csv.hpp"
#include "odlab/dataset.hpp"
#include "odlab/idx.hpp"
#include "odlab/losses.hpp"
#include "odlab/metrics.hpp"
#include "odlab/network.hpp"
#include "odlab/noise.hpp"
#include "odlab/optim.hpp"
#include "odlab/serialize.hpp"

namespace odlab {

namespace fs = std::filesystem;

inline const std::vector<std::string>& runlog_header() {
  static const std::vector<std::string> header = {
      "epoch",          "lr",
      "effective_beta", "effective_c",
      "train_ce",       "train_od",
      "train_total",    "train_acc",
      "test_acc",       "test_mean_abs",
      "test_sum",       "test_mean_per_sample_std",
      "test_expected_mean_abs", "test_unexpected_mean_abs",
      "test_ece"};
  return header;
}

struct TrainPaths {
  fs::path run_dir;
  fs::path runlog;
  fs::path resolved_config;
  fs::path model;
  fs::path features;  // empty when the network has no bottleneck
};

namespace harness_detail {

struct LoadedData {
  Dataset train;
  Dataset test;
};

inline LoadedData load_data(const ExperimentConfig& cfg) {
  LoadedData data;
  if (cfg.dataset.kind == DatasetKind::blobs) {
    const BlobsConfig& b = cfg.dataset.blobs;
    auto [train, test] =
        gen_blobs_split(b.n_classes, b.n_per_class, b.test_per_class,
                        b.channels, b.width, b.height, b.spread, cfg.seed);
    data.train = std::move(train);
    data.test = std::move(test);
  } else {
    data.train = load_idx(cfg.dataset.idx.train_images,
                          cfg.dataset.idx.train_labels);
    data.test =
        load_idx(cfg.dataset.idx.test_images, cfg.dataset.idx.test_labels);
    const std::size_t n =
        std::max(data.train.n_classes, data.test.n_classes);
    data.train.n_classes = n;
    data.test.n_classes = n;
  }
  if (cfg.dataset.subsample_per_class > 0) {
    data.train =
        subsample_per_class(data.train, cfg.dataset.subsample_per_class,
                            mix64(cfg.seed, key_of("subsample")));
  }
  if (cfg.dataset.noise && cfg.dataset.noise->rate > 0.0) {
    auto [noisy, mask] = corrupt_labels(data.train, *cfg.dataset.noise);
    (void)mask;
    data.train = std::move(noisy);
  }
  return data;
}

// Forward a whole dataset in batches; returns the [M,N] logit matrix.
inline Tensor eval_logits(const Network& net, const Dataset& ds,
                          std::size_t batch_size) {
  const std::size_t n_out = net.n_outputs();
  Tensor logits({ds.size(), n_out});
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const std::size_t stop = std::min(ds.size(), start + batch_size);
    std::vector<std::size_t> idx(stop - start);
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = start + k;
    auto [x, y] = ds.gather(idx);
    (void)y;
    auto [out, trace] = net.forward(x);
    (void)trace;
    std::copy(out.data(), out.data() + out.size(),
              logits.data() + start * n_out);
  }
  return logits;
}

inline void write_failed_marker(const fs::path& run_dir,
                                const std::string& message) {
  std::ofstream out(run_dir / "FAILED");
  out << message << "\n";
}

}  // namespace harness_detail

// Runs the full training loop. Throws on any failure after dropping a FAILED
// marker in the run directory.
inline TrainPaths run_training(const ExperimentConfig& cfg) {
  using namespace harness_detail;

  TrainPaths paths;
  paths.run_dir = fs::path(cfg.output_dir);
  fs::create_directories(paths.run_dir);
  fs::remove(paths.run_dir / "FAILED");  // a fresh run clears stale markers
  paths.runlog = paths.run_dir / "runlog.csv";
  paths.resolved_config = paths.run_dir / "resolved_config.json";
  paths.model = paths.run_dir / "model.bin";

  try {
    LoadedData data = load_data(cfg);
    data.train.validate();
    data.test.validate();
    const std::size_t n_classes = data.train.n_classes;
    const std::vector<std::size_t> input_shape = data.train.input_shape();

    std::vector<std::string> tokens =
        cfg.network.empty() ? default_network_tokens(n_classes) : cfg.network;
    std::vector<LayerSpec> specs = resolve_layers(tokens, input_shape);
    Network net(specs, input_shape, cfg.seed);
    if (net.n_outputs() != n_classes) {
      throw std::invalid_argument(
          "config: network produces " + std::to_string(net.n_outputs()) +
          " outputs but the dataset has " + std::to_string(n_classes) +
          " classes");
    }

    // Resolved config: explicit layer tokens, every default filled in.
    {
      ExperimentConfig resolved = cfg;
      resolved.network.clear();
      for (const LayerSpec& s : specs) resolved.network.push_back(layer_token(s));
      std::ofstream out(paths.resolved_config);
      out << config_to_json(resolved).dump(2) << "\n";
    }

    OptState opt(net, cfg.initial_lr, cfg.momentum, cfg.weight_decay);

    std::ofstream log(paths.runlog, std::ios::binary);
    if (!log) {
      throw std::runtime_error("cannot write " + paths.runlog.string());
    }
    {
      std::string head;
      for (std::size_t i = 0; i < runlog_header().size(); ++i) {
        if (i) head += ',';
        head += runlog_header()[i];
      }
      log << head << '\n';
    }

    LogitMeanTracker tracker;
    std::optional<double> dynamic_c;

    std::vector<std::size_t> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      opt.lr = step_lr(cfg.initial_lr, epoch, cfg.milestones, cfg.lr_factor);
      const double eff_beta =
          beta_schedule(cfg.od.schedule, cfg.od.beta, epoch, cfg.epochs,
                        cfg.od.warmup_peak_epoch);
      const double eff_c =
          (cfg.od.dynamic && dynamic_c.has_value()) ? *dynamic_c : cfg.od.c;

      // Metrics of the state entering this epoch.
      Tensor train_logits = eval_logits(net, data.train, cfg.batch_size);
      Tensor test_logits = eval_logits(net, data.test, cfg.batch_size);
      auto [train_ce, train_ce_grad] = softmax_ce(train_logits, data.train.labels);
      (void)train_ce_grad;
      double train_od = 0.0;
      switch (cfg.od.variant) {
        case OdVariant::mse: train_od = od_loss(train_logits, eff_c); break;
        case OdVariant::kl: train_od = od_kl(train_logits).first; break;
        case OdVariant::l1: train_od = od_l1(train_logits, eff_c).first; break;
      }
      const OutputStats stats = output_stats(test_logits, data.test.labels);
      const double test_ece =
          ece(reliability_bins(softmax_rows(test_logits), data.test.labels, 25));
      log << csv_row({double(epoch), opt.lr, eff_beta, eff_c, train_ce,
                      train_od, train_ce + eff_beta * train_od,
                      accuracy(train_logits, data.train.labels),
                      accuracy(test_logits, data.test.labels), stats.mean_abs,
                      stats.sum, stats.mean_per_sample_std,
                      stats.expected_mean_abs, stats.unexpected_mean_abs,
                      test_ece});
      log.flush();

      // One epoch of SGD.
      Rng shuffle_rng = Rng::keyed(cfg.seed, "shuffle", epoch);
      shuffle_rng.shuffle(order);
      tracker.reset();
      for (std::size_t start = 0; start < order.size();
           start += cfg.batch_size) {
        const std::size_t batch_index = start / cfg.batch_size;
        try {
          const std::size_t stop =
              std::min(order.size(), start + cfg.batch_size);
          std::vector<std::size_t> idx(order.begin() + long(start),
                                       order.begin() + long(stop));
          auto [x, y] = data.train.gather(idx);
          auto [logits, trace] = net.forward(x);
          auto [breakdown, grad_logits] =
              combined_loss(logits, y, cfg.od, epoch, cfg.epochs, dynamic_c);
          if (!std::isfinite(breakdown.total)) {
            throw std::runtime_error("loss is not finite");
          }
          if (cfg.od.dynamic) tracker.observe(logits);
          ParamGrads grads = net.backward(trace, grad_logits);
          sgd_step(net, grads, opt);
        } catch (const std::exception& e) {
          throw std::runtime_error("training aborted at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index) + ": " +
                                   e.what());
        }
      }
      if (cfg.od.dynamic) dynamic_c = dynamic_decay_level(tracker);
    }

    save_params(net, paths.model.string());

    if (net.bottleneck_index() >= 0) {
      paths.features = paths.run_dir / "features2d.csv";
      std::vector<std::vector<double>> rows;
      for (const BottleneckFeature& f :
           export_bottleneck_features(net, data.test, cfg.batch_size)) {
        rows.push_back({f.x, f.y, double(f.label)});
      }
      write_csv(paths.features.string(), {"x", "y", "label"}, rows);
    }
  } catch (const std::exception& e) {
    harness_detail::write_failed_marker(paths.run_dir, e.what());
    throw;
  }
  return paths;
}

inline int cmd_train(const std::string& config_path) {
  try {
    ExperimentConfig cfg = load_config(config_path);
    TrainPaths paths = run_training(cfg);
    std::cout << "run complete: " << paths.runlog.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "train: " << e.what() << "\n";
    return 1;
  }
}

// One training run per value, each in its own subdirectory; failures are
// recorded in the summary (ok=0) and do not stop the sweep.
inline int cmd_sweep(const std::string& config_path, const std::string& param,
                     const std::vector<double>& values) {
  try {
    if (param != "c" && param != "beta") {
      throw std::invalid_argument("sweep: param must be 'c' or 'beta'");
    }
    if (values.empty()) {
      throw std::invalid_argument("sweep: no values given");
    }
    ExperimentConfig base = load_config(config_path);
    const fs::path sweep_dir(base.output_dir);
    fs::create_directories(sweep_dir);

    std::vector<std::vector<double>> summary;
    for (std::size_t i = 0; i < values.size(); ++i) {
      ExperimentConfig cfg = base;
      if (param == "c") {
        cfg.od.c = values[i];
      } else {
        cfg.od.beta = values[i];
      }
      cfg.output_dir = (sweep_dir / (param + "_" + std::to_string(i) + "_" +
                                     format_double(values[i])))
                           .string();
      double best_err = std::numeric_limits<double>::quiet_NaN();
      double final_ece = std::numeric_limits<double>::quiet_NaN();
      double final_mean_abs = std::numeric_limits<double>::quiet_NaN();
      double ok = 0.0;
      try {
        TrainPaths paths = run_training(cfg);
        CsvTable t = read_csv(paths.runlog.string());
        const std::size_t acc = std::size_t(t.require_column("test_acc"));
        const std::size_t mean_abs =
            std::size_t(t.require_column("test_mean_abs"));
        const std::size_t ece_col = std::size_t(t.require_column("test_ece"));
        best_err = 1.0;
        for (const auto& row : t.rows) best_err = std::min(best_err, 1.0 - row[acc]);
        final_ece = t.rows.back()[ece_col];
        final_mean_abs = t.rows.back()[mean_abs];
        ok = 1.0;
      } catch (const std::exception& e) {
        std::cerr << "sweep: " << param << "=" << format_double(values[i])
                  << " failed: " << e.what() << "\n";
      }
      summary.push_back({values[i], best_err, final_ece, final_mean_abs, ok});
    }
    write_csv((sweep_dir / "sweep_summary.csv").string(),
              {"value", "best_test_err", "final_ece", "final_mean_abs", "ok"},
              summary);
    std::cout << "sweep complete: "
              << (sweep_dir / "sweep_summary.csv").string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "sweep: " << e.what() << "\n";
    return 1;
  }
}

struct CorruptOptions {
  std::string kind = "symmetric";
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::string in_path;
  std::string out_dir;
  std::size_t n_classes = 0;  // 0 = infer as max label + 1
};

// Writes <out_dir>/labels.idx and <out_dir>/corrupt_meta.json.
inline int cmd_corrupt(const CorruptOptions& opt) {
  try {
    NoiseSpec spec;
    spec.kind = cfg_detail::parse_noise_kind(opt.kind);
    spec.rate = opt.rate;
    spec.seed = opt.seed;
    spec.validate();

    std::vector<int> labels = load_idx_labels(opt.in_path);
    if (labels.empty()) {
      throw std::runtime_error("corrupt: no labels in " + opt.in_path);
    }
    std::size_t n_classes = opt.n_classes;
    if (n_classes == 0) {
      int max_label = 0;
      for (int y : labels) max_label = std::max(max_label, y);
      n_classes = std::size_t(max_label) + 1;
    }
    auto [noisy, mask] = corrupt_label_list(labels, n_classes, spec);
    std::size_t flipped = 0;
    for (bool f : mask) flipped += f ? 1 : 0;

    fs::create_directories(opt.out_dir);
    write_idx_labels((fs::path(opt.out_dir) / "labels.idx").string(), noisy);
    json meta = {{"kind", noise_kind_name(spec.kind)},
                 {"rate", spec.rate},
                 {"seed", spec.seed},
                 {"n_classes", n_classes},
                 {"n_labels", labels.size()},
                 {"n_flipped", flipped},
                 {"realized_flip_fraction",
                  double(flipped) / double(labels.size())}};
    std::ofstream meta_out(fs::path(opt.out_dir) / "corrupt_meta.json");
    meta_out << meta.dump(2) << "\n";
    std::cout << meta.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "corrupt: " << e.what() << "\n";
    return 1;
  }
}

struct AnalyzeOptions {
  std::vector<std::string> runlogs;
  std::string regress;  // "xcol:ycol" or empty
  std::string out_path = "analysis.json";
};

inline json summary_to_json(const RunSummary& s) {
  json at_best = json::object();
  for (std::size_t c = 0; c < s.columns.size(); ++c) {
    at_best[s.columns[c]] = {{"mean", s.at_best[c].mean},
                             {"std", s.at_best[c].stddev}};
  }
  return json{{"n_runs", s.n_runs},
              {"best_epoch", {{"mean", s.best_epoch.mean},
                              {"std", s.best_epoch.stddev}}},
              {"best_test_err", {{"mean", s.best_test_err.mean},
                                 {"std", s.best_test_err.stddev}}},
              {"per_run_best_err", s.per_run_best_err},
              {"at_best", at_best}};
}

// Aggregates run logs (when they carry the runlog schema) and optionally fits
// a regression over a chosen column pair, concatenated across inputs.
inline int cmd_analyze(const AnalyzeOptions& opt) {
  try {
    if (opt.runlogs.empty()) {
      throw std::invalid_argument("analyze: no input files");
    }
    std::vector<CsvTable> tables;
    for (const std::string& path : opt.runlogs) {
      const fs::path marker = fs::path(path).parent_path() / "FAILED";
      if (fs::exists(marker)) {
        throw std::runtime_error("analyze: " + path +
                                 " belongs to a failed run (FAILED marker)");
      }
      tables.push_back(read_csv(path));
    }
    for (const CsvTable& t : tables) {
      if (t.header != tables[0].header) {
        throw std::runtime_error("analyze: input schemas differ");
      }
    }

    json out = json::object();
    out["inputs"] = opt.runlogs;
    if (tables[0].column("test_acc") >= 0) {
      out["summary"] = summary_to_json(aggregate_runs(tables));
    }
    if (!opt.regress.empty()) {
      const std::size_t colon = opt.regress.find(':');
      if (colon == std::string::npos || colon == 0 ||
          colon + 1 == opt.regress.size()) {
        throw std::invalid_argument("analyze: --regress wants 'xcol:ycol'");
      }
      const std::string xcol = opt.regress.substr(0, colon);
      const std::string ycol = opt.regress.substr(colon + 1);
      std::vector<double> x, y;
      for (const CsvTable& t : tables) {
        const std::size_t xc = std::size_t(t.require_column(xcol));
        const std::size_t yc = std::size_t(t.require_column(ycol));
        for (const auto& row : t.rows) {
          x.push_back(row[xc]);
          y.push_back(row[yc]);
        }
      }
      RegressionFit fit = linreg(x, y);
      json jfit = {{"x", xcol},
                   {"y", ycol},
                   {"slope", fit.slope},
                   {"intercept", fit.intercept},
                   {"r_squared", fit.r_squared},
                   {"n", fit.n}};
      if (!fit.warning.empty()) jfit["warning"] = fit.warning;
      out["regression"] = jfit;
    }
    if (!out.contains("summary") && !out.contains("regression")) {
      throw std::runtime_error(
          "analyze: inputs have no test_acc column and no --regress was given");
    }

    std::cout << out.dump(2) << "\n";
    std::ofstream f(opt.out_path);
    if (!f) throw std::runtime_error("analyze: cannot write " + opt.out_path);
    f << out.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "analyze: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace odlab
