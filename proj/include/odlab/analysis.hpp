#pragma once

// Regression-study machinery and multi-run aggregation.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "odlab/csv.hpp"

namespace odlab {

struct RegressionFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
  std::string warning;  // set when SS_tot = 0 and R^2 defaults to 0
};

// Ordinary least squares of y on x; R^2 = 1 - SS_res/SS_tot.
inline RegressionFit linreg(const std::vector<double>& x,
                            const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("linreg: x and y lengths differ (" +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) {
    throw std::invalid_argument("linreg: need at least 2 points");
  }
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("linreg: x values are all equal");
  }
  RegressionFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  if (ss_tot == 0.0) {
    fit.r_squared = 0.0;
    fit.warning = "constant y: R^2 defined as 0";
  } else {
    fit.r_squared = 1.0 - ss_res / ss_tot;
  }
  return fit;
}

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population std; 0 for a single run
};

// Per run, the best epoch is the one minimizing the test top-1 error
// (maximizing test_acc; first such epoch on ties); every logged metric is
// read off at that epoch and then averaged across runs.
struct RunSummary {
  std::size_t n_runs = 0;
  std::vector<std::string> columns;
  std::vector<MetricSummary> at_best;   // aligned with columns
  MetricSummary best_epoch;
  MetricSummary best_test_err;          // 1 - test_acc at the best epoch
  std::vector<double> per_run_best_err;
};

namespace detail {
inline MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / double(v.size()));
  return s;
}
}  // namespace detail

inline RunSummary aggregate_runs(const std::vector<CsvTable>& runs) {
  if (runs.empty()) {
    throw std::invalid_argument("aggregate_runs: no runs given");
  }
  for (const CsvTable& t : runs) {
    if (t.header != runs[0].header) {
      throw std::invalid_argument("aggregate_runs: run schemas differ");
    }
    if (t.rows.empty()) {
      throw std::invalid_argument("aggregate_runs: run log has no rows");
    }
  }
  const int acc_col = runs[0].require_column("test_acc");
  const int epoch_col = runs[0].column("epoch");

  RunSummary out;
  out.n_runs = runs.size();
  out.columns = runs[0].header;
  std::vector<std::vector<double>> at_best(out.columns.size());
  std::vector<double> best_epochs;
  for (const CsvTable& t : runs) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < t.rows.size(); ++r) {
      if (t.rows[r][std::size_t(acc_col)] >
          t.rows[best][std::size_t(acc_col)]) {
        best = r;
      }
    }
    for (std::size_t c = 0; c < out.columns.size(); ++c) {
      at_best[c].push_back(t.rows[best][c]);
    }
    best_epochs.push_back(epoch_col >= 0 ? t.rows[best][std::size_t(epoch_col)]
                                         : double(best));
    out.per_run_best_err.push_back(1.0 - t.rows[best][std::size_t(acc_col)]);
  }
  out.at_best.reserve(out.columns.size());
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    out.at_best.push_back(detail::summarize(at_best[c]));
  }
  out.best_epoch = detail::summarize(best_epochs);
  out.best_test_err = detail::summarize(out.per_run_best_err);
  return out;
}

}  // namespace odlab
