#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "currictl/errors.hpp"
#include "currictl/metric_id.hpp"
#include "currictl/score_table.hpp"
#include "json.hpp"

namespace currictl {

// Average (fractional) ranks, 1-based; ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  size_t n = values.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

// Spearman rho: Pearson correlation of average-tie ranks. Monotone inputs
// return exactly +/-1; zero rank variance is an error, never NaN.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(errc::usage, "spearman inputs differ in length");
  if (x.size() < 3) fail(errc::insufficient_data, "spearman needs at least 3 points");
  for (double v : x)
    if (std::isnan(v)) fail(errc::data, "NaN in spearman input");
  for (double v : y)
    if (std::isnan(v)) fail(errc::data, "NaN in spearman input");

  std::vector<double> rx = average_ranks(x);
  std::vector<double> ry = average_ranks(y);
  size_t n = rx.size();

  bool identical = true, mirrored = true;
  double top = static_cast<double>(n + 1);
  for (size_t i = 0; i < n; ++i) {
    identical = identical && rx[i] == ry[i];
    mirrored = mirrored && rx[i] + ry[i] == top;
  }
  bool x_flat = std::all_of(rx.begin(), rx.end(), [&](double v) { return v == rx[0]; });
  bool y_flat = std::all_of(ry.begin(), ry.end(), [&](double v) { return v == ry[0]; });
  if (x_flat || y_flat)
    fail(errc::undefined_correlation, "zero variance in ranked vector");
  if (identical) return 1.0;
  if (mirrored) return -1.0;

  double mean = 0.5 * top;  // both rank vectors average to (n+1)/2
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

struct CorrelationMatrix {
  std::vector<MetricId> metric_ids;
  std::vector<std::vector<double>> rho;  // symmetric, unit diagonal
  uint64_t surviving_rows = 0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    std::vector<std::string> names;
    for (MetricId m : metric_ids) names.emplace_back(metric_name(m));
    j["metric_ids"] = names;
    j["rho"] = rho;
    j["surviving_rows"] = surviving_rows;
    return j;
  }
};

// Spearman matrix over rows that carry every requested metric (listwise
// deletion). Each pair is computed once and mirrored.
inline CorrelationMatrix correlation_matrix(const ScoreTable& table,
                                            const std::vector<MetricId>& metrics) {
  std::vector<std::vector<double>> columns(metrics.size());
  uint64_t surviving = 0;
  for (const auto& id : table.doc_order) {
    const auto& row = table.rows.at(id);
    bool complete = true;
    for (MetricId m : metrics) complete = complete && row.count(m) > 0;
    if (!complete) continue;
    ++surviving;
    for (size_t i = 0; i < metrics.size(); ++i) columns[i].push_back(row.at(metrics[i]));
  }
  if (surviving < 3)
    fail(errc::insufficient_data,
         "correlation needs at least 3 complete rows, got " + std::to_string(surviving));

  CorrelationMatrix out;
  out.metric_ids = metrics;
  out.surviving_rows = surviving;
  out.rho.assign(metrics.size(), std::vector<double>(metrics.size(), 0.0));
  for (size_t i = 0; i < metrics.size(); ++i) {
    out.rho[i][i] = 1.0;
    for (size_t j = i + 1; j < metrics.size(); ++j) {
      double r = spearman(columns[i], columns[j]);
      out.rho[i][j] = r;
      out.rho[j][i] = r;
    }
  }
  return out;
}

// CSV grid with metric ids as both the header row and the first column.
inline void export_heatmap_csv(const CorrelationMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io, "cannot write heatmap csv: " + path);
  out << "metric";
  for (MetricId id : m.metric_ids) out << "," << metric_name(id);
  out << "\n";
  for (size_t i = 0; i < m.metric_ids.size(); ++i) {
    out << metric_name(m.metric_ids[i]);
    for (size_t j = 0; j < m.metric_ids.size(); ++j) out << "," << format_double(m.rho[i][j]);
    out << "\n";
  }
}

}  // namespace currictl
