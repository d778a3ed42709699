#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "currictl/analysis.hpp"
#include "currictl/prng.hpp"

using namespace currictl;
using Catch::Matchers::WithinAbs;

TEST_CASE("average ranks with ties") {
  CHECK(average_ranks({10.0, 20.0, 30.0}) == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(average_ranks({1.0, 2.0, 2.0, 4.0}) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  CHECK(average_ranks({5.0, 5.0, 5.0}) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("spearman on monotone pairs is exactly +-1") {
  CHECK(spearman({1, 2, 3}, {10, 20, 30}) == 1.0);
  CHECK(spearman({1, 2, 3}, {3, 2, 1}) == -1.0);
  std::vector<double> x = {3.5, -2.0, 7.25, 0.0, 11.0};
  CHECK(spearman(x, x) == 1.0);
}

TEST_CASE("spearman tied example matches the brute-force oracle") {
  // ranks: x -> [1, 2.5, 2.5, 4], y -> [1, 3, 2, 4]; Pearson of the ranks
  std::vector<double> rx = {1.0, 2.5, 2.5, 4.0};
  std::vector<double> ry = {1.0, 3.0, 2.0, 4.0};
  double mx = 2.5, my = 2.5, sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < 4; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  double oracle = sxy / std::sqrt(sxx * syy);
  CHECK_THAT(spearman({1, 2, 2, 4}, {1, 3, 2, 4}), WithinAbs(oracle, 1e-12));
}

TEST_CASE("spearman input validation") {
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), error);
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2}), error);  // < 3 points
  CHECK_THROWS_AS(spearman({1, 2, std::nan("")}, {1, 2, 3}), error);
  try {
    spearman({5, 5, 5}, {1, 2, 3});
    FAIL("expected undefined correlation");
  } catch (const error& e) {
    CHECK(e.kind() == errc::undefined_correlation);
  }
}

TEST_CASE("spearman is invariant under strictly monotone transforms") {
  Prng rng(777);
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(rng.uniform01() * 10.0 - 5.0);
    y.push_back(rng.uniform01() * 10.0 - 5.0);
  }
  double base = spearman(x, y);
  std::vector<double> ex = x, cy = y;
  for (auto& v : ex) v = std::exp(v);
  for (auto& v : cy) v = v * v * v;
  CHECK_THAT(spearman(ex, y), WithinAbs(base, 1e-12));
  CHECK_THAT(spearman(x, cy), WithinAbs(base, 1e-12));
}

namespace {

ScoreTable random_table(uint64_t seed, size_t docs, const std::vector<MetricId>& metrics) {
  Prng rng(seed);
  ScoreTable t;
  t.metrics = metrics;
  for (size_t d = 0; d < docs; ++d) {
    std::map<MetricId, double> row;
    for (MetricId m : metrics) row[m] = rng.uniform01();
    t.add_row("doc" + std::to_string(d), 10, row);
  }
  return t;
}

}  // namespace

TEST_CASE("correlation matrix: identical columns, symmetry, unit diagonal") {
  ScoreTable t = random_table(9, 50, {MetricId::ttr, MetricId::mtld});
  for (const auto& id : t.doc_order) t.rows[id][MetricId::hdd] = t.rows[id][MetricId::ttr];
  t.metrics.push_back(MetricId::hdd);

  CorrelationMatrix m = correlation_matrix(t, {MetricId::ttr, MetricId::mtld, MetricId::hdd});
  CHECK(m.surviving_rows == 50);
  CHECK(m.rho[0][2] == 1.0);  // duplicated column correlates perfectly
  for (size_t i = 0; i < 3; ++i) {
    CHECK(m.rho[i][i] == 1.0);
    for (size_t j = 0; j < 3; ++j) CHECK(m.rho[i][j] == m.rho[j][i]);
  }
}

TEST_CASE("listwise deletion drops incomplete rows without changing the rest") {
  ScoreTable t = random_table(13, 30, {MetricId::ttr, MetricId::mtld});
  CorrelationMatrix before = correlation_matrix(t, t.metrics);
  t.add_row("partial", 10, {{MetricId::ttr, 0.5}});  // mtld missing
  CorrelationMatrix after = correlation_matrix(t, t.metrics);
  CHECK(after.surviving_rows == 30);
  CHECK(after.rho == before.rho);
}

TEST_CASE("fewer than three complete rows is an error") {
  ScoreTable t = random_table(2, 2, {MetricId::ttr, MetricId::mtld});
  try {
    correlation_matrix(t, t.metrics);
    FAIL("expected insufficient data");
  } catch (const error& e) {
    CHECK(e.kind() == errc::insufficient_data);
  }
}

TEST_CASE("heatmap csv round-trips the matrix") {
  ScoreTable t = random_table(31, 40, {MetricId::ttr, MetricId::mtld, MetricId::hdd});
  CorrelationMatrix m = correlation_matrix(t, t.metrics);
  auto path = (std::filesystem::temp_directory_path() / "currictl_heatmap.csv").string();
  export_heatmap_csv(m, path);

  std::ifstream in(path);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "metric,ttr,mtld,hdd");
  size_t row = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    CHECK(cell == std::string(metric_name(m.metric_ids[row])));
    size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      CHECK_THAT(std::stod(cell), WithinAbs(m.rho[row][col], 1e-12));
      ++col;
    }
    CHECK(col == 3);
    ++row;
  }
  CHECK(row == 3);  // 2x2 case generalizes: N metrics -> N+1 lines
}

TEST_CASE("matrix json export has canonical fields") {
  ScoreTable t = random_table(77, 10, {MetricId::ttr, MetricId::mtld});
  CorrelationMatrix m = correlation_matrix(t, t.metrics);
  nlohmann::json j = m.to_json();
  CHECK(j.contains("metric_ids"));
  CHECK(j.contains("rho"));
  CHECK(j.contains("surviving_rows"));
  CHECK(j["metric_ids"][0] == "ttr");
}
