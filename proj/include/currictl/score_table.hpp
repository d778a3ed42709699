#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "currictl/errors.hpp"
#include "currictl/metric_id.hpp"

namespace currictl {

// Shortest decimal that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    fail(errc::data, "bad float '" + std::string(s) + "' in " + where);
  return v;
}

// Per-document metric values. Row order follows insertion (manifest order);
// in-memory rows may be partial, but serialized tables are rectangular.
struct ScoreTable {
  std::vector<MetricId> metrics;                           // column order
  std::vector<std::string> doc_order;                      // row order
  std::map<std::string, std::map<MetricId, double>> rows;  // doc_id -> metric -> score
  std::map<std::string, uint64_t> token_counts;

  void add_row(const std::string& doc_id, uint64_t tokens, std::map<MetricId, double> values) {
    doc_order.push_back(doc_id);
    token_counts[doc_id] = tokens;
    rows[doc_id] = std::move(values);
  }

  bool operator==(const ScoreTable& other) const {
    return metrics == other.metrics && doc_order == other.doc_order && rows == other.rows &&
           token_counts == other.token_counts;
  }
};

inline void write_scores(const ScoreTable& table, const std::string& path) {
  if (table.doc_order.empty()) fail(errc::data, "refusing to write empty score table");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::io, "cannot write score table: " + path);
  out << "id,token_count";
  for (MetricId m : table.metrics) out << "," << metric_name(m);
  out << "\n";
  for (const auto& id : table.doc_order) {
    const auto& row = table.rows.at(id);
    out << id << "," << table.token_counts.at(id);
    for (MetricId m : table.metrics) {
      auto it = row.find(m);
      if (it == row.end())
        fail(errc::data, "row " + id + " is missing metric " + std::string(metric_name(m)));
      out << "," << format_double(it->second);
    }
    out << "\n";
  }
}

inline ScoreTable read_scores(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::io, "cannot read score table: " + path);
  std::string line;
  if (!std::getline(in, line)) fail(errc::data, "empty score table: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "id" || header[1] != "token_count")
    fail(errc::data, "score table header must start with id,token_count: " + path);

  ScoreTable table;
  for (size_t i = 2; i < header.size(); ++i) {
    bool known = false;
    for (auto name : kMetricNames) known = known || name == header[i];
    if (!known) fail(errc::data, "unknown metric column '" + header[i] + "' in " + path);
    table.metrics.push_back(parse_metric(header[i]));
  }

  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      fail(errc::data, "row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(header.size()));
    const std::string where = path + ":" + std::to_string(lineno);
    uint64_t tokens = 0;
    {
      auto [ptr, ec] = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), tokens);
      if (ec != std::errc() || ptr != cells[1].data() + cells[1].size())
        fail(errc::data, "bad token_count in " + where);
    }
    std::map<MetricId, double> row;
    for (size_t i = 0; i < table.metrics.size(); ++i)
      row[table.metrics[i]] = parse_double(cells[2 + i], where);
    table.add_row(cells[0], tokens, std::move(row));
  }
  return table;
}

}  // namespace currictl
