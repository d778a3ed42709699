#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>

#include "currictl/errors.hpp"

namespace currictl {

enum class MetricId {
  compression_ratio,
  fertility,
  flesch_reading_ease,
  mtld,
  num_tokens,
  perplexity,
  ttr,
  hdd,
  fk_grade,
  coleman_liau,
  ari,
  dale_chall,
  linsear_write,
  gunning_fog,
  smog,
};

inline constexpr size_t kMetricCount = 15;

inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "compression_ratio", "fertility",   "flesch_reading_ease", "mtld", "num_tokens",
    "perplexity",        "ttr",         "hdd",                 "fk_grade", "coleman_liau",
    "ari",               "dale_chall",  "linsear_write",       "gunning_fog", "smog",
};

inline std::string_view metric_name(MetricId id) { return kMetricNames[static_cast<size_t>(id)]; }

inline MetricId parse_metric(std::string_view name) {
  for (size_t i = 0; i < kMetricCount; ++i)
    if (kMetricNames[i] == name) return static_cast<MetricId>(i);
  fail(errc::config, "unknown metric: " + std::string(name));
}

inline const std::array<MetricId, kMetricCount>& all_metrics() {
  static const std::array<MetricId, kMetricCount> out = [] {
    std::array<MetricId, kMetricCount> a{};
    for (size_t i = 0; i < kMetricCount; ++i) a[i] = static_cast<MetricId>(i);
    return a;
  }();
  return out;
}

// The six metrics retained after the correlation analysis.
inline constexpr std::array<MetricId, 6> kSelectedMetrics = {
    MetricId::compression_ratio, MetricId::fertility,  MetricId::flesch_reading_ease,
    MetricId::mtld,              MetricId::num_tokens, MetricId::perplexity,
};

// Which raw-score direction means "easy". Normalized difficulty orderings are
// always ascending easy -> hard; higher_easier metrics get their sign flipped.
class PolarityRegistry {
 public:
  PolarityRegistry() {
    for (MetricId id : all_metrics()) higher_easier_[id] = false;
    higher_easier_[MetricId::compression_ratio] = true;  // redundant text is easy
    higher_easier_[MetricId::flesch_reading_ease] = true;
  }

  bool higher_easier(MetricId id) const { return higher_easier_.at(id); }
  void set_higher_easier(MetricId id, bool value) { higher_easier_[id] = value; }

  double to_difficulty(MetricId id, double score) const {
    return higher_easier(id) ? -score : score;
  }

 private:
  std::unordered_map<MetricId, bool> higher_easier_;
};

}  // namespace currictl
