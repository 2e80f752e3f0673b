#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ndmt/corpus.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {

enum class Strategy { min, max, mean, random, std };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);
std::span<const Strategy> all_strategies();

// The five group-based measurements of one metric.
struct Measurements {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double random = 0.0;
  double std = 0.0;

  double get(Strategy s) const;
  double& get(Strategy s);
};

struct GroupMeasurements {
  MetricId metric;
  std::string source_id;
  Measurements values;
};

// Index of the single-response pick for one (system, source) group. The
// same pick is used for every metric of that group.
std::uint64_t random_pick_seed(std::uint64_t seed, std::string_view system_id, std::string_view source_id);

// min/max/mean, the score of one seeded uniform pick, and the population
// standard deviation. Throws ValidationError on empty scores.
GroupMeasurements group_measurements(const GroupScores& scores, std::uint64_t seed);

// Per-source scores of one run: metric name -> source id -> scores.
using ScoreTable = std::map<std::string, std::map<std::string, GroupScores>>;

// Scores every group of the run for each native metric, in parallel across
// sources.
ScoreTable score_run(const RunSet& run, const SourceSet& sources, std::span<const MetricId> metrics,
                     const MetricOptions& options = {});

struct MetricSummary {
  MetricId metric;
  Measurements averages;
};

struct SystemReport {
  std::string system_id;
  double temperature = 0.0;
  DecodingMode decoding_mode = DecodingMode::sampled;
  std::size_t sampling_size = 0;
  std::size_t source_count = 0;
  std::vector<std::string> source_ids;        // sources averaged, in SourceSet order
  std::vector<std::string> excluded_sources;  // no usable group
  std::vector<MetricSummary> metrics;

  const MetricSummary* find(std::string_view metric) const;
  const MetricSummary& at(std::string_view metric) const;
};

// Dataset-level averages of the group measurements in `scores`. Sources
// without a group (or without scores for every metric) are excluded and
// listed. Throws ValidationError when no source remains.
SystemReport build_report(const RunSet& run, const SourceSet& sources, std::span<const MetricId> metrics,
                          const ScoreTable& scores, std::uint64_t seed);

// score_run followed by build_report, native metrics only.
SystemReport system_report(const RunSet& run, const SourceSet& sources, std::span<const MetricId> metrics,
                           std::uint64_t seed, const MetricOptions& options = {});

struct MetricDelta {
  MetricId metric;
  Measurements nd;
  Measurements baseline;
  Measurements delta;  // nd - baseline
};

struct DeltaReport {
  std::string nd_system_id;
  std::string baseline_system_id;
  std::size_t sampling_size = 0;
  std::vector<MetricDelta> metrics;
};

// Elementwise nd - baseline. Both reports must cover the same sources and the
// same metrics.
DeltaReport delta_report(const SystemReport& nd, const SystemReport& baseline);

}  // namespace ndmt
