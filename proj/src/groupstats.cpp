#include "ndmt/groupstats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "ndmt/error.hpp"
#include "ndmt/parallel.hpp"
#include "ndmt/rng.hpp"

namespace ndmt {
namespace {

constexpr std::array kStrategies = {Strategy::min, Strategy::max, Strategy::mean, Strategy::random,
                                    Strategy::std};

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::min: return "min";
    case Strategy::max: return "max";
    case Strategy::mean: return "mean";
    case Strategy::random: return "random";
    case Strategy::std: return "std";
  }
  return "";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : kStrategies) {
    if (to_string(s) == text) return s;
  }
  throw ValidationError("unknown strategy \"" + std::string(text) + "\"");
}

std::span<const Strategy> all_strategies() { return kStrategies; }

double Measurements::get(Strategy s) const {
  switch (s) {
    case Strategy::min: return min;
    case Strategy::max: return max;
    case Strategy::mean: return mean;
    case Strategy::random: return random;
    case Strategy::std: return std;
  }
  return 0.0;
}

double& Measurements::get(Strategy s) {
  switch (s) {
    case Strategy::min: return min;
    case Strategy::max: return max;
    case Strategy::mean: return mean;
    case Strategy::random: return random;
    case Strategy::std: break;
  }
  return std;
}

std::uint64_t random_pick_seed(std::uint64_t seed, std::string_view system_id, std::string_view source_id) {
  return derive_seed(derive_seed(seed, system_id), source_id);
}

GroupMeasurements group_measurements(const GroupScores& scores, std::uint64_t seed) {
  const auto& v = scores.per_candidate;
  if (v.empty()) {
    throw ValidationError("no scores for metric \"" + scores.metric.name + "\" on source \"" +
                          scores.source_id + "\"");
  }
  GroupMeasurements out{scores.metric, scores.source_id, {}};
  Measurements& m = out.values;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  m.min = *lo;
  m.max = *hi;
  Rng rng(seed);
  m.random = v[rng.below(v.size())];
  if (m.min == m.max) {
    m.mean = m.min;
    m.std = 0.0;
    return out;
  }
  double sum = 0.0;
  for (double x : v) sum += x;
  const double k = static_cast<double>(v.size());
  m.mean = std::clamp(sum / k, m.min, m.max);
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / k);
  return out;
}

ScoreTable score_run(const RunSet& run, const SourceSet& sources, std::span<const MetricId> metrics,
                     const MetricOptions& options) {
  std::vector<const CandidateGroup*> groups;
  std::vector<const SourceSegment*> segs;
  for (const auto& s : sources.segments()) {
    if (const auto* g = run.find(s.id); g && !g->candidates.empty()) {
      groups.push_back(g);
      segs.push_back(&s);
    }
  }
  // slots[i][m] for source i, metric m.
  std::vector<std::vector<GroupScores>> slots(groups.size());
  parallel_for(groups.size(), [&](std::size_t i) {
    auto& row = slots[i];
    row.reserve(metrics.size());
    for (const auto& metric : metrics) row.push_back(score_group(*groups[i], *segs[i], metric, options));
  });
  ScoreTable table;
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    auto& by_source = table[metrics[m].name];
    for (std::size_t i = 0; i < groups.size(); ++i) {
      by_source.emplace(segs[i]->id, std::move(slots[i][m]));
    }
  }
  return table;
}

const MetricSummary* SystemReport::find(std::string_view metric) const {
  for (const auto& m : metrics) {
    if (m.metric.name == metric) return &m;
  }
  return nullptr;
}

const MetricSummary& SystemReport::at(std::string_view metric) const {
  if (const auto* m = find(metric)) return *m;
  throw ValidationError("report for \"" + system_id + "\" has no metric \"" + std::string(metric) + "\"");
}

SystemReport build_report(const RunSet& run, const SourceSet& sources, std::span<const MetricId> metrics,
                          const ScoreTable& scores, std::uint64_t seed) {
  if (metrics.empty()) throw ValidationError("at least one metric is required");
  SystemReport report;
  report.system_id = run.system_id;
  report.temperature = run.temperature;
  report.decoding_mode = run.decoding_mode;
  report.sampling_size = run.pool_size();

  std::vector<const std::map<std::string, GroupScores>*> columns;
  for (const auto& metric : metrics) {
    const auto it = scores.find(metric.name);
    if (it == scores.end()) throw ValidationError("no scores computed for metric \"" + metric.name + "\"");
    columns.push_back(&it->second);
  }

  std::vector<Measurements> sums(metrics.size());
  for (const auto& s : sources.segments()) {
    const CandidateGroup* g = run.find(s.id);
    bool usable = g && !g->candidates.empty();
    for (const auto* col : columns) usable = usable && col->count(s.id);
    if (!usable) {
      report.excluded_sources.push_back(s.id);
      continue;
    }
    const std::uint64_t pick = random_pick_seed(seed, run.system_id, s.id);
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const GroupScores& gs = columns[m]->at(s.id);
      if (gs.per_candidate.size() != g->size()) {
        throw ValidationError("metric \"" + metrics[m].name + "\" returned " +
                              std::to_string(gs.per_candidate.size()) + " scores for " +
                              std::to_string(g->size()) + " candidates (source \"" + s.id + "\")");
      }
      const Measurements v = group_measurements(gs, pick).values;
      for (Strategy st : kStrategies) sums[m].get(st) += v.get(st);
    }
    report.source_ids.push_back(s.id);
  }
  report.source_count = report.source_ids.size();
  if (report.source_count == 0) {
    throw ValidationError("system \"" + run.system_id + "\" has no scorable sources");
  }
  const double n = static_cast<double>(report.source_count);
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    MetricSummary summary{metrics[m], {}};
    for (Strategy st : kStrategies) summary.averages.get(st) = sums[m].get(st) / n;
    report.metrics.push_back(std::move(summary));
  }
  return report;
}

SystemReport system_report(const RunSet& run, const SourceSet& sources, std::span<const MetricId> metrics,
                           std::uint64_t seed, const MetricOptions& options) {
  const ScoreTable scores = score_run(run, sources, metrics, options);
  return build_report(run, sources, metrics, scores, seed);
}

DeltaReport delta_report(const SystemReport& nd, const SystemReport& baseline) {
  if (nd.source_ids != baseline.source_ids || nd.source_count != baseline.source_count) {
    throw ValidationError("delta: \"" + nd.system_id + "\" and baseline \"" + baseline.system_id +
                          "\" cover different source sets");
  }
  if (nd.metrics.size() != baseline.metrics.size()) {
    throw ValidationError("delta: \"" + nd.system_id + "\" and baseline \"" + baseline.system_id +
                          "\" report different metrics");
  }
  DeltaReport out{nd.system_id, baseline.system_id, nd.sampling_size, {}};
  for (const auto& m : nd.metrics) {
    const MetricSummary* b = baseline.find(m.metric.name);
    if (!b) {
      throw ValidationError("delta: baseline \"" + baseline.system_id + "\" lacks metric \"" +
                            m.metric.name + "\"");
    }
    MetricDelta d{m.metric, m.averages, b->averages, {}};
    for (Strategy st : kStrategies) d.delta.get(st) = m.averages.get(st) - b->averages.get(st);
    out.metrics.push_back(std::move(d));
  }
  return out;
}

}  // namespace ndmt
