#include "ndmt/ranking.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "ndmt/error.hpp"

namespace ndmt {
namespace {

constexpr double kThresholdEps = 1e-12;

constexpr std::array kRoles = {StrategyRole::worst, StrategyRole::best, StrategyRole::mean, StrategyRole::random,
                               StrategyRole::std};

void check_report_set(std::span<const SystemReport> reports, std::string_view context) {
  if (reports.size() < 3) {
    throw ValidationError(std::string(context) + ": at least 3 systems are required, got " +
                          std::to_string(reports.size()));
  }
  std::set<std::string> ids;
  for (const auto& r : reports) {
    if (!ids.insert(r.system_id).second) {
      throw ValidationError(std::string(context) + ": system \"" + r.system_id + "\" appears twice");
    }
    if (r.source_ids != reports.front().source_ids || r.source_count != reports.front().source_count) {
      throw ValidationError(std::string(context) + ": \"" + r.system_id + "\" and \"" +
                            reports.front().system_id + "\" cover different source sets");
    }
  }
}

double value_of(const SystemReport& report, const MetricId& metric, Strategy strategy) {
  return report.at(metric.name).averages.get(strategy);
}

const SystemReport* find_report(std::span<const SystemReport> reports, std::string_view id) {
  for (const auto& r : reports) {
    if (r.system_id == id) return &r;
  }
  return nullptr;
}

const std::vector<SystemReport>& reports_at(const ReportsBySize& reports, std::size_t size) {
  const auto it = reports.find(size);
  if (it == reports.end()) throw ValidationError("no reports for sampling size " + std::to_string(size));
  return it->second;
}

void check_same_systems(const ReportsBySize& reports) {
  const auto& first = reports.begin()->second;
  for (const auto& [size, rs] : reports) {
    check_report_set(rs, "sampling size " + std::to_string(size));
    for (const auto& r : first) {
      if (!find_report(rs, r.system_id)) {
        throw ValidationError("system \"" + r.system_id + "\" is missing at sampling size " +
                              std::to_string(size));
      }
    }
    if (rs.size() != first.size()) {
      throw ValidationError("sampling size " + std::to_string(size) + " has a different system set");
    }
  }
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::higher_better ? "higher_better" : "lower_better";
}

Direction direction_of(const MetricId& metric, Strategy strategy, const RankingOptions& options) {
  if (strategy == Strategy::std) return options.std_ascending ? Direction::lower_better : Direction::higher_better;
  return metric.polarity == Polarity::gain ? Direction::higher_better : Direction::lower_better;
}

const RankedSystem* Ranking::find(std::string_view system_id) const {
  for (const auto& s : systems) {
    if (s.system_id == system_id) return &s;
  }
  return nullptr;
}

Ranking rank_systems(std::span<const SystemReport> reports, const MetricId& metric, Strategy strategy,
                     const RankingOptions& options) {
  check_report_set(reports, "rank");
  Ranking out{metric, strategy, direction_of(metric, strategy, options), {}};
  for (const auto& r : reports) out.systems.push_back({r.system_id, value_of(r, metric, strategy), 0.0});
  const bool higher = out.direction == Direction::higher_better;
  std::stable_sort(out.systems.begin(), out.systems.end(), [&](const RankedSystem& a, const RankedSystem& b) {
    return higher ? a.value > b.value : a.value < b.value;
  });
  std::size_t i = 0;
  while (i < out.systems.size()) {
    std::size_t j = i;
    while (j + 1 < out.systems.size() && out.systems[j + 1].value == out.systems[i].value) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) out.systems[k].rank = r;
    i = j + 1;
  }
  return out;
}

std::vector<StrategyCorrelation> dmt_ndmt_consistency(std::span<const SystemReport> nd_reports,
                                                      std::span<const SystemReport> d_reports,
                                                      std::span<const MetricId> metrics,
                                                      const std::map<std::string, std::string>& nd_to_d,
                                                      const DmtNdmtOptions& options) {
  check_report_set(nd_reports, "D-MT/ND-MT consistency (ND side)");
  check_report_set(d_reports, "D-MT/ND-MT consistency (D side)");
  if (metrics.empty()) throw ValidationError("D-MT/ND-MT consistency: no metrics");
  std::vector<const SystemReport*> paired;
  std::set<std::string> used;
  for (const auto& nd : nd_reports) {
    const auto it = nd_to_d.find(nd.system_id);
    const std::string& d_id = it == nd_to_d.end() ? nd.system_id : it->second;
    const SystemReport* d = find_report(d_reports, d_id);
    if (!d) {
      throw ValidationError("no deterministic report \"" + d_id + "\" for system \"" + nd.system_id + "\"");
    }
    if (!used.insert(d_id).second) {
      throw ValidationError("deterministic report \"" + d_id + "\" is paired with more than one system");
    }
    paired.push_back(d);
  }
  std::vector<StrategyCorrelation> out;
  for (const auto& metric : metrics) {
    std::vector<double> d_values;
    for (const auto* d : paired) d_values.push_back(value_of(*d, metric, Strategy::mean));
    for (Strategy st : all_strategies()) {
      std::vector<double> nd_values;
      for (const auto& nd : nd_reports) nd_values.push_back(value_of(nd, metric, st));
      const Alternative alt = st == Strategy::std ? options.std_alternative : options.alternative;
      out.push_back({metric.name, st, correlate(d_values, nd_values, alt)});
    }
  }
  return out;
}

CorrelationResult size_pair_correlation(const ReportsBySize& reports, const MetricId& metric, Strategy strategy,
                                        std::size_t size_a, std::size_t size_b, Alternative alternative) {
  const auto& ra = reports_at(reports, size_a);
  const auto& rb = reports_at(reports, size_b);
  std::vector<double> x, y;
  for (const auto& a : ra) {
    const SystemReport* b = find_report(rb, a.system_id);
    if (!b) {
      throw ValidationError("system \"" + a.system_id + "\" is missing at sampling size " + std::to_string(size_b));
    }
    x.push_back(value_of(a, metric, strategy));
    y.push_back(value_of(*b, metric, strategy));
  }
  if (rb.size() != ra.size()) {
    throw ValidationError("sampling sizes " + std::to_string(size_a) + " and " + std::to_string(size_b) +
                          " have different system sets");
  }
  return correlate(x, y, alternative);
}

const ConsistencyCell* ConsistencyTable::find(std::string_view metric, Strategy strategy, std::size_t size) const {
  for (const auto& c : cells) {
    if (c.metric == metric && c.strategy == strategy && c.size == size) return &c;
  }
  return nullptr;
}

ConsistencyTable cross_size_consistency(const ReportsBySize& reports, std::span<const MetricId> metrics,
                                        std::optional<std::size_t> base_size) {
  if (reports.size() < 2) {
    throw ValidationError("cross-size consistency needs at least 2 sampling sizes, got " +
                          std::to_string(reports.size()));
  }
  if (metrics.empty()) throw ValidationError("cross-size consistency: no metrics");
  check_same_systems(reports);
  ConsistencyTable table;
  table.base_size = base_size.value_or(reports.begin()->first);
  reports_at(reports, table.base_size);
  for (const auto& [size, rs] : reports) {
    if (size != table.base_size) table.sizes.push_back(size);
  }
  table.metrics.assign(metrics.begin(), metrics.end());
  for (const auto& metric : metrics) {
    for (Strategy st : all_strategies()) {
      for (std::size_t size : table.sizes) {
        table.cells.push_back({metric.name, st, table.base_size, size,
                               size_pair_correlation(reports, metric, st, table.base_size, size)});
      }
    }
  }
  return table;
}

std::string_view to_string(StrategyRole role) {
  switch (role) {
    case StrategyRole::worst: return "worst";
    case StrategyRole::best: return "best";
    case StrategyRole::mean: return "mean";
    case StrategyRole::random: return "random";
    case StrategyRole::std: return "std";
  }
  return "";
}

std::span<const StrategyRole> all_roles() { return kRoles; }

Strategy resolve_role(StrategyRole role, Polarity polarity) {
  const bool gain = polarity == Polarity::gain;
  switch (role) {
    case StrategyRole::worst: return gain ? Strategy::min : Strategy::max;
    case StrategyRole::best: return gain ? Strategy::max : Strategy::min;
    case StrategyRole::mean: return Strategy::mean;
    case StrategyRole::random: return Strategy::random;
    case StrategyRole::std: return Strategy::std;
  }
  return Strategy::mean;
}

const BucketsEntry& BucketsReport::at(StrategyRole role) const {
  for (const auto& e : entries) {
    if (e.role == role) return e;
  }
  throw ValidationError("buckets report has no entry for role \"" + std::string(to_string(role)) + "\"");
}

BucketsReport detect_buckets(const ConsistencyTable& table, double threshold) {
  if (table.cells.empty()) throw ValidationError("buckets detection needs a non-empty consistency table");
  BucketsReport report{threshold, {}};
  for (StrategyRole role : kRoles) {
    BucketsEntry e{role, 1.0, 1.0, 1.0, false};
    for (const auto& metric : table.metrics) {
      const Strategy st = resolve_role(role, metric.polarity);
      for (const auto& c : table.cells) {
        if (c.metric != metric.name || c.strategy != st) continue;
        e.min_rho = std::min(e.min_rho, c.result.rho);
        e.min_tau = std::min(e.min_tau, c.result.tau);
      }
    }
    e.evidence = std::min(e.min_rho, e.min_tau);
    e.stable = e.evidence >= threshold - kThresholdEps;
    report.entries.push_back(e);
  }
  return report;
}

std::vector<ReliabilityVerdict> expecto_sample(const ReportsBySize& reports, std::span<const MetricId> metrics,
                                               double threshold) {
  if (reports.size() < 2) {
    throw ValidationError("ExpectoSample needs at least 2 sampling sizes, got " + std::to_string(reports.size()));
  }
  if (metrics.empty()) throw ValidationError("ExpectoSample: no metrics");
  check_same_systems(reports);
  std::vector<std::size_t> sizes;
  for (const auto& [size, rs] : reports) sizes.push_back(size);
  std::vector<ReliabilityVerdict> out;
  for (const auto& metric : metrics) {
    ReliabilityVerdict v{metric, false, 1.0, threshold, {}};
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      for (std::size_t j = i + 1; j < sizes.size(); ++j) {
        const CorrelationResult r = size_pair_correlation(reports, metric, Strategy::mean, sizes[i], sizes[j]);
        v.evidence = std::min({v.evidence, r.rho, r.tau});
        v.pairs.push_back({sizes[i], sizes[j], r});
      }
    }
    v.reliable = v.evidence >= threshold - kThresholdEps;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::string> robust_systems(const ReportsBySize& reports, std::span<const ReliabilityVerdict> verdicts) {
  std::vector<std::string> out;
  if (reports.empty()) return out;
  std::vector<const ReliabilityVerdict*> reliable;
  for (const auto& v : verdicts) {
    if (v.reliable) reliable.push_back(&v);
  }
  if (reliable.empty()) return out;
  // system id -> metric name -> rank seen at the first size
  std::map<std::string, std::map<std::string, double>> first_rank;
  std::set<std::string> unstable;
  bool first = true;
  for (const auto& [size, rs] : reports) {
    for (const auto* v : reliable) {
      const Ranking ranking = rank_systems(rs, v->metric, Strategy::mean);
      for (const auto& s : ranking.systems) {
        if (first) {
          first_rank[s.system_id][v->metric.name] = s.rank;
        } else if (first_rank[s.system_id][v->metric.name] != s.rank) {
          unstable.insert(s.system_id);
        }
      }
    }
    first = false;
  }
  for (const auto& r : reports.begin()->second) {
    if (!unstable.count(r.system_id)) out.push_back(r.system_id);
  }
  return out;
}

}  // namespace ndmt
