#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ndmt/groupstats.hpp"
#include "ndmt/ranking.hpp"

namespace ndmt {

// Numbers are written in the shortest form that parses back to the same
// double, so CSV and JSON round trips are exact.
std::string format_number(double v);
// Two decimals, truncated toward zero, as p-values appear in correlation tables.
std::string format_p_value(double p);

// RFC 4180 style: fields with comma, quote, CR or LF are quoted.
std::string csv_field(std::string_view s);
std::vector<std::string> parse_csv_line(std::string_view line);

nlohmann::json report_to_json(const SystemReport& report);
SystemReport report_from_json(const nlohmann::json& j);

// Long format, one row per system x metric x measurement:
// system,temperature,sampling_size,source_count,metric,polarity,measurement,value
void write_reports_csv(std::ostream& out, std::span<const SystemReport> reports);
// Inverse of write_reports_csv. Source ids are not part of the CSV, so the
// returned reports carry source_count only. Throws ValidationError on
// malformed input.
std::vector<SystemReport> read_reports_csv(std::istream& in, std::string_view origin = "<stream>");

nlohmann::json delta_to_json(const DeltaReport& delta);
// system,baseline,sampling_size,metric,polarity,measurement,nd,baseline_value,delta
void write_deltas_csv(std::ostream& out, std::span<const DeltaReport> deltas);
// One grid per measurement: rows = systems, columns = metrics, cells = delta.
void write_delta_grid_csv(std::ostream& out, std::span<const DeltaReport> deltas, Strategy strategy);

// metric,strategy,direction,rank,system,value
void write_rankings_csv(std::ostream& out, std::span<const Ranking> rankings);
nlohmann::json ranking_to_json(const Ranking& ranking);

nlohmann::json correlation_to_json(const CorrelationResult& r);
// Two-decimal "value/p" cell as printed in correlation tables.
std::string rho_cell(const CorrelationResult& r);
std::string tau_cell(const CorrelationResult& r);

// metric,strategy,n,rho,p_rho,tau,p_tau
void write_strategy_correlations_csv(std::ostream& out, std::span<const StrategyCorrelation> cells);
// Rows = strategy, columns = metric; a Kendall block then a Spearman block.
void write_strategy_correlation_table(std::ostream& out, std::span<const StrategyCorrelation> cells);
nlohmann::json strategy_correlations_to_json(std::span<const StrategyCorrelation> cells);

// metric,strategy,base_size,size,n,rho,p_rho,tau,p_tau
void write_consistency_csv(std::ostream& out, const ConsistencyTable& table);
// Rows = strategy, columns = metric x size, cells "rho/tau", then "p".
void write_consistency_table(std::ostream& out, const ConsistencyTable& table);
nlohmann::json consistency_to_json(const ConsistencyTable& table);

nlohmann::json buckets_to_json(const BucketsReport& report);

// metric,reliable,evidence,threshold,size_a,size_b,rho,p_rho,tau,p_tau
void write_verdicts_csv(std::ostream& out, std::span<const ReliabilityVerdict> verdicts);
nlohmann::json verdicts_to_json(std::span<const ReliabilityVerdict> verdicts,
                                std::span<const std::string> robust_systems);

// Writes the whole string to path (parent directories created) and throws
// Error when that fails.
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ndmt
