#include "ndmt/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "ndmt/error.hpp"

namespace ndmt {
namespace {

using json = nlohmann::json;

constexpr std::string_view kReportHeader =
    "system,temperature,sampling_size,source_count,metric,polarity,measurement,value";

json scale_to_json(const Scale& s) {
  return {{"lo", s.lo}, {"hi", std::isinf(s.hi) ? json(nullptr) : json(s.hi)}};
}

Scale scale_from_json(const json& j) {
  Scale s;
  s.lo = j.at("lo").get<double>();
  s.hi = j.at("hi").is_null() ? std::numeric_limits<double>::infinity() : j.at("hi").get<double>();
  return s;
}

json metric_to_json(const MetricId& m) {
  return {{"name", m.name},
          {"polarity", std::string(to_string(m.polarity))},
          {"scale", scale_to_json(m.scale)},
          {"native", m.native.has_value()}};
}

MetricId metric_from_json(const json& j) {
  const auto name = j.at("name").get<std::string>();
  if (auto native = MetricId::find_native(name)) return *native;
  return MetricId::external(name, parse_polarity(j.at("polarity").get<std::string>()), scale_from_json(j.at("scale")));
}

MetricId metric_from_name(const std::string& name, Polarity polarity) {
  if (auto native = MetricId::find_native(name)) return *native;
  return MetricId::external(name, polarity, {-std::numeric_limits<double>::infinity(),
                                             std::numeric_limits<double>::infinity()});
}

json measurements_to_json(const Measurements& m) {
  json j = json::object();
  for (Strategy st : all_strategies()) j[std::string(to_string(st))] = m.get(st);
  return j;
}

Measurements measurements_from_json(const json& j) {
  Measurements m;
  for (Strategy st : all_strategies()) m.get(st) = j.at(std::string(to_string(st))).get<double>();
  return m;
}

DecodingMode parse_mode(const std::string& s) {
  if (s == "deterministic") return DecodingMode::deterministic;
  if (s == "sampled") return DecodingMode::sampled;
  throw ValidationError("unknown decoding_mode \"" + s + "\"");
}

double parse_double(const std::string& s, std::string_view what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("invalid number \"" + s + "\" for " + std::string(what));
}

std::size_t parse_size(const std::string& s, std::string_view what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size()) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw ValidationError("invalid count \"" + s + "\" for " + std::string(what));
}

std::string two_dp(double v) { return fmt::format("{:.2f}", v); }

}  // namespace

std::string format_p_value(double p) {
  // Truncated, so 1/120 shows as 0.00 and 5/120 as 0.04.
  return fmt::format("{:.2f}", std::floor(p * 100.0 + 1e-9) / 100.0);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted CSV field");
  fields.push_back(std::move(cur));
  return fields;
}

json report_to_json(const SystemReport& r) {
  json metrics = json::array();
  for (const auto& m : r.metrics) {
    json j = metric_to_json(m.metric);
    j["averages"] = measurements_to_json(m.averages);
    metrics.push_back(std::move(j));
  }
  return {{"system", r.system_id},
          {"temperature", r.temperature},
          {"decoding_mode", std::string(to_string(r.decoding_mode))},
          {"sampling_size", r.sampling_size},
          {"source_count", r.source_count},
          {"sources", r.source_ids},
          {"excluded_sources", r.excluded_sources},
          {"metrics", std::move(metrics)}};
}

SystemReport report_from_json(const json& j) {
  try {
    SystemReport r;
    r.system_id = j.at("system").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.decoding_mode = parse_mode(j.at("decoding_mode").get<std::string>());
    r.sampling_size = j.at("sampling_size").get<std::size_t>();
    r.source_count = j.at("source_count").get<std::size_t>();
    r.source_ids = j.at("sources").get<std::vector<std::string>>();
    r.excluded_sources = j.value("excluded_sources", std::vector<std::string>{});
    for (const auto& m : j.at("metrics")) {
      r.metrics.push_back({metric_from_json(m), measurements_from_json(m.at("averages"))});
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
}

void write_reports_csv(std::ostream& out, std::span<const SystemReport> reports) {
  out << kReportHeader << '\n';
  for (const auto& r : reports) {
    for (const auto& m : r.metrics) {
      for (Strategy st : all_strategies()) {
        out << csv_field(r.system_id) << ',' << format_number(r.temperature) << ',' << r.sampling_size << ','
            << r.source_count << ',' << csv_field(m.metric.name) << ',' << to_string(m.metric.polarity) << ','
            << to_string(st) << ',' << format_number(m.averages.get(st)) << '\n';
      }
    }
  }
}

std::vector<SystemReport> read_reports_csv(std::istream& in, std::string_view origin) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) {
    throw ValidationError(std::string(origin) + ":1: unexpected report CSV header \"" + line + "\"");
  }
  std::vector<SystemReport> reports;
  std::map<std::string, std::size_t> index;  // system|sampling_size -> report
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = fmt::format("{}:{}", origin, lineno);
    std::vector<std::string> f;
    try {
      f = parse_csv_line(line);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (f.size() != 8) throw ValidationError(fmt::format("{}: expected 8 fields, got {}", where, f.size()));
    try {
      const std::string key = f[0] + '\x1f' + f[2];
      auto it = index.find(key);
      if (it == index.end()) {
        SystemReport r;
        r.system_id = f[0];
        r.temperature = parse_double(f[1], "temperature");
        r.decoding_mode = r.temperature == 0.0 ? DecodingMode::deterministic : DecodingMode::sampled;
        r.sampling_size = parse_size(f[2], "sampling_size");
        r.source_count = parse_size(f[3], "source_count");
        it = index.emplace(key, reports.size()).first;
        reports.push_back(std::move(r));
      }
      SystemReport& r = reports[it->second];
      const Polarity pol = parse_polarity(f[5]);
      MetricSummary* summary = nullptr;
      for (auto& m : r.metrics) {
        if (m.metric.name == f[4]) summary = &m;
      }
      if (!summary) {
        r.metrics.push_back({metric_from_name(f[4], pol), {}});
        summary = &r.metrics.back();
      }
      summary->averages.get(parse_strategy(f[6])) = parse_double(f[7], "value");
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return reports;
}

json delta_to_json(const DeltaReport& d) {
  json metrics = json::array();
  for (const auto& m : d.metrics) {
    json j = metric_to_json(m.metric);
    j["nd"] = measurements_to_json(m.nd);
    j["baseline"] = measurements_to_json(m.baseline);
    j["delta"] = measurements_to_json(m.delta);
    metrics.push_back(std::move(j));
  }
  return {{"system", d.nd_system_id},
          {"baseline", d.baseline_system_id},
          {"sampling_size", d.sampling_size},
          {"metrics", std::move(metrics)}};
}

void write_deltas_csv(std::ostream& out, std::span<const DeltaReport> deltas) {
  out << "system,baseline,sampling_size,metric,polarity,measurement,nd,baseline_value,delta\n";
  for (const auto& d : deltas) {
    for (const auto& m : d.metrics) {
      for (Strategy st : all_strategies()) {
        out << csv_field(d.nd_system_id) << ',' << csv_field(d.baseline_system_id) << ',' << d.sampling_size << ','
            << csv_field(m.metric.name) << ',' << to_string(m.metric.polarity) << ',' << to_string(st) << ','
            << format_number(m.nd.get(st)) << ',' << format_number(m.baseline.get(st)) << ','
            << format_number(m.delta.get(st)) << '\n';
      }
    }
  }
}

void write_delta_grid_csv(std::ostream& out, std::span<const DeltaReport> deltas, Strategy strategy) {
  out << "system";
  if (!deltas.empty()) {
    for (const auto& m : deltas.front().metrics) out << ',' << csv_field(m.metric.name);
  }
  out << '\n';
  for (const auto& d : deltas) {
    out << csv_field(d.nd_system_id);
    for (const auto& m : d.metrics) out << ',' << format_number(m.delta.get(strategy));
    out << '\n';
  }
}

void write_rankings_csv(std::ostream& out, std::span<const Ranking> rankings) {
  out << "metric,strategy,direction,rank,system,value\n";
  for (const auto& r : rankings) {
    for (const auto& s : r.systems) {
      out << csv_field(r.metric.name) << ',' << to_string(r.strategy) << ',' << to_string(r.direction) << ','
          << format_number(s.rank) << ',' << csv_field(s.system_id) << ',' << format_number(s.value) << '\n';
    }
  }
}

json ranking_to_json(const Ranking& r) {
  json systems = json::array();
  for (const auto& s : r.systems) systems.push_back({{"system", s.system_id}, {"value", s.value}, {"rank", s.rank}});
  return {{"metric", r.metric.name},
          {"strategy", std::string(to_string(r.strategy))},
          {"direction", std::string(to_string(r.direction))},
          {"systems", std::move(systems)}};
}

json correlation_to_json(const CorrelationResult& r) {
  return {{"n", r.n}, {"rho", r.rho}, {"p_rho", r.p_rho}, {"tau", r.tau}, {"p_tau", r.p_tau}};
}

std::string rho_cell(const CorrelationResult& r) { return two_dp(r.rho) + "/" + format_p_value(r.p_rho); }
std::string tau_cell(const CorrelationResult& r) { return two_dp(r.tau) + "/" + format_p_value(r.p_tau); }

void write_strategy_correlations_csv(std::ostream& out, std::span<const StrategyCorrelation> cells) {
  out << "metric,strategy,n,rho,p_rho,tau,p_tau\n";
  for (const auto& c : cells) {
    out << csv_field(c.metric) << ',' << to_string(c.strategy) << ',' << c.result.n << ','
        << format_number(c.result.rho) << ',' << format_number(c.result.p_rho) << ','
        << format_number(c.result.tau) << ',' << format_number(c.result.p_tau) << '\n';
  }
}

void write_strategy_correlation_table(std::ostream& out, std::span<const StrategyCorrelation> cells) {
  std::vector<std::string> metrics;
  for (const auto& c : cells) {
    if (std::find(metrics.begin(), metrics.end(), c.metric) == metrics.end()) metrics.push_back(c.metric);
  }
  const auto block = [&](std::string_view title, bool rho) {
    out << title;
    for (const auto& m : metrics) out << ',' << csv_field(m);
    out << '\n';
    for (Strategy st : all_strategies()) {
      out << to_string(st);
      for (const auto& m : metrics) {
        out << ',';
        for (const auto& c : cells) {
          if (c.metric == m && c.strategy == st) out << (rho ? rho_cell(c.result) : tau_cell(c.result));
        }
      }
      out << '\n';
    }
  };
  block("kendall_tau/p", false);
  block("spearman_rho/p", true);
}

json strategy_correlations_to_json(std::span<const StrategyCorrelation> cells) {
  json arr = json::array();
  for (const auto& c : cells) {
    json j = correlation_to_json(c.result);
    j["metric"] = c.metric;
    j["strategy"] = std::string(to_string(c.strategy));
    arr.push_back(std::move(j));
  }
  return arr;
}

void write_consistency_csv(std::ostream& out, const ConsistencyTable& table) {
  out << "metric,strategy,base_size,size,n,rho,p_rho,tau,p_tau\n";
  for (const auto& c : table.cells) {
    out << csv_field(c.metric) << ',' << to_string(c.strategy) << ',' << c.base_size << ',' << c.size << ','
        << c.result.n << ',' << format_number(c.result.rho) << ',' << format_number(c.result.p_rho) << ','
        << format_number(c.result.tau) << ',' << format_number(c.result.p_tau) << '\n';
  }
}

void write_consistency_table(std::ostream& out, const ConsistencyTable& table) {
  out << "strategy";
  for (const auto& m : table.metrics) {
    for (std::size_t size : table.sizes) {
      out << ',' << csv_field(fmt::format("{} N={} rho/tau", m.name, size)) << ','
          << csv_field(fmt::format("{} N={} p", m.name, size));
    }
  }
  out << '\n';
  for (Strategy st : all_strategies()) {
    out << to_string(st);
    for (const auto& m : table.metrics) {
      for (std::size_t size : table.sizes) {
        const ConsistencyCell* c = table.find(m.name, st, size);
        if (!c) {
          out << ",,";
          continue;
        }
        out << ',' << two_dp(c->result.rho) << " / " << two_dp(c->result.tau) << ','
            << format_p_value(std::max(c->result.p_rho, c->result.p_tau));
      }
    }
    out << '\n';
  }
}

json consistency_to_json(const ConsistencyTable& table) {
  json cells = json::array();
  for (const auto& c : table.cells) {
    json j = correlation_to_json(c.result);
    j["metric"] = c.metric;
    j["strategy"] = std::string(to_string(c.strategy));
    j["base_size"] = c.base_size;
    j["size"] = c.size;
    cells.push_back(std::move(j));
  }
  json metrics = json::array();
  for (const auto& m : table.metrics) metrics.push_back(metric_to_json(m));
  return {{"base_size", table.base_size}, {"sizes", table.sizes}, {"metrics", metrics}, {"cells", cells}};
}

json buckets_to_json(const BucketsReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"role", std::string(to_string(e.role))},
                       {"min_rho", e.min_rho},
                       {"min_tau", e.min_tau},
                       {"evidence", e.evidence},
                       {"stable", e.stable}});
  }
  json stable = json::array();
  for (const auto& e : report.entries) {
    if (e.stable) stable.push_back(std::string(to_string(e.role)));
  }
  return {{"threshold", report.threshold}, {"strategies", entries}, {"stable", stable}};
}

void write_verdicts_csv(std::ostream& out, std::span<const ReliabilityVerdict> verdicts) {
  out << "metric,reliable,evidence,threshold,size_a,size_b,rho,p_rho,tau,p_tau\n";
  for (const auto& v : verdicts) {
    for (const auto& p : v.pairs) {
      out << csv_field(v.metric.name) << ',' << (v.reliable ? "true" : "false") << ','
          << format_number(v.evidence) << ',' << format_number(v.threshold) << ',' << p.size_a << ',' << p.size_b
          << ',' << format_number(p.result.rho) << ',' << format_number(p.result.p_rho) << ','
          << format_number(p.result.tau) << ',' << format_number(p.result.p_tau) << '\n';
    }
  }
}

json verdicts_to_json(std::span<const ReliabilityVerdict> verdicts, std::span<const std::string> robust) {
  json arr = json::array();
  for (const auto& v : verdicts) {
    json pairs = json::array();
    for (const auto& p : v.pairs) {
      json j = correlation_to_json(p.result);
      j["size_a"] = p.size_a;
      j["size_b"] = p.size_b;
      pairs.push_back(std::move(j));
    }
    arr.push_back({{"metric", v.metric.name},
                   {"reliable", v.reliable},
                   {"evidence", v.evidence},
                   {"threshold", v.threshold},
                   {"pairs", std::move(pairs)}});
  }
  json reliable = json::array();
  for (const auto& v : verdicts) {
    if (v.reliable) reliable.push_back(v.metric.name);
  }
  return {{"verdicts", arr},
          {"reliable_metrics", reliable},
          {"robust_systems", std::vector<std::string>(robust.begin(), robust.end())}};
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open \"" + path.string() + "\" for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing \"" + path.string() + "\"");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open \"" + path.string() + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ndmt
