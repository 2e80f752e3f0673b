#include "ndmt/manifest.hpp"

#include <fmt/format.h>
#include <limits>
#include <set>

#include "ndmt/error.hpp"
#include "ndmt/report_io.hpp"

namespace ndmt {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(fmt::format("{}: unknown key \"{}\"", where, key));
  }
}

template <typename T>
T get(const json& j, std::string_view key, std::string_view where) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(fmt::format("{}: key \"{}\" is missing or has the wrong type", where, key));
  }
}

template <typename T>
T get_or(const json& j, std::string_view key, T fallback, std::string_view where) {
  if (!j.contains(std::string(key))) return fallback;
  return get<T>(j, key, where);
}

std::uint64_t get_seed(const json& j, std::string_view key, std::string_view where) {
  const json& v = j.at(std::string(key));
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ValidationError(fmt::format("{}: \"{}\" must be a non-negative integer", where, key));
  }
  return v.get<std::uint64_t>();
}

std::vector<std::size_t> get_sizes(const json& j, std::string_view key, std::string_view where) {
  std::vector<std::size_t> out;
  const json& v = j.at(std::string(key));
  if (!v.is_array()) throw ValidationError(fmt::format("{}: \"{}\" must be an array", where, key));
  for (const auto& s : v) {
    if (!s.is_number_integer() || s.get<long long>() < 1) {
      throw ValidationError(fmt::format("{}: \"{}\" entries must be positive integers", where, key));
    }
    out.push_back(s.get<std::size_t>());
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  std::error_code ec;
  const fs::path rel = fs::relative(p, base, ec);
  if (ec || rel.empty() || rel.native().rfind("..", 0) == 0) return p.generic_string();
  return rel.generic_string();
}

ExternalMetricConfig parse_external(const json& j) {
  constexpr std::string_view where = "external_metrics entry";
  check_keys(j, where,
             {"name", "command", "needs_references", "needs_source", "polarity", "scale", "timeout", "batch_size"});
  ExternalMetricConfig c;
  c.metric_name = get<std::string>(j, "name", where);
  c.command = get<std::string>(j, "command", where);
  c.needs_references = get_or(j, "needs_references", true, where);
  c.needs_source = get_or(j, "needs_source", true, where);
  c.polarity = parse_polarity(get_or<std::string>(j, "polarity", "gain", where));
  if (j.contains("scale")) {
    const json& s = j["scale"];
    const auto bound = [&](std::size_t i, double open) {
      if (s[i].is_null()) return open;
      if (!s[i].is_number()) throw ValidationError("external metric scale bounds must be numbers or null");
      return s[i].get<double>();
    };
    if (!s.is_array() || s.size() != 2) throw ValidationError("external metric scale must be [lo, hi]");
    constexpr double inf = std::numeric_limits<double>::infinity();
    c.scale = {bound(0, -inf), bound(1, inf)};
  }
  c.timeout_seconds = get_or(j, "timeout", 60.0, where);
  const long long batch = get_or<long long>(j, "batch_size", 64, where);
  if (batch < 1) throw ValidationError("external metric \"" + c.metric_name + "\": batch_size must be positive");
  c.batch_size = static_cast<std::size_t>(batch);
  c.validate();
  return c;
}

SynthSpec parse_synth(const json& j) {
  constexpr std::string_view where = "synth";
  check_keys(j, where, {"sources", "seed", "lang_pair", "min_length", "max_length", "profiles", "sizes", "baselines", "shared_dropout"});
  SynthSpec s;
  s.corpus.count = get_or<std::size_t>(j, "sources", s.corpus.count, where);
  if (j.contains("seed")) s.corpus.seed = get_seed(j, "seed", where);
  s.corpus.lang_pair = get_or<std::string>(j, "lang_pair", s.corpus.lang_pair, where);
  s.corpus.min_length = get_or<std::size_t>(j, "min_length", s.corpus.min_length, where);
  s.corpus.max_length = get_or<std::size_t>(j, "max_length", s.corpus.max_length, where);
  if (j.contains("sizes")) s.sizes = get_sizes(j, "sizes", where);
  s.baselines = get_or(j, "baselines", true, where);
  s.shared_dropout = get_or(j, "shared_dropout", true, where);
  if (j.contains("profiles")) {
    if (!j["profiles"].is_array()) throw ValidationError("synth: \"profiles\" must be an array");
    for (const auto& p : j["profiles"]) s.profiles.push_back(parse_profile(p));
  }
  return s;
}

}  // namespace

SystemProfile parse_profile(const json& j) {
  constexpr std::string_view where = "synth profile";
  check_keys(j, where, {"system", "base_quality", "diversity", "dropout_rate", "seed", "dropout_seed", "temperature"});
  SystemProfile p;
  p.system_id = get<std::string>(j, "system", where);
  p.base_quality = get_or(j, "base_quality", p.base_quality, where);
  p.diversity = get_or(j, "diversity", p.diversity, where);
  p.dropout_rate = get_or(j, "dropout_rate", p.dropout_rate, where);
  p.temperature = get_or(j, "temperature", p.temperature, where);
  if (j.contains("seed")) p.seed = get_seed(j, "seed", where);
  if (j.contains("dropout_seed")) p.dropout_seed = get_seed(j, "dropout_seed", where);
  p.validate();
  return p;
}

const ExternalMetricConfig* RunManifest::external(const std::string& name) const {
  for (const auto& e : external_metrics) {
    if (e.metric_name == name) return &e;
  }
  return nullptr;
}

RunManifest parse_manifest(const json& j, const fs::path& base_dir) {
  constexpr std::string_view where = "manifest";
  check_keys(j, where,
             {"sources", "candidates", "baselines", "metrics", "external_metrics", "sizes", "subsample_seed", "seed",
              "base_size", "threshold", "buckets_threshold", "std_ascending", "case_sensitive", "cjk_words", "baseline_map", "out",
              "synth"});
  RunManifest m;
  m.base_dir = base_dir;
  if (j.contains("sources")) m.sources = resolve(base_dir, get<std::string>(j, "sources", where));
  if (j.contains("candidates")) {
    if (!j["candidates"].is_array()) throw ValidationError("manifest: \"candidates\" must be an array");
    for (const auto& c : j["candidates"]) {
      if (c.is_string()) {
        m.candidates.push_back({resolve(base_dir, c.get<std::string>()), std::nullopt});
        continue;
      }
      check_keys(c, "candidates entry", {"path", "size"});
      CandidateFile f{resolve(base_dir, get<std::string>(c, "path", "candidates entry")), std::nullopt};
      if (c.contains("size")) {
        const long long k = get<long long>(c, "size", "candidates entry");
        if (k < 1) throw ValidationError("candidates entry: \"size\" must be positive");
        f.size = static_cast<std::size_t>(k);
      }
      m.candidates.push_back(std::move(f));
    }
  }
  for (const auto& b : get_or<std::vector<std::string>>(j, "baselines", {}, where)) {
    m.baselines.push_back(resolve(base_dir, b));
  }
  if (j.contains("external_metrics")) {
    if (!j["external_metrics"].is_array()) throw ValidationError("manifest: \"external_metrics\" must be an array");
    std::set<std::string> names;
    for (const auto& e : j["external_metrics"]) {
      m.external_metrics.push_back(parse_external(e));
      if (!names.insert(m.external_metrics.back().metric_name).second) {
        throw ValidationError("external metric \"" + m.external_metrics.back().metric_name + "\" is declared twice");
      }
    }
  }
  std::set<std::string> seen;
  const auto add_metric = [&](const std::string& name) {
    if (!seen.insert(name).second) throw ValidationError("metric \"" + name + "\" is listed twice");
    if (auto native = MetricId::find_native(name)) {
      m.metrics.push_back(*native);
    } else if (const auto* e = m.external(name)) {
      m.metrics.push_back(e->metric_id());
    } else {
      throw ValidationError("unknown metric \"" + name + "\" (not native and not in external_metrics)");
    }
  };
  if (j.contains("metrics")) {
    for (const auto& name : get<std::vector<std::string>>(j, "metrics", where)) add_metric(name);
  } else {
    for (NativeMetric n : all_native_metrics()) add_metric(MetricId::of(n).name);
  }
  for (const auto& e : m.external_metrics) {
    if (!seen.count(e.metric_name)) add_metric(e.metric_name);
  }
  if (j.contains("sizes")) m.sizes = get_sizes(j, "sizes", where);
  if (j.contains("subsample_seed") && !j["subsample_seed"].is_null()) {
    m.subsample_seed = get_seed(j, "subsample_seed", where);
  }
  if (j.contains("seed")) m.seed = get_seed(j, "seed", where);
  if (j.contains("base_size")) {
    const long long b = get<long long>(j, "base_size", where);
    if (b < 1) throw ValidationError("manifest: \"base_size\" must be positive");
    m.base_size = static_cast<std::size_t>(b);
  }
  m.threshold = get_or(j, "threshold", m.threshold, where);
  m.buckets_threshold = get_or(j, "buckets_threshold", m.buckets_threshold, where);
  m.std_ascending = get_or(j, "std_ascending", m.std_ascending, where);
  m.case_sensitive = get_or(j, "case_sensitive", m.case_sensitive, where);
  if (j.contains("cjk_words")) {
    const std::string mode = get<std::string>(j, "cjk_words", where);
    if (mode != "codepoint" && mode != "whitespace") {
      throw ValidationError("manifest: \"cjk_words\" must be \"codepoint\" or \"whitespace\", got \"" + mode + "\"");
    }
    m.cjk_codepoints = mode == "codepoint";
  }
  m.baseline_map = get_or<std::map<std::string, std::string>>(j, "baseline_map", {}, where);
  if (j.contains("out")) m.out = resolve(base_dir, get<std::string>(j, "out", where));
  else m.out = base_dir / m.out;
  if (j.contains("synth")) m.synth = parse_synth(j["synth"]);
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return parse_manifest(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json manifest_to_json(const RunManifest& m) {
  json j = json::object();
  if (m.sources) j["sources"] = relative_to(*m.sources, m.base_dir);
  json cands = json::array();
  for (const auto& c : m.candidates) {
    if (c.size) cands.push_back({{"path", relative_to(c.path, m.base_dir)}, {"size", *c.size}});
    else cands.push_back(relative_to(c.path, m.base_dir));
  }
  j["candidates"] = cands;
  json bases = json::array();
  for (const auto& b : m.baselines) bases.push_back(relative_to(b, m.base_dir));
  j["baselines"] = bases;
  json metrics = json::array();
  for (const auto& metric : m.metrics) metrics.push_back(metric.name);
  j["metrics"] = metrics;
  if (!m.external_metrics.empty()) {
    json ext = json::array();
    for (const auto& e : m.external_metrics) {
      ext.push_back({{"name", e.metric_name},
                     {"command", e.command},
                     {"needs_references", e.needs_references},
                     {"needs_source", e.needs_source},
                     {"polarity", std::string(to_string(e.polarity))},
                     {"scale", {e.scale.lo, e.scale.hi}},
                     {"timeout", e.timeout_seconds},
                     {"batch_size", e.batch_size}});
    }
    j["external_metrics"] = ext;
  }
  if (!m.sizes.empty()) j["sizes"] = m.sizes;
  if (m.subsample_seed) j["subsample_seed"] = *m.subsample_seed;
  j["seed"] = m.seed;
  if (m.base_size) j["base_size"] = *m.base_size;
  j["threshold"] = m.threshold;
  j["buckets_threshold"] = m.buckets_threshold;
  j["std_ascending"] = m.std_ascending;
  j["case_sensitive"] = m.case_sensitive;
  j["cjk_words"] = m.cjk_codepoints ? "codepoint" : "whitespace";
  if (!m.baseline_map.empty()) j["baseline_map"] = m.baseline_map;
  j["out"] = relative_to(m.out, m.base_dir);
  return j;
}

void validate_manifest_inputs(const RunManifest& m) {
  if (m.metrics.empty()) throw ValidationError("manifest lists no metrics");
  const auto need = [](const fs::path& p, std::string_view what) {
    if (!fs::exists(p)) throw ValidationError(fmt::format("{} \"{}\" does not exist", what, p.string()));
  };
  if (!m.sources) throw ValidationError("manifest has no \"sources\" file");
  need(*m.sources, "sources file");
  for (const auto& c : m.candidates) need(c.path, "candidates file");
  for (const auto& b : m.baselines) need(b, "baselines file");
}

}  // namespace ndmt
