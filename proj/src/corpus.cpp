#include "ndmt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "json.hpp"
#include "ndmt/error.hpp"
#include "ndmt/rng.hpp"
#include "ndmt/tokenizer.hpp"

namespace ndmt {
namespace {

using nlohmann::json;

std::string location(std::string_view origin, std::size_t line) {
  return std::string(origin) + ":" + std::to_string(line);
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

json parse_line(const std::string& line, std::string_view origin, std::size_t lineno) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ValidationError(location(origin, lineno) + ": expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ValidationError(location(origin, lineno) + ": malformed JSON: " + e.what());
  }
}

template <typename T>
T require(const json& j, const char* key, std::string_view origin, std::size_t lineno) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError(location(origin, lineno) + ": missing field \"" + key + "\"");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(location(origin, lineno) + ": field \"" + key + "\" has the wrong type");
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

LangPair LangPair::parse(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0 || dash + 1 >= text.size() ||
      text.find('-', dash + 1) != std::string_view::npos) {
    throw ValidationError("malformed lang_pair \"" + std::string(text) + "\" (expected e.g. en-zh)");
  }
  LangPair pair{std::string(text.substr(0, dash)), std::string(text.substr(dash + 1))};
  if (pair.source == pair.target) {
    throw ValidationError("lang_pair \"" + std::string(text) + "\" has identical source and target");
  }
  return pair;
}

void SourceSet::add(SourceSegment segment) {
  if (segment.id.empty()) throw ValidationError("source id must be non-empty");
  if (is_blank(segment.text)) {
    throw ValidationError("source \"" + segment.id + "\" has empty text");
  }
  if (segment.lang_pair.source == segment.lang_pair.target) {
    throw ValidationError("source \"" + segment.id + "\" has identical source and target language");
  }
  if (index_.count(segment.id)) throw ValidationError("duplicate source id \"" + segment.id + "\"");
  index_.emplace(segment.id, segments_.size());
  segments_.push_back(std::move(segment));
}

const SourceSegment* SourceSet::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &segments_[it->second];
}

const SourceSegment& SourceSet::at(std::string_view id) const {
  if (const auto* s = find(id)) return *s;
  throw ValidationError("unknown source id \"" + std::string(id) + "\"");
}

std::map<std::string, std::size_t> SourceSet::direction_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : segments_) ++counts[s.lang_pair.str()];
  return counts;
}

std::string_view to_string(DecodingMode mode) {
  return mode == DecodingMode::deterministic ? "deterministic" : "sampled";
}

std::size_t RunSet::pool_size() const {
  std::size_t k = 0;
  for (const auto& [id, g] : groups) k = std::max(k, g.size());
  return k;
}

const CandidateGroup* RunSet::find(std::string_view source_id) const {
  const auto it = groups.find(std::string(source_id));
  return it == groups.end() ? nullptr : &it->second;
}

SourceSet read_sources(std::istream& in, std::string_view origin) {
  SourceSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const json j = parse_line(line, origin, lineno);
    SourceSegment seg;
    seg.id = require<std::string>(j, "id", origin, lineno);
    seg.text = nfc_normalize(require<std::string>(j, "src", origin, lineno));
    try {
      seg.lang_pair = LangPair::parse(require<std::string>(j, "lang_pair", origin, lineno));
    } catch (const ValidationError& e) {
      throw ValidationError(location(origin, lineno) + ": " + e.what());
    }
    if (j.contains("refs")) {
      for (const auto& r : require<std::vector<std::string>>(j, "refs", origin, lineno)) {
        seg.references.push_back(nfc_normalize(r));
      }
    }
    try {
      set.add(std::move(seg));
    } catch (const ValidationError& e) {
      throw ValidationError(location(origin, lineno) + ": " + e.what());
    }
  }
  return set;
}

SourceSet load_sources(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_sources(in, path.string());
}

std::vector<RunSet> read_runs(std::istream& in, const SourceSet& sources, std::string_view origin) {
  struct Sample {
    std::string text;
    std::int64_t seed;
  };
  struct Pending {
    std::string system;
    double temperature;
    std::map<std::string, std::map<std::int64_t, Sample>> samples;  // source -> index -> sample
  };
  std::vector<Pending> pending;
  std::map<std::pair<std::string, double>, std::size_t> slot;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    const json j = parse_line(line, origin, lineno);
    const auto source_id = require<std::string>(j, "source_id", origin, lineno);
    const auto system = require<std::string>(j, "system", origin, lineno);
    const auto temperature = require<double>(j, "temperature", origin, lineno);
    const auto index = require<std::int64_t>(j, "sample_index", origin, lineno);
    const auto text = require<std::string>(j, "text", origin, lineno);
    const std::int64_t seed = j.contains("seed") ? require<std::int64_t>(j, "seed", origin, lineno) : 0;
    if (!sources.contains(source_id)) {
      throw ValidationError(location(origin, lineno) + ": unknown source_id \"" + source_id + "\"");
    }
    if (system.empty()) throw ValidationError(location(origin, lineno) + ": empty system id");
    if (!(temperature >= 0.0)) {
      throw ValidationError(location(origin, lineno) + ": temperature must be non-negative");
    }
    if (index < 0) throw ValidationError(location(origin, lineno) + ": negative sample_index");

    const auto key = std::make_pair(system, temperature);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, pending.size()).first;
      pending.push_back({system, temperature, {}});
    }
    auto& by_index = pending[it->second].samples[source_id];
    if (!by_index.emplace(index, Sample{nfc_normalize(text), seed}).second) {
      throw ValidationError(location(origin, lineno) + ": duplicate sample_index " +
                            std::to_string(index) + " for source \"" + source_id +
                            "\" and system \"" + system + "\"");
    }
  }

  std::vector<RunSet> runs;
  runs.reserve(pending.size());
  for (auto& p : pending) {
    RunSet run;
    run.system_id = p.system;
    run.temperature = p.temperature;
    run.decoding_mode = p.temperature == 0.0 ? DecodingMode::deterministic : DecodingMode::sampled;
    std::set<std::size_t> sizes;
    for (auto& [source_id, by_index] : p.samples) {
      CandidateGroup g{source_id, p.system, p.temperature, by_index.begin()->second.seed, {}};
      std::int64_t expected = 0;
      bool gap = false;
      for (auto& [index, sample] : by_index) {
        gap = gap || index != expected++;
        g.candidates.push_back(std::move(sample.text));
      }
      if (gap) {
        run.diagnostics.warnings.push_back("source \"" + source_id +
                                           "\": sample indices are not contiguous from 0");
      }
      if (run.decoding_mode == DecodingMode::deterministic && g.size() != 1) {
        throw ValidationError(std::string(origin) + ": deterministic run \"" + p.system + "\" has " +
                              std::to_string(g.size()) + " candidates for source \"" + source_id +
                              "\" (expected 1)");
      }
      sizes.insert(g.size());
      run.groups.emplace(source_id, std::move(g));
    }
    if (sizes.size() > 1) {
      run.diagnostics.warnings.push_back("inconsistent group sizes: min " +
                                         std::to_string(*sizes.begin()) + ", max " +
                                         std::to_string(*sizes.rbegin()));
    }
    for (const auto& s : sources.segments()) {
      if (!run.groups.count(s.id)) run.diagnostics.missing_sources.push_back(s.id);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

std::vector<RunSet> load_runs(const std::filesystem::path& path, const SourceSet& sources) {
  auto in = open_input(path);
  return read_runs(in, sources, path.string());
}

void write_sources(std::ostream& out, const SourceSet& sources) {
  for (const auto& s : sources.segments()) {
    const json j = {{"id", s.id}, {"src", s.text}, {"lang_pair", s.lang_pair.str()}, {"refs", s.references}};
    out << j.dump() << '\n';
  }
}

void write_run(std::ostream& out, const RunSet& run) {
  for (const auto& [source_id, g] : run.groups) {
    for (std::size_t i = 0; i < g.candidates.size(); ++i) {
      const json j = {{"source_id", source_id},
                      {"system", run.system_id},
                      {"temperature", run.temperature},
                      {"sample_index", i},
                      {"text", g.candidates[i]},
                      {"seed", g.seed}};
      out << j.dump() << '\n';
    }
  }
}

CandidateGroup subsample_group(const CandidateGroup& group, std::size_t k,
                               std::optional<std::uint64_t> seed) {
  if (k == 0) throw ValidationError("sampling size must be positive");
  if (k > group.size()) {
    throw ValidationError("cannot draw " + std::to_string(k) + " candidates from a group of " +
                          std::to_string(group.size()) + " (source \"" + group.source_id + "\")");
  }
  CandidateGroup out = group;
  if (!seed) {
    out.candidates.resize(k);
    return out;
  }
  // Partial Fisher-Yates over indices, then restore pool order.
  std::vector<std::size_t> idx(group.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(*seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  out.candidates.clear();
  for (std::size_t i : idx) out.candidates.push_back(group.candidates[i]);
  return out;
}

RunSet subsample_run(const RunSet& run, std::size_t k, std::optional<std::uint64_t> seed) {
  RunSet out;
  out.system_id = run.system_id;
  out.decoding_mode = run.decoding_mode;
  out.temperature = run.temperature;
  out.diagnostics = run.diagnostics;
  std::size_t short_groups = 0;
  for (const auto& [source_id, g] : run.groups) {
    if (g.size() < k) {
      ++short_groups;
      out.groups.emplace(source_id, g);
      continue;
    }
    std::optional<std::uint64_t> group_seed;
    if (seed) group_seed = derive_seed(*seed, source_id);
    out.groups.emplace(source_id, subsample_group(g, k, group_seed));
  }
  if (short_groups) {
    out.diagnostics.warnings.push_back(std::to_string(short_groups) + " group(s) smaller than " +
                                       std::to_string(k) + " kept whole");
  }
  return out;
}

}  // namespace ndmt
