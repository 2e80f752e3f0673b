#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ndmt {

struct LangPair {
  std::string source;
  std::string target;

  // "en-zh" -> {en, zh}. Throws ValidationError on malformed or equal codes.
  static LangPair parse(std::string_view text);
  std::string str() const { return source + "-" + target; }
  bool operator==(const LangPair&) const = default;
};

struct SourceSegment {
  std::string id;
  std::string text;
  LangPair lang_pair;
  std::vector<std::string> references;
};

// Source sentences in file order, indexed by id.
class SourceSet {
 public:
  // Throws ValidationError on duplicate id, blank text, or source == target.
  void add(SourceSegment segment);

  const SourceSegment* find(std::string_view id) const;
  const SourceSegment& at(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  std::span<const SourceSegment> segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }

  // Segment count per direction, keyed "src-tgt".
  std::map<std::string, std::size_t> direction_counts() const;

 private:
  std::vector<SourceSegment> segments_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class DecodingMode { deterministic, sampled };

std::string_view to_string(DecodingMode mode);

struct CandidateGroup {
  std::string source_id;
  std::string system_id;
  double temperature = 0.0;
  std::int64_t seed = 0;
  std::vector<std::string> candidates;

  std::size_t size() const { return candidates.size(); }
  bool operator==(const CandidateGroup&) const = default;
};

// Non-fatal findings from loading or validating a run.
struct RunDiagnostics {
  std::vector<std::string> missing_sources;  // in the SourceSet, not in the run
  std::vector<std::string> warnings;
};

struct RunSet {
  std::string system_id;
  DecodingMode decoding_mode = DecodingMode::sampled;
  double temperature = 0.0;
  std::map<std::string, CandidateGroup> groups;  // keyed by source_id
  RunDiagnostics diagnostics;

  // Largest group size; 0 for an empty run.
  std::size_t pool_size() const;
  const CandidateGroup* find(std::string_view source_id) const;
};

// sources.jsonl: {"id", "src", "lang_pair", "refs"} per line. Text is NFC
// normalized. Errors carry the 1-based line number.
SourceSet load_sources(const std::filesystem::path& path);
SourceSet read_sources(std::istream& in, std::string_view origin = "<stream>");

// candidates.jsonl: {"source_id", "system", "temperature", "sample_index",
// "text", "seed"} per line. One RunSet per (system, temperature), ordered by
// first appearance. Unknown source ids are fatal; inconsistent K across groups
// and sources absent from the run are recorded in diagnostics.
std::vector<RunSet> load_runs(const std::filesystem::path& path, const SourceSet& sources);
std::vector<RunSet> read_runs(std::istream& in, const SourceSet& sources,
                              std::string_view origin = "<stream>");

void write_sources(std::ostream& out, const SourceSet& sources);
void write_run(std::ostream& out, const RunSet& run);

// First k candidates when seed is empty, otherwise a uniformly drawn k-subset
// (kept in pool order) that is reproducible from the seed. Throws
// ValidationError when k is 0 or exceeds the group size.
CandidateGroup subsample_group(const CandidateGroup& group, std::size_t k,
                               std::optional<std::uint64_t> seed = std::nullopt);

// Applies subsample_group to every group; groups smaller than k are kept whole
// and reported in the returned run's diagnostics.
RunSet subsample_run(const RunSet& run, std::size_t k,
                     std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace ndmt
