#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ndmt/corpus.hpp"
#include "ndmt/tokenizer.hpp"

namespace ndmt {

enum class Polarity { gain, loss };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view text);

// Closed interval [lo, hi]; hi may be +infinity for half-open scales.
struct Scale {
  double lo = 0.0;
  double hi = 100.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Scale&) const = default;
};

enum class NativeMetric { bleu, chrfpp, ter, rouge1, rouge2, rougeL, meteor_exact, glvs };

// A metric known to the pipeline: one of the native lexical metrics or an
// external scorer registered through the bridge.
struct MetricId {
  std::string name;
  Polarity polarity = Polarity::gain;
  Scale scale;
  std::optional<NativeMetric> native;

  static MetricId of(NativeMetric m);
  static MetricId external(std::string name, Polarity polarity, Scale scale);
  // Native metric by name ("bleu", "chrfpp", ...), nullopt when unknown.
  static std::optional<MetricId> find_native(std::string_view name);

  // Native reference-based metrics; external metrics declare this in their config.
  bool needs_references() const;
  bool operator==(const MetricId& o) const { return name == o.name; }
};

std::span<const NativeMetric> all_native_metrics();

struct GroupScores {
  MetricId metric;
  std::string source_id;
  std::vector<double> per_candidate;
};

// Case folding applies to every native metric when enabled.
struct MetricOptions {
  bool lowercase = true;
  // false: CJK targets are taken as pre-segmented, whitespace-delimited words.
  bool cjk_codepoints = true;
};

// Sentence BLEU on a 0-100 scale. Orders 1-4, clipping against the union of
// references, brevity penalty from the closest reference length. Zero
// precisions are smoothed exponentially: the j-th zero order becomes
// 1 / (2^j * max(1, hypothesis n-gram count)).
double bleu(const TokenSequence& candidate, std::span<const TokenSequence> refs);

// ChrF++ (character orders 1-6, word orders 1-2, beta = 2). F is averaged
// over the orders for which the reference has n-grams; the best reference
// wins. Always within [0, 100].
double chrfpp(std::string_view candidate, std::span<const std::string> refs,
              std::string_view lang = "en", bool lowercase = true);

// Translation edit rate, 100 * edits / reference length, minimized over
// references. Edits count insertions, deletions, substitutions and block
// shifts. See ter.cpp for the search.
double ter(const TokenSequence& candidate, std::span<const TokenSequence> refs);

// Edit count (shifts + Levenshtein) between one hypothesis and one reference.
int ter_edits(std::span<const std::string> hyp, std::span<const std::string> ref);

enum class RougeVariant { one, two, lcs };

// ROUGE-1/2/L F1 on a 0-100 scale, best reference.
double rouge(const TokenSequence& candidate, std::span<const TokenSequence> refs,
             RougeVariant variant);

// Exact-match METEOR: unigram alignment with the maximum number of matches
// and, among those, the fewest chunks. 100 * Fmean * (1 - 0.5 (chunks/m)^3).
double meteor_exact(const TokenSequence& candidate, std::span<const TokenSequence> refs);

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
};
MeteorAlignment meteor_align(std::span<const std::string> hyp, std::span<const std::string> ref);

// Group Lexical Variance Score. Each candidate's unique word set is scored by
// the mean, over its words, of the fraction of candidates containing that
// word, times 100. Identical candidates give 100; lower means more diverse.
// Candidates without tokens score 100.
std::vector<double> glvs_scores(std::span<const std::string> candidates, std::string_view lang,
                                bool lowercase = true);
GroupScores glvs_group(const CandidateGroup& group, std::string_view lang, bool lowercase = true);

// Scores every candidate of a group for one native metric, aligned with the
// group order. Reference-based metrics require references.
GroupScores score_group(const CandidateGroup& group, const SourceSegment& source,
                        const MetricId& metric, const MetricOptions& options = {});

}  // namespace ndmt
