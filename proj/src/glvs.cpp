#include <algorithm>
#include <set>
#include <unordered_map>

#include "ndmt/error.hpp"
#include "ndmt/metrics.hpp"

namespace ndmt {

std::vector<double> glvs_scores(std::span<const std::string> candidates, std::string_view lang,
                                bool lowercase) {
  if (candidates.empty()) throw ValidationError("glvs: a group needs at least one candidate");
  const double k = static_cast<double>(candidates.size());

  // Unique word set per candidate.
  std::vector<std::set<std::string>> words;
  words.reserve(candidates.size());
  for (const auto& c : candidates) {
    auto seq = tokenize_words(c, lang, lowercase);
    words.emplace_back(std::make_move_iterator(seq.tokens.begin()),
                       std::make_move_iterator(seq.tokens.end()));
  }

  // Vocabulary: number of candidates containing each word.
  std::unordered_map<std::string_view, int> containing;
  for (const auto& set : words) {
    for (const auto& w : set) ++containing[w];
  }

  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& set : words) {
    if (set.empty()) {
      scores.push_back(100.0);
      continue;
    }
    long total = 0;
    for (const auto& w : set) total += containing.at(w);
    // mean of f(w) = (total / k) / |set|, computed in one division.
    scores.push_back(100.0 * static_cast<double>(total) / (k * static_cast<double>(set.size())));
  }
  return scores;
}

GroupScores glvs_group(const CandidateGroup& group, std::string_view lang, bool lowercase) {
  if (group.candidates.empty()) {
    throw ValidationError("glvs: empty group for source \"" + group.source_id + "\"");
  }
  return {MetricId::of(NativeMetric::glvs), group.source_id, glvs_scores(group.candidates, lang, lowercase)};
}

}  // namespace ndmt
