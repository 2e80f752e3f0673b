#include "ndmt/synthgen.hpp"

#include <cmath>
#include <fmt/format.h>

#include "ndmt/error.hpp"
#include "ndmt/rng.hpp"
#include "ndmt/tokenizer.hpp"

namespace ndmt {
namespace {

constexpr std::size_t kDistractorVocabulary = 1000;
constexpr std::size_t kErrorVocabulary = 1000;
constexpr std::size_t kSourceVocabulary = 2000;
constexpr std::string_view kConsonants = "bdfgklmnprstv";
constexpr std::string_view kVowels = "aeiou";

// Bijective index -> pseudo-word over consonant-vowel syllables.
std::string pseudo_word(std::size_t index) {
  const std::size_t syllables = kConsonants.size() * kVowels.size();
  std::string w;
  std::size_t i = index;
  do {
    const std::size_t s = i % syllables;
    w += kConsonants[s / kVowels.size()];
    w += kVowels[s % kVowels.size()];
    i /= syllables;
  } while (i > 0);
  if (w.size() < 4) w += "n";  // keep one-syllable indices distinct from longer words
  return w;
}

struct Tokens {
  std::vector<std::string> items;
  bool cjk = false;
};

Tokens reference_tokens(const SourceSegment& s) {
  if (s.references.empty()) {
    throw ValidationError("synthetic generation needs a reference for source \"" + s.id + "\"");
  }
  const std::string& lang = s.lang_pair.target;
  return {tokenize_words(s.references.front(), lang, false).tokens, is_cjk_language(lang)};
}

std::string join(const std::vector<std::string>& tokens, bool cjk) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && !cjk) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::uint64_t source_seed(const SystemProfile& p, std::string_view source_id) {
  return derive_seed(derive_seed(p.seed, "synth"), source_id);
}

// Base translation tokens plus whether any token differs from the reference.
std::pair<std::vector<std::string>, bool> base_translation(const SystemProfile& p, const SourceSegment& s,
                                                           const Tokens& ref) {
  Rng rng(derive_seed(source_seed(p, s.id), "base"));
  std::vector<std::string> out = ref.items;
  bool changed = false;
  for (auto& t : out) {
    if (rng.bernoulli(1.0 - p.base_quality)) {
      t = error_token(rng.below(kErrorVocabulary));
      changed = true;
    }
  }
  return {std::move(out), changed};
}

std::string degenerate(std::size_t length) {
  std::vector<std::string> t(std::max<std::size_t>(1, length), std::string(kDegenerateToken));
  return join(t, false);
}

}  // namespace

void SystemProfile::validate() const {
  const auto bad = [&](std::string_view field, double v, std::string_view range) {
    throw ValidationError(fmt::format("profile \"{}\": {} = {} is outside {}", system_id, field, v, range));
  };
  if (!(base_quality >= 0.0 && base_quality <= 1.0)) bad("base_quality", base_quality, "[0, 1]");
  if (!(diversity >= 0.0) || !std::isfinite(diversity)) bad("diversity", diversity, "[0, inf)");
  if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0)) bad("dropout_rate", dropout_rate, "[0, 1]");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) bad("temperature", temperature, "(0, inf)");
  if (system_id.empty()) throw ValidationError("profile system_id must be non-empty");
}

double SystemProfile::substitution_rate() const { return std::min(1.0, 0.5 * diversity); }

std::string distractor_token(std::size_t index) { return fmt::format("zq{:03d}", index); }
std::string error_token(std::size_t index) { return fmt::format("zx{:03d}", index); }

RunSet gen_run(const SystemProfile& profile, const SourceSet& sources, std::size_t k) {
  profile.validate();
  if (k == 0) throw ValidationError("synthetic pool size must be at least 1");
  RunSet run;
  run.system_id = profile.system_id;
  run.decoding_mode = DecodingMode::sampled;
  run.temperature = profile.temperature;
  const double sub = profile.substitution_rate();
  for (const auto& s : sources.segments()) {
    const Tokens ref = reference_tokens(s);
    const auto [base, base_changed] = base_translation(profile, s, ref);
    const std::string base_text = base_changed ? join(base, ref.cjk) : s.references.front();
    CandidateGroup g{s.id, profile.system_id, profile.temperature, static_cast<std::int64_t>(profile.seed), {}};
    g.candidates.reserve(k);
    const std::uint64_t src_seed = source_seed(profile, s.id);
    const std::uint64_t dropout_seed =
        derive_seed(derive_seed(derive_seed(profile.dropout_seed.value_or(profile.seed), "dropout"), s.id), "slots");
    for (std::size_t i = 0; i < k; ++i) {
      Rng rng(derive_seed(src_seed, static_cast<std::uint64_t>(i)));
      Rng drop(derive_seed(dropout_seed, static_cast<std::uint64_t>(i)));
      if (drop.bernoulli(profile.dropout_rate)) {
        g.candidates.push_back(degenerate(ref.items.size()));
        continue;
      }
      std::vector<std::string> cand = base;
      bool changed = false;
      for (auto& t : cand) {
        if (rng.bernoulli(sub)) {
          t = distractor_token(rng.below(kDistractorVocabulary));
          changed = true;
        }
      }
      g.candidates.push_back(changed ? join(cand, ref.cjk) : base_text);
    }
    run.groups.emplace(s.id, std::move(g));
  }
  return run;
}

std::map<std::size_t, RunSet> gen_size_family(const SystemProfile& profile, const SourceSet& sources,
                                              std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw ValidationError("at least one sampling size is required");
  std::map<std::size_t, RunSet> out;
  for (std::size_t k : sizes) out.emplace(k, gen_run(profile, sources, k));
  return out;
}

RunSet gen_baseline(const SystemProfile& profile, const SourceSet& sources, std::string_view suffix) {
  profile.validate();
  RunSet run;
  run.system_id = profile.system_id + std::string(suffix);
  run.decoding_mode = DecodingMode::deterministic;
  run.temperature = 0.0;
  for (const auto& s : sources.segments()) {
    const Tokens ref = reference_tokens(s);
    const auto [base, changed] = base_translation(profile, s, ref);
    CandidateGroup g{s.id, run.system_id, 0.0, static_cast<std::int64_t>(profile.seed),
                     {changed ? join(base, ref.cjk) : s.references.front()}};
    run.groups.emplace(s.id, std::move(g));
  }
  return run;
}

SourceSet gen_sources(const SyntheticCorpusOptions& options) {
  if (options.min_length == 0 || options.min_length > options.max_length) {
    throw ValidationError(fmt::format("synthetic sentence length range [{}, {}] is invalid", options.min_length,
                                      options.max_length));
  }
  const LangPair lp = LangPair::parse(options.lang_pair);
  SourceSet set;
  Rng rng(derive_seed(options.seed, "sources"));
  const std::size_t width = std::to_string(std::max<std::size_t>(options.count, 1) - 1).size();
  for (std::size_t n = 0; n < options.count; ++n) {
    const std::size_t len = options.min_length + rng.below(options.max_length - options.min_length + 1);
    std::vector<std::string> src, ref;
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t w = rng.below(kSourceVocabulary);
      src.push_back(pseudo_word(w));
      ref.push_back(pseudo_word(w + kSourceVocabulary));
    }
    set.add({fmt::format("s{:0{}d}", n, std::max<std::size_t>(width, 4)), join(src, false), lp, {join(ref, false)}});
  }
  return set;
}

}  // namespace ndmt
