#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pagpass/hash.hpp"
#include "pagpass/model.hpp"
#include "pagpass/pcfg.hpp"

namespace pagpass {

inline constexpr std::uint64_t kDefaultThreshold = 4000;

struct SamplingOptions {
  double temperature = 1.0;  // probabilities are raised to 1/temperature before sampling
  std::size_t workers = 1;

  void validate() const;
};

// Draws one token from dist restricted to ids [first, first + count),
// renormalised. Falls back to uniform over the range when the restricted
// mass is zero or non-finite and reports that through `fell_back`.
TokenId sample_token(std::span<const double> dist, TokenId first, std::size_t count, double temperature,
                     Rng& rng, bool* fell_back = nullptr);

// Continues `session` (whose context is a prompt for `pattern` plus zero or
// more characters) until the pattern is filled. Each position is restricted
// to the token block of its character class and <EOS> is implied after the
// last position, so the result always conforms to `pattern`.
// `filled` holds the characters already pushed after <SEP>.
std::string complete_guided(const DecodeSession& session, const Pattern& pattern, std::string_view filled,
                            double temperature, Rng& rng, std::uint64_t* fallbacks = nullptr);

// n passwords conforming to `pattern`, sampled autoregressively from the
// prompt <BOS> pattern <SEP>. Sample i uses a generator seeded from
// (seed, i), so the output does not depend on the worker count.
std::vector<std::string> sample_guided(const NextTokenModel& model, const Pattern& pattern, std::uint64_t n,
                                       std::uint64_t seed, const SamplingOptions& opts = {});

struct FreeSampleResult {
  std::vector<std::string> passwords;
  std::uint64_t attempts = 0;
  std::uint64_t malformed = 0;
};

inline constexpr std::size_t kFreeSampleChunk = 1024;
inline constexpr std::size_t kFreeSampleMaxAttempts = 1024;

// n valid passwords sampled from <BOS> alone. Sequences that do not decode
// under the model's rule format, whose password disagrees with the generated
// pattern, or whose password falls outside the default cleaning length bounds
// are discarded and resampled. Output slots are processed
// in chunks of kFreeSampleChunk; if more than half of a chunk's attempts are
// malformed, or one slot needs more than kFreeSampleMaxAttempts, sampling
// aborts with NumericError.
FreeSampleResult sample_free(const NextTokenModel& model, std::uint64_t n, std::uint64_t seed,
                             const SamplingOptions& opts = {});

struct GenConfig {
  std::uint64_t total = 0;                     // N
  std::uint64_t threshold = kDefaultThreshold;  // T
  std::uint64_t seed = 0;
  double temperature = 1.0;
  std::size_t workers = 1;
  bool record_tasks = false;

  void validate() const;
};

struct PatternBudget {
  Pattern pattern;
  double probability = 0.0;
  std::uint64_t apportioned = 0;  // share of N before the space cap
  std::uint64_t budget = 0;       // after the cap
  std::uint64_t generated = 0;
};

struct TaskRecord {
  std::size_t pattern_index = 0;
  std::vector<TokenId> prefix;
  std::uint64_t count = 0;
  bool leaf = false;
  std::uint64_t children_total = 0;  // sum of child counts, internal nodes only
  std::size_t children = 0;
};

struct DcgenReport {
  std::uint64_t requested = 0;
  std::uint64_t threshold = 0;
  std::uint64_t seed = 0;
  std::uint64_t tasks_expanded = 0;
  std::uint64_t leaves_executed = 0;
  std::uint64_t generated = 0;
  std::uint64_t unique = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t cross_leaf_duplicates = 0;
  std::uint64_t cap_reduction = 0;  // sum over patterns of apportioned - budget
  std::uint64_t malformed = 0;
  std::uint64_t sampling_fallbacks = 0;
  std::vector<PatternBudget> patterns;  // in distribution rank order
  std::vector<TaskRecord> tasks;        // only when GenConfig::record_tasks
};

struct DcgenResult {
  std::vector<std::string> passwords;  // grouped by leaf, leaves in (pattern rank, prefix) order
  DcgenReport report;
};

// Divide-and-conquer generation. N is apportioned over the patterns by
// probability (largest remainder) and each share is capped at the pattern's
// space size. A task (prefix, n) with n <= T is a leaf and samples n
// completions of its prefix with replacement. Otherwise the model's
// distribution at the prefix, restricted to the next position's character
// class and renormalised, apportions n over the candidate tokens, each child
// capped at the size of its remaining suffix space with the excess
// re-apportioned among the others; zero-count children are dropped. Leaves
// seed their generator from (seed, prefix), so results do not depend on
// scheduling or the worker count.
DcgenResult dcgen(const NextTokenModel& model, const PatternDistribution& dist, const GenConfig& cfg);

}  // namespace pagpass
