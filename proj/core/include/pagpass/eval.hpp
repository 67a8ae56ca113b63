#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pagpass/generator.hpp"
#include "pagpass/model.hpp"
#include "pagpass/pcfg.hpp"

namespace pagpass {

// Every metric treats its inputs as multisets: results do not depend on order.

struct HitReport {
  std::size_t generated_total = 0;
  std::size_t generated_unique = 0;
  std::size_t test_unique = 0;
  std::size_t hits = 0;  // |unique generated ∩ unique test|
  double hit_rate = 0.0;  // hits / test_unique
};

// Both sides are deduplicated first. Throws InvalidArgument on an empty test set.
HitReport hit_rate(std::span<const std::string> generated, std::span<const std::string> test);

struct CategoryHits {
  std::size_t test_count = 0;  // unique test passwords in the category
  std::size_t hits = 0;
  double hit_rate = 0.0;
};

// HR_s keyed by segment count s. Test passwords are categorised by the
// segment count of their pattern; empty categories are omitted.
std::map<std::size_t, CategoryHits> hit_rate_by_segments(std::span<const std::string> generated,
                                                         std::span<const std::string> test);

// HR_P for one pattern; nullopt when no test password has that pattern.
std::optional<CategoryHits> hit_rate_by_pattern(std::span<const std::string> generated,
                                                std::span<const std::string> test, const Pattern& pattern);

// 1 - unique / total. Throws InvalidArgument on empty input.
double repeat_rate(std::span<const std::string> generated);

inline constexpr std::size_t kMinTrackedLength = 4;
inline constexpr std::size_t kMaxTrackedLength = 12;
inline constexpr std::size_t kDefaultTopPatterns = 150;

// Pr(length = 4..12), relative to the whole multiset.
std::array<double, 9> length_distribution(std::span<const std::string> passwords);

// Euclidean distance between the two 9-bin length distributions.
double length_distance(std::span<const std::string> generated, std::span<const std::string> test);

struct PatternShare {
  Pattern pattern;
  double test_probability;
  double generated_probability;
};

// The k most frequent test patterns (ties by text form) with each side's
// probability relative to its full multiset. Passwords that have no pattern
// (characters outside the charset) still count in the denominator.
std::vector<PatternShare> top_pattern_shares(std::span<const std::string> generated,
                                             std::span<const std::string> test, std::size_t k = kDefaultTopPatterns);

// Euclidean distance over top_pattern_shares(), without renormalisation.
double pattern_distance(std::span<const std::string> generated, std::span<const std::string> test,
                        std::size_t k = kDefaultTopPatterns);

struct DistanceReport {
  double length = 0.0;
  double pattern = 0.0;
  std::array<double, 9> length_generated{};
  std::array<double, 9> length_test{};
  std::vector<PatternShare> patterns;
};

DistanceReport distance_report(std::span<const std::string> generated, std::span<const std::string> test,
                               std::size_t k = kDefaultTopPatterns);

struct BenchmarkConfig {
  std::size_t patterns_per_category = 21;
  std::uint64_t guesses_per_pattern = 100000;
  std::uint64_t seed = 0;
  SamplingOptions sampling{};
};

struct BenchmarkPatternResult {
  Pattern pattern;
  std::size_t segments = 0;
  std::size_t test_count = 0;
  std::size_t hits = 0;
  double hit_rate = 0.0;
  double repeat_rate = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkPatternResult> patterns;     // by category, then test rank
  std::map<std::size_t, CategoryHits> categories;   // HR_s over all test passwords of the category
};

// Pattern-guided guessing benchmark:
//   1. pattern distribution of the (deduplicated) test set;
//   2. categories by segment count;
//   3. the most frequent patterns_per_category patterns of each category;
//   4. guesses_per_pattern guided samples per selected pattern;
//   5. HR_P per pattern and HR_s = (hits over selected patterns) / (test
//      passwords in the category).
// Patterns that do not fit the model window are skipped.
BenchmarkReport pattern_guided_benchmark(const NextTokenModel& model, std::span<const std::string> test,
                                         const BenchmarkConfig& cfg = {});

}  // namespace pagpass
