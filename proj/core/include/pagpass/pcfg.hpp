#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pagpass/corpus.hpp"

namespace pagpass {

enum class CharClass : std::uint8_t { kLetter, kNumber, kSpecial };

inline constexpr std::size_t kMaxSegmentLength = 12;

// L, N or S.
char class_symbol(CharClass c);
// 52, 10 or 32.
std::uint64_t class_size(CharClass c);
// Classifies a visible ASCII character; nullopt for anything else.
std::optional<CharClass> classify_char(char c);

struct Segment {
  CharClass cls;
  std::size_t length;

  auto operator<=>(const Segment&) const = default;
};

// A maximal-run segmentation such as L4N3S1. Always non-empty, adjacent
// segments differ in class, and each segment length is in [1, 12].
class Pattern {
 public:
  // Validates the invariants and throws InvalidArgument on violation.
  explicit Pattern(std::vector<Segment> segments);

  // Parses the text form "L4N3S1".
  static Pattern parse(std::string_view text);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t segment_count() const { return segments_.size(); }
  std::size_t total_length() const { return total_length_; }

  // Class of the character at 0-based `position`; throws InvalidArgument
  // when position >= total_length().
  CharClass class_at(std::size_t position) const;

  std::string str() const;

  auto operator<=>(const Pattern&) const = default;

 private:
  std::vector<Segment> segments_;
  std::size_t total_length_ = 0;
};

// Throws InvalidArgument on an empty password, an unclassifiable character,
// or a run longer than 12.
Pattern extract_pattern(std::string_view password);

inline constexpr std::uint64_t kSpaceSizeSaturation = std::numeric_limits<std::uint64_t>::max();

// Product over characters of the class size. Saturates at
// kSpaceSizeSaturation instead of overflowing.
std::uint64_t pattern_space_size(const Pattern& p);
// Same product restricted to positions [from, total_length()).
std::uint64_t suffix_space_size(const Pattern& p, std::size_t from);

// Pattern counts over a corpus. Probabilities are derived on demand so that
// merging two distributions is exact.
class PatternDistribution {
 public:
  struct Entry {
    Pattern pattern;
    std::uint64_t count;
    double probability;
  };

  void add(const Pattern& p, std::uint64_t count = 1);
  void merge(const PatternDistribution& other);

  std::uint64_t total() const { return total_; }
  std::size_t size() const { return counts_.size(); }
  bool empty() const { return counts_.empty(); }
  std::uint64_t count(const Pattern& p) const;
  double probability(const Pattern& p) const;

  // Sorted by descending count, then by ascending text form.
  std::vector<Entry> ranked() const;

  bool operator==(const PatternDistribution&) const = default;

 private:
  std::map<Pattern, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Throws DataError on an empty corpus.
PatternDistribution build_distribution(const Corpus& corpus);
PatternDistribution build_distribution(const std::vector<std::string>& passwords);

// Lines of PATTERN<TAB>COUNT in ranked() order.
void write_distribution(const PatternDistribution& dist, std::ostream& out);
PatternDistribution read_distribution(std::istream& in);
PatternDistribution read_distribution(const std::filesystem::path& path);

}  // namespace pagpass
