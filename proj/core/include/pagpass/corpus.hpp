#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pagpass {

// Which raw entries survive cleaning. The allowed charset is fixed to the 94
// visible ASCII characters (codes 33..126); only the length bounds vary.
struct CleanPolicy {
  std::size_t min_len = 4;
  std::size_t max_len = 12;

  void validate() const;
  static bool allowed_char(char c) { return c >= 33 && c <= 126; }
};

struct Corpus {
  std::vector<std::string> passwords;  // unique, in first-occurrence order
  std::string provenance;

  std::size_t size() const { return passwords.size(); }
  bool empty() const { return passwords.empty(); }
};

struct CleanReport {
  std::size_t read = 0;
  std::size_t kept = 0;
  std::size_t deduped = 0;
  std::size_t rejected_length = 0;
  std::size_t rejected_charset = 0;

  std::size_t dropped() const { return deduped + rejected_length + rejected_charset; }
};

struct CleanResult {
  Corpus corpus;
  CleanReport report;
};

// Drops entries with characters outside the charset (checked first), then
// entries outside [min_len, max_len], then repeats of an already-kept entry.
CleanResult clean(std::span<const std::string> entries, const CleanPolicy& policy = {},
                  std::string provenance = {});

struct SplitSpec {
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorpusSplit {
  Corpus train;
  Corpus validation;
  Corpus test;
};

// Partitions the corpus. Part sizes are the largest-remainder apportionment
// of |corpus| by the ratios. Membership is decided by ranking passwords on a
// seeded hash of the password string, so it does not depend on corpus order;
// each part keeps the corpus order of its members.
CorpusSplit split(const Corpus& corpus, const SplitSpec& spec);

// The seeded rank key used by split().
std::uint64_t split_key(std::string_view password, std::uint64_t seed);

// Newline-delimited text, one entry per line. A trailing '\r' is stripped.
std::vector<std::string> read_lines(const std::filesystem::path& path);
Corpus read_corpus(const std::filesystem::path& path);

}  // namespace pagpass
