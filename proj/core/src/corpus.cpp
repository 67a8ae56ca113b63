#include "pagpass/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "pagpass/apportion.hpp"
#include "pagpass/error.hpp"
#include "pagpass/hash.hpp"

namespace pagpass {

void CleanPolicy::validate() const {
  if (min_len < 1 || min_len > max_len) {
    throw InvalidArgument("clean policy requires 1 <= min_len <= max_len");
  }
}

CleanResult clean(std::span<const std::string> entries, const CleanPolicy& policy,
                  std::string provenance) {
  policy.validate();
  CleanResult result;
  result.corpus.provenance = std::move(provenance);
  std::unordered_set<std::string_view> seen;
  seen.reserve(entries.size());
  for (const std::string& entry : entries) {
    ++result.report.read;
    if (!std::all_of(entry.begin(), entry.end(), CleanPolicy::allowed_char)) {
      ++result.report.rejected_charset;
      continue;
    }
    if (entry.size() < policy.min_len || entry.size() > policy.max_len) {
      ++result.report.rejected_length;
      continue;
    }
    if (!seen.insert(entry).second) {
      ++result.report.deduped;
      continue;
    }
    result.corpus.passwords.push_back(entry);
  }
  result.report.kept = result.corpus.size();
  return result;
}

void SplitSpec::validate() const {
  double sum = 0.0;
  for (double r : ratios) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
}

std::uint64_t split_key(std::string_view password, std::uint64_t seed) {
  return splitmix64(fnv1a64(password, 0xcbf29ce484222325ULL ^ splitmix64(seed)));
}

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec) {
  spec.validate();
  if (corpus.empty()) throw DataError("cannot split an empty corpus");

  const auto sizes = apportion(corpus.size(), spec.ratios);

  std::vector<std::pair<std::uint64_t, std::size_t>> ranked;
  ranked.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ranked.emplace_back(split_key(corpus.passwords[i], spec.seed), i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return corpus.passwords[a.second] < corpus.passwords[b.second];
  });

  std::vector<std::uint8_t> part(corpus.size(), 0);
  std::size_t rank = 0;
  for (std::uint8_t p = 0; p < 3; ++p) {
    for (std::uint64_t k = 0; k < sizes[p]; ++k) part[ranked[rank++].second] = p;
  }

  CorpusSplit out;
  Corpus* parts[3] = {&out.train, &out.validation, &out.test};
  const char* names[3] = {"train", "validation", "test"};
  for (int p = 0; p < 3; ++p) {
    parts[p]->provenance = corpus.provenance.empty() ? names[p] : corpus.provenance + ":" + names[p];
    parts[p]->passwords.reserve(sizes[p]);
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) parts[part[i]]->passwords.push_back(corpus.passwords[i]);
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw DataError("read failed: " + path.string());
  return lines;
}

Corpus read_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  corpus.passwords = read_lines(path);
  corpus.provenance = path.filename().string();
  return corpus;
}

}  // namespace pagpass
