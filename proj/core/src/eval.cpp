#include "pagpass/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "pagpass/error.hpp"
#include "pagpass/hash.hpp"

namespace pagpass {

namespace {

using StringSet = std::unordered_set<std::string_view>;

StringSet unique_of(std::span<const std::string> xs) {
  StringSet set;
  set.reserve(xs.size());
  for (const auto& x : xs) set.insert(x);
  return set;
}

std::optional<Pattern> try_pattern(std::string_view pw) {
  try {
    return extract_pattern(pw);
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

void require_nonempty(std::span<const std::string> xs, const char* what) {
  if (xs.empty()) throw InvalidArgument(std::string(what) + " must not be empty");
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::map<std::string, std::size_t> pattern_counts(std::span<const std::string> xs) {
  std::map<std::string, std::size_t> counts;
  for (const auto& x : xs) {
    if (auto p = try_pattern(x)) ++counts[p->str()];
  }
  return counts;
}

}  // namespace

HitReport hit_rate(std::span<const std::string> generated, std::span<const std::string> test) {
  require_nonempty(test, "test set");
  const StringSet gen = unique_of(generated);
  const StringSet tst = unique_of(test);
  HitReport r;
  r.generated_total = generated.size();
  r.generated_unique = gen.size();
  r.test_unique = tst.size();
  const StringSet& small = gen.size() < tst.size() ? gen : tst;
  const StringSet& large = gen.size() < tst.size() ? tst : gen;
  for (auto pw : small) r.hits += large.count(pw);
  r.hit_rate = static_cast<double>(r.hits) / static_cast<double>(r.test_unique);
  return r;
}

std::map<std::size_t, CategoryHits> hit_rate_by_segments(std::span<const std::string> generated,
                                                         std::span<const std::string> test) {
  require_nonempty(test, "test set");
  const StringSet gen = unique_of(generated);
  std::map<std::size_t, CategoryHits> out;
  for (auto pw : unique_of(test)) {
    const auto p = try_pattern(pw);
    if (!p) continue;
    CategoryHits& c = out[p->segment_count()];
    ++c.test_count;
    c.hits += gen.count(pw);
  }
  for (auto& [s, c] : out) c.hit_rate = static_cast<double>(c.hits) / static_cast<double>(c.test_count);
  return out;
}

std::optional<CategoryHits> hit_rate_by_pattern(std::span<const std::string> generated,
                                                std::span<const std::string> test, const Pattern& pattern) {
  const StringSet gen = unique_of(generated);
  CategoryHits c;
  for (auto pw : unique_of(test)) {
    const auto p = try_pattern(pw);
    if (!p || *p != pattern) continue;
    ++c.test_count;
    c.hits += gen.count(pw);
  }
  if (c.test_count == 0) return std::nullopt;
  c.hit_rate = static_cast<double>(c.hits) / static_cast<double>(c.test_count);
  return c;
}

double repeat_rate(std::span<const std::string> generated) {
  require_nonempty(generated, "generated set");
  return 1.0 - static_cast<double>(unique_of(generated).size()) / static_cast<double>(generated.size());
}

std::array<double, 9> length_distribution(std::span<const std::string> passwords) {
  require_nonempty(passwords, "password set");
  std::array<double, 9> bins{};
  for (const auto& pw : passwords) {
    if (pw.size() >= kMinTrackedLength && pw.size() <= kMaxTrackedLength) bins[pw.size() - kMinTrackedLength] += 1.0;
  }
  for (double& b : bins) b /= static_cast<double>(passwords.size());
  return bins;
}

double length_distance(std::span<const std::string> generated, std::span<const std::string> test) {
  return euclidean(length_distribution(test), length_distribution(generated));
}

std::vector<PatternShare> top_pattern_shares(std::span<const std::string> generated,
                                             std::span<const std::string> test, std::size_t k) {
  require_nonempty(generated, "generated set");
  require_nonempty(test, "test set");
  const auto test_counts = pattern_counts(test);
  const auto gen_counts = pattern_counts(generated);
  std::vector<std::pair<std::string, std::size_t>> ranked(test_counts.begin(), test_counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  std::vector<PatternShare> out;
  out.reserve(ranked.size());
  for (const auto& [text, count] : ranked) {
    const auto it = gen_counts.find(text);
    const double g = it == gen_counts.end() ? 0.0 : static_cast<double>(it->second);
    out.push_back({Pattern::parse(text), static_cast<double>(count) / static_cast<double>(test.size()),
                   g / static_cast<double>(generated.size())});
  }
  return out;
}

double pattern_distance(std::span<const std::string> generated, std::span<const std::string> test, std::size_t k) {
  double s = 0.0;
  for (const auto& share : top_pattern_shares(generated, test, k)) {
    const double d = share.test_probability - share.generated_probability;
    s += d * d;
  }
  return std::sqrt(s);
}

DistanceReport distance_report(std::span<const std::string> generated, std::span<const std::string> test,
                               std::size_t k) {
  DistanceReport r;
  r.length_generated = length_distribution(generated);
  r.length_test = length_distribution(test);
  r.length = euclidean(r.length_test, r.length_generated);
  r.patterns = top_pattern_shares(generated, test, k);
  double s = 0.0;
  for (const auto& share : r.patterns) {
    s += (share.test_probability - share.generated_probability) * (share.test_probability - share.generated_probability);
  }
  r.pattern = std::sqrt(s);
  return r;
}

BenchmarkReport pattern_guided_benchmark(const NextTokenModel& model, std::span<const std::string> test,
                                         const BenchmarkConfig& cfg) {
  require_nonempty(test, "test set");
  if (cfg.patterns_per_category == 0 || cfg.guesses_per_pattern == 0) {
    throw InvalidArgument("benchmark sizes must be positive");
  }
  std::vector<std::string> unique_test;
  {
    const StringSet set = unique_of(test);
    unique_test.assign(set.begin(), set.end());
  }

  // Steps 1-2: distribution and categories; ranked() is already in selection order.
  PatternDistribution dist;
  std::unordered_map<std::string, std::vector<std::string_view>> members;
  for (const auto& pw : unique_test) {
    const auto p = try_pattern(pw);
    if (!p) continue;
    dist.add(*p);
    members[p->str()].push_back(pw);
  }
  if (dist.empty()) throw InvalidArgument("no test password has a pattern");

  BenchmarkReport report;
  std::map<std::size_t, std::size_t> selected;
  for (const auto& entry : dist.ranked()) {
    const std::size_t s = entry.pattern.segment_count();
    report.categories[s].test_count += entry.count;
    // Step 3.
    if (selected[s] >= cfg.patterns_per_category) continue;
    if (encode_prompt(entry.pattern).size() + entry.pattern.total_length() + 1 > model.window()) continue;
    ++selected[s];

    // Step 4.
    const std::string text = entry.pattern.str();
    const auto guesses = sample_guided(model, entry.pattern, cfg.guesses_per_pattern,
                                       mix_seed(cfg.seed, fnv1a64(text)), cfg.sampling);
    const StringSet gen = unique_of(guesses);

    // Step 5.
    BenchmarkPatternResult r{entry.pattern, s, entry.count, 0, 0.0, 0.0};
    for (auto pw : members[text]) r.hits += gen.count(pw);
    r.hit_rate = static_cast<double>(r.hits) / static_cast<double>(r.test_count);
    r.repeat_rate = 1.0 - static_cast<double>(gen.size()) / static_cast<double>(guesses.size());
    report.categories[s].hits += r.hits;
    report.patterns.push_back(std::move(r));
  }
  for (auto& [s, c] : report.categories) c.hit_rate = static_cast<double>(c.hits) / static_cast<double>(c.test_count);
  std::stable_sort(report.patterns.begin(), report.patterns.end(),
                   [](const auto& a, const auto& b) { return a.segments < b.segments; });
  return report;
}

}  // namespace pagpass
