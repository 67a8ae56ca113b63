#include "pagpass/generator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "pagpass/error.hpp"
#include "pagpass/ngram.hpp"
#include "synthetic_corpus.hpp"

namespace pagpass {
namespace {

const NGramModel& trained() {
  static const NGramModel m = train_ngram(Corpus{testing::synthetic_passwords(3000, 12), ""}, 4);
  return m;
}

PatternDistribution dist_of(std::initializer_list<std::pair<const char*, std::uint64_t>> entries) {
  PatternDistribution d;
  for (const auto& [text, count] : entries) {
    for (std::uint64_t i = 0; i < count; ++i) d.add(Pattern::parse(text));
  }
  return d;
}

TEST(SampleToken, RestrictsToRangeAndFallsBack) {
  std::vector<double> dist(kVocabSize, 0.0);
  dist[5] = 1.0;
  dist[42] = 0.25;
  dist[44] = 0.75;
  Rng rng(1);
  std::map<TokenId, int> seen;
  for (int i = 0; i < 4000; ++i) ++seen[sample_token(dist, 41, 10, 1.0, rng)];
  EXPECT_EQ(seen.size(), 2u);
  EXPECT_NEAR(seen[44] / 4000.0, 0.75, 0.03);

  bool fell_back = false;
  const TokenId t = sample_token(dist, 51, 52, 1.0, rng, &fell_back);
  EXPECT_TRUE(fell_back);
  EXPECT_TRUE(class_block(CharClass::kLetter).contains(t));
}

TEST(SampleToken, TemperatureSharpens) {
  std::vector<double> dist(kVocabSize, 0.0);
  dist[41] = 0.6;
  dist[42] = 0.4;
  Rng rng(2);
  int first = 0;
  for (int i = 0; i < 4000; ++i) first += sample_token(dist, 41, 10, 0.25, rng) == 41;
  // 0.6^4 / (0.6^4 + 0.4^4) = 0.835
  EXPECT_NEAR(first / 4000.0, 0.835, 0.03);
}

TEST(SampleGuided, OutputConformsToPattern) {
  for (const char* text : {"L4N3S1", "N6", "S2L1N1L3", "L12"}) {
    const Pattern p = Pattern::parse(text);
    for (const auto& pw : sample_guided(trained(), p, 300, 5)) ASSERT_EQ(extract_pattern(pw), p) << pw;
  }
}

TEST(SampleGuided, UniformModelGivesUniformDigits) {
  const NGramModel uniform;
  const std::uint64_t n = 20000;
  const auto out = sample_guided(uniform, Pattern::parse("N1"), n, 3);
  std::array<int, 10> counts{};
  for (const auto& pw : out) ++counts[pw[0] - '0'];
  const double mean = n / 10.0, sd = std::sqrt(n * 0.1 * 0.9);
  for (int c : counts) EXPECT_LT(std::abs(c - mean), 3 * sd);
}

TEST(SampleGuided, IndependentOfWorkerCount) {
  const Pattern p = Pattern::parse("L5N2");
  const auto one = sample_guided(trained(), p, 500, 9, {.workers = 1});
  EXPECT_EQ(sample_guided(trained(), p, 500, 9, {.workers = 3}), one);
  EXPECT_NE(sample_guided(trained(), p, 500, 10), one);
}

TEST(SampleGuided, RejectsBadArguments) {
  EXPECT_THROW(sample_guided(trained(), Pattern::parse("N4"), 0, 1), InvalidArgument);
  EXPECT_THROW(sample_guided(trained(), Pattern::parse("N4"), 1, 1, {.temperature = 0.0}), InvalidArgument);
  const NGramModel narrow(NGramConfig{.window = 8});
  EXPECT_THROW(sample_guided(narrow, Pattern::parse("N6"), 1, 1), InvalidArgument);
}

// Free sampling needs the pattern still in view while the password is
// written, so it uses the longest supported history.
const NGramModel& trained_long() {
  static const NGramModel m = train_ngram(Corpus{testing::synthetic_passwords(3000, 12), ""}, 8);
  return m;
}

TEST(SampleFree, ValidDeterministicPasswords) {
  const auto a = sample_free(trained_long(), 1500, 4);
  ASSERT_EQ(a.passwords.size(), 1500u);
  EXPECT_GE(a.attempts, 1500u);
  EXPECT_EQ(a.attempts - a.malformed, 1500u);
  for (const auto& pw : a.passwords) ASSERT_NO_THROW(extract_pattern(pw)) << pw;
  const auto b = sample_free(trained_long(), 1500, 4, {.workers = 4});
  EXPECT_EQ(a.passwords, b.passwords);
  EXPECT_EQ(a.malformed, b.malformed);
}

TEST(SampleFree, PasswordOnlyModel) {
  Corpus c{testing::synthetic_passwords(1000, 13), ""};
  const NGramModel m = train_ngram(c, 4, NGramConfig{.format = RuleFormat::kPasswordOnly});
  for (const auto& pw : sample_free(m, 300, 1).passwords) ASSERT_NO_THROW(extract_pattern(pw));
}

TEST(SampleFree, UnusableModelAborts) {
  const NGramModel uniform;
  EXPECT_THROW(sample_free(uniform, 10, 1), NumericError);
  // A short history forgets the pattern before the password is done.
  EXPECT_THROW(sample_free(trained(), 2000, 1), NumericError);
}

TEST(Dcgen, BudgetsFollowApportionment) {
  const auto d = dist_of({{"L4", 6}, {"N4", 3}, {"L2N2", 1}});
  const auto r = dcgen(trained(), d, GenConfig{.total = 1000, .threshold = 50, .seed = 1}).report;
  ASSERT_EQ(r.patterns.size(), 3u);
  EXPECT_EQ(r.patterns[0].pattern.str(), "L4");
  EXPECT_EQ(r.patterns[0].budget, 600u);
  EXPECT_EQ(r.patterns[1].budget, 300u);
  EXPECT_EQ(r.patterns[2].budget, 100u);
  EXPECT_EQ(r.generated, 1000u);
  EXPECT_EQ(r.cap_reduction, 0u);
  for (const auto& p : r.patterns) EXPECT_EQ(p.generated, p.budget);
}

TEST(Dcgen, SmallPatternSpaceIsCapped) {
  const auto d = dist_of({{"N3", 1}});
  const auto res = dcgen(trained(), d, GenConfig{.total = 5000, .threshold = 1, .seed = 2});
  EXPECT_EQ(res.report.patterns[0].apportioned, 5000u);
  EXPECT_EQ(res.report.patterns[0].budget, 1000u);
  EXPECT_EQ(res.report.cap_reduction, 4000u);
  // With T = 1 every leaf is one full string, so the space is enumerated.
  const std::set<std::string> unique(res.passwords.begin(), res.passwords.end());
  EXPECT_EQ(res.passwords.size(), 1000u);
  EXPECT_EQ(unique.size(), 1000u);
  EXPECT_EQ(res.report.duplicates, 0u);
  EXPECT_EQ(res.report.leaves_executed, 1000u);
  EXPECT_EQ(res.report.tasks_expanded, 1u + 10u + 100u);
}

TEST(Dcgen, TaskTreeInvariants) {
  const auto d = dist_of({{"L4N2", 5}, {"N6", 3}, {"S1L3", 2}, {"L1", 1}});
  GenConfig cfg{.total = 20000, .threshold = 300, .seed = 3, .record_tasks = true};
  const auto res = dcgen(trained(), d, cfg);
  const auto& r = res.report;
  std::uint64_t leaf_total = 0;
  std::size_t leaves = 0;
  for (const auto& t : r.tasks) {
    const Pattern& p = r.patterns[t.pattern_index].pattern;
    const std::size_t filled = t.prefix.size() - encode_prompt(p).size();
    EXPECT_LE(t.count, suffix_space_size(p, filled));
    if (t.leaf) {
      EXPECT_LE(t.count, cfg.threshold);
      leaf_total += t.count;
      ++leaves;
    } else {
      EXPECT_GT(t.count, cfg.threshold);
      EXPECT_EQ(t.children_total, t.count);
      EXPECT_GE(t.children, 1u);
    }
  }
  EXPECT_EQ(leaves, r.leaves_executed);
  EXPECT_EQ(leaf_total, r.generated);
  EXPECT_EQ(r.tasks_expanded + r.leaves_executed, r.tasks.size());
  // L1 holds at most 52 guesses.
  EXPECT_EQ(r.patterns[3].budget, 52u);
  EXPECT_EQ(r.generated + r.cap_reduction, cfg.total);
  // Leaves own disjoint prefixes, so their outputs never collide.
  EXPECT_EQ(r.cross_leaf_duplicates, 0u);
  for (std::size_t i = 0; i < res.passwords.size(); ++i) {
    ASSERT_NO_THROW(extract_pattern(res.passwords[i]));
  }
}

TEST(Dcgen, ConformsToPatternOfEachBudget) {
  const auto d = dist_of({{"L3N2", 2}, {"N4S1", 1}});
  const auto res = dcgen(trained(), d, GenConfig{.total = 3000, .threshold = 100, .seed = 4});
  std::size_t i = 0;
  for (const auto& b : res.report.patterns) {
    for (std::uint64_t k = 0; k < b.generated; ++k, ++i) ASSERT_EQ(extract_pattern(res.passwords[i]), b.pattern);
  }
  EXPECT_EQ(i, res.passwords.size());
}

TEST(Dcgen, DeterministicAcrossWorkerCounts) {
  const auto d = dist_of({{"L4N2", 5}, {"N6", 3}, {"S1L3", 2}});
  GenConfig cfg{.total = 8000, .threshold = 200, .seed = 5};
  const auto base = dcgen(trained(), d, cfg).passwords;
  for (std::size_t w : {2u, 8u}) {
    cfg.workers = w;
    EXPECT_EQ(dcgen(trained(), d, cfg).passwords, base) << w << " workers";
  }
  cfg.seed = 6;
  EXPECT_NE(dcgen(trained(), d, cfg).passwords, base);
}

TEST(Dcgen, FewerDuplicatesThanPlainSampling) {
  const auto d = dist_of({{"N4", 1}});
  const auto res = dcgen(trained(), d, GenConfig{.total = 5000, .threshold = 50, .seed = 7});
  const auto plain = sample_guided(trained(), Pattern::parse("N4"), 5000, 7);
  const std::set<std::string> plain_unique(plain.begin(), plain.end());
  EXPECT_GT(res.report.unique, plain_unique.size());
}

TEST(Dcgen, RejectsBadConfig) {
  const auto d = dist_of({{"N4", 1}});
  EXPECT_THROW(dcgen(trained(), d, GenConfig{.total = 0}), InvalidArgument);
  EXPECT_THROW(dcgen(trained(), d, GenConfig{.total = 10, .threshold = 0}), InvalidArgument);
  EXPECT_THROW(dcgen(trained(), PatternDistribution{}, GenConfig{.total = 10}), InvalidArgument);
  const NGramModel password_only(NGramConfig{.format = RuleFormat::kPasswordOnly});
  EXPECT_THROW(dcgen(password_only, d, GenConfig{.total = 10}), InvalidArgument);
}

}  // namespace
}  // namespace pagpass
