#include "pagpass/pcfg.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "pagpass/error.hpp"
#include "pagpass/hash.hpp"

namespace pagpass {
namespace {

TEST(ExtractPattern, Examples) {
  EXPECT_EQ(extract_pattern("abc123!").str(), "L3N3S1");
  EXPECT_EQ(extract_pattern("Pass123$").str(), "L4N3S1");
  EXPECT_EQ(extract_pattern("password123").str(), "L8N3");
  EXPECT_EQ(extract_pattern("1234").str(), "N4");
}

TEST(ExtractPattern, Errors) {
  EXPECT_THROW(extract_pattern(""), InvalidArgument);
  EXPECT_THROW(extract_pattern("abc def"), InvalidArgument);
  EXPECT_THROW(extract_pattern("aaaaaaaaaaaaa"), InvalidArgument);  // run of 13
}

TEST(ExtractPattern, MaximalRunsOverRandomPasswords) {
  Rng rng(17);
  for (int i = 0; i < 5000; ++i) {
    std::string pw(1 + rng() % 12, ' ');
    for (char& c : pw) c = static_cast<char>(33 + rng() % 94);
    const Pattern p = extract_pattern(pw);
    ASSERT_EQ(p.total_length(), pw.size());
    for (std::size_t k = 1; k < p.segments().size(); ++k) {
      ASSERT_NE(p.segments()[k - 1].cls, p.segments()[k].cls);
    }
    for (std::size_t pos = 0; pos < pw.size(); ++pos) ASSERT_EQ(p.class_at(pos), classify_char(pw[pos]));
    ASSERT_EQ(Pattern::parse(p.str()), p);
  }
}

TEST(CharClass, PartitionsTheCharset) {
  std::size_t counts[3] = {0, 0, 0};
  for (int c = 33; c <= 126; ++c) ++counts[static_cast<int>(*classify_char(static_cast<char>(c)))];
  EXPECT_EQ(counts[0], 52u);
  EXPECT_EQ(counts[1], 10u);
  EXPECT_EQ(counts[2], 32u);
  EXPECT_FALSE(classify_char(' '));
  EXPECT_FALSE(classify_char('\x7f'));
}

TEST(Pattern, InvariantsAreEnforced) {
  EXPECT_THROW(Pattern({}), InvalidArgument);
  EXPECT_THROW(Pattern({{CharClass::kLetter, 2}, {CharClass::kLetter, 1}}), InvalidArgument);
  EXPECT_THROW(Pattern({{CharClass::kNumber, 13}}), InvalidArgument);
  EXPECT_THROW(Pattern::parse("L"), InvalidArgument);
  EXPECT_THROW(Pattern::parse("X3"), InvalidArgument);
  EXPECT_THROW(Pattern::parse("L0"), InvalidArgument);
  EXPECT_THROW(Pattern::parse(""), InvalidArgument);
}

TEST(Pattern, SegmentCountAndClassAt) {
  const Pattern p = Pattern::parse("L4N3S1");
  EXPECT_EQ(Pattern::parse("L8N3").segment_count(), 2u);
  EXPECT_EQ(Pattern::parse("N4").segment_count(), 1u);
  EXPECT_EQ(p.segment_count(), 3u);
  EXPECT_EQ(p.class_at(0), CharClass::kLetter);
  EXPECT_EQ(p.class_at(4), CharClass::kNumber);
  EXPECT_EQ(p.class_at(7), CharClass::kSpecial);
  EXPECT_THROW(p.class_at(8), InvalidArgument);
}

TEST(PatternSpaceSize, Examples) {
  EXPECT_EQ(pattern_space_size(Pattern::parse("N3")), 1000u);
  EXPECT_EQ(pattern_space_size(Pattern::parse("L1")), 52u);
  EXPECT_EQ(pattern_space_size(Pattern::parse("L2N1")), 27040u);
  EXPECT_EQ(suffix_space_size(Pattern::parse("L2N1"), 1), 520u);
  EXPECT_EQ(suffix_space_size(Pattern::parse("L2N1"), 3), 1u);
}

TEST(PatternSpaceSize, MatchesEnumerationForL1N1S1) {
  std::uint64_t n = 0;
  for (int a = 33; a <= 126; ++a) {
    for (int b = 33; b <= 126; ++b) {
      for (int c = 33; c <= 126; ++c) {
        const std::string pw{static_cast<char>(a), static_cast<char>(b), static_cast<char>(c)};
        if (extract_pattern(pw).str() == "L1N1S1") ++n;
      }
    }
  }
  EXPECT_EQ(n, 16640u);
  EXPECT_EQ(pattern_space_size(Pattern::parse("L1N1S1")), n);
}

TEST(PatternSpaceSize, Saturates) {
  // 52^12 alone is past 2^64.
  EXPECT_EQ(pattern_space_size(Pattern::parse("L12")), kSpaceSizeSaturation);
  EXPECT_EQ(pattern_space_size(Pattern::parse("L11")), 7516865509350965248ULL);
  const Pattern big({{CharClass::kLetter, 12}, {CharClass::kSpecial, 12}});
  EXPECT_EQ(pattern_space_size(big), kSpaceSizeSaturation);
}

TEST(PatternDistribution, HandCount) {
  const std::vector<std::string> pws{"ab12", "cd34", "ef5!"};
  const auto d = build_distribution(pws);
  EXPECT_EQ(d.total(), 3u);
  EXPECT_DOUBLE_EQ(d.probability(Pattern::parse("L2N2")), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.probability(Pattern::parse("L2N1S1")), 1.0 / 3.0);
  const auto single = build_distribution(std::vector<std::string>{"zzzz"});
  EXPECT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single.probability(Pattern::parse("L4")), 1.0);
  EXPECT_THROW(build_distribution(std::vector<std::string>{}), DataError);
}

TEST(PatternDistribution, MergeIsAdditiveAndNormalised) {
  Rng rng(2);
  std::vector<std::string> a, b;
  for (int i = 0; i < 400; ++i) {
    std::string pw(4 + rng() % 9, ' ');
    for (char& c : pw) c = static_cast<char>(33 + rng() % 94);
    (i % 3 ? a : b).push_back(pw);
  }
  auto da = build_distribution(a);
  const auto db = build_distribution(b);
  std::vector<std::string> both = a;
  both.insert(both.end(), b.begin(), b.end());
  const auto du = build_distribution(both);
  PatternDistribution ba = db;
  ba.merge(da);
  da.merge(db);
  EXPECT_EQ(da, du);
  EXPECT_EQ(ba, du);
  double sum = 0.0;
  for (const auto& e : du.ranked()) sum += e.probability;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(PatternDistribution, FileRoundTripAndOrder) {
  const std::vector<std::string> pws{"aa11", "bb22", "cc33", "12345", "x!y!", "54321", "qq99"};
  const auto d = build_distribution(pws);
  std::ostringstream out;
  write_distribution(d, out);
  EXPECT_EQ(out.str(), "L2N2\t4\nN5\t2\nL1S1L1S1\t1\n");
  std::istringstream in(out.str());
  EXPECT_EQ(read_distribution(in), d);

  std::istringstream bad("L2N2 4\n");
  EXPECT_THROW(read_distribution(bad), DataError);
  std::istringstream bad_count("L2N2\tx\n");
  EXPECT_THROW(read_distribution(bad_count), DataError);
}

}  // namespace
}  // namespace pagpass
