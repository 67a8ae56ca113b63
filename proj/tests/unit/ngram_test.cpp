#include "pagpass/ngram.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ngram_oracle.hpp"
#include "pagpass/error.hpp"
#include "pagpass/hash.hpp"
#include "synthetic_corpus.hpp"

namespace pagpass {
namespace {

std::vector<TokenId> rule(std::string_view pw) {
  const auto r = encode_rule(pw);
  return {r.tokens().begin(), r.tokens().end()};
}

TEST(NGram, UntrainedIsUniform) {
  NGramModel m;
  const auto p = m.next_distribution(std::vector<TokenId>{kBos, 13});
  for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / 135.0);
}

TEST(NGram, SingleObservedBigramDominates) {
  NGramModel m(NGramConfig{.order = 2});
  m.add_sequence(rule("abcd"));
  // "a" is followed by "b" exactly once.
  const auto p = m.next_distribution(std::vector<TokenId>{kBos, 28, 1, char_token('a')});
  EXPECT_GT(p[char_token('b')], 0.9);
  const double unigram = (1.0 + 0.01 / 135.0) / 7.01;
  const double expected = (1.0 + 0.01 * unigram) / 1.01;
  EXPECT_NEAR(p[char_token('b')], expected, 1e-15);
}

TEST(NGram, CountsAndHistories) {
  NGramModel m(NGramConfig{.order = 3});
  m.add_sequence(rule("abab"));
  const TokenId a = char_token('a'), b = char_token('b');
  EXPECT_EQ(m.count(std::vector<TokenId>{}, a), 2u);
  EXPECT_EQ(m.count(std::vector<TokenId>{a}, b), 2u);
  EXPECT_EQ(m.count(std::vector<TokenId>{b}, a), 1u);
  EXPECT_EQ(m.count(std::vector<TokenId>{b}, kEos), 1u);
  EXPECT_EQ(m.count(std::vector<TokenId>{a, b}, a), 1u);
  // <BOS> L4 <SEP> a b a b <EOS>: 7 targets.
  EXPECT_EQ(m.history_total(std::vector<TokenId>{}), 7u);
  EXPECT_EQ(m.count(std::vector<TokenId>{kBos}, 25), 1u);
  // Histories at or beyond the order are never stored.
  EXPECT_EQ(m.count(std::vector<TokenId>{kSep, a, b}, a), 0u);
}

TEST(NGram, PaddingIsNeverCounted) {
  NGramModel m(NGramConfig{.order = 2});
  const auto r = encode_rule("abcd");
  m.add_sequence(r.ids);
  EXPECT_EQ(m.history_total(std::vector<TokenId>{}), r.length - 1);
  EXPECT_EQ(m.count(std::vector<TokenId>{}, kPad), 0u);
}

TEST(NGram, MatchesBruteForceOracle) {
  const auto words = testing::synthetic_passwords(400, 7);
  for (std::size_t order : {1u, 2u, 3u, 5u}) {
    NGramModel m(NGramConfig{.order = order, .delta = 0.25});
    testing::NGramOracle oracle(order, 0.25);
    for (const auto& w : words) {
      m.add_sequence(rule(w));
      oracle.add(rule(w));
    }
    Rng rng(order);
    for (int q = 0; q < 40; ++q) {
      // Mix of seen prefixes and random contexts.
      std::vector<TokenId> ctx = rule(words[rng() % words.size()]);
      ctx.resize(1 + rng() % (ctx.size() - 1));
      if (q % 4 == 3) {
        for (std::size_t i = 1; i < ctx.size(); ++i) ctx[i] = static_cast<TokenId>(rng() % kVocabSize);
      }
      const auto got = m.next_distribution(ctx);
      const auto want = oracle.distribution(ctx);
      for (std::size_t w = 0; w < kVocabSize; ++w) ASSERT_NEAR(got[w], want[w], 1e-12) << "order " << order;
    }
  }
}

TEST(NGram, DistributionsNormaliseAndArePositive) {
  NGramModel m(NGramConfig{.order = 4});
  for (const auto& w : testing::synthetic_passwords(300, 3)) m.add_sequence(rule(w));
  Rng rng(5);
  for (int q = 0; q < 300; ++q) {
    std::vector<TokenId> ctx{kBos};
    const std::size_t n = rng() % 20;
    for (std::size_t i = 0; i < n; ++i) ctx.push_back(static_cast<TokenId>(rng() % kVocabSize));
    const auto p = m.next_distribution(ctx);
    ASSERT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double x : p) ASSERT_GT(x, 0.0);
  }
}

TEST(NGram, SessionMatchesDirectQueries) {
  NGramModel m(NGramConfig{.order = 3});
  for (const auto& w : testing::synthetic_passwords(200, 9)) m.add_sequence(rule(w));
  const auto seq = rule("Pass123$");
  auto session = m.start(std::span<const TokenId>(seq.data(), 1));
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const auto direct = m.next_distribution(std::span<const TokenId>(seq.data(), i));
    const auto incremental = session->distribution();
    for (std::size_t w = 0; w < kVocabSize; ++w) ASSERT_DOUBLE_EQ(incremental[w], direct[w]);
    session->push(seq[i]);
  }
  auto copy = session->clone();
  EXPECT_EQ(copy->length(), session->length());
}

TEST(NGram, MergeEqualsJointTraining) {
  const auto words = testing::synthetic_passwords(200, 11);
  NGramModel joint(NGramConfig{.order = 3}), left(NGramConfig{.order = 3}), right(NGramConfig{.order = 3});
  for (std::size_t i = 0; i < words.size(); ++i) {
    joint.add_sequence(rule(words[i]));
    (i % 2 ? left : right).add_sequence(rule(words[i]));
  }
  left.merge(right);
  EXPECT_TRUE(left == joint);
  NGramModel other_order(NGramConfig{.order = 2});
  EXPECT_THROW(left.merge(other_order), InvalidArgument);
}

TEST(NGram, ConfigValidation) {
  EXPECT_THROW(NGramModel(NGramConfig{.order = 0}), InvalidArgument);
  EXPECT_THROW(NGramModel(NGramConfig{.order = 9}), InvalidArgument);
  EXPECT_THROW(NGramModel(NGramConfig{.delta = 0.0}), InvalidArgument);
  NGramModel m;
  EXPECT_THROW(m.start(std::vector<TokenId>{}), InvalidArgument);
  EXPECT_THROW(m.start(std::vector<TokenId>{13}), InvalidArgument);
}

TEST(NGram, TrainFromCorpus) {
  Corpus c{{"abcd", "1234"}, ""};
  const NGramModel m = train_ngram(c, 2);
  EXPECT_EQ(m.history_total(std::vector<TokenId>{}), 14u);
  EXPECT_THROW(train_ngram(Corpus{}, 2), DataError);
}

}  // namespace
}  // namespace pagpass
