#include "pagpass/transformer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pagpass/error.hpp"
#include "synthetic_corpus.hpp"

namespace pagpass {
namespace {

TransformerConfig tiny(std::uint64_t seed = 1) {
  return TransformerConfig{.embed = 8, .layers = 2, .heads = 2, .window = 24, .init_std = 0.3, .seed = seed};
}

std::vector<EncodedRule> rules_of(const std::vector<std::string>& pws, std::size_t window = 24) {
  std::vector<EncodedRule> out;
  for (const auto& pw : pws) out.push_back(encode_rule(pw, RuleFormat::kPatternPrefixed, window));
  return out;
}

TEST(Transformer, ParameterLayout) {
  const TransformerModel m(TransformerConfig{.embed = 16, .layers = 2, .heads = 4, .window = 32});
  // wte + wpe + per layer (2 LN, qkv, o, fc, proj) + final LN + head.
  const std::size_t E = 16, V = 135, W = 32;
  const std::size_t per_layer = 4 * E + (E * 3 * E + 3 * E) + (E * E + E) + (E * 4 * E + 4 * E) + (4 * E * E + E);
  EXPECT_EQ(m.parameter_count(), V * E + W * E + 2 * per_layer + 2 * E + E * V + V);
  std::size_t next = 0;
  for (const auto& t : m.layout()) {
    EXPECT_EQ(t.offset, next) << t.name;
    next += t.size();
  }
  EXPECT_EQ(next, m.parameter_count());
}

TEST(Transformer, InitialisationStatistics) {
  const TransformerModel m(TransformerConfig{.embed = 32, .layers = 4, .heads = 4, .init_std = 0.02, .seed = 3});
  const auto p = m.parameters();
  for (const auto& t : m.layout()) {
    const auto slice = p.subspan(t.offset, t.size());
    if (!t.decay) {
      // Biases are zero and norm gains are one.
      const bool gain = t.name.ends_with(".g");
      for (double x : slice) ASSERT_EQ(x, gain ? 1.0 : 0.0) << t.name;
      continue;
    }
    double ss = 0.0;
    for (double x : slice) ss += x * x;
    const double sd = std::sqrt(ss / static_cast<double>(slice.size()));
    const bool residual = t.name.find("w_o") != std::string::npos || t.name.find("w_proj") != std::string::npos;
    const double want = residual ? 0.02 / std::sqrt(8.0) : 0.02;
    EXPECT_NEAR(sd, want, 0.15 * want) << t.name;
  }
}

TEST(Transformer, SameSeedSameWeights) {
  const TransformerModel a(tiny(5)), b(tiny(5)), c(tiny(6));
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST(Transformer, ConfigValidation) {
  EXPECT_THROW(TransformerModel(TransformerConfig{.embed = 10, .heads = 3}), InvalidArgument);
  EXPECT_THROW(TransformerModel(TransformerConfig{.layers = 0}), InvalidArgument);
  EXPECT_THROW(TransformerModel(TransformerConfig{.window = 1}), InvalidArgument);
  EXPECT_NO_THROW(TransformerConfig::paper_scale().validate());
  EXPECT_EQ(TransformerConfig::paper_scale().embed, 256u);
  EXPECT_EQ(TrainConfig::paper_scale().batch_size, 512u);
}

TEST(Transformer, GradientCheckAllTensors) {
  const TransformerModel m(tiny());
  const auto batch = rules_of({"Pass123$", "1234", "ab!c"});
  // Two entries from every tensor, including embedding rows that are used.
  std::vector<std::size_t> idx;
  for (const auto& t : m.layout()) {
    idx.push_back(t.offset + t.size() / 3);
    idx.push_back(t.offset + t.size() - 1);
  }
  const TransformerModel::Tensor& wte = m.layout().front();
  idx.push_back(wte.offset + 42 * wte.cols + 1);  // '1'
  idx.push_back(wte.offset + kBos * wte.cols);
  const auto r = gradient_check(m, batch, idx);
  EXPECT_EQ(r.checked, idx.size());
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(Transformer, GradientCheckRandomSample) {
  const TransformerModel m(tiny(9));
  const auto batch = rules_of({"qwerty12", "!!aa", "Zz9~"});
  const auto r = gradient_check(m, batch, 200, 17);
  EXPECT_EQ(r.checked, 200u);
  EXPECT_LT(r.max_relative_error, 1e-4);
  EXPECT_THROW(gradient_check(m, batch, std::vector<std::size_t>{}), InvalidArgument);
}

TEST(Transformer, LossIsMeanCrossEntropyOfForward) {
  const TransformerModel m(tiny());
  const auto batch = rules_of({"Pass123$", "1234"});
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : batch) {
    const auto tokens = r.tokens();
    const auto dist = m.forward_distributions(tokens);
    for (std::size_t i = 1; i < tokens.size(); ++i, ++n) sum -= std::log(dist[(i - 1) * kVocabSize + tokens[i]]);
  }
  EXPECT_NEAR(m.loss(batch), sum / static_cast<double>(n), 1e-12);
}

TEST(Transformer, CausalMasking) {
  const TransformerModel m(tiny());
  const EncodedRule rule = encode_rule("Pass123$");
  const auto a = rule.tokens();
  std::vector<TokenId> b(a.begin(), a.end());
  b[7] = char_token('x');  // changes position 7 onward
  const auto da = m.forward_distributions(a);
  const auto db = m.forward_distributions(b);
  for (std::size_t i = 0; i < 7 * kVocabSize; ++i) ASSERT_DOUBLE_EQ(da[i], db[i]);
  double diff = 0.0;
  for (std::size_t i = 7 * kVocabSize; i < 8 * kVocabSize; ++i) diff += std::abs(da[i] - db[i]);
  EXPECT_GT(diff, 0.0);
}

TEST(Transformer, SessionMatchesFullForward) {
  const TransformerModel m(tiny(4));
  const EncodedRule rule = encode_rule("Pass123$");
  const auto tokens = rule.tokens();
  const auto full = m.forward_distributions(tokens);
  auto s = m.start(tokens.first(1));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto d = s->distribution();
    ASSERT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
    for (std::size_t w = 0; w < kVocabSize; ++w) ASSERT_NEAR(d[w], full[i * kVocabSize + w], 1e-12);
    if (i + 1 < tokens.size()) s->push(tokens[i + 1]);
  }
  // A clone continues independently of the original.
  auto fork = m.start(tokens.first(3));
  auto other = fork->clone();
  fork->push(char_token('a'));
  other->push(char_token('b'));
  const auto via_start = m.next_distribution(std::vector<TokenId>{tokens[0], tokens[1], tokens[2], char_token('b')});
  const auto d = other->distribution();
  for (std::size_t w = 0; w < kVocabSize; ++w) ASSERT_NEAR(d[w], via_start[w], 1e-12);
}

TEST(Transformer, WindowIsEnforced) {
  const TransformerModel m(tiny());
  std::vector<TokenId> ctx(24, char_token('a'));
  ctx[0] = kBos;
  auto s = m.start(ctx);
  EXPECT_THROW(s->push(char_token('a')), InvalidArgument);
  ctx.push_back(char_token('a'));
  EXPECT_THROW(m.start(ctx), InvalidArgument);
}

TEST(Transformer, TrainingReducesLossDeterministically) {
  const auto words = testing::synthetic_passwords(256, 21);
  const auto rules = rules_of(words);
  TrainConfig tc{.batch_size = 32, .epochs = 4, .optimizer = {.learning_rate = 3e-3}, .seed = 2};
  TransformerModel a(tiny(8));
  const double before = a.loss(rules);
  std::vector<double> seen;
  const auto ra = train_transformer(a, rules, tc, [&](std::size_t, double l) { seen.push_back(l); });
  EXPECT_EQ(ra.steps, 4u * 8u);
  EXPECT_EQ(seen, ra.epoch_loss);
  EXPECT_LT(a.loss(rules), before);
  EXPECT_LT(ra.epoch_loss.back(), ra.epoch_loss.front());

  TransformerModel b(tiny(8));
  const auto rb = train_transformer(b, rules, tc);
  EXPECT_EQ(ra.epoch_loss, rb.epoch_loss);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
}

TEST(Transformer, TrainingRejectsBadInput) {
  TransformerModel m(tiny());
  EXPECT_THROW(train_transformer(m, std::vector<EncodedRule>{}, TrainConfig{}), DataError);
  const auto wide = rules_of({"a1a1a1a1a1a1"}, 32);  // 27 tokens
  EXPECT_THROW(train_transformer(m, wide, TrainConfig{.epochs = 1}), InvalidArgument);
}

TEST(Transformer, UnigramCrossEntropy) {
  // Targets of "abab": L4 <SEP> a b a b <EOS> -> counts 1,1,2,2,1 over 7.
  const auto rules = rules_of({"abab"});
  const double want = -(3 * (1.0 / 7) * std::log(1.0 / 7) + 2 * (2.0 / 7) * std::log(2.0 / 7));
  EXPECT_NEAR(unigram_cross_entropy(rules), want, 1e-12);
}

}  // namespace
}  // namespace pagpass
