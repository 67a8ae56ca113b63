#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pagpass/corpus.hpp"
#include "pagpass/model.hpp"

namespace pagpass {

namespace detail {
class ByteReader;
}

struct NGramConfig {
  std::size_t order = 5;  // 1..8
  double delta = 0.01;
  std::size_t window = kDefaultWindow;
  RuleFormat format = RuleFormat::kPatternPrefixed;

  void validate() const;
};

// Interpolated count model over token ids. With h_j the last j-1 tokens of
// the context:
//
//   P_0(w)       = 1 / 135
//   P_j(w | h_j) = (c(h_j w) + delta * P_{j-1}(w | h_{j-1})) / (c(h_j) + delta)
//
// for j = 1 .. min(order, |context| + 1). A history never seen in training
// contributes nothing (P_j = P_{j-1}), so an empty model is uniform and every
// probability is strictly positive.
class NGramModel final : public NextTokenModel {
 public:
  explicit NGramModel(NGramConfig cfg = {});

  // Counts every target position 1..n-1 of an unpadded rule.
  void add_sequence(std::span<const TokenId> tokens);
  // Adds another model's counts. Both must share order and format.
  void merge(const NGramModel& other);

  std::size_t order() const { return cfg_.order; }
  double delta() const { return cfg_.delta; }
  const NGramConfig& config() const { return cfg_; }

  // Raw counts, exposed for oracles and audits.
  std::uint64_t count(std::span<const TokenId> history, TokenId next) const;
  std::uint64_t history_total(std::span<const TokenId> history) const;
  std::size_t history_count() const { return nodes_.size(); }

  // Writes the smoothed distribution for `context` into out[0..135).
  void distribution(std::span<const TokenId> context, std::span<double> out) const;

  Backend backend() const override { return Backend::kNGram; }
  std::size_t window() const override { return cfg_.window; }
  RuleFormat format() const override { return cfg_.format; }
  std::unique_ptr<DecodeSession> start(std::span<const TokenId> context) const override;
  void write_body(std::string& out) const override;

  static std::unique_ptr<NGramModel> read_body(detail::ByteReader& in);

  bool operator==(const NGramModel& other) const;

 private:
  struct Node {
    std::uint64_t total = 0;
    std::vector<std::pair<TokenId, std::uint64_t>> next;  // sorted by token
  };

  static std::uint64_t pack(std::span<const TokenId> history);
  void bump(std::uint64_t key, TokenId next, std::uint64_t by);

  NGramConfig cfg_;
  std::unordered_map<std::uint64_t, Node> nodes_;
};

// Encodes every password in the corpus with cfg.format and counts it.
// Throws DataError on an empty corpus.
NGramModel train_ngram(const Corpus& corpus, std::size_t order, NGramConfig cfg = {});

}  // namespace pagpass
