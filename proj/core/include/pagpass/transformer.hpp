#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pagpass/corpus.hpp"
#include "pagpass/model.hpp"
#include "pagpass/optimizer.hpp"

namespace pagpass {

namespace detail {
class ByteReader;
}

struct TransformerConfig {
  std::size_t embed = 64;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t window = kDefaultWindow;
  double init_std = 0.02;
  std::uint64_t seed = 0;
  RuleFormat format = RuleFormat::kPatternPrefixed;

  void validate() const;

  // 256-wide, 12 layers, 8 heads.
  static TransformerConfig paper_scale();
};

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  AdamWConfig optimizer{};
  std::uint64_t seed = 0;

  void validate() const;

  // Batch 512, otherwise identical.
  static TrainConfig paper_scale();
};

// Decoder-only transformer over the 135-token vocabulary:
//
//   h = wte[x] + wpe[pos]
//   per layer:  h += Attn(LN1(h));  h += W2 gelu(W1 LN2(h))
//   logits = LNf(h) W_head + b_head
//
// Attention is causally masked multi-head self-attention, the feed-forward
// width is 4E and there is no weight tying. All parameters live in one flat
// double buffer so the optimizer and gradient checks can address them by
// index.
class TransformerModel final : public NextTokenModel {
 public:
  // Named slice of the flat parameter buffer, row-major.
  struct Tensor {
    std::string name;
    std::size_t offset;
    std::size_t rows;
    std::size_t cols;
    bool decay;  // matrices decay, biases and norm parameters do not

    std::size_t size() const { return rows * cols; }
  };

  // Scaled-normal initialisation from cfg.seed: weights ~ N(0, init_std^2),
  // residual output projections scaled by 1/sqrt(2 * layers), biases zero,
  // norm gains one.
  explicit TransformerModel(TransformerConfig cfg);

  const TransformerConfig& config() const { return cfg_; }
  const std::vector<Tensor>& layout() const { return layout_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::vector<bool> decay_mask() const;

  // Mean next-token cross-entropy over every target position of every rule
  // (positions 1 .. length-1, so padding is never a target). When `grad` is
  // non-null it receives d(loss)/d(parameters).
  double loss(std::span<const EncodedRule> batch, std::vector<double>* grad = nullptr) const;

  // Row-major [n x 135] next-token distributions for every prefix of
  // `tokens`, computed with full-sequence causal attention.
  std::vector<double> forward_distributions(std::span<const TokenId> tokens) const;

  Backend backend() const override { return Backend::kTransformer; }
  std::size_t window() const override { return cfg_.window; }
  RuleFormat format() const override { return cfg_.format; }
  std::unique_ptr<DecodeSession> start(std::span<const TokenId> context) const override;
  void write_body(std::string& out) const override;

  static std::unique_ptr<TransformerModel> read_body(detail::ByteReader& in);

 private:
  struct LayerSlots {
    std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
  };

  friend class TransformerSession;
  friend struct TransformerPass;

  std::size_t add_tensor(std::string name, std::size_t rows, std::size_t cols, bool decay);

  TransformerConfig cfg_;
  std::vector<Tensor> layout_;
  std::vector<double> params_;
  std::size_t wte_ = 0, wpe_ = 0, lnf_g_ = 0, lnf_b_ = 0, w_head_ = 0, b_head_ = 0;
  std::vector<LayerSlots> slots_;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // token-weighted mean training loss per epoch
  std::size_t steps = 0;
};

// Called after each epoch with its 1-based index and mean training loss.
using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Shuffles rules each epoch with a generator seeded from cfg.seed and the
// epoch index, then runs AdamW on mean cross-entropy per batch. Throws
// NumericError on a non-finite loss.
TrainResult train_transformer(TransformerModel& model, std::span<const EncodedRule> rules,
                              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Encodes the corpus with model_cfg.format, builds a fresh model and trains.
TrainResult train_transformer(TransformerModel& model, const Corpus& corpus, const TrainConfig& cfg,
                              const EpochCallback& on_epoch = {});

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients of loss() with central differences
// (L(p + h) - L(p - h)) / 2h at the given parameter indices. The relative
// error of one entry is |a - n| / max(|a|, |n|); entries where both are below
// 1e-10 are counted as exact. Throws InvalidArgument for an empty index set.
GradientCheckResult gradient_check(const TransformerModel& model, std::span<const EncodedRule> batch,
                                   std::span<const std::size_t> indices, double step = 1e-5);

// Same, on `samples` distinct indices drawn uniformly with `seed`.
GradientCheckResult gradient_check(const TransformerModel& model, std::span<const EncodedRule> batch,
                                   std::size_t samples, std::uint64_t seed, double step = 1e-5);

// Cross-entropy in nats of the empirical unigram distribution of target
// tokens (positions 1 .. length-1) against itself: the loss of the best
// context-free predictor.
double unigram_cross_entropy(std::span<const EncodedRule> rules);

}  // namespace pagpass
