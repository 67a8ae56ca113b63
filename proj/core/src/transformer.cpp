#include "pagpass/transformer.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "checkpoint.hpp"
#include "pagpass/error.hpp"
#include "pagpass/hash.hpp"

namespace pagpass {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using RowMap = Eigen::Map<RowVec>;
using ConstRowMap = Eigen::Map<const RowVec>;

constexpr double kNormEps = 1e-5;
const double kGeluScale = std::sqrt(2.0 / std::numbers::pi);

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + 0.044715 * x * x * x))); }

double gelu_grad(double x) {
  const double u = kGeluScale * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluScale * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

// Row-wise layer norm; keeps the normalised input and inverse std for backward.
void layer_norm(const Mat& x, ConstRowMap gain, ConstRowMap bias, Mat& y, Mat& xhat, Eigen::VectorXd& rstd) {
  const auto rows = x.rows();
  const auto cols = x.cols();
  xhat.resize(rows, cols);
  y.resize(rows, cols);
  rstd.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    rstd(r) = 1.0 / std::sqrt(var + kNormEps);
    xhat.row(r) = (x.row(r).array() - mean) * rstd(r);
    y.row(r) = xhat.row(r).cwiseProduct(gain) + bias;
  }
}

// Accumulates gain/bias gradients and returns dx.
Mat layer_norm_backward(const Mat& dy, const Mat& xhat, const Eigen::VectorXd& rstd, ConstRowMap gain,
                        RowMap dgain, RowMap dbias) {
  Mat dx(dy.rows(), dy.cols());
  const double n = static_cast<double>(dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const RowVec dxhat = dy.row(r).cwiseProduct(gain);
    const double mean_d = dxhat.sum() / n;
    const double mean_dx = dxhat.dot(xhat.row(r)) / n;
    dx.row(r) = rstd(r) * (dxhat.array() - mean_d - xhat.row(r).array() * mean_dx);
    dgain += dy.row(r).cwiseProduct(xhat.row(r));
    dbias += dy.row(r);
  }
  return dx;
}

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace

void TransformerConfig::validate() const {
  if (embed == 0 || layers == 0 || heads == 0) throw InvalidArgument("transformer sizes must be positive");
  if (embed % heads != 0) throw InvalidArgument("embedding size must be divisible by the head count");
  if (window < 2) throw InvalidArgument("window must be at least 2");
  if (!(init_std > 0.0)) throw InvalidArgument("init_std must be positive");
}

TransformerConfig TransformerConfig::paper_scale() {
  TransformerConfig cfg;
  cfg.embed = 256;
  cfg.layers = 12;
  cfg.heads = 8;
  return cfg;
}

void TrainConfig::validate() const {
  if (batch_size == 0 || epochs == 0) throw InvalidArgument("batch size and epochs must be positive");
  if (!(optimizer.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
}

TrainConfig TrainConfig::paper_scale() {
  TrainConfig cfg;
  cfg.batch_size = 512;
  return cfg;
}

std::size_t TransformerModel::add_tensor(std::string name, std::size_t rows, std::size_t cols, bool decay) {
  const std::size_t offset = layout_.empty() ? 0 : layout_.back().offset + layout_.back().size();
  layout_.push_back({std::move(name), offset, rows, cols, decay});
  return offset;
}

TransformerModel::TransformerModel(TransformerConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t E = cfg_.embed;
  wte_ = add_tensor("wte", kVocabSize, E, true);
  wpe_ = add_tensor("wpe", cfg_.window, E, true);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string p = "h" + std::to_string(l) + ".";
    LayerSlots s{};
    s.ln1_g = add_tensor(p + "ln1.g", 1, E, false);
    s.ln1_b = add_tensor(p + "ln1.b", 1, E, false);
    s.w_qkv = add_tensor(p + "attn.w_qkv", E, 3 * E, true);
    s.b_qkv = add_tensor(p + "attn.b_qkv", 1, 3 * E, false);
    s.w_o = add_tensor(p + "attn.w_o", E, E, true);
    s.b_o = add_tensor(p + "attn.b_o", 1, E, false);
    s.ln2_g = add_tensor(p + "ln2.g", 1, E, false);
    s.ln2_b = add_tensor(p + "ln2.b", 1, E, false);
    s.w_fc = add_tensor(p + "mlp.w_fc", E, 4 * E, true);
    s.b_fc = add_tensor(p + "mlp.b_fc", 1, 4 * E, false);
    s.w_proj = add_tensor(p + "mlp.w_proj", 4 * E, E, true);
    s.b_proj = add_tensor(p + "mlp.b_proj", 1, E, false);
    slots_.push_back(s);
  }
  lnf_g_ = add_tensor("lnf.g", 1, E, false);
  lnf_b_ = add_tensor("lnf.b", 1, E, false);
  w_head_ = add_tensor("head.w", E, kVocabSize, true);
  b_head_ = add_tensor("head.b", 1, kVocabSize, false);
  params_.assign(layout_.back().offset + layout_.back().size(), 0.0);

  Rng rng(mix_seed(cfg_.seed, 0x7472616e73ULL));
  const double residual_std = cfg_.init_std / std::sqrt(2.0 * static_cast<double>(cfg_.layers));
  for (const Tensor& t : layout_) {
    double* p = params_.data() + t.offset;
    const bool is_gain = t.name.ends_with(".g");
    const bool is_residual = t.name.ends_with("attn.w_o") || t.name.ends_with("mlp.w_proj");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (is_gain) {
        p[i] = 1.0;
      } else if (t.decay) {
        p[i] = (is_residual ? residual_std : cfg_.init_std) * rng.next_normal();
      }
    }
  }
}

std::vector<bool> TransformerModel::decay_mask() const {
  std::vector<bool> mask(params_.size(), false);
  for (const Tensor& t : layout_) {
    if (t.decay) std::fill(mask.begin() + t.offset, mask.begin() + t.offset + t.size(), true);
  }
  return mask;
}

// One forward (and optionally backward) pass over a packed batch. Rows of
// every activation matrix are the concatenated input positions of all
// sequences; attention runs per sequence and head.
struct TransformerPass {
  struct LayerCache {
    Mat h_in, xhat1, a, qkv, y, h_mid, xhat2, m, f, g;
    Eigen::VectorXd rstd1, rstd2;
    std::vector<Mat> probs;  // [sequence * heads + head], T x T
  };

  const TransformerModel& model;
  std::size_t E, H, D;
  std::vector<std::size_t> starts;  // row offset per sequence
  std::vector<std::size_t> lens;    // input positions per sequence
  std::vector<TokenId> inputs;
  std::vector<TokenId> targets;
  std::vector<LayerCache> layers;
  Mat h_final, xhatf, n, probs;
  Eigen::VectorXd rstdf;

  explicit TransformerPass(const TransformerModel& m)
      : model(m), E(m.cfg_.embed), H(m.cfg_.heads), D(m.cfg_.embed / m.cfg_.heads) {}

  ConstMatMap cmat(std::size_t off, std::size_t r, std::size_t c) const {
    return ConstMatMap(model.params_.data() + off, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  ConstRowMap crow(std::size_t off, std::size_t c) const {
    return ConstRowMap(model.params_.data() + off, static_cast<Eigen::Index>(c));
  }
  static MatMap gmat(std::vector<double>& g, std::size_t off, std::size_t r, std::size_t c) {
    return MatMap(g.data() + off, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  static RowMap grow(std::vector<double>& g, std::size_t off, std::size_t c) {
    return RowMap(g.data() + off, static_cast<Eigen::Index>(c));
  }

  void add_sequence(std::span<const TokenId> tokens, bool with_targets) {
    const std::size_t n_in = with_targets ? tokens.size() - 1 : tokens.size();
    if (n_in > model.cfg_.window) throw InvalidArgument("sequence longer than the model window");
    starts.push_back(inputs.size());
    lens.push_back(n_in);
    for (std::size_t i = 0; i < n_in; ++i) {
      if (tokens[i] >= kVocabSize) throw InvalidArgument("token id out of range");
      inputs.push_back(tokens[i]);
      if (with_targets) {
        if (tokens[i + 1] >= kVocabSize) throw InvalidArgument("token id out of range");
        targets.push_back(tokens[i + 1]);
      }
    }
  }

  void forward() {
    const auto R = static_cast<Eigen::Index>(inputs.size());
    const auto wte = cmat(model.wte_, kVocabSize, E);
    const auto wpe = cmat(model.wpe_, model.cfg_.window, E);
    Mat h(R, static_cast<Eigen::Index>(E));
    for (std::size_t s = 0; s < starts.size(); ++s) {
      for (std::size_t t = 0; t < lens[s]; ++t) {
        const auto r = static_cast<Eigen::Index>(starts[s] + t);
        h.row(r) = wte.row(inputs[starts[s] + t]) + wpe.row(static_cast<Eigen::Index>(t));
      }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    layers.resize(model.slots_.size());
    for (std::size_t l = 0; l < model.slots_.size(); ++l) {
      const auto& sl = model.slots_[l];
      LayerCache& c = layers[l];
      c.h_in = h;
      layer_norm(h, crow(sl.ln1_g, E), crow(sl.ln1_b, E), c.a, c.xhat1, c.rstd1);
      c.qkv.noalias() = c.a * cmat(sl.w_qkv, E, 3 * E);
      c.qkv.rowwise() += crow(sl.b_qkv, 3 * E);
      c.y.setZero(R, static_cast<Eigen::Index>(E));
      c.probs.resize(starts.size() * H);
      for (std::size_t s = 0; s < starts.size(); ++s) {
        const auto r0 = static_cast<Eigen::Index>(starts[s]);
        const auto T = static_cast<Eigen::Index>(lens[s]);
        for (std::size_t hd = 0; hd < H; ++hd) {
          const auto qc = static_cast<Eigen::Index>(hd * D);
          const auto kc = static_cast<Eigen::Index>(E + hd * D);
          const auto vc = static_cast<Eigen::Index>(2 * E + hd * D);
          const auto Dn = static_cast<Eigen::Index>(D);
          Mat& P = c.probs[s * H + hd];
          P.noalias() = (c.qkv.block(r0, qc, T, Dn) * c.qkv.block(r0, kc, T, Dn).transpose()) * scale;
          for (Eigen::Index i = 0; i < T; ++i) {
            const double mx = P.row(i).head(i + 1).maxCoeff();
            double sum = 0.0;
            for (Eigen::Index j = 0; j <= i; ++j) {
              P(i, j) = std::exp(P(i, j) - mx);
              sum += P(i, j);
            }
            for (Eigen::Index j = 0; j <= i; ++j) P(i, j) /= sum;
            for (Eigen::Index j = i + 1; j < T; ++j) P(i, j) = 0.0;
          }
          c.y.block(r0, qc, T, Dn).noalias() = P * c.qkv.block(r0, vc, T, Dn);
        }
      }
      h.noalias() += c.y * cmat(sl.w_o, E, E);
      h.rowwise() += crow(sl.b_o, E);
      c.h_mid = h;
      layer_norm(h, crow(sl.ln2_g, E), crow(sl.ln2_b, E), c.m, c.xhat2, c.rstd2);
      c.f.noalias() = c.m * cmat(sl.w_fc, E, 4 * E);
      c.f.rowwise() += crow(sl.b_fc, 4 * E);
      c.g = c.f.unaryExpr([](double x) { return gelu(x); });
      h.noalias() += c.g * cmat(sl.w_proj, 4 * E, E);
      h.rowwise() += crow(sl.b_proj, E);
    }
    h_final = h;
    layer_norm(h, crow(model.lnf_g_, E), crow(model.lnf_b_, E), n, xhatf, rstdf);
    probs.noalias() = n * cmat(model.w_head_, E, kVocabSize);
    probs.rowwise() += crow(model.b_head_, kVocabSize);
  }

  // Turns the logits in `probs` into probabilities; returns the summed
  // negative log-likelihood of the targets when there are any.
  double softmax_and_nll() {
    double nll = 0.0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      const double mx = probs.row(r).maxCoeff();
      const double lse = mx + std::log((probs.row(r).array() - mx).exp().sum());
      if (!targets.empty()) nll -= probs(r, targets[static_cast<std::size_t>(r)]) - lse;
      probs.row(r) = (probs.row(r).array() - lse).exp();
    }
    return nll;
  }

  void backward(std::vector<double>& grad, double inv_count) {
    const auto R = static_cast<Eigen::Index>(inputs.size());
    Mat dlogits = probs;
    for (Eigen::Index r = 0; r < R; ++r) dlogits(r, targets[static_cast<std::size_t>(r)]) -= 1.0;
    dlogits *= inv_count;

    gmat(grad, model.w_head_, E, kVocabSize).noalias() += n.transpose() * dlogits;
    grow(grad, model.b_head_, kVocabSize) += dlogits.colwise().sum();
    Mat dn = dlogits * cmat(model.w_head_, E, kVocabSize).transpose();
    Mat dh = layer_norm_backward(dn, xhatf, rstdf, crow(model.lnf_g_, E), grow(grad, model.lnf_g_, E),
                                 grow(grad, model.lnf_b_, E));

    const double scale = 1.0 / std::sqrt(static_cast<double>(D));
    for (std::size_t li = model.slots_.size(); li-- > 0;) {
      const auto& sl = model.slots_[li];
      LayerCache& c = layers[li];

      // Feed-forward branch.
      gmat(grad, sl.w_proj, 4 * E, E).noalias() += c.g.transpose() * dh;
      grow(grad, sl.b_proj, E) += dh.colwise().sum();
      Mat df = dh * cmat(sl.w_proj, 4 * E, E).transpose();
      df.array() *= c.f.unaryExpr([](double x) { return gelu_grad(x); }).array();
      gmat(grad, sl.w_fc, E, 4 * E).noalias() += c.m.transpose() * df;
      grow(grad, sl.b_fc, 4 * E) += df.colwise().sum();
      Mat dm = df * cmat(sl.w_fc, E, 4 * E).transpose();
      dh += layer_norm_backward(dm, c.xhat2, c.rstd2, crow(sl.ln2_g, E), grow(grad, sl.ln2_g, E),
                                grow(grad, sl.ln2_b, E));

      // Attention branch.
      gmat(grad, sl.w_o, E, E).noalias() += c.y.transpose() * dh;
      grow(grad, sl.b_o, E) += dh.colwise().sum();
      Mat dy = dh * cmat(sl.w_o, E, E).transpose();
      Mat dqkv = Mat::Zero(R, static_cast<Eigen::Index>(3 * E));
      for (std::size_t s = 0; s < starts.size(); ++s) {
        const auto r0 = static_cast<Eigen::Index>(starts[s]);
        const auto T = static_cast<Eigen::Index>(lens[s]);
        for (std::size_t hd = 0; hd < H; ++hd) {
          const auto qc = static_cast<Eigen::Index>(hd * D);
          const auto kc = static_cast<Eigen::Index>(E + hd * D);
          const auto vc = static_cast<Eigen::Index>(2 * E + hd * D);
          const auto Dn = static_cast<Eigen::Index>(D);
          const Mat& P = c.probs[s * H + hd];
          const auto dY = dy.block(r0, qc, T, Dn);
          Mat dP = dY * c.qkv.block(r0, vc, T, Dn).transpose();
          dqkv.block(r0, vc, T, Dn).noalias() += P.transpose() * dY;
          Mat dS(T, T);
          for (Eigen::Index i = 0; i < T; ++i) {
            const double dot = P.row(i).dot(dP.row(i));
            dS.row(i) = P.row(i).array() * (dP.row(i).array() - dot);
          }
          dS *= scale;
          dqkv.block(r0, qc, T, Dn).noalias() += dS * c.qkv.block(r0, kc, T, Dn);
          dqkv.block(r0, kc, T, Dn).noalias() += dS.transpose() * c.qkv.block(r0, qc, T, Dn);
        }
      }
      gmat(grad, sl.w_qkv, E, 3 * E).noalias() += c.a.transpose() * dqkv;
      grow(grad, sl.b_qkv, 3 * E) += dqkv.colwise().sum();
      Mat da = dqkv * cmat(sl.w_qkv, E, 3 * E).transpose();
      dh += layer_norm_backward(da, c.xhat1, c.rstd1, crow(sl.ln1_g, E), grow(grad, sl.ln1_g, E),
                                grow(grad, sl.ln1_b, E));
    }

    auto dwte = gmat(grad, model.wte_, kVocabSize, E);
    auto dwpe = gmat(grad, model.wpe_, model.cfg_.window, E);
    for (std::size_t s = 0; s < starts.size(); ++s) {
      for (std::size_t t = 0; t < lens[s]; ++t) {
        const auto r = static_cast<Eigen::Index>(starts[s] + t);
        dwte.row(inputs[starts[s] + t]) += dh.row(r);
        dwpe.row(static_cast<Eigen::Index>(t)) += dh.row(r);
      }
    }
  }
};

double TransformerModel::loss(std::span<const EncodedRule> batch, std::vector<double>* grad) const {
  TransformerPass pass(*this);
  for (const EncodedRule& rule : batch) {
    if (rule.length < 2) throw InvalidArgument("rule must have at least two tokens");
    pass.add_sequence(rule.tokens(), true);
  }
  if (pass.targets.empty()) throw InvalidArgument("empty batch");
  pass.forward();
  const double inv = 1.0 / static_cast<double>(pass.targets.size());
  const double loss = pass.softmax_and_nll() * inv;
  if (grad) {
    grad->assign(params_.size(), 0.0);
    pass.backward(*grad, inv);
  }
  return loss;
}

std::vector<double> TransformerModel::forward_distributions(std::span<const TokenId> tokens) const {
  validate_context(tokens);
  TransformerPass pass(*this);
  pass.add_sequence(tokens, false);
  pass.forward();
  pass.softmax_and_nll();
  return {pass.probs.data(), pass.probs.data() + pass.probs.size()};
}

// Incremental decoder with per-layer key/value caches.
class TransformerSession final : public DecodeSession {
 public:
  explicit TransformerSession(const TransformerModel& m) : model_(&m) {
    const auto W = static_cast<Eigen::Index>(m.cfg_.window);
    const auto E = static_cast<Eigen::Index>(m.cfg_.embed);
    keys_.assign(m.slots_.size(), Mat::Zero(W, E));
    values_.assign(m.slots_.size(), Mat::Zero(W, E));
  }

  std::size_t length() const override { return length_; }

  std::span<const double> distribution() override {
    if (length_ == 0) throw InvalidArgument("session has no context");
    return dist_;
  }

  void push(TokenId id) override {
    if (id >= kVocabSize) throw InvalidArgument("token id out of range");
    if (length_ >= model_->cfg_.window) throw InvalidArgument("context window is full");
    const TransformerModel& m = *model_;
    const std::size_t E = m.cfg_.embed, H = m.cfg_.heads, D = E / H;
    const auto En = static_cast<Eigen::Index>(E);
    const auto Dn = static_cast<Eigen::Index>(D);
    const auto pos = static_cast<Eigen::Index>(length_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(D));

    auto mat = [&](std::size_t off, std::size_t r, std::size_t c) {
      return ConstMatMap(m.params_.data() + off, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    };
    auto row = [&](std::size_t off, std::size_t c) {
      return ConstRowMap(m.params_.data() + off, static_cast<Eigen::Index>(c));
    };
    auto norm = [](const RowVec& x, ConstRowMap g, ConstRowMap b) {
      const double mean = x.mean();
      const double var = (x.array() - mean).square().mean();
      return RowVec(((x.array() - mean) / std::sqrt(var + kNormEps)).matrix().cwiseProduct(g) + b);
    };

    RowVec h = mat(m.wte_, kVocabSize, E).row(id) + mat(m.wpe_, m.cfg_.window, E).row(pos);
    RowVec scores(pos + 1);
    for (std::size_t l = 0; l < m.slots_.size(); ++l) {
      const auto& sl = m.slots_[l];
      const RowVec a = norm(h, row(sl.ln1_g, E), row(sl.ln1_b, E));
      RowVec qkv = a * mat(sl.w_qkv, E, 3 * E);
      qkv += row(sl.b_qkv, 3 * E);
      keys_[l].row(pos) = qkv.segment(En, En);
      values_[l].row(pos) = qkv.segment(2 * En, En);
      RowVec y = RowVec::Zero(En);
      for (std::size_t hd = 0; hd < H; ++hd) {
        const auto c0 = static_cast<Eigen::Index>(hd * D);
        const auto q = qkv.segment(c0, Dn);
        for (Eigen::Index j = 0; j <= pos; ++j) scores(j) = keys_[l].row(j).segment(c0, Dn).dot(q) * scale;
        softmax_inplace({scores.data(), static_cast<std::size_t>(pos + 1)});
        for (Eigen::Index j = 0; j <= pos; ++j) y.segment(c0, Dn) += scores(j) * values_[l].row(j).segment(c0, Dn);
      }
      h += y * mat(sl.w_o, E, E);
      h += row(sl.b_o, E);
      const RowVec mm = norm(h, row(sl.ln2_g, E), row(sl.ln2_b, E));
      RowVec f = mm * mat(sl.w_fc, E, 4 * E);
      f += row(sl.b_fc, 4 * E);
      f = f.unaryExpr([](double x) { return gelu(x); });
      h += f * mat(sl.w_proj, 4 * E, E);
      h += row(sl.b_proj, E);
    }
    const RowVec n = norm(h, row(m.lnf_g_, E), row(m.lnf_b_, E));
    RowVec logits = n * mat(m.w_head_, E, kVocabSize);
    logits += row(m.b_head_, kVocabSize);
    std::copy(logits.data(), logits.data() + kVocabSize, dist_.begin());
    softmax_inplace(dist_);
    ++length_;
  }

  std::unique_ptr<DecodeSession> clone() const override {
    auto copy = std::make_unique<TransformerSession>(*model_);
    const auto rows = static_cast<Eigen::Index>(length_);
    for (std::size_t l = 0; l < keys_.size(); ++l) {
      copy->keys_[l].topRows(rows) = keys_[l].topRows(rows);
      copy->values_[l].topRows(rows) = values_[l].topRows(rows);
    }
    copy->dist_ = dist_;
    copy->length_ = length_;
    return copy;
  }

 private:
  const TransformerModel* model_;
  std::vector<Mat> keys_;
  std::vector<Mat> values_;
  std::array<double, kVocabSize> dist_{};
  std::size_t length_ = 0;
};

std::unique_ptr<DecodeSession> TransformerModel::start(std::span<const TokenId> context) const {
  validate_context(context);
  auto session = std::make_unique<TransformerSession>(*this);
  for (TokenId t : context) session->push(t);
  return session;
}

void TransformerModel::write_body(std::string& out) const {
  detail::ByteWriter w(out);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.embed));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.layers));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.heads));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.window));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(kVocabSize));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg_.format));
  w.put<double>(cfg_.init_std);
  w.put<std::uint64_t>(cfg_.seed);
  w.put<std::uint64_t>(params_.size());
  w.put_array(params_.data(), params_.size());
}

std::unique_ptr<TransformerModel> TransformerModel::read_body(detail::ByteReader& in) {
  TransformerConfig cfg;
  cfg.embed = in.get<std::uint32_t>();
  cfg.layers = in.get<std::uint32_t>();
  cfg.heads = in.get<std::uint32_t>();
  cfg.window = in.get<std::uint32_t>();
  if (in.get<std::uint32_t>() != kVocabSize) throw DataError("checkpoint vocabulary size mismatch");
  const auto format = in.get<std::uint8_t>();
  if (format != 1 && format != 2) throw DataError("checkpoint has unknown rule format");
  cfg.format = static_cast<RuleFormat>(format);
  cfg.init_std = in.get<double>();
  cfg.seed = in.get<std::uint64_t>();
  if (cfg.embed > 4096 || cfg.layers > 256 || cfg.heads > 256 || cfg.window > 4096) {
    throw DataError("checkpoint hyperparameters out of range");
  }
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("checkpoint has invalid transformer config: ") + e.what());
  }
  auto model = std::make_unique<TransformerModel>(cfg);
  const auto count = in.get<std::uint64_t>();
  if (count != model->params_.size()) throw DataError("checkpoint parameter count mismatch");
  in.get_array(model->params_.data(), model->params_.size());
  return model;
}

TrainResult train_transformer(TransformerModel& model, std::span<const EncodedRule> rules, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  cfg.validate();
  if (rules.empty()) throw DataError("cannot train on an empty corpus");
  AdamW opt(model.parameter_count(), cfg.optimizer, model.decay_mask());
  TrainResult result;
  std::vector<std::size_t> order(rules.size());
  std::vector<EncodedRule> batch;
  std::vector<double> grad;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(cfg.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double weighted = 0.0;
    std::size_t tokens = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      batch.clear();
      std::size_t batch_tokens = 0;
      for (std::size_t k = b; k < std::min(order.size(), b + cfg.batch_size); ++k) {
        batch.push_back(rules[order[k]]);
        batch_tokens += rules[order[k]].length - 1;
      }
      const double loss = model.loss(batch, &grad);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", step " +
                           std::to_string(result.steps + 1));
      }
      opt.step(model.parameters(), grad);
      ++result.steps;
      weighted += loss * static_cast<double>(batch_tokens);
      tokens += batch_tokens;
    }
    result.epoch_loss.push_back(weighted / static_cast<double>(tokens));
    if (on_epoch) on_epoch(epoch + 1, result.epoch_loss.back());
  }
  return result;
}

TrainResult train_transformer(TransformerModel& model, const Corpus& corpus, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  std::vector<EncodedRule> rules;
  rules.reserve(corpus.size());
  for (const std::string& pw : corpus.passwords) rules.push_back(encode_rule(pw, model.format(), model.window()));
  return train_transformer(model, rules, cfg, on_epoch);
}

GradientCheckResult gradient_check(const TransformerModel& model, std::span<const EncodedRule> batch,
                                   std::span<const std::size_t> indices, double step) {
  if (indices.empty()) throw InvalidArgument("gradient check needs at least one parameter index");
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  std::vector<double> analytic;
  model.loss(batch, &analytic);
  TransformerModel probe = model;
  auto params = probe.parameters();
  GradientCheckResult result;
  for (std::size_t idx : indices) {
    if (idx >= params.size()) throw InvalidArgument("parameter index out of range");
    const double saved = params[idx];
    params[idx] = saved + step;
    const double up = probe.loss(batch);
    params[idx] = saved - step;
    const double down = probe.loss(batch);
    params[idx] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[idx];
    const double err = std::abs(a - numeric);
    const double denom = std::max(std::abs(a), std::abs(numeric));
    const double rel = denom < 1e-10 ? 0.0 : err / denom;
    result.max_abs_error = std::max(result.max_abs_error, err);
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.checked;
  }
  return result;
}

GradientCheckResult gradient_check(const TransformerModel& model, std::span<const EncodedRule> batch,
                                   std::size_t samples, std::uint64_t seed, double step) {
  if (samples == 0) throw InvalidArgument("gradient check needs at least one parameter index");
  const std::size_t total = model.parameter_count();
  samples = std::min(samples, total);
  Rng rng(seed);
  std::unordered_set<std::size_t> chosen;
  std::vector<std::size_t> indices;
  while (indices.size() < samples) {
    const std::size_t idx = rng() % total;
    if (chosen.insert(idx).second) indices.push_back(idx);
  }
  return gradient_check(model, batch, indices, step);
}

double unigram_cross_entropy(std::span<const EncodedRule> rules) {
  std::array<std::uint64_t, kVocabSize> counts{};
  std::uint64_t total = 0;
  for (const EncodedRule& r : rules) {
    for (std::size_t i = 1; i < r.length; ++i) {
      ++counts[r.ids[i]];
      ++total;
    }
  }
  if (total == 0) throw InvalidArgument("no target tokens");
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace pagpass
