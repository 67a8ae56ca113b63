#include "pagpass/ngram.hpp"

#include <algorithm>
#include <array>

#include "checkpoint.hpp"
#include "pagpass/error.hpp"

namespace pagpass {

void NGramConfig::validate() const {
  if (order < 1 || order > 8) throw InvalidArgument("n-gram order must be in [1, 8]");
  if (!(delta > 0.0)) throw InvalidArgument("n-gram delta must be positive");
  if (window < 2) throw InvalidArgument("window must be at least 2");
}

NGramModel::NGramModel(NGramConfig cfg) : cfg_(cfg) { cfg_.validate(); }

// Histories are at most 7 tokens of < 256 each; the top byte holds the length.
std::uint64_t NGramModel::pack(std::span<const TokenId> history) {
  std::uint64_t key = std::uint64_t{history.size()} << 56;
  for (std::size_t i = 0; i < history.size(); ++i) key |= std::uint64_t{history[i]} << (8 * i);
  return key;
}

void NGramModel::bump(std::uint64_t key, TokenId next, std::uint64_t by) {
  Node& node = nodes_[key];
  node.total += by;
  auto it = std::lower_bound(node.next.begin(), node.next.end(), next,
                             [](const auto& e, TokenId t) { return e.first < t; });
  if (it != node.next.end() && it->first == next) {
    it->second += by;
  } else {
    node.next.insert(it, {next, by});
  }
}

void NGramModel::add_sequence(std::span<const TokenId> tokens) {
  for (TokenId t : tokens) {
    if (t >= kVocabSize) throw InvalidArgument("token id out of range");
  }
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i] == kPad) break;
    for (std::size_t j = 1; j <= cfg_.order && j - 1 <= i; ++j) {
      bump(pack(tokens.subspan(i - (j - 1), j - 1)), tokens[i], 1);
    }
  }
}

void NGramModel::merge(const NGramModel& other) {
  if (other.cfg_.order != cfg_.order || other.cfg_.format != cfg_.format) {
    throw InvalidArgument("cannot merge n-gram models with different order or format");
  }
  for (const auto& [key, node] : other.nodes_) {
    for (const auto& [t, c] : node.next) bump(key, t, c);
  }
}

std::uint64_t NGramModel::count(std::span<const TokenId> history, TokenId next) const {
  if (history.size() >= cfg_.order) return 0;
  const auto it = nodes_.find(pack(history));
  if (it == nodes_.end()) return 0;
  for (const auto& [t, c] : it->second.next) {
    if (t == next) return c;
  }
  return 0;
}

std::uint64_t NGramModel::history_total(std::span<const TokenId> history) const {
  if (history.size() >= cfg_.order) return 0;
  const auto it = nodes_.find(pack(history));
  return it == nodes_.end() ? 0 : it->second.total;
}

void NGramModel::distribution(std::span<const TokenId> context, std::span<double> out) const {
  std::fill(out.begin(), out.begin() + kVocabSize, 1.0 / static_cast<double>(kVocabSize));
  const std::size_t levels = std::min(cfg_.order, context.size() + 1);
  for (std::size_t j = 1; j <= levels; ++j) {
    const auto it = nodes_.find(pack(context.last(j - 1)));
    if (it == nodes_.end()) continue;
    const double denom = static_cast<double>(it->second.total) + cfg_.delta;
    const double keep = cfg_.delta / denom;
    for (std::size_t t = 0; t < kVocabSize; ++t) out[t] *= keep;
    for (const auto& [t, c] : it->second.next) out[t] += static_cast<double>(c) / denom;
  }
}

namespace {

class NGramSession final : public DecodeSession {
 public:
  NGramSession(const NGramModel& model, std::span<const TokenId> context)
      : model_(&model), context_(context.begin(), context.end()) {}

  std::size_t length() const override { return context_.size(); }

  std::span<const double> distribution() override {
    if (!fresh_) {
      model_->distribution(context_, dist_);
      fresh_ = true;
    }
    return dist_;
  }

  void push(TokenId id) override {
    if (id >= kVocabSize) throw InvalidArgument("token id out of range");
    if (context_.size() >= model_->window()) throw InvalidArgument("context window is full");
    context_.push_back(id);
    fresh_ = false;
  }

  std::unique_ptr<DecodeSession> clone() const override { return std::make_unique<NGramSession>(*this); }

 private:
  const NGramModel* model_;
  std::vector<TokenId> context_;
  std::array<double, kVocabSize> dist_{};
  bool fresh_ = false;
};

}  // namespace

std::unique_ptr<DecodeSession> NGramModel::start(std::span<const TokenId> context) const {
  validate_context(context);
  return std::make_unique<NGramSession>(*this, context);
}

void NGramModel::write_body(std::string& out) const {
  detail::ByteWriter w(out);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.order));
  w.put<double>(cfg_.delta);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg_.window));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg_.format));
  std::vector<std::uint64_t> keys;
  keys.reserve(nodes_.size());
  for (const auto& kv : nodes_) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  w.put<std::uint64_t>(keys.size());
  for (std::uint64_t key : keys) {
    const Node& node = nodes_.at(key);
    w.put<std::uint64_t>(key);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(node.next.size()));
    for (const auto& [t, c] : node.next) {
      w.put<std::uint16_t>(t);
      w.put<std::uint64_t>(c);
    }
  }
}

std::unique_ptr<NGramModel> NGramModel::read_body(detail::ByteReader& in) {
  NGramConfig cfg;
  cfg.order = in.get<std::uint32_t>();
  cfg.delta = in.get<double>();
  cfg.window = in.get<std::uint32_t>();
  const auto format = in.get<std::uint8_t>();
  if (format != 1 && format != 2) throw DataError("checkpoint has unknown rule format");
  cfg.format = static_cast<RuleFormat>(format);
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("checkpoint has invalid n-gram config: ") + e.what());
  }
  auto model = std::make_unique<NGramModel>(cfg);
  const auto n = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto key = in.get<std::uint64_t>();
    const auto m = in.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < m; ++k) {
      const auto t = in.get<std::uint16_t>();
      const auto c = in.get<std::uint64_t>();
      if (t >= kVocabSize) throw DataError("checkpoint has token id out of range");
      model->bump(key, t, c);
    }
  }
  return model;
}

bool NGramModel::operator==(const NGramModel& other) const {
  if (cfg_.order != other.cfg_.order || cfg_.delta != other.cfg_.delta || cfg_.window != other.cfg_.window ||
      cfg_.format != other.cfg_.format || nodes_.size() != other.nodes_.size()) {
    return false;
  }
  for (const auto& [key, node] : nodes_) {
    const auto it = other.nodes_.find(key);
    if (it == other.nodes_.end() || it->second.total != node.total || it->second.next != node.next) return false;
  }
  return true;
}

NGramModel train_ngram(const Corpus& corpus, std::size_t order, NGramConfig cfg) {
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  cfg.order = order;
  NGramModel model(cfg);
  for (const std::string& pw : corpus.passwords) {
    model.add_sequence(encode_rule(pw, cfg.format, cfg.window).tokens());
  }
  return model;
}

}  // namespace pagpass
