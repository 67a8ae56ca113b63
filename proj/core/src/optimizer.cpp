#include "pagpass/optimizer.hpp"

#include <cmath>

#include "pagpass/error.hpp"

namespace pagpass {

AdamW::AdamW(std::size_t size, AdamWConfig cfg, std::vector<bool> decay_mask)
    : cfg_(cfg), m_(size, 0.0), v_(size, 0.0), decay_(std::move(decay_mask)) {
  if (decay_.empty()) decay_.assign(size, true);
  if (decay_.size() != size) throw InvalidArgument("AdamW: decay mask size mismatch");
  if (!(cfg_.learning_rate > 0.0)) throw InvalidArgument("AdamW: learning rate must be positive");
}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw InvalidArgument("AdamW: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.learning_rate;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    const double update = (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.epsilon);
    const double decay = decay_[i] ? cfg_.weight_decay * params[i] : 0.0;
    params[i] -= lr * (update + decay);
  }
}

}  // namespace pagpass
