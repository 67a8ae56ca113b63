#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pagpass {

struct AdamWConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay:
//   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
//   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps) + lr * wd * p
// Weight decay only touches entries whose decay mask is set.
class AdamW {
 public:
  AdamW(std::size_t size, AdamWConfig cfg, std::vector<bool> decay_mask = {});

  void step(std::span<double> params, std::span<const double> grads);

  std::uint64_t steps() const { return t_; }
  const AdamWConfig& config() const { return cfg_; }

 private:
  AdamWConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<bool> decay_;
  std::uint64_t t_ = 0;
};

}  // namespace pagpass
