#include "pagpass/apportion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pagpass/error.hpp"

namespace pagpass {

std::vector<std::uint64_t> apportion(std::uint64_t total, std::span<const double> weights) {
  std::vector<std::uint64_t> out(weights.size(), 0);
  long double weight_sum = 0.0L;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("apportion: weights must be finite and non-negative");
    weight_sum += w;
  }
  if (total == 0) return out;
  if (weight_sum <= 0.0L) throw InvalidArgument("apportion: all weights are zero");

  std::vector<long double> remainder(weights.size(), 0.0L);
  std::vector<std::size_t> candidates;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    const long double quota = static_cast<long double>(total) * weights[i] / weight_sum;
    auto whole = static_cast<std::uint64_t>(std::floor(quota));
    // Rounding can push a quota a hair above the true total.
    whole = std::min(whole, total - assigned);
    out[i] = whole;
    assigned += whole;
    remainder[i] = quota - static_cast<long double>(whole);
    candidates.push_back(i);
  }

  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return a < b;
  });
  std::uint64_t left = total - assigned;
  for (std::size_t k = 0; left > 0; k = (k + 1) % candidates.size(), --left) {
    ++out[candidates[k]];
  }
  return out;
}

std::vector<std::uint64_t> apportion_capped(std::uint64_t total, std::span<const double> weights,
                                            std::span<const std::uint64_t> caps) {
  if (caps.size() != weights.size()) throw InvalidArgument("apportion_capped: caps/weights size mismatch");
  std::uint64_t capacity = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) capacity += caps[i];
  }
  if (total > capacity) throw InvalidArgument("apportion_capped: total exceeds the sum of caps");

  std::vector<std::uint64_t> out(weights.size(), 0);
  std::vector<bool> pinned(weights.size(), false);
  std::uint64_t remaining = total;
  std::vector<double> active(weights.begin(), weights.end());
  while (remaining > 0) {
    const auto share = apportion(remaining, active);
    bool overflow = false;
    for (std::size_t i = 0; i < share.size(); ++i) {
      if (!pinned[i] && share[i] > caps[i]) {
        pinned[i] = true;
        active[i] = 0.0;
        out[i] = caps[i];
        remaining -= caps[i];
        overflow = true;
      }
    }
    if (!overflow) {
      for (std::size_t i = 0; i < share.size(); ++i) {
        if (!pinned[i]) out[i] = share[i];
      }
      break;
    }
  }
  return out;
}

}  // namespace pagpass
