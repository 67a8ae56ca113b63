#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "pagpass/tokenizer.hpp"

namespace pagpass::testing {

// Brute-force count-and-smooth reference for the interpolated n-gram model.
// Re-scans every training sequence for each query; no shared code with the
// library beyond the token constants.
class NGramOracle {
 public:
  NGramOracle(std::size_t order, double delta) : order_(order), delta_(delta) {}

  void add(const std::vector<TokenId>& seq) { seqs_.push_back(seq); }

  std::array<double, kVocabSize> distribution(const std::vector<TokenId>& context) const {
    std::array<double, kVocabSize> p;
    p.fill(1.0 / kVocabSize);
    const std::size_t levels = std::min(order_, context.size() + 1);
    for (std::size_t j = 1; j <= levels; ++j) {
      const std::vector<TokenId> hist(context.end() - static_cast<std::ptrdiff_t>(j - 1), context.end());
      std::array<double, kVocabSize> counts{};
      double total = 0.0;
      for (const auto& s : seqs_) {
        for (std::size_t i = 1; i < s.size(); ++i) {
          if (i + 1 < j) continue;
          bool match = true;
          for (std::size_t k = 0; k < hist.size() && match; ++k) match = s[i - hist.size() + k] == hist[k];
          if (!match) continue;
          counts[s[i]] += 1.0;
          total += 1.0;
        }
      }
      if (total == 0.0) continue;
      std::array<double, kVocabSize> next;
      for (std::size_t w = 0; w < kVocabSize; ++w) next[w] = (counts[w] + delta_ * p[w]) / (total + delta_);
      p = next;
    }
    return p;
  }

 private:
  std::size_t order_;
  double delta_;
  std::vector<std::vector<TokenId>> seqs_;
};

}  // namespace pagpass::testing
