#include "bench_data.hpp"

#include "pagpass/hash.hpp"

namespace pagpass::bench {

std::vector<std::string> passwords(std::size_t count) {
  static constexpr const char* kWords[] = {"love", "dragon", "monkey", "sunshine", "master", "shadow",
                                           "qwerty", "football", "baseball", "letmein", "abc", "tiger"};
  static constexpr char kSymbols[] = "!@#$.";
  Rng rng(42);
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    std::string pw = kWords[rng() % std::size(kWords)];
    if (rng() % 3 == 0) pw[0] = static_cast<char>(pw[0] - 'a' + 'A');
    const std::size_t digits = rng() % 5;
    for (std::size_t i = 0; i < digits; ++i) pw.push_back(static_cast<char>('0' + rng() % 10));
    if (rng() % 5 == 0) pw.push_back(kSymbols[rng() % 5]);
    if (pw.size() >= 4 && pw.size() <= 12) out.push_back(std::move(pw));
  }
  return out;
}

}  // namespace pagpass::bench
