#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pagpass/pcfg.hpp"

namespace pagpass {

using TokenId = std::uint16_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kSep = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kPad = 4;
inline constexpr std::size_t kVocabSize = 135;
inline constexpr std::size_t kDefaultWindow = 32;

// Layout of the fixed vocabulary:
//   0..4     <BOS> <SEP> <EOS> <UNK> <PAD>
//   5..16    N12 .. N1
//   17..28   L12 .. L1
//   29..40   S12 .. S1
//   41..50   '0'..'9'
//   51..102  'A'..'Z' 'a'..'z'
//   103..134 the 32 remaining visible ASCII characters, ascending
// Each character class occupies one contiguous block.
class Vocabulary {
 public:
  Vocabulary();

  std::size_t size() const { return tokens_.size(); }
  // Throws InvalidArgument for id >= size().
  std::string_view token(TokenId id) const;
  std::optional<TokenId> id(std::string_view token) const;

  // One "ID<TAB>TOKEN" line per entry.
  void dump(std::ostream& out) const;

 private:
  std::array<std::string, kVocabSize> tokens_;
};

const Vocabulary& vocabulary();

enum class TokenKind : std::uint8_t { kSpecial, kPattern, kLetter, kDigit, kSymbol };

// Throws InvalidArgument for id >= 135.
TokenKind classify_token(TokenId id);

struct TokenRange {
  TokenId first;
  TokenId count;

  bool contains(TokenId id) const { return id >= first && id < first + count; }
};

// The contiguous block of character tokens for a class.
TokenRange class_block(CharClass cls);

TokenId pattern_token(const Segment& segment);
Segment token_segment(TokenId id);  // throws unless classify_token(id) == kPattern
TokenId char_token(char c);         // throws for characters outside 33..126
char token_char(TokenId id);        // throws unless id is a character token

// Whether training sequences carry the pattern prefix. kPasswordOnly is the
// pattern-agnostic control: <BOS> password <EOS>.
enum class RuleFormat : std::uint8_t { kPatternPrefixed = 1, kPasswordOnly = 2 };

struct EncodedRule {
  std::vector<TokenId> ids;  // padded with <PAD> to the window
  std::size_t length = 0;    // tokens up to and including <EOS>

  std::span<const TokenId> tokens() const { return {ids.data(), length}; }
};

// [<BOS>, pattern tokens..., <SEP>, characters..., <EOS>, <PAD>...]. Throws
// InvalidArgument if extract_pattern(password) != pattern or the rule does
// not fit the window.
EncodedRule encode_rule(const Pattern& pattern, std::string_view password,
                        std::size_t window = kDefaultWindow);
EncodedRule encode_rule(std::string_view password, RuleFormat format = RuleFormat::kPatternPrefixed,
                        std::size_t window = kDefaultWindow);

// [<BOS>, pattern tokens..., <SEP>], unpadded.
std::vector<TokenId> encode_prompt(const Pattern& pattern);

struct DecodedRule {
  Pattern pattern;
  std::string password;
};

// Inverse of encode_rule. Padding after <EOS> is accepted. Throws
// DecodeError naming the first offending position for a missing <SEP> or
// <EOS>, a token in the wrong section, <UNK>, an out-of-range id, an empty
// pattern or password, or a password that does not match its pattern.
DecodedRule decode(std::span<const TokenId> ids);
// Inverse of the kPasswordOnly encoding.
std::string decode_password_only(std::span<const TokenId> ids);

// Versioned text container for encoded corpora: a header line
// "PAGPASS-TOKENS 1 <format> <window> <count>" followed by one line of
// space-separated ids per rule (unpadded).
void write_encoded(std::ostream& out, std::span<const EncodedRule> rules, RuleFormat format,
                   std::size_t window);
struct EncodedCorpus {
  RuleFormat format = RuleFormat::kPatternPrefixed;
  std::size_t window = kDefaultWindow;
  std::vector<EncodedRule> rules;
};
EncodedCorpus read_encoded(std::istream& in);

}  // namespace pagpass
