#include "pagpass/tokenizer.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "pagpass/error.hpp"

namespace pagpass {

namespace {

constexpr TokenId kNumberPatternFirst = 5;
constexpr TokenId kLetterPatternFirst = 17;
constexpr TokenId kSpecialPatternFirst = 29;
constexpr TokenId kDigitFirst = 41;
constexpr TokenId kLetterFirst = 51;
constexpr TokenId kSymbolFirst = 103;

// Symbols in ascending ASCII order.
constexpr std::string_view kSymbols = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
static_assert(kSymbols.size() == 32);

TokenId pattern_block_first(CharClass cls) {
  switch (cls) {
    case CharClass::kNumber: return kNumberPatternFirst;
    case CharClass::kLetter: return kLetterPatternFirst;
    case CharClass::kSpecial: return kSpecialPatternFirst;
  }
  return 0;
}

}  // namespace

Vocabulary::Vocabulary() {
  tokens_[kBos] = "<BOS>";
  tokens_[kSep] = "<SEP>";
  tokens_[kEos] = "<EOS>";
  tokens_[kUnk] = "<UNK>";
  tokens_[kPad] = "<PAD>";
  for (CharClass cls : {CharClass::kNumber, CharClass::kLetter, CharClass::kSpecial}) {
    for (std::size_t len = kMaxSegmentLength; len >= 1; --len) {
      tokens_[pattern_token({cls, len})] = std::string(1, class_symbol(cls)) + std::to_string(len);
    }
  }
  for (char c = 33; c <= 126; ++c) tokens_[char_token(c)] = std::string(1, c);
}

std::string_view Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw InvalidArgument("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::id(std::string_view token) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == token) return static_cast<TokenId>(i);
  }
  return std::nullopt;
}

void Vocabulary::dump(std::ostream& out) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << i << '\t' << tokens_[i] << '\n';
}

const Vocabulary& vocabulary() {
  static const Vocabulary vocab;
  return vocab;
}

TokenKind classify_token(TokenId id) {
  if (id < kNumberPatternFirst) return TokenKind::kSpecial;
  if (id < kDigitFirst) return TokenKind::kPattern;
  if (id < kLetterFirst) return TokenKind::kDigit;
  if (id < kSymbolFirst) return TokenKind::kLetter;
  if (id < kVocabSize) return TokenKind::kSymbol;
  throw InvalidArgument("token id " + std::to_string(id) + " out of range");
}

TokenRange class_block(CharClass cls) {
  switch (cls) {
    case CharClass::kNumber: return {kDigitFirst, 10};
    case CharClass::kLetter: return {kLetterFirst, 52};
    case CharClass::kSpecial: return {kSymbolFirst, 32};
  }
  return {0, 0};
}

TokenId pattern_token(const Segment& segment) {
  if (segment.length < 1 || segment.length > kMaxSegmentLength) {
    throw InvalidArgument("segment length must be in [1, 12]");
  }
  return static_cast<TokenId>(pattern_block_first(segment.cls) + (kMaxSegmentLength - segment.length));
}

Segment token_segment(TokenId id) {
  if (id < kNumberPatternFirst || id >= kDigitFirst) {
    throw InvalidArgument("token id " + std::to_string(id) + " is not a pattern token");
  }
  const TokenId offset = id - kNumberPatternFirst;
  static constexpr CharClass kBlocks[3] = {CharClass::kNumber, CharClass::kLetter, CharClass::kSpecial};
  return {kBlocks[offset / kMaxSegmentLength], kMaxSegmentLength - offset % kMaxSegmentLength};
}

TokenId char_token(char c) {
  if (c >= '0' && c <= '9') return static_cast<TokenId>(kDigitFirst + (c - '0'));
  if (c >= 'A' && c <= 'Z') return static_cast<TokenId>(kLetterFirst + (c - 'A'));
  if (c >= 'a' && c <= 'z') return static_cast<TokenId>(kLetterFirst + 26 + (c - 'a'));
  const auto pos = kSymbols.find(c);
  if (pos == std::string_view::npos) throw InvalidArgument("character outside the vocabulary");
  return static_cast<TokenId>(kSymbolFirst + pos);
}

char token_char(TokenId id) {
  if (id >= kDigitFirst && id < kLetterFirst) return static_cast<char>('0' + (id - kDigitFirst));
  if (id >= kLetterFirst && id < kLetterFirst + 26) return static_cast<char>('A' + (id - kLetterFirst));
  if (id >= kLetterFirst + 26 && id < kSymbolFirst) return static_cast<char>('a' + (id - kLetterFirst - 26));
  if (id >= kSymbolFirst && id < kVocabSize) return kSymbols[id - kSymbolFirst];
  throw InvalidArgument("token id " + std::to_string(id) + " is not a character token");
}

namespace {

EncodedRule finish(std::vector<TokenId> ids, std::size_t window) {
  if (ids.size() > window) {
    throw InvalidArgument("rule needs " + std::to_string(ids.size()) + " tokens, window is " +
                          std::to_string(window));
  }
  EncodedRule rule;
  rule.length = ids.size();
  ids.resize(window, kPad);
  rule.ids = std::move(ids);
  return rule;
}

}  // namespace

EncodedRule encode_rule(const Pattern& pattern, std::string_view password, std::size_t window) {
  if (extract_pattern(password) != pattern) {
    throw InvalidArgument("password does not conform to pattern " + pattern.str());
  }
  std::vector<TokenId> ids = encode_prompt(pattern);
  for (char c : password) ids.push_back(char_token(c));
  ids.push_back(kEos);
  return finish(std::move(ids), window);
}

EncodedRule encode_rule(std::string_view password, RuleFormat format, std::size_t window) {
  if (format == RuleFormat::kPatternPrefixed) return encode_rule(extract_pattern(password), password, window);
  if (password.empty()) throw InvalidArgument("cannot encode an empty password");
  std::vector<TokenId> ids{kBos};
  for (char c : password) ids.push_back(char_token(c));
  ids.push_back(kEos);
  return finish(std::move(ids), window);
}

std::vector<TokenId> encode_prompt(const Pattern& pattern) {
  std::vector<TokenId> ids{kBos};
  for (const Segment& s : pattern.segments()) ids.push_back(pattern_token(s));
  ids.push_back(kSep);
  return ids;
}

namespace {

bool is_char_token(TokenId id) { return id >= kDigitFirst && id < kVocabSize; }

// Reads character tokens from `pos` up to <EOS> and checks the tail is
// padding only. Returns the password.
std::string decode_password_section(std::span<const TokenId> ids, std::size_t pos) {
  std::string password;
  for (;; ++pos) {
    if (pos == ids.size()) throw DecodeError(pos, "missing <EOS>");
    const TokenId t = ids[pos];
    if (t >= kVocabSize) throw DecodeError(pos, "token id out of range");
    if (t == kEos) break;
    if (t == kUnk) throw DecodeError(pos, "<UNK> in sequence");
    if (!is_char_token(t)) throw DecodeError(pos, "expected a character token or <EOS>");
    password.push_back(token_char(t));
  }
  if (password.empty()) throw DecodeError(pos, "empty password");
  for (std::size_t i = pos + 1; i < ids.size(); ++i) {
    if (ids[i] != kPad) throw DecodeError(i, "only <PAD> may follow <EOS>");
  }
  return password;
}

}  // namespace

DecodedRule decode(std::span<const TokenId> ids) {
  if (ids.empty() || ids[0] != kBos) throw DecodeError(0, "expected <BOS>");
  std::vector<Segment> segments;
  std::size_t pos = 1;
  for (;; ++pos) {
    if (pos == ids.size()) throw DecodeError(pos, "missing <SEP>");
    const TokenId t = ids[pos];
    if (t >= kVocabSize) throw DecodeError(pos, "token id out of range");
    if (t == kSep) break;
    if (t == kUnk) throw DecodeError(pos, "<UNK> in sequence");
    if (classify_token(t) != TokenKind::kPattern) throw DecodeError(pos, "expected a pattern token or <SEP>");
    const Segment s = token_segment(t);
    if (!segments.empty() && segments.back().cls == s.cls) {
      throw DecodeError(pos, "adjacent pattern segments share a class");
    }
    segments.push_back(s);
  }
  if (segments.empty()) throw DecodeError(pos, "empty pattern");
  const std::size_t sep = pos;
  Pattern pattern(std::move(segments));
  std::string password = decode_password_section(ids, sep + 1);

  const std::size_t n = std::min(password.size(), pattern.total_length());
  for (std::size_t i = 0; i < n; ++i) {
    if (classify_char(password[i]) != pattern.class_at(i)) {
      throw DecodeError(sep + 1 + i, "character does not match pattern " + pattern.str());
    }
  }
  if (password.size() != pattern.total_length()) {
    throw DecodeError(sep + 1 + n, "password length does not match pattern " + pattern.str());
  }
  return {std::move(pattern), std::move(password)};
}

std::string decode_password_only(std::span<const TokenId> ids) {
  if (ids.empty() || ids[0] != kBos) throw DecodeError(0, "expected <BOS>");
  return decode_password_section(ids, 1);
}

void write_encoded(std::ostream& out, std::span<const EncodedRule> rules, RuleFormat format,
                   std::size_t window) {
  out << "PAGPASS-TOKENS 1 " << static_cast<int>(format) << ' ' << window << ' ' << rules.size() << '\n';
  for (const EncodedRule& r : rules) {
    for (std::size_t i = 0; i < r.length; ++i) out << (i ? " " : "") << r.ids[i];
    out << '\n';
  }
}

EncodedCorpus read_encoded(std::istream& in) {
  std::string magic;
  int version = 0, format = 0;
  std::size_t window = 0, count = 0;
  if (!(in >> magic >> version >> format >> window >> count) || magic != "PAGPASS-TOKENS") {
    throw DataError("not an encoded corpus");
  }
  if (version != 1) throw DataError("unsupported encoded corpus version " + std::to_string(version));
  if (format != 1 && format != 2) throw DataError("unknown rule format");
  EncodedCorpus corpus;
  corpus.format = static_cast<RuleFormat>(format);
  corpus.window = window;
  std::string line;
  std::getline(in, line);
  while (corpus.rules.size() < count && std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<TokenId> ids;
    unsigned v = 0;
    while (ls >> v) {
      if (v >= kVocabSize) throw DataError("token id out of range in encoded corpus");
      ids.push_back(static_cast<TokenId>(v));
    }
    if (ids.size() > window) throw DataError("encoded rule longer than window");
    EncodedRule rule;
    rule.length = ids.size();
    ids.resize(window, kPad);
    rule.ids = std::move(ids);
    corpus.rules.push_back(std::move(rule));
  }
  if (corpus.rules.size() != count) throw DataError("encoded corpus truncated");
  return corpus;
}

}  // namespace pagpass
