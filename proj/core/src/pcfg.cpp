#include "pagpass/pcfg.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "pagpass/error.hpp"

namespace pagpass {

char class_symbol(CharClass c) {
  switch (c) {
    case CharClass::kLetter: return 'L';
    case CharClass::kNumber: return 'N';
    case CharClass::kSpecial: return 'S';
  }
  return '?';
}

std::uint64_t class_size(CharClass c) {
  switch (c) {
    case CharClass::kLetter: return 52;
    case CharClass::kNumber: return 10;
    case CharClass::kSpecial: return 32;
  }
  return 0;
}

std::optional<CharClass> classify_char(char c) {
  if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z')) return CharClass::kLetter;
  if (c >= '0' && c <= '9') return CharClass::kNumber;
  if (c >= 33 && c <= 126) return CharClass::kSpecial;
  return std::nullopt;
}

Pattern::Pattern(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw InvalidArgument("pattern must have at least one segment");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (s.length < 1 || s.length > kMaxSegmentLength) {
      throw InvalidArgument("pattern segment length must be in [1, 12]");
    }
    if (i > 0 && segments_[i - 1].cls == s.cls) {
      throw InvalidArgument("adjacent pattern segments must differ in class");
    }
    total_length_ += s.length;
  }
}

Pattern Pattern::parse(std::string_view text) {
  std::vector<Segment> segments;
  std::size_t i = 0;
  while (i < text.size()) {
    CharClass cls;
    switch (text[i]) {
      case 'L': cls = CharClass::kLetter; break;
      case 'N': cls = CharClass::kNumber; break;
      case 'S': cls = CharClass::kSpecial; break;
      default: throw InvalidArgument("bad pattern '" + std::string(text) + "'");
    }
    ++i;
    std::size_t length = 0;
    const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), length);
    if (ec != std::errc{} || ptr == text.data() + i) {
      throw InvalidArgument("bad pattern '" + std::string(text) + "'");
    }
    i = static_cast<std::size_t>(ptr - text.data());
    segments.push_back({cls, length});
  }
  return Pattern(std::move(segments));
}

CharClass Pattern::class_at(std::size_t position) const {
  std::size_t end = 0;
  for (const Segment& s : segments_) {
    end += s.length;
    if (position < end) return s.cls;
  }
  throw InvalidArgument("position " + std::to_string(position) + " outside pattern " + str());
}

std::string Pattern::str() const {
  std::string out;
  for (const Segment& s : segments_) {
    out += class_symbol(s.cls);
    out += std::to_string(s.length);
  }
  return out;
}

Pattern extract_pattern(std::string_view password) {
  if (password.empty()) throw InvalidArgument("cannot extract the pattern of an empty password");
  std::vector<Segment> segments;
  for (char c : password) {
    const auto cls = classify_char(c);
    if (!cls) throw InvalidArgument("unclassifiable character in password");
    if (!segments.empty() && segments.back().cls == *cls) {
      ++segments.back().length;
    } else {
      segments.push_back({*cls, 1});
    }
  }
  return Pattern(std::move(segments));
}

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) return kSpaceSizeSaturation;
  return r;
}

}  // namespace

std::uint64_t suffix_space_size(const Pattern& p, std::size_t from) {
  std::uint64_t size = 1;
  std::size_t start = 0;
  for (const Segment& s : p.segments()) {
    const std::size_t end = start + s.length;
    for (std::size_t pos = std::max(start, from); pos < end; ++pos) size = saturating_mul(size, class_size(s.cls));
    start = end;
  }
  return size;
}

std::uint64_t pattern_space_size(const Pattern& p) { return suffix_space_size(p, 0); }

void PatternDistribution::add(const Pattern& p, std::uint64_t count) {
  if (count == 0) return;
  counts_[p] += count;
  total_ += count;
}

void PatternDistribution::merge(const PatternDistribution& other) {
  for (const auto& [p, c] : other.counts_) add(p, c);
}

std::uint64_t PatternDistribution::count(const Pattern& p) const {
  const auto it = counts_.find(p);
  return it == counts_.end() ? 0 : it->second;
}

double PatternDistribution::probability(const Pattern& p) const {
  return total_ == 0 ? 0.0 : static_cast<double>(count(p)) / static_cast<double>(total_);
}

std::vector<PatternDistribution::Entry> PatternDistribution::ranked() const {
  std::vector<std::pair<std::string, const std::pair<const Pattern, std::uint64_t>*>> keyed;
  keyed.reserve(counts_.size());
  for (const auto& kv : counts_) keyed.emplace_back(kv.first.str(), &kv);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.second->second != b.second->second) return a.second->second > b.second->second;
    return a.first < b.first;
  });
  std::vector<Entry> out;
  out.reserve(keyed.size());
  for (const auto& [text, kv] : keyed) {
    out.push_back({kv->first, kv->second, static_cast<double>(kv->second) / static_cast<double>(total_)});
  }
  return out;
}

PatternDistribution build_distribution(const std::vector<std::string>& passwords) {
  if (passwords.empty()) throw DataError("cannot build a pattern distribution from an empty corpus");
  PatternDistribution dist;
  for (const std::string& pw : passwords) dist.add(extract_pattern(pw));
  return dist;
}

PatternDistribution build_distribution(const Corpus& corpus) { return build_distribution(corpus.passwords); }

void write_distribution(const PatternDistribution& dist, std::ostream& out) {
  for (const auto& e : dist.ranked()) out << e.pattern.str() << '\t' << e.count << '\n';
}

PatternDistribution read_distribution(std::istream& in) {
  PatternDistribution dist;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("distribution line " + std::to_string(line_no) + ": missing TAB");
    std::uint64_t count = 0;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    const auto [ptr, ec] = std::from_chars(first, last, count);
    if (ec != std::errc{} || ptr != last || count == 0) {
      throw DataError("distribution line " + std::to_string(line_no) + ": bad count");
    }
    try {
      dist.add(Pattern::parse(std::string_view(line).substr(0, tab)), count);
    } catch (const InvalidArgument& e) {
      throw DataError("distribution line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return dist;
}

PatternDistribution read_distribution(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_distribution(in);
}

}  // namespace pagpass
