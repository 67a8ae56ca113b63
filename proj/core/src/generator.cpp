#include "pagpass/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "pagpass/apportion.hpp"
#include "pagpass/corpus.hpp"
#include "pagpass/error.hpp"

namespace pagpass {

namespace {

// Runs fn(begin, end) over `workers` contiguous slices of [0, n).
template <class Fn>
void parallel_slices(std::uint64_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min<std::uint64_t>(workers, std::max<std::uint64_t>(n, 1)));
  if (workers == 1) {
    fn(std::uint64_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::uint64_t begin = n * w / workers;
      const std::uint64_t end = n * (w + 1) / workers;
      threads.emplace_back([&, w, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double weight(double p, double inv_temperature) {
  return inv_temperature == 1.0 ? p : std::pow(p, inv_temperature);
}

std::vector<std::uint8_t> seed_bytes(std::span<const TokenId> prefix) {
  std::vector<std::uint8_t> bytes(prefix.size());
  for (std::size_t i = 0; i < prefix.size(); ++i) bytes[i] = static_cast<std::uint8_t>(prefix[i]);
  return bytes;
}

}  // namespace

void SamplingOptions::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InvalidArgument("temperature must be positive");
  if (workers == 0) throw InvalidArgument("worker count must be positive");
}

void GenConfig::validate() const {
  if (total < 1) throw InvalidArgument("total guess count N must be at least 1");
  if (threshold < 1) throw InvalidArgument("division threshold T must be at least 1");
  SamplingOptions{temperature, workers}.validate();
}

TokenId sample_token(std::span<const double> dist, TokenId first, std::size_t count, double temperature, Rng& rng,
                     bool* fell_back) {
  const double inv_t = 1.0 / temperature;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += weight(dist[first + i], inv_t);
  if (fell_back) *fell_back = false;
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    if (fell_back) *fell_back = true;
    return static_cast<TokenId>(first + rng() % count);
  }
  double u = rng.next_unit() * sum;
  for (std::size_t i = 0; i < count; ++i) {
    u -= weight(dist[first + i], inv_t);
    if (u < 0.0) return static_cast<TokenId>(first + i);
  }
  // Rounding left a sliver of mass; take the last token with nonzero weight.
  for (std::size_t i = count; i-- > 0;) {
    if (dist[first + i] > 0.0) return static_cast<TokenId>(first + i);
  }
  return static_cast<TokenId>(first + count - 1);
}

std::string complete_guided(const DecodeSession& session, const Pattern& pattern, std::string_view filled,
                            double temperature, Rng& rng, std::uint64_t* fallbacks) {
  std::string out(filled);
  const std::size_t total = pattern.total_length();
  if (out.size() >= total) return out;
  auto s = session.clone();
  for (std::size_t pos = out.size(); pos < total; ++pos) {
    const TokenRange block = class_block(pattern.class_at(pos));
    bool fell_back = false;
    const TokenId t = sample_token(s->distribution(), block.first, block.count, temperature, rng, &fell_back);
    if (fell_back && fallbacks) ++*fallbacks;
    out.push_back(token_char(t));
    if (pos + 1 < total) s->push(t);
  }
  return out;
}

std::vector<std::string> sample_guided(const NextTokenModel& model, const Pattern& pattern, std::uint64_t n,
                                       std::uint64_t seed, const SamplingOptions& opts) {
  opts.validate();
  if (n < 1) throw InvalidArgument("sample count must be at least 1");
  const auto prompt = encode_prompt(pattern);
  if (prompt.size() + pattern.total_length() + 1 > model.window()) {
    throw InvalidArgument("pattern " + pattern.str() + " does not fit the model window");
  }
  const auto base = model.start(prompt);
  std::vector<std::string> out(n);
  parallel_slices(n, opts.workers, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Rng rng(mix_seed(seed, i));
      out[i] = complete_guided(*base, pattern, {}, opts.temperature, rng);
    }
  });
  return out;
}

namespace {

// One free-running draw. Returns false when the sequence is malformed.
bool draw_free(const DecodeSession& base, RuleFormat format, std::size_t window, double temperature, Rng& rng,
               std::string& out) {
  auto s = base.clone();
  std::vector<TokenId> seq{kBos};
  for (;;) {
    const TokenId t = sample_token(s->distribution(), 0, kVocabSize, temperature, rng);
    seq.push_back(t);
    if (t == kEos) break;
    if (t == kBos || t == kPad || t == kUnk) return false;
    if (seq.size() >= window) return false;
    s->push(t);
  }
  try {
    out = format == RuleFormat::kPatternPrefixed ? decode(seq).password : decode_password_only(seq);
  } catch (const DecodeError&) {
    return false;
  }
  // Outside the corpus length policy the string could never be a training rule.
  const CleanPolicy policy;
  return out.size() >= policy.min_len && out.size() <= policy.max_len;
}

}  // namespace

FreeSampleResult sample_free(const NextTokenModel& model, std::uint64_t n, std::uint64_t seed,
                             const SamplingOptions& opts) {
  opts.validate();
  if (n < 1) throw InvalidArgument("sample count must be at least 1");
  const std::vector<TokenId> bos{kBos};
  const auto base = model.start(bos);
  const std::uint64_t chunks = (n + kFreeSampleChunk - 1) / kFreeSampleChunk;

  FreeSampleResult result;
  result.passwords.resize(n);
  std::vector<std::uint64_t> chunk_attempts(chunks, 0), chunk_malformed(chunks, 0);
  std::atomic<std::uint64_t> next_chunk{0};
  std::atomic<bool> abort{false};

  parallel_slices(opts.workers, opts.workers, [&](std::uint64_t, std::uint64_t) {
    for (std::uint64_t c; !abort && (c = next_chunk++) < chunks;) {
      const std::uint64_t begin = c * kFreeSampleChunk;
      const std::uint64_t end = std::min<std::uint64_t>(n, begin + kFreeSampleChunk);
      for (std::uint64_t i = begin; i < end; ++i) {
        Rng rng(mix_seed(seed, i));
        std::size_t tries = 0;
        while (!draw_free(*base, model.format(), model.window(), opts.temperature, rng, result.passwords[i])) {
          ++chunk_malformed[c];
          if (++tries >= kFreeSampleMaxAttempts) {
            abort = true;
            throw NumericError("free sampling: slot " + std::to_string(i) + " produced " +
                               std::to_string(tries) + " malformed sequences in a row; the model is unusable");
          }
        }
        chunk_attempts[c] += tries + 1;
      }
      if (2 * chunk_malformed[c] > chunk_attempts[c]) {
        abort = true;
        throw NumericError("free sampling: " + std::to_string(chunk_malformed[c]) + " of " +
                           std::to_string(chunk_attempts[c]) +
                           " sequences in a chunk were malformed; the model is unusable");
      }
    }
  });
  for (std::uint64_t c = 0; c < chunks; ++c) {
    result.attempts += chunk_attempts[c];
    result.malformed += chunk_malformed[c];
  }
  return result;
}

namespace {

struct Task {
  std::size_t pattern_index;
  std::vector<TokenId> prefix;
  std::string filled;
  std::uint64_t count;
};

struct LeafOutput {
  std::size_t pattern_index;
  std::vector<TokenId> prefix;
  std::vector<std::string> passwords;
};

class TaskRunner {
 public:
  TaskRunner(const NextTokenModel& model, const std::vector<PatternBudget>& patterns, const GenConfig& cfg)
      : model_(model), patterns_(patterns), cfg_(cfg) {}

  void run(std::deque<Task> roots) {
    queue_ = std::move(roots);
    pending_ = queue_.size();
    if (pending_ == 0) return;
    {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < cfg_.workers; ++w) threads.emplace_back([this] { work(); });
    }
    if (error_) std::rethrow_exception(error_);
  }

  std::vector<LeafOutput> leaves;
  std::vector<TaskRecord> records;
  std::uint64_t expanded = 0;
  std::uint64_t fallbacks = 0;

 private:
  void work() {
    for (;;) {
      Task task;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !queue_.empty() || pending_ == 0 || error_; });
        if (queue_.empty() || error_) return;
        task = std::move(queue_.front());
        queue_.pop_front();
      }
      std::vector<Task> children;
      try {
        process(task, children);
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
        cv_.notify_all();
        return;
      }
      std::lock_guard lock(mu_);
      for (Task& c : children) queue_.push_back(std::move(c));
      pending_ += children.size();
      --pending_;
      cv_.notify_all();
    }
  }

  void process(const Task& task, std::vector<Task>& children) {
    const Pattern& pattern = patterns_[task.pattern_index].pattern;
    auto session = model_.start(task.prefix);
    TaskRecord record{task.pattern_index, task.prefix, task.count, task.count <= cfg_.threshold, 0, 0};

    if (record.leaf) {
      LeafOutput leaf{task.pattern_index, task.prefix, {}};
      leaf.passwords.reserve(task.count);
      Rng rng(mix_seed(cfg_.seed, seed_bytes(task.prefix)));
      std::uint64_t local_fallbacks = 0;
      for (std::uint64_t i = 0; i < task.count; ++i) {
        leaf.passwords.push_back(complete_guided(*session, pattern, task.filled, cfg_.temperature, rng,
                                                 &local_fallbacks));
      }
      std::lock_guard lock(mu_);
      leaves.push_back(std::move(leaf));
      fallbacks += local_fallbacks;
      if (cfg_.record_tasks) records.push_back(std::move(record));
      return;
    }

    const std::size_t pos = task.filled.size();
    const TokenRange block = class_block(pattern.class_at(pos));
    const auto dist = session->distribution();
    const double inv_t = 1.0 / cfg_.temperature;
    std::vector<double> weights(block.count);
    for (std::size_t i = 0; i < block.count; ++i) {
      const double w = weight(dist[block.first + i], inv_t);
      // Underflowed probabilities still need a share of the capacity.
      weights[i] = std::isfinite(w) && w > 0.0 ? w : std::numeric_limits<double>::min();
    }
    const std::vector<std::uint64_t> caps(block.count, suffix_space_size(pattern, pos + 1));
    const auto counts = apportion_capped(task.count, weights, caps);
    for (std::size_t i = 0; i < block.count; ++i) {
      if (counts[i] == 0) continue;
      const auto t = static_cast<TokenId>(block.first + i);
      Task child{task.pattern_index, task.prefix, task.filled, counts[i]};
      child.prefix.push_back(t);
      child.filled.push_back(token_char(t));
      children.push_back(std::move(child));
      record.children_total += counts[i];
      ++record.children;
    }
    std::lock_guard lock(mu_);
    ++expanded;
    if (cfg_.record_tasks) records.push_back(std::move(record));
  }

  const NextTokenModel& model_;
  const std::vector<PatternBudget>& patterns_;
  const GenConfig& cfg_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Task> queue_;
  std::size_t pending_ = 0;
  std::exception_ptr error_;
};

}  // namespace

DcgenResult dcgen(const NextTokenModel& model, const PatternDistribution& dist, const GenConfig& cfg) {
  cfg.validate();
  if (dist.empty()) throw InvalidArgument("pattern distribution is empty");
  if (model.format() != RuleFormat::kPatternPrefixed) {
    throw InvalidArgument("D&C generation needs a pattern-prefixed model");
  }

  DcgenResult result;
  DcgenReport& report = result.report;
  report.requested = cfg.total;
  report.threshold = cfg.threshold;
  report.seed = cfg.seed;

  const auto ranked = dist.ranked();
  std::vector<double> probs;
  probs.reserve(ranked.size());
  for (const auto& e : ranked) probs.push_back(e.probability);
  const auto shares = apportion(cfg.total, probs);

  std::deque<Task> roots;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    PatternBudget b{ranked[i].pattern, ranked[i].probability, shares[i], 0, 0};
    b.budget = std::min(shares[i], pattern_space_size(b.pattern));
    report.cap_reduction += b.apportioned - b.budget;
    if (b.budget > 0) {
      auto prompt = encode_prompt(b.pattern);
      if (prompt.size() + b.pattern.total_length() + 1 > model.window()) {
        throw InvalidArgument("pattern " + b.pattern.str() + " does not fit the model window");
      }
      roots.push_back({i, std::move(prompt), {}, b.budget});
    }
    report.patterns.push_back(std::move(b));
  }

  TaskRunner runner(model, report.patterns, cfg);
  runner.run(std::move(roots));

  auto by_prefix = [](const auto& a, const auto& b) {
    if (a.pattern_index != b.pattern_index) return a.pattern_index < b.pattern_index;
    return a.prefix < b.prefix;
  };
  std::sort(runner.leaves.begin(), runner.leaves.end(), by_prefix);
  std::sort(runner.records.begin(), runner.records.end(), by_prefix);

  std::size_t total = 0;
  for (const auto& leaf : runner.leaves) total += leaf.passwords.size();
  result.passwords.reserve(total);
  std::unordered_map<std::string_view, std::size_t> owner;
  owner.reserve(total);
  for (std::size_t li = 0; li < runner.leaves.size(); ++li) {
    const LeafOutput& leaf = runner.leaves[li];
    report.patterns[leaf.pattern_index].generated += leaf.passwords.size();
    for (const std::string& pw : leaf.passwords) {
      const auto [it, inserted] = owner.emplace(pw, li);
      if (!inserted && it->second != li) ++report.cross_leaf_duplicates;
    }
  }
  for (auto& leaf : runner.leaves) {
    for (auto& pw : leaf.passwords) result.passwords.push_back(std::move(pw));
  }

  report.tasks_expanded = runner.expanded;
  report.leaves_executed = runner.leaves.size();
  report.generated = result.passwords.size();
  report.unique = owner.size();
  report.duplicates = report.generated - report.unique;
  report.sampling_fallbacks = runner.fallbacks;
  report.tasks = std::move(runner.records);
  return result;
}

}  // namespace pagpass
