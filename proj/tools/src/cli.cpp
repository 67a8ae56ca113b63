#include "pagpass/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "pagpass/corpus.hpp"
#include "pagpass/error.hpp"
#include "pagpass/eval.hpp"
#include "pagpass/generator.hpp"
#include "pagpass/io.hpp"
#include "pagpass/model.hpp"
#include "pagpass/ngram.hpp"
#include "pagpass/pcfg.hpp"
#include "pagpass/transformer.hpp"

namespace pagpass::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Artifact plumbing

void require_input(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw DataError("input file not found: " + path);
}

void require_output(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec)) {
    throw DataError("output directory does not exist: " + parent.string());
  }
  if (fs::is_directory(path, ec)) throw DataError("output path is a directory: " + path);
}

// Provenance block embedded in (or written next to) every artifact. Contains
// no timestamps or host details so reruns are byte-identical.
struct Provenance {
  std::string command;
  std::optional<std::uint64_t> seed;
  Json inputs = Json::array();
  Json params = Json::object();

  void input(const std::string& role, const std::string& path) {
    inputs.push_back({{"role", role}, {"path", path}, {"fnv1a64", file_digest(path)}});
  }

  Json json() const {
    Json j{{"tool", "pagpass"}, {"version", tool_version()}, {"command", command}};
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    j["inputs"] = inputs;
    j["params"] = params;
    return j;
  }
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// Line-oriented artifacts keep their payload clean and carry provenance in a
// "<path>.meta.json" sidecar.
void write_artifact(const std::string& path, std::string_view content, const Provenance& prov) {
  write_file_atomic(path, content);
  write_file_atomic(path + ".meta.json", dump(prov.json()));
}

// JSON reports embed provenance under "meta". Written to `path`, or to `out`
// when no path was given.
void emit_report(const std::optional<std::string>& path, Json body, const Provenance& prov, std::ostream& out) {
  Json j{{"meta", prov.json()}};
  for (auto& [k, v] : body.items()) j[k] = std::move(v);
  if (path) {
    write_file_atomic(*path, dump(j));
  } else {
    out << dump(j);
  }
}

std::string format_double(double x) {
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

class Log {
 public:
  Log(std::ostream& err, int verbosity) : err_(err), verbosity_(verbosity) {}

  template <class... Args>
  void info(const Args&... args) const {
    if (verbosity_ < 1) return;
    (err_ << ... << args) << '\n';
  }

 private:
  std::ostream& err_;
  int verbosity_;
};

std::vector<std::string> read_passwords(const std::string& path) { return read_lines(path); }

// ---------------------------------------------------------------------------
// Options per subcommand

struct CleanOpts {
  std::string in, out;
  std::optional<std::string> report;
  std::size_t min_len = CleanPolicy{}.min_len;
  std::size_t max_len = CleanPolicy{}.max_len;
};

struct SplitOpts {
  std::string in, train, validation, test;
  std::vector<double> ratios{0.7, 0.1, 0.2};
  std::uint64_t seed = 0;
};

struct PatternsOpts {
  std::string in, out;
};

struct TrainOpts {
  std::string backend;
  std::string in, out;
  std::string format = "pattern";
  std::size_t window = kDefaultWindow;
  std::uint64_t seed = 0;
  // n-gram
  std::size_t order = NGramConfig{}.order;
  double delta = NGramConfig{}.delta;
  // transformer
  bool paper_scale = false;
  std::size_t embed = TransformerConfig{}.embed;
  std::size_t layers = TransformerConfig{}.layers;
  std::size_t heads = TransformerConfig{}.heads;
  double init_std = TransformerConfig{}.init_std;
  std::size_t batch = TrainConfig{}.batch_size;
  std::size_t epochs = TrainConfig{}.epochs;
  double lr = AdamWConfig{}.learning_rate;
  double weight_decay = AdamWConfig{}.weight_decay;
  std::optional<std::string> validation;
  std::optional<std::string> loss_csv;
};

struct GenerateOpts {
  std::string mode = "dcgen";
  std::string model, out;
  std::optional<std::string> patterns;
  std::optional<std::string> pattern;
  std::optional<std::string> report;
  std::uint64_t total = 0;
  std::uint64_t threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double temperature = 1.0;
  bool sorted = false;
  bool tasks = false;
};

struct EvalOpts {
  std::string generated, test, model;
  std::optional<std::string> out;
  std::optional<std::string> pattern;
  bool dedup = false;
  std::size_t top_k = kDefaultTopPatterns;
  std::size_t per_category = BenchmarkConfig{}.patterns_per_category;
  std::uint64_t guesses = BenchmarkConfig{}.guesses_per_pattern;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double temperature = 1.0;
  std::optional<std::string> csv;
};

struct ReportOpts {
  std::vector<std::string> models;
  std::string test, out;
  std::optional<std::string> patterns;
  std::optional<std::string> long_csv;
  std::vector<std::uint64_t> budgets;
  std::string mode = "auto";
  std::uint64_t threshold = kDefaultThreshold;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  double temperature = 1.0;
};

struct VocabOpts {
  std::optional<std::string> out;
};

// ---------------------------------------------------------------------------
// Stages

int do_clean(const CleanOpts& o, std::ostream& out) {
  require_input(o.in);
  require_output(o.out);
  if (o.report) require_output(*o.report);
  const CleanPolicy policy{o.min_len, o.max_len};
  policy.validate();

  const auto raw = read_lines(o.in);
  const auto result = clean(raw, policy, fs::path(o.in).filename().string());
  Provenance prov{"clean"};
  prov.input("raw", o.in);
  prov.params = {{"min_len", o.min_len}, {"max_len", o.max_len}};
  write_artifact(o.out, join_lines(result.corpus.passwords), prov);

  const auto& r = result.report;
  emit_report(o.report,
              {{"read", r.read},
               {"kept", r.kept},
               {"deduped", r.deduped},
               {"rejected_length", r.rejected_length},
               {"rejected_charset", r.rejected_charset}},
              prov, out);
  return kExitOk;
}

int do_split(const SplitOpts& o, std::ostream& out) {
  require_input(o.in);
  for (const auto* p : {&o.train, &o.validation, &o.test}) require_output(*p);
  if (o.ratios.size() != 3) throw InvalidArgument("--ratios needs exactly three values");
  const SplitSpec spec{{o.ratios[0], o.ratios[1], o.ratios[2]}, o.seed};
  spec.validate();

  const Corpus corpus = read_corpus(o.in);
  const CorpusSplit parts = split(corpus, spec);
  Provenance prov{"split", o.seed};
  prov.input("corpus", o.in);
  prov.params = {{"ratios", o.ratios}};
  const std::pair<const std::string*, const Corpus*> outputs[] = {
      {&o.train, &parts.train}, {&o.validation, &parts.validation}, {&o.test, &parts.test}};
  for (const auto& [path, part] : outputs) write_artifact(*path, join_lines(part->passwords), prov);
  out << "train " << parts.train.size() << "\nvalidation " << parts.validation.size() << "\ntest "
      << parts.test.size() << "\n";
  return kExitOk;
}

int do_patterns(const PatternsOpts& o, std::ostream& out) {
  require_input(o.in);
  require_output(o.out);
  const PatternDistribution dist = build_distribution(read_corpus(o.in));
  std::ostringstream tsv;
  write_distribution(dist, tsv);
  Provenance prov{"patterns"};
  prov.input("corpus", o.in);
  write_artifact(o.out, tsv.str(), prov);
  out << dist.size() << " patterns over " << dist.total() << " passwords\n";
  return kExitOk;
}

RuleFormat parse_format(const std::string& s) {
  if (s == "pattern") return RuleFormat::kPatternPrefixed;
  if (s == "password") return RuleFormat::kPasswordOnly;
  throw InvalidArgument("unknown rule format '" + s + "' (expected pattern or password)");
}

const char* format_name(RuleFormat f) { return f == RuleFormat::kPatternPrefixed ? "pattern" : "password"; }

std::vector<EncodedRule> encode_corpus(const Corpus& corpus, RuleFormat format, std::size_t window) {
  std::vector<EncodedRule> rules;
  rules.reserve(corpus.size());
  for (const auto& pw : corpus.passwords) rules.push_back(encode_rule(pw, format, window));
  return rules;
}

int do_train(const TrainOpts& o, std::ostream& out, const Log& log) {
  require_input(o.in);
  require_output(o.out);
  if (o.validation) require_input(*o.validation);
  if (o.loss_csv) require_output(*o.loss_csv);
  const RuleFormat format = parse_format(o.format);
  const Corpus corpus = read_corpus(o.in);
  if (corpus.empty()) throw DataError("training corpus is empty: " + o.in);

  Provenance prov{"train", o.seed};
  prov.input("train", o.in);
  if (o.validation) prov.input("validation", *o.validation);

  if (o.backend == "ngram") {
    NGramConfig cfg{o.order, o.delta, o.window, format};
    cfg.validate();
    prov.params = {{"backend", "ngram"}, {"format", o.format}, {"window", o.window},
                   {"order", o.order}, {"delta", o.delta}};
    NGramModel model = train_ngram(corpus, o.order, cfg);
    model.set_metadata(prov.json().dump());
    save_model(model, o.out);
    out << "n-gram order " << o.order << ": " << model.history_count() << " histories from " << corpus.size()
        << " passwords\n";
    return kExitOk;
  }
  if (o.backend != "transformer") throw InvalidArgument("unknown backend '" + o.backend + "'");

  TransformerConfig mcfg{o.embed, o.layers, o.heads, o.window, o.init_std, o.seed, format};
  TrainConfig tcfg;
  tcfg.batch_size = o.batch;
  tcfg.epochs = o.epochs;
  tcfg.optimizer.learning_rate = o.lr;
  tcfg.optimizer.weight_decay = o.weight_decay;
  tcfg.seed = o.seed;
  if (o.paper_scale) {
    const auto p = TransformerConfig::paper_scale();
    mcfg.embed = p.embed;
    mcfg.layers = p.layers;
    mcfg.heads = p.heads;
    tcfg.batch_size = TrainConfig::paper_scale().batch_size;
  }
  mcfg.validate();
  tcfg.validate();
  prov.params = {{"backend", "transformer"}, {"format", o.format},   {"window", mcfg.window},
                 {"embed", mcfg.embed},      {"layers", mcfg.layers}, {"heads", mcfg.heads},
                 {"init_std", mcfg.init_std}, {"batch", tcfg.batch_size}, {"epochs", tcfg.epochs},
                 {"lr", tcfg.optimizer.learning_rate}, {"weight_decay", tcfg.optimizer.weight_decay}};

  const auto rules = encode_corpus(corpus, format, mcfg.window);
  std::vector<EncodedRule> validation;
  if (o.validation) validation = encode_corpus(read_corpus(*o.validation), format, mcfg.window);

  TransformerModel model(mcfg);
  std::ostringstream csv;
  csv << (validation.empty() ? "epoch,train_loss\n" : "epoch,train_loss,validation_loss\n");
  const double baseline = unigram_cross_entropy(rules);
  log.info("transformer: ", model.parameter_count(), " parameters, unigram baseline ", baseline, " nats");
  const auto result = train_transformer(model, rules, tcfg, [&](std::size_t epoch, double loss) {
    csv << epoch << ',' << format_double(loss);
    if (!validation.empty()) csv << ',' << format_double(model.loss(validation));
    csv << '\n';
    log.info("epoch ", epoch, " loss ", loss);
  });
  model.set_metadata(prov.json().dump());
  save_model(model, o.out);
  if (o.loss_csv) write_artifact(*o.loss_csv, csv.str(), prov);
  out << "transformer: " << result.steps << " steps, final loss " << format_double(result.epoch_loss.back())
      << " (unigram baseline " << format_double(baseline) << ")\n";
  return kExitOk;
}

std::vector<std::string> dedup(std::vector<std::string> xs) {
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  return xs;
}

Json budgets_json(const DcgenReport& r) {
  Json a = Json::array();
  for (const auto& p : r.patterns) {
    a.push_back({{"pattern", p.pattern.str()},
                 {"probability", p.probability},
                 {"apportioned", p.apportioned},
                 {"budget", p.budget},
                 {"generated", p.generated}});
  }
  return a;
}

Json tasks_json(const DcgenReport& r) {
  Json a = Json::array();
  for (const auto& t : r.tasks) {
    std::string prefix;
    const std::size_t prompt = encode_prompt(r.patterns[t.pattern_index].pattern).size();
    for (std::size_t i = prompt; i < t.prefix.size(); ++i) prefix.push_back(token_char(t.prefix[i]));
    Json j{{"pattern", r.patterns[t.pattern_index].pattern.str()}, {"prefix", prefix}, {"count", t.count},
           {"leaf", t.leaf}};
    if (!t.leaf) j["children"] = t.children;
    a.push_back(std::move(j));
  }
  return a;
}

int do_generate(const GenerateOpts& o, std::ostream& out) {
  require_input(o.model);
  require_output(o.out);
  if (o.report) require_output(*o.report);
  if (o.mode == "dcgen") {
    if (!o.patterns) throw InvalidArgument("--mode dcgen needs --patterns");
    require_input(*o.patterns);
  } else if (o.mode == "guided") {
    if (!o.pattern) throw InvalidArgument("--mode guided needs --pattern");
  } else if (o.mode != "free") {
    throw InvalidArgument("unknown mode '" + o.mode + "'");
  }
  if (o.total < 1) throw InvalidArgument("-N must be at least 1");
  const SamplingOptions sampling{o.temperature, o.workers};
  sampling.validate();

  Provenance prov{"generate", o.seed};
  prov.input("model", o.model);
  if (o.mode == "dcgen") prov.input("patterns", *o.patterns);
  prov.params = {{"mode", o.mode}, {"N", o.total}, {"temperature", o.temperature}, {"sorted", o.sorted}};
  if (o.mode == "dcgen") prov.params["T"] = o.threshold;
  if (o.mode == "guided") prov.params["pattern"] = *o.pattern;

  const auto model = load_model(o.model);
  std::vector<std::string> passwords;
  Json report;
  if (o.mode == "dcgen") {
    const GenConfig cfg{o.total, o.threshold, o.seed, o.temperature, o.workers, o.tasks};
    auto res = dcgen(*model, read_distribution(fs::path(*o.patterns)), cfg);
    const auto& r = res.report;
    report = {{"requested", r.requested},
              {"threshold", r.threshold},
              {"tasks_expanded", r.tasks_expanded},
              {"leaves_executed", r.leaves_executed},
              {"generated", r.generated},
              {"unique", r.unique},
              {"duplicates", r.duplicates},
              {"cross_leaf_duplicates", r.cross_leaf_duplicates},
              {"cap_reduction", r.cap_reduction},
              {"malformed", r.malformed},
              {"sampling_fallbacks", r.sampling_fallbacks},
              {"patterns", budgets_json(r)}};
    if (o.tasks) report["tasks"] = tasks_json(r);
    passwords = std::move(res.passwords);
  } else if (o.mode == "guided") {
    passwords = sample_guided(*model, Pattern::parse(*o.pattern), o.total, o.seed, sampling);
    report = {{"generated", passwords.size()}};
  } else {
    auto res = sample_free(*model, o.total, o.seed, sampling);
    report = {{"generated", res.passwords.size()}, {"attempts", res.attempts}, {"malformed", res.malformed}};
    passwords = std::move(res.passwords);
  }
  if (o.mode != "dcgen") {
    report["unique"] = dedup(passwords).size();
  }
  if (o.sorted) std::sort(passwords.begin(), passwords.end());
  write_artifact(o.out, join_lines(passwords), prov);
  emit_report(o.report, std::move(report), prov, out);
  return kExitOk;
}

Json hit_json(const HitReport& h) {
  return {{"generated_total", h.generated_total},
          {"generated_unique", h.generated_unique},
          {"test_unique", h.test_unique},
          {"hits", h.hits},
          {"hit_rate", h.hit_rate}};
}

Json categories_json(const std::map<std::size_t, CategoryHits>& cats) {
  Json j = Json::object();
  for (const auto& [s, c] : cats) {
    j[std::to_string(s)] = {{"test_count", c.test_count}, {"hits", c.hits}, {"hit_rate", c.hit_rate}};
  }
  return j;
}

int do_eval_hit(const EvalOpts& o, std::ostream& out) {
  require_input(o.generated);
  require_input(o.test);
  if (o.out) require_output(*o.out);
  const auto gen = read_passwords(o.generated);
  const auto test = read_passwords(o.test);
  Provenance prov{"eval hit"};
  prov.input("generated", o.generated);
  prov.input("test", o.test);
  Json body{{"hit", hit_json(hit_rate(gen, test))}, {"by_segments", categories_json(hit_rate_by_segments(gen, test))}};
  if (o.pattern) {
    prov.params["pattern"] = *o.pattern;
    const auto hp = hit_rate_by_pattern(gen, test, Pattern::parse(*o.pattern));
    body["by_pattern"] = hp ? Json{{"pattern", *o.pattern}, {"test_count", hp->test_count}, {"hits", hp->hits},
                                   {"hit_rate", hp->hit_rate}}
                            : Json{{"pattern", *o.pattern}, {"test_count", 0}, {"hit_rate", nullptr}};
  }
  emit_report(o.out, std::move(body), prov, out);
  return kExitOk;
}

int do_eval_repeat(const EvalOpts& o, std::ostream& out) {
  require_input(o.generated);
  if (o.out) require_output(*o.out);
  const auto gen = read_passwords(o.generated);
  Provenance prov{"eval repeat"};
  prov.input("generated", o.generated);
  const double rr = repeat_rate(gen);
  emit_report(o.out, {{"total", gen.size()}, {"unique", dedup(gen).size()}, {"repeat_rate", rr}}, prov, out);
  return kExitOk;
}

int do_eval_distance(const EvalOpts& o, std::ostream& out) {
  require_input(o.generated);
  require_input(o.test);
  if (o.out) require_output(*o.out);
  auto gen = read_passwords(o.generated);
  auto test = read_passwords(o.test);
  if (o.dedup) {
    gen = dedup(std::move(gen));
    test = dedup(std::move(test));
  }
  Provenance prov{"eval distance"};
  prov.input("generated", o.generated);
  prov.input("test", o.test);
  prov.params = {{"top_k", o.top_k}, {"dedup", o.dedup}};
  const auto r = distance_report(gen, test, o.top_k);
  Json lengths = Json::array();
  for (std::size_t i = 0; i < r.length_test.size(); ++i) {
    lengths.push_back({{"length", kMinTrackedLength + i}, {"test", r.length_test[i]},
                       {"generated", r.length_generated[i]}});
  }
  Json patterns = Json::array();
  for (const auto& s : r.patterns) {
    patterns.push_back({{"pattern", s.pattern.str()}, {"test", s.test_probability},
                        {"generated", s.generated_probability}});
  }
  emit_report(o.out,
              {{"length_distance", r.length},
               {"pattern_distance", r.pattern},
               {"lengths", lengths},
               {"patterns", patterns}},
              prov, out);
  return kExitOk;
}

int do_eval_benchmark(const EvalOpts& o, std::ostream& out) {
  require_input(o.model);
  require_input(o.test);
  if (o.out) require_output(*o.out);
  if (o.csv) require_output(*o.csv);
  const BenchmarkConfig cfg{o.per_category, o.guesses, o.seed, {o.temperature, o.workers}};
  cfg.sampling.validate();
  Provenance prov{"eval benchmark", o.seed};
  prov.input("model", o.model);
  prov.input("test", o.test);
  prov.params = {{"patterns_per_category", o.per_category}, {"guesses_per_pattern", o.guesses},
                 {"temperature", o.temperature}};
  const auto model = load_model(o.model);
  const auto r = pattern_guided_benchmark(*model, read_passwords(o.test), cfg);

  Json patterns = Json::array();
  std::ostringstream csv;
  csv << "segments,pattern,test_count,hits,hit_rate,repeat_rate\n";
  for (const auto& p : r.patterns) {
    patterns.push_back({{"segments", p.segments}, {"pattern", p.pattern.str()}, {"test_count", p.test_count},
                        {"hits", p.hits}, {"hit_rate", p.hit_rate}, {"repeat_rate", p.repeat_rate}});
    csv << p.segments << ',' << p.pattern.str() << ',' << p.test_count << ',' << p.hits << ','
        << format_double(p.hit_rate) << ',' << format_double(p.repeat_rate) << '\n';
  }
  if (o.csv) write_artifact(*o.csv, csv.str(), prov);
  emit_report(o.out, {{"categories", categories_json(r.categories)}, {"patterns", patterns}}, prov, out);
  return kExitOk;
}

int do_report(const ReportOpts& o, std::ostream& out) {
  if (o.models.empty()) throw InvalidArgument("report needs at least one --model");
  if (o.budgets.empty()) throw InvalidArgument("report needs at least one budget");
  for (const auto& m : o.models) require_input(m);
  require_input(o.test);
  require_output(o.out);
  if (o.long_csv) require_output(*o.long_csv);
  if (o.patterns) require_input(*o.patterns);
  if (o.mode != "auto" && o.mode != "dcgen" && o.mode != "free") {
    throw InvalidArgument("unknown mode '" + o.mode + "'");
  }
  const SamplingOptions sampling{o.temperature, o.workers};
  sampling.validate();

  Provenance prov{"report", o.seed};
  for (const auto& m : o.models) prov.input("model", m);
  prov.input("test", o.test);
  if (o.patterns) prov.input("patterns", *o.patterns);
  prov.params = {{"mode", o.mode}, {"budgets", o.budgets}, {"T", o.threshold}, {"temperature", o.temperature}};

  const auto test = read_passwords(o.test);
  std::optional<PatternDistribution> dist;
  if (o.patterns) dist = read_distribution(fs::path(*o.patterns));

  std::ostringstream grid, longform;
  grid << "model,mode";
  for (auto b : o.budgets) grid << ',' << b;
  grid << '\n';
  longform << "model,mode,budget,generated,unique,hits,hit_rate,repeat_rate\n";
  for (const auto& path : o.models) {
    const auto model = load_model(path);
    std::string mode = o.mode;
    if (mode == "auto") mode = model->format() == RuleFormat::kPatternPrefixed && dist ? "dcgen" : "free";
    if (mode == "dcgen" && !dist) throw InvalidArgument("dcgen rows need --patterns");
    const std::string name = fs::path(path).stem().string();
    grid << name << ',' << mode;
    for (auto budget : o.budgets) {
      std::vector<std::string> guesses =
          mode == "dcgen" ? dcgen(*model, *dist, GenConfig{budget, o.threshold, o.seed, o.temperature, o.workers})
                                .passwords
                          : sample_free(*model, budget, o.seed, sampling).passwords;
      const auto h = hit_rate(guesses, test);
      grid << ',' << format_double(h.hit_rate);
      longform << name << ',' << mode << ',' << budget << ',' << h.generated_total << ',' << h.generated_unique << ','
               << h.hits << ',' << format_double(h.hit_rate) << ',' << format_double(repeat_rate(guesses)) << '\n';
    }
    grid << '\n';
  }
  write_artifact(o.out, grid.str(), prov);
  if (o.long_csv) write_artifact(*o.long_csv, longform.str(), prov);
  out << grid.str();
  return kExitOk;
}

int do_vocab(const VocabOpts& o, std::ostream& out) {
  std::ostringstream s;
  vocabulary().dump(s);
  if (o.out) {
    require_output(*o.out);
    write_artifact(*o.out, s.str(), Provenance{"vocab"});
  } else {
    out << s.str();
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pattern-guided password guessing pipeline", "pagpass"};
  app.set_version_flag("--version", tool_version());
  app.set_config("--config", "", "key=value configuration file; flags given on the command line take precedence");
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Progress messages on stderr (repeatable)");

  CleanOpts clean_o;
  auto* clean_cmd = app.add_subcommand("clean", "Filter a raw password list to the supported charset and lengths");
  clean_cmd->add_option("--in", clean_o.in, "Raw password list, one per line")->required();
  clean_cmd->add_option("--out", clean_o.out, "Cleaned corpus")->required();
  clean_cmd->add_option("--report", clean_o.report, "Write the cleaning report here instead of stdout");
  clean_cmd->add_option("--min-len", clean_o.min_len, "Shortest kept password")->capture_default_str();
  clean_cmd->add_option("--max-len", clean_o.max_len, "Longest kept password")->capture_default_str();

  SplitOpts split_o;
  auto* split_cmd = app.add_subcommand("split", "Partition a cleaned corpus into train/validation/test");
  split_cmd->add_option("--in", split_o.in, "Cleaned corpus")->required();
  split_cmd->add_option("--train", split_o.train)->required();
  split_cmd->add_option("--validation", split_o.validation)->required();
  split_cmd->add_option("--test", split_o.test)->required();
  split_cmd->add_option("--ratios", split_o.ratios, "Three comma-separated ratios")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  split_cmd->add_option("--seed", split_o.seed)->capture_default_str();

  PatternsOpts patterns_o;
  auto* patterns_cmd = app.add_subcommand("patterns", "Count the PCFG patterns of a corpus");
  patterns_cmd->add_option("--in", patterns_o.in, "Corpus")->required();
  patterns_cmd->add_option("--out", patterns_o.out, "PATTERN<TAB>COUNT table")->required();

  TrainOpts train_o;
  auto* train_cmd = app.add_subcommand("train", "Train a next-token model");
  train_cmd->add_option("--backend", train_o.backend)->required()->check(CLI::IsMember({"ngram", "transformer"}));
  train_cmd->add_option("--in", train_o.in, "Training corpus")->required();
  train_cmd->add_option("--out", train_o.out, "Model checkpoint")->required();
  train_cmd->add_option("--format", train_o.format, "pattern: <BOS> pattern <SEP> password <EOS>; password: no pattern")
      ->check(CLI::IsMember({"pattern", "password"}))
      ->capture_default_str();
  train_cmd->add_option("--window", train_o.window)->capture_default_str();
  train_cmd->add_option("--seed", train_o.seed)->capture_default_str();
  train_cmd->add_option("--order", train_o.order, "n-gram order")->capture_default_str();
  train_cmd->add_option("--delta", train_o.delta, "n-gram smoothing mass")->capture_default_str();
  train_cmd->add_flag("--paper-scale", train_o.paper_scale, "Transformer at 256 wide, 12 layers, 8 heads, batch 512");
  train_cmd->add_option("--embed", train_o.embed)->capture_default_str();
  train_cmd->add_option("--layers", train_o.layers)->capture_default_str();
  train_cmd->add_option("--heads", train_o.heads)->capture_default_str();
  train_cmd->add_option("--init-std", train_o.init_std)->capture_default_str();
  train_cmd->add_option("--batch", train_o.batch)->capture_default_str();
  train_cmd->add_option("--epochs", train_o.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train_o.lr)->capture_default_str();
  train_cmd->add_option("--weight-decay", train_o.weight_decay)->capture_default_str();
  train_cmd->add_option("--validation", train_o.validation, "Corpus whose loss is logged each epoch");
  train_cmd->add_option("--loss-csv", train_o.loss_csv, "Write epoch,train_loss[,validation_loss]");

  GenerateOpts gen_o;
  auto* gen_cmd = app.add_subcommand("generate", "Generate guesses from a trained model");
  gen_cmd->add_option("--mode", gen_o.mode)->check(CLI::IsMember({"free", "guided", "dcgen"}))->capture_default_str();
  gen_cmd->add_option("--model", gen_o.model)->required();
  gen_cmd->add_option("--out", gen_o.out, "Password file")->required();
  gen_cmd->add_option("--patterns", gen_o.patterns, "Pattern distribution (dcgen)");
  gen_cmd->add_option("--pattern", gen_o.pattern, "Target pattern (guided)");
  gen_cmd->add_option("-N,--count", gen_o.total, "Number of guesses")->required();
  gen_cmd->add_option("-T,--threshold", gen_o.threshold, "D&C-GEN division threshold")->capture_default_str();
  gen_cmd->add_option("--seed", gen_o.seed)->capture_default_str();
  gen_cmd->add_option("--workers", gen_o.workers)->capture_default_str();
  gen_cmd->add_option("--temperature", gen_o.temperature)->capture_default_str();
  gen_cmd->add_option("--report", gen_o.report, "Write the generation report here instead of stdout");
  gen_cmd->add_flag("--sorted", gen_o.sorted, "Sort the output for diffing");
  gen_cmd->add_flag("--tasks", gen_o.tasks, "Include every D&C-GEN task in the report");

  EvalOpts eval_o;
  auto* eval_cmd = app.add_subcommand("eval", "Score generated guesses");
  eval_cmd->require_subcommand(1);
  auto* hit_cmd = eval_cmd->add_subcommand("hit", "Hit rate overall, per segment count and per pattern");
  auto* repeat_cmd = eval_cmd->add_subcommand("repeat", "Repeat rate");
  auto* distance_cmd = eval_cmd->add_subcommand("distance", "Length and pattern distances");
  auto* bench_cmd = eval_cmd->add_subcommand("benchmark", "Pattern-guided guessing benchmark");
  for (auto* c : {hit_cmd, repeat_cmd, distance_cmd}) c->add_option("--generated", eval_o.generated)->required();
  for (auto* c : {hit_cmd, distance_cmd, bench_cmd}) c->add_option("--test", eval_o.test)->required();
  for (auto* c : {hit_cmd, repeat_cmd, distance_cmd, bench_cmd}) {
    c->add_option("--out", eval_o.out, "Write the JSON report here instead of stdout");
  }
  hit_cmd->add_option("--pattern", eval_o.pattern, "Also report HR for this pattern");
  distance_cmd->add_option("--top-k", eval_o.top_k)->capture_default_str();
  distance_cmd->add_flag("--dedup", eval_o.dedup, "Deduplicate both sides first");
  bench_cmd->add_option("--model", eval_o.model)->required();
  bench_cmd->add_option("--patterns-per-category", eval_o.per_category)->capture_default_str();
  bench_cmd->add_option("--guesses", eval_o.guesses, "Guesses per pattern")->capture_default_str();
  bench_cmd->add_option("--seed", eval_o.seed)->capture_default_str();
  bench_cmd->add_option("--workers", eval_o.workers)->capture_default_str();
  bench_cmd->add_option("--temperature", eval_o.temperature)->capture_default_str();
  bench_cmd->add_option("--csv", eval_o.csv, "Per-pattern table");

  ReportOpts report_o;
  auto* report_cmd = app.add_subcommand("report", "Hit-rate grid over models and guess budgets");
  report_cmd->add_option("--model", report_o.models, "Checkpoint (repeatable)")->required();
  report_cmd->add_option("--test", report_o.test)->required();
  report_cmd->add_option("--out", report_o.out, "model x budget CSV")->required();
  report_cmd->add_option("--budgets", report_o.budgets, "Comma-separated guess budgets")->delimiter(',')->required();
  report_cmd->add_option("--patterns", report_o.patterns, "Pattern distribution for dcgen rows");
  report_cmd->add_option("--long", report_o.long_csv, "Also write one row per (model, budget)");
  report_cmd->add_option("--mode", report_o.mode, "auto: dcgen for pattern models when --patterns is given, else free")
      ->check(CLI::IsMember({"auto", "dcgen", "free"}))
      ->capture_default_str();
  report_cmd->add_option("-T,--threshold", report_o.threshold)->capture_default_str();
  report_cmd->add_option("--seed", report_o.seed)->capture_default_str();
  report_cmd->add_option("--workers", report_o.workers)->capture_default_str();
  report_cmd->add_option("--temperature", report_o.temperature)->capture_default_str();

  VocabOpts vocab_o;
  auto* vocab_cmd = app.add_subcommand("vocab", "Print the token vocabulary");
  vocab_cmd->add_option("--out", vocab_o.out);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Log log(err, verbosity);
  if (clean_cmd->parsed()) return do_clean(clean_o, out);
  if (split_cmd->parsed()) return do_split(split_o, out);
  if (patterns_cmd->parsed()) return do_patterns(patterns_o, out);
  if (train_cmd->parsed()) return do_train(train_o, out, log);
  if (gen_cmd->parsed()) return do_generate(gen_o, out);
  if (hit_cmd->parsed()) return do_eval_hit(eval_o, out);
  if (repeat_cmd->parsed()) return do_eval_repeat(eval_o, out);
  if (distance_cmd->parsed()) return do_eval_distance(eval_o, out);
  if (bench_cmd->parsed()) return do_eval_benchmark(eval_o, out);
  if (report_cmd->parsed()) return do_report(report_o, out);
  if (vocab_cmd->parsed()) return do_vocab(vocab_o, out);
  return kExitUsage;
}

}  // namespace

const char* tool_version() { return PAGPASS_VERSION; }

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const InvalidArgument& e) {
    err << "pagpass: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "pagpass: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "pagpass: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "pagpass: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace pagpass::cli
