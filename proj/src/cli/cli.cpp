#include "cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "sumfact/corpus.hpp"
#include "sumfact/exporter.hpp"
#include "sumfact/feedback.hpp"
#include "sumfact/jsonl.hpp"
#include "sumfact/llm_gateway.hpp"
#include "sumfact/metrics.hpp"
#include "sumfact/prompts.hpp"
#include "sumfact/taxonomy.hpp"

namespace sumfact::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kConfigVersion = 1;

// Raw command-line values; empty optionals were not given.
struct Flags {
  std::optional<std::string> config, granularity, out, mode, schema;
  std::optional<std::string> fraction, seed, concurrency, max_attempts;
  std::optional<std::string> corpus, summaries, feedback, input, gt, pred;
};

struct RunConfig {
  std::string command;
  Granularity granularity = Granularity::FullLocalization;
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
  std::optional<double> fraction;
  std::size_t max_attempts = 3;
  FeedbackMode mode = FeedbackMode::Train;
  IngestSchema schema = IngestSchema::Generic;
  fs::path out;
  std::map<std::string, std::string> paths;
  std::vector<EndpointConfig> summarizers;
  std::optional<EndpointConfig> feedback_model;
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

double to_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  config_error(std::string(what) + ": not a number: '" + s + "'");
}

std::uint64_t to_unsigned(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    if (!s.empty() && s[0] != '-') {
      const auto v = std::stoull(s, &used);
      if (used == s.size()) return v;
    }
  } catch (const std::exception&) {
  }
  config_error(std::string(what) + ": not a non-negative integer: '" + s + "'");
}

std::string scalar_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// flag > SUMFACT_* environment > config file.
std::optional<std::string> layered(const std::optional<std::string>& flag, const char* env_name, const Json& file,
                                   const char* key) {
  if (flag) return flag;
  if (auto e = env(env_name)) return e;
  if (auto it = file.find(key); it != file.end() && !it->is_null()) return scalar_text(*it);
  return std::nullopt;
}

RunConfig resolve(const std::string& command, const Flags& flags) {
  Json file = Json::object();
  const auto config_path = flags.config ? flags.config : env("SUMFACT_CONFIG");
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) config_error("cannot read config file '" + *config_path + "'");
    file = Json::parse(in, nullptr, false);
    if (file.is_discarded() || !file.is_object()) config_error("config file '" + *config_path + "' is not a JSON object");
    if (file.value("version", kConfigVersion) != kConfigVersion)
      config_error("config file version must be " + std::to_string(kConfigVersion));
  }

  RunConfig c;
  c.command = command;
  if (auto v = layered(flags.granularity, "SUMFACT_GRANULARITY", file, "granularity")) c.granularity = parse_granularity(*v);
  if (auto v = layered(flags.concurrency, "SUMFACT_CONCURRENCY", file, "concurrency")) {
    c.concurrency = to_unsigned(*v, "concurrency");
    if (c.concurrency == 0) config_error("concurrency must be at least 1");
  }
  if (auto v = layered(flags.seed, "SUMFACT_SEED", file, "seed")) c.seed = to_unsigned(*v, "seed");
  if (auto v = layered(flags.fraction, "SUMFACT_FRACTION", file, "fraction")) c.fraction = to_double(*v, "fraction");
  if (auto v = layered(flags.max_attempts, "SUMFACT_MAX_ATTEMPTS", file, "max_attempts")) {
    c.max_attempts = to_unsigned(*v, "max_attempts");
    if (c.max_attempts == 0) config_error("max_attempts must be at least 1");
  }
  if (auto v = layered(flags.mode, "SUMFACT_MODE", file, "mode")) c.mode = parse_feedback_mode(*v);
  if (auto v = layered(flags.schema, "SUMFACT_SCHEMA", file, "schema")) c.schema = parse_ingest_schema(*v);
  if (auto v = layered(flags.out, "SUMFACT_OUT", file, "out")) c.out = *v;

  if (auto it = file.find("paths"); it != file.end() && it->is_object())
    for (const auto& [k, v] : it->items())
      if (v.is_string()) c.paths[k] = v.get<std::string>();
  auto set_path = [&c](const char* key, const std::optional<std::string>& flag) {
    if (flag) c.paths[key] = *flag;
  };
  set_path("corpus", flags.corpus);
  set_path("summaries", flags.summaries);
  set_path("feedback", flags.feedback);
  set_path("input", flags.input);
  set_path("gt", flags.gt);
  set_path("pred", flags.pred);

  if (auto it = file.find("summarizers"); it != file.end()) {
    if (!it->is_array()) config_error("'summarizers' must be an array");
    for (const auto& e : *it) c.summarizers.push_back(endpoint_from_json(e));
  }
  if (auto it = file.find("feedback_model"); it != file.end() && !it->is_null())
    c.feedback_model = endpoint_from_json(*it);

  if (c.out.empty()) config_error("no output directory: pass --out or set it in the config file");
  return c;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["version"] = kConfigVersion;
  j["command"] = c.command;
  j["granularity"] = std::string(to_string(c.granularity));
  j["concurrency"] = c.concurrency;
  j["seed"] = c.seed;
  j["fraction"] = c.fraction ? Json(*c.fraction) : Json(nullptr);
  j["max_attempts"] = c.max_attempts;
  j["mode"] = std::string(to_string(c.mode));
  j["schema"] = std::string(to_string(c.schema));
  j["paths"] = c.paths;
  Json roster = Json::array();
  for (const auto& s : c.summarizers) roster.push_back(to_json(s));
  j["summarizers"] = std::move(roster);
  j["feedback_model"] = c.feedback_model ? to_json(*c.feedback_model) : Json(nullptr);
  return j;
}

fs::path input_path(const RunConfig& c, const char* key) {
  auto it = c.paths.find(key);
  if (it == c.paths.end()) config_error(std::string("missing input: pass --") + key);
  fs::path path = it->second;
  if (!fs::exists(path)) config_error(std::string(key) + " file '" + path.string() + "' does not exist");
  return path;
}

void prepare_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec || !fs::is_directory(c.out)) config_error("cannot create output directory '" + c.out.string() + "'");
  write_text(c.out / "run_config.json", to_json(c).dump(2) + "\n");
}

std::vector<Document> read_documents(const fs::path& path) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  for (const auto& row : read_jsonl(path)) {
    Document d = document_from_json(row);
    if (seen.insert(d.doc_id).second) docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<FeedbackRecord> read_feedback(const fs::path& path) {
  std::vector<FeedbackRecord> out;
  for (const auto& row : read_jsonl(path)) out.push_back(feedback_record_from_json(row));
  return out;
}

template <typename T>
std::vector<Json> rows_of(const std::vector<T>& items) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const auto& x : items) rows.push_back(to_json(x));
  return rows;
}

Json usage_json(const UsageStats& u) {
  return {{"attempts", u.attempts},
          {"input_tokens", u.input_tokens},
          {"output_tokens", u.output_tokens},
          {"estimated_cost", u.estimated_cost}};
}

// Latency varies run to run, so it only goes to stderr.
void print_usage(std::ostream& err, const char* stage, const UsageStats& u) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << stage << ": " << u.attempts << " request(s), " << u.input_tokens << " input / " << u.output_tokens
     << " output tokens, cost " << u.estimated_cost << ", latency " << u.wall_latency.count() << " s";
  err << os.str() << '\n';
}

// ---- subcommands -----------------------------------------------------------

int cmd_summarize(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.summarizers.empty()) config_error("summarize needs a 'summarizers' roster in the config file");
  const auto docs = read_documents(input_path(c, "corpus"));
  prepare_out(c);
  const ChatClient client;
  const SummaryBatch batch = generate_summaries(client, c.summarizers, docs, c.concurrency);
  write_jsonl(c.out / "summaries.jsonl", rows_of(batch.summaries));
  write_jsonl(c.out / "failures.jsonl", rows_of(batch.failures));
  write_text(c.out / "usage.json", usage_json(batch.totals).dump(2) + "\n");
  print_usage(err, "summarize", batch.totals);
  out << batch.summaries.size() << " summaries, " << batch.failures.size() << " failure(s)\n";
  return batch.failures.empty() ? kOk : kPartialFailure;
}

int cmd_feedback(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (!c.feedback_model) config_error("feedback needs a 'feedback_model' endpoint in the config file");
  const auto docs = read_documents(input_path(c, "corpus"));
  std::vector<SummaryRecord> summaries;
  for (const auto& row : read_jsonl(input_path(c, "summaries"))) summaries.push_back(summary_from_json(row));
  prepare_out(c);
  const ChatClient client;
  const FeedbackBatch batch = generate_feedback_batch(client, *c.feedback_model, c.granularity, index_documents(docs),
                                                      summaries, c.max_attempts, c.mode, c.concurrency);
  write_jsonl(c.out / "feedback.jsonl", rows_of(batch.records));
  write_jsonl(c.out / "failures.jsonl", rows_of(batch.failures));
  const Json counts{{"summaries", summaries.size()},
                    {"records", batch.records.size()},
                    {"excluded", batch.excluded},
                    {"defaulted", batch.defaulted},
                    {"failures", batch.failures.size()}};
  write_text(c.out / "feedback_counts.json", counts.dump(2) + "\n");
  write_text(c.out / "usage.json", usage_json(batch.totals).dump(2) + "\n");
  print_usage(err, "feedback", batch.totals);
  out << batch.records.size() << " feedback record(s), " << batch.excluded << " excluded, " << batch.defaulted
      << " defaulted, " << batch.failures.size() << " failure(s)\n";
  return batch.failures.empty() ? kOk : kPartialFailure;
}

int cmd_consolidate(const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto records = ingest_human_dataset(input_path(c, "input"), c.schema);
  prepare_out(c);
  ConsolidationCounts counts;
  std::vector<Json> rows;
  for (const auto& r : records) {
    if (auto kept = consolidate_annotation(r.annotation, counts)) {
      AnnotatedRecord copy = r;
      copy.annotation = std::move(*kept);
      rows.push_back(to_json(copy));
    }
  }
  write_jsonl(c.out / "consolidated.jsonl", rows);
  write_text(c.out / "consolidation_counts.json", to_json(counts).dump(2) + "\n");
  out << counts.records_kept << " of " << counts.records_in << " record(s) kept\n";
  return kOk;
}

int cmd_split(const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto records = ingest_human_dataset(input_path(c, "input"), IngestSchema::Generic);
  const double fraction = c.fraction.value_or(0.15);
  if (!(fraction >= 0.0 && fraction <= 1.0)) config_error("split fraction must lie in [0, 1]");
  prepare_out(c);
  std::vector<OriginalSplit> flags;
  std::size_t flagged = 0;
  for (const auto& r : records) {
    flags.push_back(r.annotation.original_split);
    flagged += r.annotation.original_split == OriginalSplit::Test ? 1 : 0;
  }
  const SplitPlan plan = split_train_test(flags, fraction, c.seed);
  std::vector<Json> train, test;
  for (auto i : plan.train) train.push_back(to_json(records[i]));
  for (auto i : plan.test) test.push_back(to_json(records[i]));
  write_jsonl(c.out / "train.jsonl", train);
  write_jsonl(c.out / "test.jsonl", test);
  const Json summary{{"records", records.size()},
                     {"train", plan.train.size()},
                     {"test", plan.test.size()},
                     {"flagged_test", flagged},
                     {"fraction", fraction},
                     {"seed", c.seed}};
  write_text(c.out / "split.json", summary.dump(2) + "\n");
  out << plan.train.size() << " train / " << plan.test.size() << " test\n";
  return kOk;
}

std::size_t excluded_count_near(const fs::path& feedback_path) {
  const fs::path counts = feedback_path.parent_path() / "feedback_counts.json";
  if (!fs::exists(counts)) return 0;
  std::ifstream in(counts);
  const Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return 0;
  return j.value("excluded", std::size_t{0});
}

int cmd_export_sft(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path feedback_path = input_path(c, "feedback");
  const auto docs = read_documents(input_path(c, "corpus"));
  const auto all = read_feedback(feedback_path);
  const double fraction = c.fraction.value_or(1.0);
  prepare_out(c);

  std::vector<FeedbackRecord> usable;
  std::size_t skipped = 0;
  for (const auto& r : all) {
    if (r.granularity == c.granularity && r.source == FeedbackSource::Llm && !r.defaulted) usable.push_back(r);
    else ++skipped;
  }
  if (skipped > 0)
    err << "export-sft: skipped " << skipped << " record(s) that are human, defaulted or of another granularity\n";

  const auto examples = export_sft(usable, index_documents(docs), c.granularity);
  const auto sample = subsample(examples, fraction, c.seed);
  write_jsonl(c.out / "sft.jsonl", rows_of(sample));
  const DatasetStats stats = dataset_stats(docs, usable, excluded_count_near(feedback_path));
  write_text(c.out / "stats.json", to_json(stats).dump(2) + "\n");
  out << sample.size() << " SFT example(s) of " << examples.size() << "\n";
  return kOk;
}

// Ground truth lines are either feedback records or annotated records (generic layout).
std::vector<GoldRecord> read_gold(const fs::path& path, std::map<std::string, std::string>& domain_of) {
  std::vector<GoldRecord> gold;
  std::vector<std::string> annotated_lines;
  for (const auto& row : read_jsonl(path)) {
    if (row.contains("feedback")) gold.push_back(gold_from_feedback(feedback_record_from_json(row)));
    else annotated_lines.push_back(dump_compact(row));
  }
  for (const auto& r : ingest_human_lines(annotated_lines, IngestSchema::Generic)) {
    gold.push_back(gold_from_annotation(r.annotation));
    domain_of[r.document.doc_id] = std::string(to_string(r.document.domain));
  }
  return gold;
}

int cmd_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> domain_of;
  const auto gold = read_gold(input_path(c, "gt"), domain_of);
  const auto pred = read_feedback(input_path(c, "pred"));
  if (c.paths.contains("corpus"))
    for (const auto& d : read_documents(input_path(c, "corpus"))) domain_of[d.doc_id] = std::string(to_string(d.domain));

  const CoverageDiff diff = coverage_diff(gold, pred);
  if (!diff.empty()) {
    err << "evaluate: ground truth and predictions do not cover the same pairs\n" << diff.summary() << '\n';
    return kConfigError;
  }
  prepare_out(c);
  const EvalReport report = evaluate(gold, pred, domain_of);
  write_text(c.out / "report.json", to_json(report).dump(2) + "\n");
  write_text(c.out / "report.csv", to_csv(report));
  for (const auto& w : report.warnings) err << "evaluate: warning: " << w << '\n';
  out << "bacc " << (report.bacc ? std::to_string(*report.bacc) : "n/a") << ", pearson_r "
      << (report.pearson ? std::to_string(report.pearson->r) : "n/a") << ", spearman_rho "
      << (report.spearman ? std::to_string(report.spearman->r) : "n/a") << '\n';
  return kOk;
}

int cmd_report(const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto records = read_feedback(input_path(c, "feedback"));
  prepare_out(c);
  const auto dist = error_distribution(records);

  Json j = Json::object();
  std::ostringstream csv;
  csv.precision(17);
  csv << "summarizer_id,no_error_sentences,error_sentences,sentence_error_ratio,summaries,summaries_with_error,"
         "summary_error_ratio";
  for (auto cat : kAllCategories) csv << ',' << id_of(cat);
  csv << '\n';
  for (const auto& [system, d] : dist) {
    Json hist = Json::object();
    for (auto cat : kAllCategories) {
      auto it = d.category_histogram.find(cat);
      hist[std::string(id_of(cat))] = it == d.category_histogram.end() ? 0 : it->second;
    }
    j[system] = {{"no_error_sentences", d.no_error_sentences},
                 {"error_sentences", d.error_sentences},
                 {"sentence_error_ratio", d.sentence_error_ratio},
                 {"summaries", d.summaries},
                 {"summaries_with_error", d.summaries_with_error},
                 {"summary_error_ratio", d.summary_error_ratio},
                 {"categories", hist}};
    csv << system << ',' << d.no_error_sentences << ',' << d.error_sentences << ',' << d.sentence_error_ratio << ','
        << d.summaries << ',' << d.summaries_with_error << ',' << d.summary_error_ratio;
    for (auto cat : kAllCategories) csv << ',' << hist[std::string(id_of(cat))].get<std::size_t>();
    csv << '\n';
  }
  write_text(c.out / "report.json", j.dump(2) + "\n");
  write_text(c.out / "report.csv", csv.str());
  out << dist.size() << " summarizer(s) reported\n";
  return kOk;
}

int cmd_stats(const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto docs = read_documents(input_path(c, "corpus"));
  std::vector<FeedbackRecord> records;
  std::size_t excluded = 0;
  if (c.paths.contains("feedback")) {
    const fs::path feedback_path = input_path(c, "feedback");
    records = read_feedback(feedback_path);
    excluded = excluded_count_near(feedback_path);
  }
  prepare_out(c);
  const DatasetStats stats = dataset_stats(docs, records, excluded);
  write_text(c.out / "stats.json", to_json(stats).dump(2) + "\n");
  out << stats.total.documents << " document(s), " << stats.total.summaries << " summary record(s)\n";
  return kOk;
}

bool is_config_kind(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::CoverageMismatch:
    case ErrorKind::SchemaMismatch:
    case ErrorKind::DuplicateId:
    case ErrorKind::Io:
      return true;
    default:
      return false;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentence-level fact-verification data pipeline", "sumfact"};
  app.require_subcommand(1);
  Flags flags;

  using Handler = int (*)(const RunConfig&, std::ostream&, std::ostream&);
  struct Command {
    const char* name;
    const char* help;
    Handler handler;
    std::vector<const char*> inputs;
    bool uses_mode = false;
    bool uses_schema = false;
  };
  const std::vector<Command> commands{
      {"summarize", "Generate summaries with every configured summarizer", cmd_summarize, {"corpus"}},
      {"feedback", "Collect sentence-level feedback on summaries", cmd_feedback, {"corpus", "summaries"}, true},
      {"consolidate", "Ingest and consolidate human labels", cmd_consolidate, {"input"}, false, true},
      {"split", "Partition consolidated records into train and test", cmd_split, {"input"}},
      {"export-sft", "Export fine-tuning examples and dataset statistics", cmd_export_sft, {"corpus", "feedback"}},
      {"evaluate", "Score predictions against ground truth", cmd_evaluate, {"gt", "pred", "corpus"}},
      {"report", "Error distribution per summarizer", cmd_report, {"feedback"}},
      {"stats", "Dataset statistics", cmd_stats, {"corpus", "feedback"}},
  };

  std::map<std::string, std::optional<std::string>*> input_slots{
      {"corpus", &flags.corpus}, {"summaries", &flags.summaries}, {"feedback", &flags.feedback},
      {"input", &flags.input},   {"gt", &flags.gt},               {"pred", &flags.pred}};

  std::map<CLI::App*, const Command*> by_app;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--granularity", flags.granularity, "binary | reasoning | localization");
    sub->add_option("--fraction", flags.fraction, "Test fraction (split) or sample fraction (export-sft)");
    sub->add_option("--seed", flags.seed, "Random seed");
    sub->add_option("--concurrency", flags.concurrency, "Maximum in-flight requests");
    for (const char* in : cmd.inputs) sub->add_option(std::string("--") + in, *input_slots.at(in), "Input JSONL");
    if (cmd.uses_mode) {
      sub->add_option("--mode", flags.mode, "train (exclude unparseable) | eval (default them to no error)");
      sub->add_option("--max-attempts", flags.max_attempts, "Generations per summary before giving up");
    }
    if (cmd.uses_schema)
      sub->add_option("--schema", flags.schema, "generic | aggrefact | diasumfact | tofueval | ramprasad24");
    by_app[sub] = &cmd;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  const Command* chosen = nullptr;
  for (auto* sub : app.get_subcommands()) chosen = by_app.at(sub);
  try {
    const RunConfig config = resolve(chosen->name, flags);
    return chosen->handler(config, out, err);
  } catch (const Error& e) {
    err << "sumfact " << chosen->name << ": " << e.what() << '\n';
    return is_config_kind(e.kind()) ? kConfigError : kPartialFailure;
  } catch (const std::exception& e) {
    err << "sumfact " << chosen->name << ": " << e.what() << '\n';
    return kPartialFailure;
  }
}

}  // namespace sumfact::cli
