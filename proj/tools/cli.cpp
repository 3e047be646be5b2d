#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "abcrm/baselines.hpp"
#include "abcrm/corpus.hpp"
#include "abcrm/error.hpp"
#include "abcrm/features.hpp"
#include "abcrm/format.hpp"
#include "abcrm/metrics.hpp"
#include "abcrm/search.hpp"

namespace abcrm::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

// Inputs shared by every command that reads a corpus.
struct CorpusOptions {
  std::string corpus;
  std::string stopwords;
  std::string features;
  std::size_t k = 650;
  std::string combine = "rank";
};

struct SynthOptions {
  SyntheticSpec spec;
  bool unlabeled_test = false;
  std::string out;
  std::uint64_t seed = 0;
};

struct FeaturesOptions {
  CorpusOptions in;
  std::string out;
};

struct RunOptions {
  CorpusOptions in;
  ParameterSet params = kReferenceParameters;
  bool no_cell_death = false;
  bool pu_training = false;
  bool incremental_bias = false;
  std::string order = "ordered";
  bool nb = false;
  double alpha = 1.0;
  std::vector<std::string> imports;
  std::string out_dir;
  std::uint64_t seed = 0;
};

struct SweepCommandOptions {
  CorpusOptions in;
  std::string setup = "4.1";
  std::vector<std::string> setups;
  std::string grid_e0 = "1:7:1";
  std::string grid_r0_plus = "3:12:1";
  std::string grid_r0_minus = "3:12:1";
  std::string grid_de = "0:0.4:0.1";
  std::string grid_dr = "0:0.4:0.1";
  std::string grid_na = "2:22:2";
  std::size_t workers = 1;
  std::size_t replicates = 8;
  std::size_t checkpoint_every = 64;
  std::size_t stop_after = 0;
  std::size_t top_k = 50;
  bool no_resume = false;
  std::string out_dir;
  std::uint64_t seed = 0;
};

struct ReportOptions {
  std::vector<std::string> results;
  std::vector<std::string> predictions;
  std::string corpus;
  std::size_t top_k = 50;
  std::string out_dir;
};

struct Options {
  SynthOptions synth;
  FeaturesOptions features;
  RunOptions run;
  SweepCommandOptions grid;
  SweepCommandOptions experiment;
  ReportOptions report;
  std::string config;  // value is consumed before parsing
};

void add_corpus_options(CLI::App* app, CorpusOptions& o, bool allow_feature_file) {
  app->add_option("--corpus", o.corpus, "Corpus file (id, label, timestamp, text)")->required();
  app->add_option("--stopwords", o.stopwords, "Stop-word file, one word per line (default: built-in list)");
  if (allow_feature_file) {
    app->add_option("--features", o.features, "Feature set file; selected from the training part when absent");
  }
  app->add_option("--k", o.k, "Number of features to select")->check(CLI::PositiveNumber);
  app->add_option("--combine", o.combine, "Feature ranking: rank (product of ranks) or score (product of scores)")
      ->check(CLI::IsMember({"rank", "score"}));
}

void add_sweep_options(CLI::App* app, SweepCommandOptions& o, bool many_setups) {
  add_corpus_options(app, o.in, true);
  if (many_setups) {
    app->add_option("--setups", o.setups, "Comma-separated setup ids (1.1 1.2 2.1 2.2 3.1-3.4 4.1 4.2)")
        ->delimiter(',')
        ->required();
  } else {
    app->add_option("--setup", o.setup, "Setup id");
  }
  app->add_option("--grid-e0", o.grid_e0, "E0 range min:max:step");
  app->add_option("--grid-r0-plus", o.grid_r0_plus, "R0+ range min:max:step");
  app->add_option("--grid-r0-minus", o.grid_r0_minus, "R0- range min:max:step");
  app->add_option("--grid-de", o.grid_de, "Effector death-rate range min:max:step");
  app->add_option("--grid-dr", o.grid_dr, "Regulator death-rate range min:max:step");
  app->add_option("--grid-na", o.grid_na, "nA range min:max:step");
  app->add_option("--workers", o.workers, "Parallel grid workers")->check(CLI::PositiveNumber);
  app->add_option("--replicates", o.replicates, "Orderings per grid point in shuffled setups")
      ->check(CLI::PositiveNumber);
  app->add_option("--checkpoint-every", o.checkpoint_every, "Grid points between results-log flushes")
      ->check(CLI::PositiveNumber);
  app->add_option("--stop-after", o.stop_after, "Stop after computing this many grid points (resume later)");
  app->add_option("--top-k", o.top_k, "Configurations summarized per setup")->check(CLI::PositiveNumber);
  app->add_flag("--no-resume", o.no_resume, "Discard existing results logs instead of resuming them");
  app->add_option("--out-dir", o.out_dir, "Output directory")->required();
  app->add_option("--seed", o.seed, "Base seed")->required();
}

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>("Agent-based cross-regulation text classifier");
  app->require_subcommand(1);
  app->set_help_all_flag("--help-all", "Help for every command");

  auto* synth = app->add_subcommand("synth", "Generate a synthetic two-class corpus");
  auto& s = o.synth.spec;
  synth->add_option("--relevant-vocab", s.relevant_vocab, "Relevant-class vocabulary size");
  synth->add_option("--irrelevant-vocab", s.irrelevant_vocab, "Irrelevant-class vocabulary size");
  synth->add_option("--shared-vocab", s.shared_vocab, "Shared vocabulary size");
  synth->add_option("--min-length", s.min_length, "Minimum tokens per document");
  synth->add_option("--max-length", s.max_length, "Maximum tokens per document");
  synth->add_option("--class-word-rate", s.class_word_rate, "Share of tokens drawn from the class vocabulary")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--zipf", s.zipf, "Zipf exponent of word frequencies (0 = uniform)")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--train-relevant", s.train_relevant, "Relevant training documents");
  synth->add_option("--train-irrelevant", s.train_irrelevant, "Irrelevant training documents");
  synth->add_option("--test-relevant", s.test_relevant, "Relevant test documents");
  synth->add_option("--test-irrelevant", s.test_irrelevant, "Irrelevant test documents");
  synth->add_option("--drift-rate", s.drift_rate, "Per-document probability of replacing a class word")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_flag("--unlabeled-test", o.synth.unlabeled_test, "Write test documents with label U");
  synth->add_option("--out", o.synth.out, "Output corpus file")->required();
  synth->add_option("--seed", o.synth.seed, "Seed")->required();

  auto* features = app->add_subcommand("features", "Select the top-k features of a corpus's training part");
  add_corpus_options(features, o.features.in, false);
  features->add_option("--out", o.features.out, "Output feature file")->required();

  auto* run = app->add_subcommand("run", "Stream a corpus through the classifier and evaluate");
  add_corpus_options(run, o.run.in, true);
  auto& p = o.run.params;
  run->add_option("--e0", p.initial_effectors, "Effectors seeded per new feature");
  run->add_option("--r0-plus", p.initial_regulators_pos, "Regulators seeded per new feature in relevant documents");
  run->add_option("--r0-minus", p.initial_regulators_neg, "Regulators seeded per new feature in other documents");
  run->add_option("--de", p.effector_death, "Death rate of unbound effectors");
  run->add_option("--dr", p.regulator_death, "Death rate of unbound regulators");
  run->add_option("--na", p.presentations, "Presentations per feature on an APC (even)");
  run->add_flag("--no-cell-death", o.run.no_cell_death, "Disable culling");
  run->add_flag("--pu-training", o.run.pu_training, "Train on relevant documents only");
  run->add_flag("--incremental-bias", o.run.incremental_bias, "Re-seed known features on every occurrence");
  run->add_option("--order", o.run.order, "Stream order: ordered, shuffled, shuffled-train, shuffled-test")
      ->check(CLI::IsMember({"ordered", "shuffled", "shuffled-train", "shuffled-test"}));
  run->add_flag("--nb", o.run.nb, "Also train and evaluate the Naive Bayes baseline");
  run->add_option("--alpha", o.run.alpha, "Naive Bayes Laplace smoothing")->check(CLI::PositiveNumber);
  run->add_option("--import-predictions", o.run.imports,
                  "Third-party predictions NAME=PATH (or PATH) to include in the comparison")
      ->delimiter(',');
  run->add_option("--out-dir", o.run.out_dir, "Output directory")->required();
  run->add_option("--seed", o.run.seed, "Seed")->required();

  auto* grid = app->add_subcommand("grid", "Sweep one setup over a parameter grid");
  add_sweep_options(grid, o.grid, false);

  auto* experiment = app->add_subcommand("experiment", "Sweep several setups and compare them pairwise");
  add_sweep_options(experiment, o.experiment, true);

  auto* report = app->add_subcommand("report", "Summarize results logs and score prediction files");
  report->add_option("--results", o.report.results, "Results logs to summarize and compare")->delimiter(',');
  report->add_option("--predictions", o.report.predictions, "Prediction files NAME=PATH (or PATH)")
      ->delimiter(',');
  report->add_option("--corpus", o.report.corpus, "Corpus holding the true test labels");
  report->add_option("--top-k", o.report.top_k, "Configurations summarized per setup")
      ->check(CLI::PositiveNumber);
  report->add_option("--out-dir", o.report.out_dir, "Output directory (default: print only)");

  for (auto* sub : app->get_subcommands({})) {
    sub->add_option("--config", o.config, "Flat key=value file with defaults for this command's flags");
  }
  return app;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    auto key = trim(std::string_view(text).substr(0, eq));
    key.erase(0, key.find_first_not_of('-'));
    out.emplace_back(key, trim(std::string_view(text).substr(eq + 1)));
  }
  return out;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      return args[i + 1];
    }
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return a == flag || a.rfind(flag + "=", 0) == 0;
  });
}

// Config values become flags unless the command line already sets them.
std::vector<std::string> merge_config(const CLI::App& app, const std::vector<std::string>& args) {
  const auto config = find_config(args);
  if (!config) return args;
  if (args.empty()) throw UsageError("--config needs a command");
  const CLI::App* sub = nullptr;
  for (const auto* candidate : app.get_subcommands({})) {
    if (candidate->get_name() == args.front()) sub = candidate;
  }
  if (sub == nullptr) throw UsageError("--config must follow a command");
  std::vector<std::string> merged = args;
  for (const auto& [key, value] : read_config(*config)) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr || key == "config") {
      throw UsageError("config key '" + key + "' is not a flag of '" + sub->get_name() + "'");
    }
    if (given_on_command_line(args, flag)) continue;
    if (opt->get_expected_max() == 0) {
      if (value == "1" || value == "true" || value == "yes" || value == "on") {
        merged.push_back(flag);
      } else if (value != "0" && value != "false" && value != "no" && value != "off") {
        throw UsageError("config key '" + key + "' expects true or false");
      }
    } else {
      merged.push_back(flag);
      merged.push_back(value);
    }
  }
  return merged;
}

// ---- output helpers ----

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw Error("error writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

StopWordList stop_words(const CorpusOptions& o) {
  return o.stopwords.empty() ? StopWordList::english_default() : StopWordList::from_file(o.stopwords);
}

CombineMode combine_mode(const std::string& name) {
  return name == "score" ? CombineMode::ScoreProduct : CombineMode::RankProduct;
}

FeatureSet feature_set(const CorpusOptions& o, const Corpus& corpus, const StopWordList& stop) {
  if (!o.features.empty()) return load_feature_set(o.features);
  return select_features(training_bags(corpus, stop), o.k, combine_mode(o.combine));
}

Axis parse_axis(const std::string& flag, const std::string& text) {
  const auto parts = split(text, ':');
  Axis a;
  bool ok = false;
  if (parts.size() == 1) {
    ok = parse_real(parts[0], a.min);
    a.max = a.min;
    a.step = 1.0;
  } else if (parts.size() == 3) {
    ok = parse_real(parts[0], a.min) && parse_real(parts[1], a.max) && parse_real(parts[2], a.step);
  }
  if (!ok) throw UsageError(flag + ": expected VALUE or MIN:MAX:STEP, got '" + text + "'");
  return a;
}

GridSpec grid_spec(const SweepCommandOptions& o) {
  GridSpec g;
  g.initial_effectors = parse_axis("--grid-e0", o.grid_e0);
  g.initial_regulators_pos = parse_axis("--grid-r0-plus", o.grid_r0_plus);
  g.initial_regulators_neg = parse_axis("--grid-r0-minus", o.grid_r0_minus);
  g.effector_death = parse_axis("--grid-de", o.grid_de);
  g.regulator_death = parse_axis("--grid-dr", o.grid_dr);
  g.presentations = parse_axis("--grid-na", o.grid_na);
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return g;
}

std::pair<std::string, std::string> named_path(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq != std::string::npos) return {spec.substr(0, eq), spec.substr(eq + 1)};
  return {fs::path(spec).stem().string(), spec};
}

struct Scored {
  std::string name;
  Confusion confusion;
  MetricReport metrics;
};

void write_comparison(std::ostream& out, const std::vector<Scored>& rows) {
  out << "classifier\ttp\tfp\ttn\tfn\tprecision\trecall\tfscore\taccuracy\tauc\tmcc\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.name << '\t' << r.confusion.tp << '\t' << r.confusion.fp << '\t' << r.confusion.tn << '\t'
        << r.confusion.fn;
    for (double v : {m.precision, m.recall, m.fscore, m.accuracy, m.auc, m.mcc}) {
      out << '\t' << format_fixed(v, 6);
    }
    out << '\n';
  }
}

Scored score(const std::string& name, const std::vector<Prediction>& preds, const Truth& truth) {
  return {name, confusion(preds, truth), evaluate(preds, truth)};
}

// ---- commands ----

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  SyntheticSpec spec = o.spec;
  spec.label_test = !o.unlabeled_test;
  const Corpus corpus = generate_synthetic(spec, o.seed);
  write_file(o.out, [&](std::ostream& f) { write_corpus(f, corpus); });
  out << "wrote " << corpus.size() << " documents (" << corpus.partition.train_count << " train, "
      << corpus.partition.test_count << " test) to " << o.out << '\n';
  return kOk;
}

int cmd_features(const FeaturesOptions& o, std::ostream& out) {
  const Corpus corpus = load_corpus(o.in.corpus);
  const StopWordList stop = stop_words(o.in);
  const FeatureSet set = select_features(training_bags(corpus, stop), o.in.k, combine_mode(o.in.combine));
  write_file(o.out, [&](std::ostream& f) { write_feature_set(f, set); });
  out << "wrote " << set.size() << " features to " << o.out << '\n';
  return kOk;
}

StreamOrder stream_order(const std::string& name, std::uint64_t seed) {
  StreamOrder order;
  if (name == "ordered") return order;
  order.mode = OrderMode::Shuffled;
  order.scope = name == "shuffled-train" ? OrderScope::TrainOnly
                : name == "shuffled-test" ? OrderScope::TestOnly
                                          : OrderScope::Both;
  order.seed = derive_seed(seed, "order");
  return order;
}

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  try {
    o.params.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const Corpus corpus = load_corpus(o.in.corpus);
  if (corpus.partition.test_count == 0) {
    throw UsageError("corpus " + o.in.corpus + " has no test documents; declare them with '# train=N test=M'");
  }
  const StopWordList stop = stop_words(o.in);
  const FeatureSet features = feature_set(o.in, corpus, stop);
  const fs::path dir = o.out_dir;

  DynamicsConfig config;
  config.seed = derive_seed(o.seed, "dynamics");
  config.cell_death = !o.no_cell_death;
  config.pu_training = o.pu_training;
  config.incremental_bias = o.incremental_bias;

  const auto train = prepare(corpus.train(), features, stop);
  const auto test = prepare(corpus.test(), features, stop);
  const auto stream = order_parts(train, hide_labels(test), stream_order(o.order, o.seed));
  CrossRegulationModel model(o.params, config);
  std::vector<Prediction> preds;
  for (const auto& doc : stream) {
    if (auto p = model.process(doc)) preds.push_back(std::move(*p));
  }

  write_file(dir / "features.tsv", [&](std::ostream& f) { write_feature_set(f, features); });
  write_file(dir / "abcrm.predictions.tsv", [&](std::ostream& f) { write_predictions(f, preds); });
  write_file(dir / "pool.tsv", [&](std::ostream& f) { model.save_checkpoint(f); });

  std::vector<std::pair<std::string, std::vector<Prediction>>> classifiers;
  classifiers.emplace_back("abcrm", std::move(preds));
  if (o.nb) {
    const NbModel nb = nb_fit(train, features, o.alpha);
    auto nb_preds = nb_predict_all(nb, test);
    write_file(dir / "nb.model.tsv", [&](std::ostream& f) { write_nb_model(f, nb); });
    write_file(dir / "nb.predictions.tsv", [&](std::ostream& f) { write_predictions(f, nb_preds); });
    classifiers.emplace_back("nb", std::move(nb_preds));
  }
  for (const auto& spec : o.imports) {
    auto [name, path] = named_path(spec);
    classifiers.emplace_back(name, load_predictions(path));
  }

  const auto docs = corpus.test();
  const bool labeled = std::all_of(docs.begin(), docs.end(), [](const Document& d) { return d.label != Label::Unlabeled; });
  if (!labeled) {
    err << "notice: test documents are unlabeled; wrote predictions only, metrics skipped\n";
    out << "predicted " << classifiers.front().second.size() << " documents into " << dir.string() << '\n';
    return kOk;
  }
  const Truth truth = truth_of(docs);
  std::vector<Scored> rows;
  for (const auto& [name, p] : classifiers) rows.push_back(score(name, p, truth));
  for (const auto& r : rows) {
    write_file(dir / ("metrics-" + r.name + ".txt"),
               [&](std::ostream& f) { write_metric_report(f, r.name, r.metrics, r.confusion); });
  }
  write_file(dir / "comparison.tsv", [&](std::ostream& f) { write_comparison(f, rows); });
  write_comparison(out, rows);
  return kOk;
}

void write_summary(std::ostream& out, const std::vector<std::pair<Setup, SetupSummary>>& rows) {
  out << "setup\tn\tmean_fscore\tstddev\tci95_low\tci95_high\tbest_fscore\tE0\tR0p\tR0m\tdE\tdR\tnA\n";
  for (const auto& [setup, s] : rows) {
    out << setup_id(setup) << '\t' << s.n << '\t' << format_fixed(s.mean, 6) << '\t'
        << format_fixed(s.stddev, 6) << '\t' << format_fixed(s.ci_low, 6) << '\t'
        << format_fixed(s.ci_high, 6);
    if (s.best) {
      const auto& p = s.best->params;
      out << '\t' << format_fixed(s.best->report.fscore, 6) << '\t' << p.initial_effectors << '\t'
          << p.initial_regulators_pos << '\t' << p.initial_regulators_neg << '\t'
          << format_real(p.effector_death) << '\t' << format_real(p.regulator_death) << '\t'
          << p.presentations;
    } else {
      out << "\t\t\t\t\t\t\t";
    }
    out << '\n';
  }
}

void write_top(std::ostream& out, const std::vector<std::pair<Setup, std::vector<RunResult>>>& tops) {
  out << "setup\trank\tfscore\tE0\tR0p\tR0m\tdE\tdR\tnA\n";
  for (const auto& [setup, top] : tops) {
    for (std::size_t i = 0; i < top.size(); ++i) {
      const auto& p = top[i].params;
      out << setup_id(setup) << '\t' << i + 1 << '\t' << format_fixed(top[i].report.fscore, 6) << '\t'
          << p.initial_effectors << '\t' << p.initial_regulators_pos << '\t' << p.initial_regulators_neg
          << '\t' << format_real(p.effector_death) << '\t' << format_real(p.regulator_death) << '\t'
          << p.presentations << '\n';
    }
  }
}

struct PairVerdict {
  Setup a;
  Setup b;
  Comparison c;
};

void write_comparisons(std::ostream& out, const std::vector<PairVerdict>& rows) {
  out << "setup_a\tsetup_b\tn\tt\tp\tverdict\n";
  for (const auto& r : rows) {
    out << setup_id(r.a) << '\t' << setup_id(r.b) << '\t' << r.c.n << '\t' << format_real(r.c.test.t) << '\t'
        << format_real(r.c.test.p) << '\t' << (r.c.distinct ? "distinct" : "indistinguishable") << '\n';
  }
}

std::vector<PairVerdict> pairwise(const std::vector<std::pair<Setup, std::vector<RunResult>>>& sets,
                                  std::size_t k, std::ostream& err) {
  std::vector<PairVerdict> out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      const std::size_t n = std::min({k, sets[i].second.size(), sets[j].second.size()});
      if (n < 2) {
        err << "warning: " << setup_id(sets[i].first) << " vs " << setup_id(sets[j].first)
            << ": fewer than 2 results, comparison skipped\n";
        continue;
      }
      out.push_back({sets[i].first, sets[j].first, compare_setups(sets[i].second, sets[j].second, k)});
    }
  }
  return out;
}

int cmd_sweep(const SweepCommandOptions& o, const std::vector<std::string>& setup_ids, std::ostream& out,
              std::ostream& err) {
  std::vector<Setup> setups;
  for (const auto& id : setup_ids) {
    try {
      const Setup s = parse_setup(id);
      if (std::find(setups.begin(), setups.end(), s) != setups.end()) {
        throw UsageError("setup " + id + " listed twice");
      }
      setups.push_back(s);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
  const GridSpec spec = grid_spec(o);
  const Corpus corpus = load_corpus(o.in.corpus);
  const StopWordList stop = stop_words(o.in);
  const FeatureSet features = feature_set(o.in, corpus, stop);
  const ExperimentData data = prepare_experiment(corpus, features, stop);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  write_file(dir / "features.tsv", [&](std::ostream& f) { write_feature_set(f, features); });

  SweepOptions options;
  options.seed = o.seed;
  options.workers = o.workers;
  options.replicates = o.replicates;
  options.checkpoint_every = o.checkpoint_every;
  if (o.stop_after > 0) options.stop_after = o.stop_after;

  std::vector<std::pair<Setup, std::vector<RunResult>>> finished;
  std::size_t budget = o.stop_after;
  for (const Setup s : setups) {
    const fs::path log = dir / ("results-" + std::string(setup_id(s)) + ".tsv");
    if (o.no_resume) fs::remove(log);
    if (o.stop_after > 0) options.stop_after = budget;
    const SweepOutcome outcome = run_experiment(s, data, spec, options, log);
    err << "setup " << setup_id(s) << ": " << outcome.resumed << " grid points resumed, " << outcome.computed
        << " computed\n";
    if (!outcome.complete) {
      err << "interrupted: setup " << setup_id(s) << " has " << outcome.results.size() << " of "
          << Grid(effective_grid(s, spec)).size() << " grid points; rerun the same command to resume\n";
      return kInterrupted;
    }
    if (o.stop_after > 0) budget -= std::min(budget, outcome.computed);
    finished.emplace_back(s, outcome.results);
  }

  std::vector<std::pair<Setup, SetupSummary>> summaries;
  std::vector<std::pair<Setup, std::vector<RunResult>>> tops;
  for (const auto& [s, results] : finished) {
    summaries.emplace_back(s, summarize(results, o.top_k));
    tops.emplace_back(s, top_k(results, o.top_k));
  }
  write_file(dir / "summary.tsv", [&](std::ostream& f) { write_summary(f, summaries); });
  write_file(dir / "top.tsv", [&](std::ostream& f) { write_top(f, tops); });
  write_summary(out, summaries);
  if (finished.size() > 1) {
    const auto verdicts = pairwise(finished, o.top_k, err);
    write_file(dir / "comparisons.tsv", [&](std::ostream& f) { write_comparisons(f, verdicts); });
    write_comparisons(out, verdicts);
  }
  return kOk;
}

int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream& err) {
  if (o.results.empty() && o.predictions.empty()) {
    throw UsageError("report needs --results and/or --predictions");
  }
  const fs::path dir = o.out_dir;
  if (!o.results.empty()) {
    std::vector<std::pair<Setup, std::vector<RunResult>>> sets;
    for (const auto& path : o.results) {
      auto grouped = group_rows(load_results_log(path));
      if (grouped.empty()) throw Error("results log " + path + " has no rows");
      const Setup s = grouped.front().setup;
      for (const auto& r : grouped) {
        if (r.setup != s) throw Error("results log " + path + " mixes setups");
      }
      sets.emplace_back(s, std::move(grouped));
    }
    std::vector<std::pair<Setup, SetupSummary>> summaries;
    for (const auto& [s, results] : sets) summaries.emplace_back(s, summarize(results, o.top_k));
    write_summary(out, summaries);
    const auto verdicts = pairwise(sets, o.top_k, err);
    if (sets.size() > 1) write_comparisons(out, verdicts);
    if (!o.out_dir.empty()) {
      write_file(dir / "summary.tsv", [&](std::ostream& f) { write_summary(f, summaries); });
      if (sets.size() > 1) {
        write_file(dir / "comparisons.tsv", [&](std::ostream& f) { write_comparisons(f, verdicts); });
      }
    }
  }
  if (!o.predictions.empty()) {
    if (o.corpus.empty()) throw UsageError("--predictions needs --corpus for the true labels");
    const Corpus corpus = load_corpus(o.corpus);
    const Truth truth = truth_of(corpus.test());
    if (truth.size() != corpus.partition.test_count) {
      throw UsageError("corpus " + o.corpus + " has unlabeled test documents; cannot score predictions");
    }
    std::vector<Scored> rows;
    for (const auto& spec : o.predictions) {
      const auto [name, path] = named_path(spec);
      rows.push_back(score(name, load_predictions(path), truth));
    }
    write_comparison(out, rows);
    if (!o.out_dir.empty()) {
      write_file(dir / "comparison.tsv", [&](std::ostream& f) { write_comparison(f, rows); });
    }
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options options;
  auto app = build_app(options);
  try {
    const auto merged = merge_config(*app, args);
    std::vector<const char*> argv{"abcrm"};
    for (const auto& a : merged) argv.push_back(a.c_str());
    app->parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (app->got_subcommand("synth")) return cmd_synth(options.synth, out);
    if (app->got_subcommand("features")) return cmd_features(options.features, out);
    if (app->got_subcommand("run")) return cmd_run(options.run, out, err);
    if (app->got_subcommand("grid")) return cmd_sweep(options.grid, {options.grid.setup}, out, err);
    if (app->got_subcommand("experiment")) {
      return cmd_sweep(options.experiment, options.experiment.setups, out, err);
    }
    if (app->got_subcommand("report")) return cmd_report(options.report, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace abcrm::cli
