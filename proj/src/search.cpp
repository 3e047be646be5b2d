#include "abcrm/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "abcrm/error.hpp"
#include "abcrm/format.hpp"

namespace abcrm {

namespace {

constexpr double kAxisTolerance = 1e-9;

double snap(double v) { return std::round(v * 1e9) / 1e9; }

bool is_integral(double v) { return std::abs(v - std::round(v)) < kAxisTolerance; }

}  // namespace

std::size_t Axis::size() const {
  return static_cast<std::size_t>(std::floor((max - min) / step + kAxisTolerance)) + 1;
}

double Axis::value(std::size_t i) const { return snap(min + static_cast<double>(i) * step); }

std::optional<std::size_t> Axis::position(double v) const {
  const double i = std::round((v - min) / step);
  if (i < 0.0 || i >= static_cast<double>(size())) return std::nullopt;
  const auto pos = static_cast<std::size_t>(i);
  if (std::abs(value(pos) - v) > kAxisTolerance) return std::nullopt;
  return pos;
}

GridSpec GridSpec::single(const ParameterSet& p) {
  auto point = [](double v) { return Axis{v, v, 1.0}; };
  GridSpec g;
  g.initial_effectors = point(p.initial_effectors);
  g.initial_regulators_pos = point(p.initial_regulators_pos);
  g.initial_regulators_neg = point(p.initial_regulators_neg);
  g.effector_death = Axis{p.effector_death, p.effector_death, 0.1};
  g.regulator_death = Axis{p.regulator_death, p.regulator_death, 0.1};
  g.presentations = Axis{static_cast<double>(p.presentations), static_cast<double>(p.presentations), 2};
  return g;
}

void GridSpec::validate() const {
  const std::pair<const char*, const Axis*> named[] = {
      {"E0", &initial_effectors},    {"R0+", &initial_regulators_pos},
      {"R0-", &initial_regulators_neg}, {"dE", &effector_death},
      {"dR", &regulator_death},      {"nA", &presentations}};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& [name, axis] = named[i];
    if (!(axis->step > 0.0)) throw InvalidArgument(std::string("grid axis ") + name + ": step must be positive");
    if (axis->min > axis->max) throw InvalidArgument(std::string("grid axis ") + name + ": min > max");
    const bool integer_axis = i < 3 || i == 5;
    if (integer_axis && (!is_integral(axis->min) || !is_integral(axis->max) || !is_integral(axis->step))) {
      throw InvalidArgument(std::string("grid axis ") + name + ": bounds and step must be integers");
    }
    if (integer_axis && axis->min < 1.0) {
      throw InvalidArgument(std::string("grid axis ") + name + ": values must be positive");
    }
    if (!integer_axis && (axis->min < 0.0 || axis->max > 1.0 + kAxisTolerance)) {
      throw InvalidArgument(std::string("grid axis ") + name + ": rates must lie in [0,1]");
    }
  }
}

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto a = axes();
  size_ = 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sizes_[i] = a[i].size();
    size_ *= sizes_[i];
  }
}

std::array<Axis, 6> Grid::axes() const {
  return {spec_.initial_effectors, spec_.initial_regulators_pos, spec_.initial_regulators_neg,
          spec_.effector_death,    spec_.regulator_death,        spec_.presentations};
}

ParameterSet Grid::at(std::size_t index) const {
  if (index >= size_) throw InvalidArgument("grid index out of range");
  const auto a = axes();
  std::array<double, 6> v{};
  for (std::size_t i = a.size(); i-- > 0;) {
    v[i] = a[i].value(index % sizes_[i]);
    index /= sizes_[i];
  }
  ParameterSet p;
  p.initial_effectors = static_cast<std::uint32_t>(std::lround(v[0]));
  p.initial_regulators_pos = static_cast<std::uint32_t>(std::lround(v[1]));
  p.initial_regulators_neg = static_cast<std::uint32_t>(std::lround(v[2]));
  p.effector_death = v[3];
  p.regulator_death = v[4];
  p.presentations = static_cast<std::uint32_t>(std::lround(v[5]));
  return p;
}

std::optional<std::size_t> Grid::index_of(const ParameterSet& p) const {
  const auto a = axes();
  const double v[] = {static_cast<double>(p.initial_effectors),
                      static_cast<double>(p.initial_regulators_pos),
                      static_cast<double>(p.initial_regulators_neg),
                      p.effector_death,
                      p.regulator_death,
                      static_cast<double>(p.presentations)};
  std::size_t index = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto pos = a[i].position(v[i]);
    if (!pos) return std::nullopt;
    index = index * sizes_[i] + *pos;
  }
  return index;
}

Grid enumerate_grid(const GridSpec& spec) { return Grid(spec); }

std::string_view setup_id(Setup s) noexcept {
  switch (s) {
    case Setup::BothDeath:
      return "1.1";
    case Setup::BothNoDeath:
      return "1.2";
    case Setup::PositiveDeath:
      return "2.1";
    case Setup::PositiveNoDeath:
      return "2.2";
    case Setup::OrderedOrdered:
      return "3.1";
    case Setup::OrderedShuffled:
      return "3.2";
    case Setup::ShuffledShuffled:
      return "3.3";
    case Setup::ShuffledOrdered:
      return "3.4";
    case Setup::Canonical:
      return "4.1";
    case Setup::IncrementalBias:
      return "4.2";
  }
  return "?";
}

Setup parse_setup(std::string_view id) {
  for (Setup s : kAllSetups) {
    if (setup_id(s) == id) return s;
  }
  throw InvalidArgument("unknown setup id '" + std::string(id) + "'");
}

SetupTraits setup_traits(Setup s) noexcept {
  SetupTraits t;
  switch (s) {
    case Setup::BothDeath:
    case Setup::OrderedOrdered:
    case Setup::Canonical:
      break;
    case Setup::BothNoDeath:
      t.cell_death = false;
      break;
    case Setup::PositiveDeath:
      t.pu_training = true;
      break;
    case Setup::PositiveNoDeath:
      t.pu_training = true;
      t.cell_death = false;
      break;
    case Setup::OrderedShuffled:
      t.shuffle_test = true;
      break;
    case Setup::ShuffledShuffled:
      t.shuffle_train = true;
      t.shuffle_test = true;
      break;
    case Setup::ShuffledOrdered:
      t.shuffle_train = true;
      break;
    case Setup::IncrementalBias:
      t.incremental_bias = true;
      break;
  }
  return t;
}

GridSpec effective_grid(Setup s, const GridSpec& spec) {
  GridSpec g = spec;
  if (!setup_traits(s).cell_death) {
    g.effector_death = Axis{0.0, 0.0, spec.effector_death.step};
    g.regulator_death = Axis{0.0, 0.0, spec.regulator_death.step};
  }
  return g;
}

ExperimentData prepare_experiment(const Corpus& corpus, const FeatureSet& features,
                                  const StopWordList& stop) {
  const StreamOrder by_time{OrderMode::ByTimestamp, OrderScope::Both, 0};
  ExperimentData data;
  const auto train = prepare(corpus.train(), features, stop);
  auto test = prepare(corpus.test(), features, stop);
  for (const auto& d : test) {
    if (d.label == Label::Unlabeled) {
      throw InvalidArgument("experiments need labeled test documents; '" + d.id + "' is unlabeled");
    }
    data.truth.emplace(d.id, d.label);
  }
  auto ordered = order_parts(train, std::move(test), by_time);
  const auto n_train = corpus.partition.train_count;
  data.train.assign(std::make_move_iterator(ordered.begin()),
                    std::make_move_iterator(ordered.begin() + static_cast<std::ptrdiff_t>(n_train)));
  data.test.assign(std::make_move_iterator(ordered.begin() + static_cast<std::ptrdiff_t>(n_train)),
                   std::make_move_iterator(ordered.end()));
  return data;
}

namespace {

std::string param_key(const ParameterSet& p) {
  return std::to_string(p.initial_effectors) + ',' + std::to_string(p.initial_regulators_pos) + ',' +
         std::to_string(p.initial_regulators_neg) + ',' + format_real(p.effector_death) + ',' +
         format_real(p.regulator_death) + ',' + std::to_string(p.presentations);
}

double round6(double v) {
  double out = 0.0;
  parse_real(format_fixed(v, 6), out);
  return out;
}

MetricReport round_report(const MetricReport& m) {
  return {round6(m.precision), round6(m.recall), round6(m.fscore),
          round6(m.accuracy),  round6(m.auc),    round6(m.mcc)};
}

MetricReport mean_report(const std::vector<MetricReport>& reports) {
  MetricReport m;
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.precision += r.precision;
    m.recall += r.recall;
    m.fscore += r.fscore;
    m.accuracy += r.accuracy;
    m.auc += r.auc;
    m.mcc += r.mcc;
  }
  const auto n = static_cast<double>(reports.size());
  m.precision /= n;
  m.recall /= n;
  m.fscore /= n;
  m.accuracy /= n;
  m.auc /= n;
  m.mcc /= n;
  return m;
}

std::size_t replicates_for(Setup setup, const SweepOptions& options) {
  return setup_traits(setup).shuffled() ? std::max<std::size_t>(options.replicates, 1) : 1;
}

RunResult evaluate_point(const ExperimentData& data, Setup setup, const Grid& grid, std::size_t index,
                         const SweepOptions& options) {
  RunResult r;
  r.setup = setup;
  r.grid_index = index;
  r.params = grid.at(index);
  const auto n = replicates_for(setup, options);
  for (std::size_t j = 0; j < n; ++j) {
    const auto seed = run_seed(options.seed, r.params, j);
    r.seeds.push_back(seed);
    r.per_seed.push_back(run_once(data, setup, r.params, seed));
  }
  r.report = mean_report(r.per_seed);
  return r;
}

void write_log_file(const std::filesystem::path& path, const std::vector<const RunResult*>& results) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write results log " + tmp.string());
    write_results_header(out);
    for (const auto* r : results) write_result_rows(out, *r);
    out.flush();
    if (!out) throw Error("error writing results log " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::uint64_t run_seed(std::uint64_t base_seed, const ParameterSet& params, std::size_t replicate) {
  return derive_seed(base_seed, param_key(params) + '/' + std::to_string(replicate));
}

MetricReport run_once(const ExperimentData& data, Setup setup, const ParameterSet& params,
                      std::uint64_t seed) {
  const SetupTraits traits = setup_traits(setup);
  DynamicsConfig config;
  config.seed = derive_seed(seed, "dynamics");
  config.cell_death = traits.cell_death;
  config.pu_training = traits.pu_training;
  config.incremental_bias = traits.incremental_bias;

  StreamOrder order;
  if (traits.shuffled()) {
    order.mode = OrderMode::Shuffled;
    order.scope = traits.shuffle_train && traits.shuffle_test ? OrderScope::Both
                  : traits.shuffle_train                     ? OrderScope::TrainOnly
                                                             : OrderScope::TestOnly;
    order.seed = derive_seed(seed, "order");
  }
  const auto stream = order_parts(data.train, hide_labels(data.test), order);
  const auto preds = process_stream(stream, params, config);
  return round_report(evaluate(preds, data.truth));
}

SweepOutcome run_experiment(Setup setup, const ExperimentData& data, const GridSpec& spec,
                            const SweepOptions& options,
                            const std::optional<std::filesystem::path>& log) {
  const Grid grid = enumerate_grid(effective_grid(setup, spec));
  const std::size_t n_rep = replicates_for(setup, options);
  std::vector<std::optional<RunResult>> slots(grid.size());
  SweepOutcome outcome;

  if (log && std::filesystem::exists(*log)) {
    std::map<std::size_t, std::vector<LogRow>> by_point;
    for (auto& row : load_results_log(*log)) {
      if (row.setup != setup) {
        throw InvalidArgument("results log " + log->string() + " holds setup " +
                              std::string(setup_id(row.setup)) + ", expected " +
                              std::string(setup_id(setup)));
      }
      const auto idx = grid.index_of(row.params);
      if (!idx) throw InvalidArgument("results log row outside the grid: " + param_key(row.params));
      by_point[*idx].push_back(std::move(row));
    }
    for (auto& [idx, rows] : by_point) {
      RunResult r;
      r.setup = setup;
      r.grid_index = idx;
      r.params = grid.at(idx);
      bool whole = true;
      for (std::size_t j = 0; j < n_rep && whole; ++j) {
        const auto seed = run_seed(options.seed, r.params, j);
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const LogRow& row) { return row.seed == seed; });
        if (it == rows.end()) {
          whole = false;
        } else {
          r.seeds.push_back(seed);
          r.per_seed.push_back(it->metrics);
        }
      }
      if (!whole) continue;
      r.report = mean_report(r.per_seed);
      slots[idx] = std::move(r);
      ++outcome.resumed;
    }
    std::vector<const RunResult*> kept;
    for (const auto& s : slots) {
      if (s) kept.push_back(&*s);
    }
    write_log_file(*log, kept);
  } else if (log) {
    write_log_file(*log, {});
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) pending.push_back(i);
  }

  std::ofstream appender;
  if (log) {
    appender.open(*log, std::ios::binary | std::ios::app);
    if (!appender) throw Error("cannot append to results log " + log->string());
  }
  std::mutex mu;
  std::string buffer;
  std::size_t unflushed = 0;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  const std::size_t limit = options.stop_after ? std::min(*options.stop_after, pending.size()) : pending.size();

  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= limit) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        RunResult r = evaluate_point(data, setup, grid, pending[k], options);
        std::ostringstream rows;
        write_result_rows(rows, r);
        std::lock_guard lock(mu);
        slots[pending[k]] = std::move(r);
        ++outcome.computed;
        if (log) {
          buffer += rows.str();
          if (++unflushed >= std::max<std::size_t>(options.checkpoint_every, 1)) {
            appender << buffer;
            appender.flush();
            buffer.clear();
            unflushed = 0;
          }
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, limit));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (log) {
    appender << buffer;
    appender.flush();
    appender.close();
  }
  if (failure) std::rethrow_exception(failure);

  outcome.complete = std::all_of(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); });
  std::vector<const RunResult*> ordered;
  for (auto& s : slots) {
    if (s) ordered.push_back(&*s);
  }
  if (log && outcome.complete) write_log_file(*log, ordered);
  outcome.results.reserve(ordered.size());
  for (auto& s : slots) {
    if (s) outcome.results.push_back(std::move(*s));
  }
  return outcome;
}

void write_results_header(std::ostream& out) {
  out << "#setup\tE0\tR0p\tR0m\tdE\tdR\tnA\tseed\tprecision\trecall\tfscore\taccuracy\tauc\tmcc\n";
}

void write_result_rows(std::ostream& out, const RunResult& r) {
  for (std::size_t j = 0; j < r.per_seed.size(); ++j) {
    const auto& m = r.per_seed[j];
    out << setup_id(r.setup) << '\t' << r.params.initial_effectors << '\t'
        << r.params.initial_regulators_pos << '\t' << r.params.initial_regulators_neg << '\t'
        << format_real(r.params.effector_death) << '\t' << format_real(r.params.regulator_death)
        << '\t' << r.params.presentations << '\t' << r.seeds[j] << '\t'
        << format_fixed(m.precision, 6) << '\t' << format_fixed(m.recall, 6) << '\t'
        << format_fixed(m.fscore, 6) << '\t' << format_fixed(m.accuracy, 6) << '\t'
        << format_fixed(m.auc, 6) << '\t' << format_fixed(m.mcc, 6) << '\n';
  }
}

std::vector<LogRow> read_results_log(std::istream& in) {
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<LogRow> rows;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    const auto end = content.find('\n', start);
    if (end == std::string::npos) break;  // interrupted final write
    ++line_no;
    std::string_view line(content.data() + start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, '\t');
    if (f.size() != 14) throw ParseError("expected 14 fields in results row", line_no);
    LogRow row;
    try {
      row.setup = parse_setup(f[0]);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
    auto& p = row.params;
    auto& m = row.metrics;
    const bool ok = parse_integer(f[1], p.initial_effectors) && parse_integer(f[2], p.initial_regulators_pos) &&
                    parse_integer(f[3], p.initial_regulators_neg) && parse_real(f[4], p.effector_death) &&
                    parse_real(f[5], p.regulator_death) && parse_integer(f[6], p.presentations) &&
                    parse_integer(f[7], row.seed) && parse_real(f[8], m.precision) &&
                    parse_real(f[9], m.recall) && parse_real(f[10], m.fscore) &&
                    parse_real(f[11], m.accuracy) && parse_real(f[12], m.auc) && parse_real(f[13], m.mcc);
    if (!ok) throw ParseError("bad number in results row", line_no);
    rows.push_back(row);
  }
  return rows;
}

std::vector<LogRow> load_results_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open results log " + path.string());
  return read_results_log(in);
}

std::vector<RunResult> group_rows(const std::vector<LogRow>& rows) {
  std::vector<RunResult> out;
  for (const auto& row : rows) {
    if (out.empty() || out.back().setup != row.setup || !(out.back().params == row.params)) {
      RunResult r;
      r.setup = row.setup;
      r.grid_index = out.size();
      r.params = row.params;
      out.push_back(std::move(r));
    }
    out.back().seeds.push_back(row.seed);
    out.back().per_seed.push_back(row.metrics);
  }
  for (auto& r : out) r.report = mean_report(r.per_seed);
  return out;
}

std::vector<RunResult> top_k(const std::vector<RunResult>& results, std::size_t k) {
  std::vector<RunResult> sorted = results;
  std::stable_sort(sorted.begin(), sorted.end(), [](const RunResult& a, const RunResult& b) {
    if (a.report.fscore != b.report.fscore) return a.report.fscore > b.report.fscore;
    return a.grid_index < b.grid_index;
  });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

Comparison compare_setups(const std::vector<RunResult>& a, const std::vector<RunResult>& b,
                          std::size_t k) {
  const auto top_a = top_k(a, k);
  const auto top_b = top_k(b, k);
  const std::size_t n = std::min(top_a.size(), top_b.size());
  std::vector<double> fa;
  std::vector<double> fb;
  for (std::size_t i = 0; i < n; ++i) {
    fa.push_back(top_a[i].report.fscore);
    fb.push_back(top_b[i].report.fscore);
  }
  Comparison c;
  c.n = n;
  c.test = paired_ttest(fa, fb);
  c.distinct = c.test.p < 0.01;
  return c;
}

SetupSummary summarize(const std::vector<RunResult>& results, std::size_t k) {
  const auto top = top_k(results, k);
  SetupSummary s;
  s.n = top.size();
  if (top.empty()) return s;
  for (const auto& r : top) s.mean += r.report.fscore;
  s.mean /= static_cast<double>(s.n);
  if (s.n >= 2) {
    double ss = 0.0;
    for (const auto& r : top) ss += (r.report.fscore - s.mean) * (r.report.fscore - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    const double half = t_critical(s.n - 1, 0.05) * s.stddev / std::sqrt(static_cast<double>(s.n));
    s.ci_low = s.mean - half;
    s.ci_high = s.mean + half;
  } else {
    s.ci_low = s.ci_high = s.mean;
  }
  s.best = top.front();
  return s;
}

}  // namespace abcrm
