// Exhaustive parameter grids and the experiment harness.
//
// An experiment setup fixes the dynamics flags and the document ordering;
// run_experiment evaluates every grid point of a setup on a labeled
// train/test split. Shuffled setups run several orderings per grid point
// and are ranked by their mean F-score.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abcrm/dynamics.hpp"
#include "abcrm/metrics.hpp"

namespace abcrm {

/// Inclusive range min, min+step, ..., <= max.
struct Axis {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::size_t size() const;
  double value(std::size_t i) const;
  /// Position of `v` on the axis, if it is one of the axis values.
  std::optional<std::size_t> position(double v) const;
};

/// Per-parameter ranges. Defaults enumerate 7*10*10*5*5*11 = 192,500 points.
struct GridSpec {
  Axis initial_effectors{1, 7, 1};
  Axis initial_regulators_pos{3, 12, 1};
  Axis initial_regulators_neg{3, 12, 1};
  Axis effector_death{0.0, 0.4, 0.1};
  Axis regulator_death{0.0, 0.4, 0.1};
  Axis presentations{2, 22, 2};

  /// One-point grid at `p`.
  static GridSpec single(const ParameterSet& p);
  /// Throws InvalidArgument on a non-positive step, min > max, or
  /// non-integral bounds/steps on integer axes.
  void validate() const;
};

/// Random-access view of a grid in lexicographic order
/// (E0, R0+, R0-, dE, dR, nA), nA varying fastest.
class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  std::size_t size() const noexcept { return size_; }
  ParameterSet at(std::size_t index) const;
  std::optional<std::size_t> index_of(const ParameterSet& p) const;
  const GridSpec& spec() const noexcept { return spec_; }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = ParameterSet;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    iterator(const Grid* grid, std::size_t i) : grid_(grid), i_(i) {}
    ParameterSet operator*() const { return grid_->at(i_); }
    iterator& operator++() {
      ++i_;
      return *this;
    }
    iterator operator++(int) {
      auto copy = *this;
      ++i_;
      return copy;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.i_ == b.i_; }

   private:
    const Grid* grid_ = nullptr;
    std::size_t i_ = 0;
  };

  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, size_}; }

 private:
  std::array<Axis, 6> axes() const;

  GridSpec spec_;
  std::array<std::size_t, 6> sizes_{};
  std::size_t size_ = 0;
};

/// Validates `spec` and returns its enumeration.
Grid enumerate_grid(const GridSpec& spec);

enum class Setup {
  BothDeath,          // 1.1
  BothNoDeath,        // 1.2
  PositiveDeath,      // 2.1
  PositiveNoDeath,    // 2.2
  OrderedOrdered,     // 3.1
  OrderedShuffled,    // 3.2
  ShuffledShuffled,   // 3.3
  ShuffledOrdered,    // 3.4
  Canonical,          // 4.1
  IncrementalBias,    // 4.2
};

inline constexpr Setup kAllSetups[] = {
    Setup::BothDeath,        Setup::BothNoDeath,      Setup::PositiveDeath,
    Setup::PositiveNoDeath,  Setup::OrderedOrdered,   Setup::OrderedShuffled,
    Setup::ShuffledShuffled, Setup::ShuffledOrdered,  Setup::Canonical,
    Setup::IncrementalBias};

struct SetupTraits {
  bool cell_death = true;
  bool pu_training = false;
  bool incremental_bias = false;
  bool shuffle_train = false;
  bool shuffle_test = false;

  bool shuffled() const noexcept { return shuffle_train || shuffle_test; }
};

std::string_view setup_id(Setup s) noexcept;
/// "1.1" ... "4.2". Throws InvalidArgument("unknown setup id ...").
Setup parse_setup(std::string_view id);
SetupTraits setup_traits(Setup s) noexcept;
/// The grid actually swept: setups without cell death collapse both death
/// axes to the single value 0.
GridSpec effective_grid(Setup s, const GridSpec& spec);

/// Training and test documents in timestamp order; test labels are kept
/// only in `truth` and hidden from the dynamics.
struct ExperimentData {
  std::vector<PreparedDocument> train;
  std::vector<PreparedDocument> test;
  Truth truth;
};

/// Throws InvalidArgument if a test document is unlabeled.
ExperimentData prepare_experiment(const Corpus& corpus, const FeatureSet& features,
                                  const StopWordList& stop = StopWordList::english_default());

struct RunResult {
  Setup setup = Setup::Canonical;
  std::size_t grid_index = 0;
  ParameterSet params;
  /// One run seed per ordering; ordered setups have exactly one.
  std::vector<std::uint64_t> seeds;
  std::vector<MetricReport> per_seed;
  /// Mean over per_seed.
  MetricReport report;
};

/// Seed of replicate `replicate` at grid point `params`: a hash of the base
/// seed and the parameter tuple, independent of the setup so that setups
/// differing only in flags share their randomness.
std::uint64_t run_seed(std::uint64_t base_seed, const ParameterSet& params, std::size_t replicate);

/// One stream through the dynamics. Dynamics and ordering randomness both
/// derive from `seed`. Metrics are rounded to 6 decimals, as logged.
MetricReport run_once(const ExperimentData& data, Setup setup, const ParameterSet& params,
                      std::uint64_t seed);

struct SweepOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  /// Orderings per grid point for shuffled setups.
  std::size_t replicates = 8;
  /// Completed grid points between flushes of the results log.
  std::size_t checkpoint_every = 64;
  /// Stop (without finalizing the log) once this many grid points have
  /// been computed in this call. Used to exercise resumption.
  std::optional<std::size_t> stop_after;
};

struct SweepOutcome {
  /// Completed results in grid order.
  std::vector<RunResult> results;
  std::size_t resumed = 0;
  std::size_t computed = 0;
  bool complete = false;
};

/// Evaluates every grid point of `setup`. With a log path, rows are
/// appended as grid points finish; an existing log is resumed (complete
/// grid points are kept, partial ones recomputed) and the finished log is
/// rewritten in grid order.
SweepOutcome run_experiment(Setup setup, const ExperimentData& data, const GridSpec& spec,
                            const SweepOptions& options,
                            const std::optional<std::filesystem::path>& log = std::nullopt);

/// Results-log rows:
///   setup E0 R0p R0m dE dR nA seed precision recall fscore accuracy auc mcc
void write_results_header(std::ostream& out);
void write_result_rows(std::ostream& out, const RunResult& r);

struct LogRow {
  Setup setup = Setup::Canonical;
  ParameterSet params;
  std::uint64_t seed = 0;
  MetricReport metrics;
};

/// Parses a results log. A final line without a newline is treated as an
/// interrupted write and ignored.
std::vector<LogRow> read_results_log(std::istream& in);
std::vector<LogRow> load_results_log(const std::filesystem::path& path);

/// Groups consecutive rows of one setup sharing a parameter tuple into
/// RunResults (grid_index = order of first appearance).
std::vector<RunResult> group_rows(const std::vector<LogRow>& rows);

/// The k results with highest mean F-score; ties keep grid order.
std::vector<RunResult> top_k(const std::vector<RunResult>& results, std::size_t k = 50);

struct Comparison {
  TTest test;
  bool distinct = false;  // p < 0.01
  std::size_t n = 0;
};

/// Paired t-test of the two top-k F-score lists, paired by rank.
Comparison compare_setups(const std::vector<RunResult>& a, const std::vector<RunResult>& b,
                          std::size_t k = 50);

struct SetupSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double ci_low = 0.0;   // 95% confidence interval of the mean
  double ci_high = 0.0;
  std::optional<RunResult> best;
};

/// Statistics of the top-k F-scores.
SetupSummary summarize(const std::vector<RunResult>& results, std::size_t k = 50);

}  // namespace abcrm
