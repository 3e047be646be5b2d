#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "abcrm/error.hpp"
#include "abcrm/search.hpp"

using namespace abcrm;

namespace {

ExperimentData small_data() {
  SyntheticSpec spec;
  spec.shared_vocab = 10;
  spec.train_relevant = spec.train_irrelevant = 8;
  spec.test_relevant = spec.test_irrelevant = 8;
  spec.min_length = 8;
  spec.max_length = 12;
  spec.drift_rate = 0.1;
  const Corpus c = generate_synthetic(spec, 5);
  TrainingSet train;
  for (const auto& d : c.train()) train.push_back({bag_of(d), d.label});
  return prepare_experiment(c, select_features(train, 30));
}

GridSpec tiny_grid() {
  GridSpec g;
  g.initial_effectors = {1, 3, 2};
  g.initial_regulators_pos = {5, 5, 1};
  g.initial_regulators_neg = {4, 6, 2};
  g.effector_death = {0.0, 0.2, 0.2};
  g.regulator_death = {0.3, 0.3, 0.1};
  g.presentations = {4, 6, 2};
  return g;
}

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "abcrm_search_tests";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult with_f(std::size_t index, double f) {
  RunResult r;
  r.grid_index = index;
  r.report.fscore = f;
  return r;
}

}  // namespace

TEST(Grid, DefaultCardinality) { EXPECT_EQ(enumerate_grid({}).size(), 192500u); }

TEST(Grid, SinglePointAndSingleAxis) {
  EXPECT_EQ(enumerate_grid(GridSpec::single(kReferenceParameters)).size(), 1u);
  auto g = GridSpec::single(kReferenceParameters);
  g.initial_effectors = {1, 7, 1};
  const Grid grid = enumerate_grid(g);
  EXPECT_EQ(grid.size(), 7u);
  EXPECT_EQ(grid.at(6).initial_effectors, 7u);
  EXPECT_EQ(grid.at(0).regulator_death, 0.3);
}

TEST(Grid, CardinalityIsProductOfAxisSizes) {
  for (int e = 1; e <= 3; ++e) {
    for (int n = 1; n <= 4; ++n) {
      GridSpec g = tiny_grid();
      g.initial_effectors = {1, static_cast<double>(e), 1};
      g.presentations = {2, 2.0 * n, 2};
      g.effector_death = {0.0, 0.1 * (n - 1), 0.1};
      const std::size_t expected = static_cast<std::size_t>(e) * n * 1 * 2 * n * 1;
      EXPECT_EQ(enumerate_grid(g).size(), expected);
    }
  }
}

TEST(Grid, OrderAndIndexRoundTrip) {
  const Grid grid = enumerate_grid({});
  EXPECT_EQ(grid.at(0), (ParameterSet{1, 3, 3, 0.0, 0.0, 2}));
  EXPECT_EQ(grid.at(1).presentations, 4u);
  EXPECT_EQ(grid.at(grid.size() - 1), (ParameterSet{7, 12, 12, 0.4, 0.4, 22}));
  for (std::size_t i = 0; i < grid.size(); i += 997) EXPECT_EQ(grid.index_of(grid.at(i)), i);
  ParameterSet off = grid.at(5);
  off.presentations = 3;
  EXPECT_FALSE(grid.index_of(off).has_value());
  std::size_t n = 0;
  for (auto it = grid.begin(); it != grid.end() && n < 12; ++it) ++n;
  EXPECT_EQ(n, 12u);
}

TEST(Grid, Validation) {
  GridSpec g;
  g.presentations = {2, 22, 0};
  EXPECT_THROW(enumerate_grid(g), InvalidArgument);
  g = {};
  g.initial_effectors = {5, 1, 1};
  EXPECT_THROW(enumerate_grid(g), InvalidArgument);
  g = {};
  g.initial_effectors = {1, 2, 0.5};
  EXPECT_THROW(enumerate_grid(g), InvalidArgument);
}

TEST(Setups, ParseAndTraits) {
  for (abcrm::Setup s : kAllSetups) EXPECT_EQ(parse_setup(setup_id(s)), s);
  EXPECT_THROW(parse_setup("5.1"), InvalidArgument);
  EXPECT_FALSE(setup_traits(Setup::BothNoDeath).cell_death);
  EXPECT_TRUE(setup_traits(Setup::PositiveDeath).pu_training);
  EXPECT_TRUE(setup_traits(Setup::IncrementalBias).incremental_bias);
  EXPECT_TRUE(setup_traits(Setup::OrderedShuffled).shuffle_test);
  EXPECT_FALSE(setup_traits(Setup::OrderedShuffled).shuffle_train);
  EXPECT_TRUE(setup_traits(Setup::ShuffledOrdered).shuffle_train);
  EXPECT_FALSE(setup_traits(Setup::Canonical).shuffled());
}

TEST(Setups, NoDeathCollapsesDeathAxes) {
  EXPECT_EQ(enumerate_grid(effective_grid(Setup::BothNoDeath, {})).size(), 7700u);
  EXPECT_EQ(enumerate_grid(effective_grid(Setup::PositiveNoDeath, {})).size(), 7700u);
  EXPECT_EQ(enumerate_grid(effective_grid(Setup::BothDeath, {})).size(), 192500u);
}

TEST(Experiment, CanonicalAliasesAgree) {
  const auto data = small_data();
  SweepOptions opts;
  opts.seed = 3;
  const auto a = run_experiment(Setup::BothDeath, data, tiny_grid(), opts);
  const auto b = run_experiment(Setup::OrderedOrdered, data, tiny_grid(), opts);
  const auto c = run_experiment(Setup::Canonical, data, tiny_grid(), opts);
  ASSERT_EQ(a.results.size(), enumerate_grid(tiny_grid()).size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_EQ(a.results[i].report, b.results[i].report);
    EXPECT_EQ(a.results[i].report, c.results[i].report);
    EXPECT_EQ(a.results[i].seeds.size(), 1u);
  }
}

TEST(Experiment, ShuffledSetupsReplicate) {
  const auto data = small_data();
  SweepOptions opts;
  opts.seed = 3;
  const auto out = run_experiment(Setup::ShuffledShuffled, data, GridSpec::single(kReferenceParameters), opts);
  ASSERT_EQ(out.results.size(), 1u);
  const auto& r = out.results[0];
  EXPECT_EQ(r.seeds.size(), 8u);
  EXPECT_EQ(std::set<std::uint64_t>(r.seeds.begin(), r.seeds.end()).size(), 8u);
  double mean = 0;
  for (const auto& m : r.per_seed) mean += m.fscore;
  EXPECT_NEAR(r.report.fscore, mean / 8, 1e-12);
}

TEST(Experiment, PuSetupDiffersFromFullTraining) {
  const auto data = small_data();
  SweepOptions opts;
  opts.seed = 3;
  const auto full = run_experiment(Setup::BothDeath, data, tiny_grid(), opts);
  const auto pu = run_experiment(Setup::PositiveDeath, data, tiny_grid(), opts);
  bool any_diff = false;
  for (std::size_t i = 0; i < full.results.size(); ++i) any_diff |= !(full.results[i].report == pu.results[i].report);
  EXPECT_TRUE(any_diff);
}

TEST(Experiment, WorkerCountDoesNotChangeResults) {
  const auto data = small_data();
  SweepOptions one;
  one.seed = 11;
  SweepOptions three = one;
  three.workers = 3;
  const auto p1 = temp_path("w1.tsv"), p3 = temp_path("w3.tsv");
  run_experiment(Setup::OrderedShuffled, data, tiny_grid(), one, p1);
  run_experiment(Setup::OrderedShuffled, data, tiny_grid(), three, p3);
  EXPECT_EQ(slurp(p1), slurp(p3));
}

TEST(Experiment, ResumeMatchesUninterruptedRun) {
  const auto data = small_data();
  SweepOptions opts;
  opts.seed = 21;
  opts.checkpoint_every = 2;
  const auto full = temp_path("full.tsv"), part = temp_path("part.tsv");
  run_experiment(Setup::BothDeath, data, tiny_grid(), opts, full);

  SweepOptions stop = opts;
  stop.stop_after = 5;
  const auto first = run_experiment(Setup::BothDeath, data, tiny_grid(), stop, part);
  EXPECT_FALSE(first.complete);
  EXPECT_EQ(first.computed, 5u);
  // Simulate a write cut short by a kill.
  {
    std::ofstream app(part, std::ios::app);
    app << "1.1\t1\t5";
  }
  const auto second = run_experiment(Setup::BothDeath, data, tiny_grid(), opts, part);
  EXPECT_TRUE(second.complete);
  EXPECT_EQ(second.resumed, 5u);
  EXPECT_EQ(second.resumed + second.computed, enumerate_grid(tiny_grid()).size());
  EXPECT_EQ(slurp(part), slurp(full));
}

TEST(ResultsLog, RoundTripAndTruncatedLine) {
  const auto data = small_data();
  SweepOptions opts;
  opts.seed = 2;
  opts.replicates = 3;
  const auto out = run_experiment(Setup::OrderedShuffled, data, tiny_grid(), opts);
  std::stringstream io;
  write_results_header(io);
  for (const auto& r : out.results) write_result_rows(io, r);
  const auto rows = read_results_log(io);
  EXPECT_EQ(rows.size(), out.results.size() * 3);
  const auto grouped = group_rows(rows);
  ASSERT_EQ(grouped.size(), out.results.size());
  for (std::size_t i = 0; i < grouped.size(); ++i) {
    EXPECT_EQ(grouped[i].params, out.results[i].params);
    EXPECT_EQ(grouped[i].seeds, out.results[i].seeds);
    EXPECT_NEAR(grouped[i].report.fscore, out.results[i].report.fscore, 1e-12);
  }
  std::stringstream cut(io.str().substr(0, io.str().size() - 3));
  EXPECT_EQ(read_results_log(cut).size(), rows.size() - 1);
  std::stringstream bad("1.1\t1\n");
  EXPECT_THROW(read_results_log(bad), ParseError);
}

TEST(TopK, Examples) {
  std::vector<RunResult> results;
  for (std::size_t i = 0; i < 100; ++i) results.push_back(with_f(i, static_cast<double>(i % 10) / 10.0));
  const auto top = top_k(results, 5);
  ASSERT_EQ(top.size(), 5u);
  EXPECT_EQ(top[0].grid_index, 9u);
  EXPECT_EQ(top[1].grid_index, 19u);
  EXPECT_EQ(top[4].grid_index, 49u);
  EXPECT_EQ(top_k(results, 500).size(), 100u);
}

TEST(TopK, SortedAndFromInput) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RunResult> results;
    for (std::size_t i = 0; i < 60; ++i) results.push_back(with_f(i, static_cast<double>(rng.uniform_below(20)) / 20));
    const auto top = top_k(results, 50);
    for (std::size_t i = 0; i + 1 < top.size(); ++i) {
      EXPECT_TRUE(top[i].report.fscore > top[i + 1].report.fscore ||
                  (top[i].report.fscore == top[i + 1].report.fscore && top[i].grid_index < top[i + 1].grid_index));
    }
    // Nothing left out beats the weakest kept result.
    std::set<std::size_t> kept;
    for (const auto& r : top) kept.insert(r.grid_index);
    for (const auto& r : results) {
      if (!kept.count(r.grid_index)) {
        EXPECT_LE(r.report.fscore, top.back().report.fscore);
      }
    }
  }
}

TEST(Compare, IdenticalAndShiftedLists) {
  std::vector<RunResult> a, b, c;
  for (std::size_t i = 0; i < 50; ++i) {
    const double f = 0.5 + 0.004 * static_cast<double>(i);
    a.push_back(with_f(i, f));
    b.push_back(with_f(i, f));
    c.push_back(with_f(i, f - 0.05 - ((i % 2) ? 0.001 : 0.0)));
  }
  const auto same = compare_setups(a, b);
  EXPECT_EQ(same.test.p, 1.0);
  EXPECT_FALSE(same.distinct);
  EXPECT_EQ(same.n, 50u);
  const auto shifted = compare_setups(a, c);
  EXPECT_TRUE(shifted.distinct);
  EXPECT_GT(shifted.test.t, 0.0);
}

TEST(Summary, MeanAndInterval) {
  std::vector<RunResult> results = {with_f(0, 0.2), with_f(1, 0.4), with_f(2, 0.6)};
  const auto s = summarize(results, 50);
  EXPECT_EQ(s.n, 3u);
  EXPECT_NEAR(s.mean, 0.4, 1e-12);
  EXPECT_NEAR(s.stddev, 0.2, 1e-12);
  EXPECT_NEAR(s.ci_high - s.mean, t_critical(2, 0.05) * 0.2 / std::sqrt(3.0), 1e-12);
  ASSERT_TRUE(s.best.has_value());
  EXPECT_EQ(s.best->grid_index, 2u);
}
