#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abcrm/error.hpp"
#include "abcrm/metrics.hpp"
#include "abcrm/rng.hpp"

using namespace abcrm;

namespace {

struct Labeled {
  std::vector<Prediction> preds;
  Truth truth;
};

// Scores in the given order; `positive[i]` is the truth of document i.
Labeled ranked(const std::vector<double>& scores, const std::vector<bool>& positive) {
  Labeled out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::string id = "d" + std::to_string(i);
    out.preds.push_back({id, scores[i] >= 0 ? Label::Relevant : Label::Irrelevant, scores[i]});
    out.truth[id] = positive[i] ? Label::Relevant : Label::Irrelevant;
  }
  return out;
}

Confusion confusion_of(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
  Confusion c;
  c.tp = tp;
  c.fp = fp;
  c.tn = tn;
  c.fn = fn;
  return c;
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

}  // namespace

TEST(Confusion, AllRelevantBaseline) {
  Labeled l;
  for (int i = 0; i < 532; ++i) {
    const std::string id = "d" + std::to_string(i);
    l.preds.push_back({id, Label::Relevant, 0.0});
    l.truth[id] = i < 63 ? Label::Relevant : Label::Irrelevant;
  }
  const auto c = confusion(l.preds, l.truth);
  EXPECT_EQ(c, confusion_of(63, 469, 0, 0));
  const auto m = basic_metrics(c);
  EXPECT_NEAR(m.precision, 63.0 / 532.0, 1e-15);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.mcc, 0.0);
}

TEST(Confusion, RejectsMismatchedIds) {
  Truth truth{{"a", Label::Relevant}, {"b", Label::Irrelevant}};
  EXPECT_THROW(confusion({{"a", Label::Relevant, 0}}, truth), InvalidArgument);
  EXPECT_THROW(confusion({{"a", Label::Relevant, 0}, {"a", Label::Relevant, 0}, {"b", Label::Relevant, 0}}, truth),
               InvalidArgument);
  EXPECT_THROW(confusion({{"a", Label::Relevant, 0}, {"zz", Label::Relevant, 0}}, truth), InvalidArgument);
}

TEST(BasicMetrics, WorkedExample) {
  const auto m = basic_metrics(confusion_of(41, 145, 387, 22));
  EXPECT_NEAR(m.precision, 41.0 / 186.0, 1e-15);
  EXPECT_NEAR(m.recall, 41.0 / 63.0, 1e-15);
  EXPECT_NEAR(m.fscore, 82.0 / 249.0, 1e-15);
  EXPECT_NEAR(m.accuracy, 428.0 / 595.0, 1e-15);
  EXPECT_NEAR(m.mcc, (41.0 * 387 - 145.0 * 22) / std::sqrt(186.0 * 63 * 532 * 409), 1e-15);
  EXPECT_EQ(round2(m.recall), 0.65);
  EXPECT_EQ(round2(m.fscore), 0.33);
  EXPECT_EQ(round2(m.mcc), 0.25);
}

TEST(BasicMetrics, DegenerateRatiosAreZero) {
  const auto empty = basic_metrics({});
  EXPECT_EQ(empty, MetricReport{});
  const auto none_predicted = basic_metrics(confusion_of(0, 0, 5, 5));
  EXPECT_EQ(none_predicted.precision, 0.0);
  EXPECT_EQ(none_predicted.fscore, 0.0);
  EXPECT_EQ(none_predicted.accuracy, 0.5);
}

TEST(BasicMetrics, MccSymmetricUnderClassSwap) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = confusion_of(rng.uniform_below(50), rng.uniform_below(50), rng.uniform_below(50),
                                rng.uniform_below(50));
    const auto swapped = confusion_of(c.tn, c.fn, c.tp, c.fp);
    EXPECT_NEAR(basic_metrics(c).mcc, basic_metrics(swapped).mcc, 1e-12);
    EXPECT_GE(basic_metrics(c).mcc, -1.0);
    EXPECT_LE(basic_metrics(c).mcc, 1.0);
  }
}

TEST(PrAuc, PerfectRankingIsOne) {
  const auto l = ranked({4, 3, 2, 1}, {true, true, false, false});
  EXPECT_DOUBLE_EQ(pr_auc(l.preds, l.truth), 1.0);
}

TEST(PrAuc, SinglePositiveRankedLast) {
  const auto l = ranked({4, 3, 2, 1}, {false, false, false, true});
  EXPECT_DOUBLE_EQ(pr_auc(l.preds, l.truth), 0.25);
}

TEST(PrAuc, InterpolationUsesLaterPrecision) {
  // Ranks: -, +, +. Recall 0.5 at precision 0.5, recall 1 at 2/3.
  const auto l = ranked({3, 2, 1}, {false, true, true});
  EXPECT_NEAR(pr_auc(l.preds, l.truth), 2.0 / 3.0, 1e-15);
}

TEST(PrAuc, TiedScoresFormOneBlock) {
  const auto l = ranked({1, 1, 1, 1}, {true, false, true, false});
  EXPECT_DOUBLE_EQ(pr_auc(l.preds, l.truth), 0.5);
}

TEST(PrAuc, NoPositiveThrows) {
  const auto l = ranked({1, 2}, {false, false});
  EXPECT_THROW(pr_auc(l.preds, l.truth), InvalidArgument);
  EXPECT_EQ(evaluate(l.preds, l.truth).auc, 0.0);
}

TEST(PrAuc, RandomScoresApproachPrevalence) {
  Rng rng(2);
  constexpr int kDocs = 4000;
  std::vector<double> scores;
  std::vector<bool> positive;
  for (int i = 0; i < kDocs; ++i) {
    scores.push_back(rng.uniform01());
    positive.push_back(rng.bernoulli(0.2));
  }
  const auto l = ranked(scores, positive);
  EXPECT_NEAR(pr_auc(l.preds, l.truth), 0.2, 0.03);
}

TEST(PrAuc, InvariantUnderMonotoneTransform) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores, squashed;
    std::vector<bool> positive;
    for (int i = 0; i < 30; ++i) {
      scores.push_back(static_cast<double>(rng.uniform_below(10)) - 5.0);
      squashed.push_back(std::tanh(scores.back() / 3.0) * 7.0 + 1.0);
      positive.push_back(i == 0 || rng.bernoulli(0.4));
    }
    const auto a = ranked(scores, positive);
    const auto b = ranked(squashed, positive);
    EXPECT_NEAR(pr_auc(a.preds, a.truth), pr_auc(b.preds, b.truth), 1e-12);
  }
}

TEST(Evaluate, InvariantUnderPredictionOrder) {
  Rng rng(4);
  std::vector<double> scores;
  std::vector<bool> positive;
  for (int i = 0; i < 40; ++i) {
    scores.push_back(rng.uniform01() - 0.5);
    positive.push_back(i % 3 == 0);
  }
  auto l = ranked(scores, positive);
  const auto before = evaluate(l.preds, l.truth);
  rng.shuffle(l.preds.begin(), l.preds.end());
  EXPECT_EQ(evaluate(l.preds, l.truth), before);
}

TEST(TTest, KnownValues) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {0, 1, 1, 3, 3};
  // Differences 1,1,2,1,2: mean 1.4, sd sqrt(0.3).
  const auto t = paired_ttest(a, b);
  EXPECT_NEAR(t.t, 1.4 / std::sqrt(0.3 / 5), 1e-12);
  EXPECT_EQ(t.df, 4u);
  EXPECT_NEAR(t.p, 0.0046358, 1e-6);
}

TEST(TTest, ZeroVarianceDifferences) {
  const std::vector<double> a = {1, 2, 3};
  EXPECT_EQ(paired_ttest(a, a).p, 1.0);
  const std::vector<double> b = {0, 1, 2};
  const auto t = paired_ttest(a, b);
  EXPECT_EQ(t.p, 0.0);
  EXPECT_TRUE(std::isinf(t.t));
}

TEST(TTest, Errors) {
  const std::vector<double> one = {1}, two = {1, 2};
  EXPECT_THROW(paired_ttest(one, one), InvalidArgument);
  EXPECT_THROW(paired_ttest(one, two), InvalidArgument);
}

TEST(TTest, CriticalValuesFromTables) {
  EXPECT_NEAR(t_critical(49, 0.01), 2.68, 0.005);
  EXPECT_NEAR(t_critical(10, 0.05), 2.228, 5e-4);
  EXPECT_NEAR(t_critical(1, 0.05), 12.706, 5e-4);
}

TEST(TTest, SwappingSamplesNegatesT) {
  const std::vector<double> a = {0.5, 0.7, 0.6, 0.9}, b = {0.4, 0.75, 0.5, 0.6};
  const auto ab = paired_ttest(a, b), ba = paired_ttest(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
}

TEST(PredictionsFile, RoundTrip) {
  const std::vector<Prediction> preds = {{"a", Label::Relevant, 0.1}, {"b", Label::Irrelevant, -1.0 / 3.0}};
  std::stringstream io;
  write_predictions(io, preds);
  EXPECT_EQ(read_predictions(io), preds);
  std::stringstream bad("a\tU\t0\n");
  EXPECT_THROW(read_predictions(bad), ParseError);
}
