// Binary classification metrics with Relevant as the positive class.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "abcrm/corpus.hpp"
#include "abcrm/dynamics.hpp"

namespace abcrm {

using Truth = std::unordered_map<std::string, Label>;

/// Ground truth of the labeled documents in `docs`.
Truth truth_of(const std::vector<Document>& docs);

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct MetricReport {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
  double mcc = 0.0;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

/// Cross-tabulates predictions against truth. The prediction ids must be
/// unique and match the truth ids exactly; throws InvalidArgument naming the
/// first offending id otherwise.
Confusion confusion(const std::vector<Prediction>& preds, const Truth& truth);

/// Precision, recall, F-score, accuracy and MCC (auc left at 0). Every 0/0
/// ratio, including an MCC with a zero denominator, is 0.
MetricReport basic_metrics(const Confusion& c);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double interpolated = 0.0;  // max precision at any recall >= this one
};

/// Precision/recall after each block of tied scores, descending.
std::vector<PrPoint> pr_curve(const std::vector<Prediction>& preds, const Truth& truth);

/// Area under the interpolated precision-recall staircase over recall
/// [0,1]. Throws InvalidArgument when truth has no positive instance.
double pr_auc(const std::vector<Prediction>& preds, const Truth& truth);

/// All six metrics. The AUC is 0 when there is no positive instance.
MetricReport evaluate(const std::vector<Prediction>& preds, const Truth& truth);

struct TTest {
  double t = 0.0;
  double p = 1.0;  // two-tailed
  std::size_t df = 0;
};

/// Paired Student t-test on a[i] - b[i]. When the differences have zero
/// variance: p = 1 if their mean is 0, else p = 0 (t = +-inf).
/// Throws InvalidArgument for unequal lengths or fewer than 2 pairs.
TTest paired_ttest(std::span<const double> a, std::span<const double> b);

/// Two-tailed critical value t* with P(|T_df| > t*) = alpha.
double t_critical(std::size_t df, double alpha);

/// `doc_id \t label(R|I) \t score`, one prediction per line.
void write_predictions(std::ostream& out, const std::vector<Prediction>& preds);
std::vector<Prediction> read_predictions(std::istream& in);
void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

/// `key=value` lines followed by one tab-separated record line
/// `metrics \t name=<name> \t precision=... \t ...`.
void write_metric_report(std::ostream& out, const std::string& name, const MetricReport& m,
                         const Confusion& c);

}  // namespace abcrm
