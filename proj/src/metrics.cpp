#include "abcrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

#include "abcrm/error.hpp"
#include "abcrm/format.hpp"

namespace abcrm {

Truth truth_of(const std::vector<Document>& docs) {
  Truth truth;
  for (const auto& d : docs) {
    if (d.label != Label::Unlabeled) truth.emplace(d.id, d.label);
  }
  return truth;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

bool is_positive(const Truth& truth, const std::string& id) {
  const auto it = truth.find(id);
  if (it == truth.end()) throw InvalidArgument("prediction for unknown document '" + id + "'");
  if (it->second == Label::Unlabeled) throw InvalidArgument("document '" + id + "' has no true label");
  return it->second == Label::Relevant;
}

void check_alignment(const std::vector<Prediction>& preds, const Truth& truth) {
  std::unordered_set<std::string_view> seen;
  for (const auto& p : preds) {
    if (!seen.insert(p.doc_id).second) {
      throw InvalidArgument("duplicate prediction for '" + p.doc_id + "'");
    }
    is_positive(truth, p.doc_id);
  }
  if (seen.size() != truth.size()) {
    for (const auto& [id, label] : truth) {
      if (seen.count(id) == 0) throw InvalidArgument("missing prediction for '" + id + "'");
    }
  }
}

}  // namespace

Confusion confusion(const std::vector<Prediction>& preds, const Truth& truth) {
  check_alignment(preds, truth);
  Confusion c;
  for (const auto& p : preds) {
    const bool actual = is_positive(truth, p.doc_id);
    const bool predicted = p.label == Label::Relevant;
    if (predicted && actual) ++c.tp;
    if (predicted && !actual) ++c.fp;
    if (!predicted && !actual) ++c.tn;
    if (!predicted && actual) ++c.fn;
  }
  return c;
}

MetricReport basic_metrics(const Confusion& c) {
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto tn = static_cast<double>(c.tn);
  const auto fn = static_cast<double>(c.fn);
  MetricReport m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.fscore = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  m.accuracy = ratio(tp + tn, tp + fp + tn + fn);
  const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  m.mcc = ratio(tp * tn - fp * fn, den);
  return m;
}

std::vector<PrPoint> pr_curve(const std::vector<Prediction>& preds, const Truth& truth) {
  check_alignment(preds, truth);
  std::size_t positives = 0;
  for (const auto& p : preds) positives += is_positive(truth, p.doc_id) ? 1 : 0;
  if (positives == 0) throw InvalidArgument("precision-recall curve needs a positive instance");

  std::vector<const Prediction*> order;
  order.reserve(preds.size());
  for (const auto& p : preds) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const Prediction* a, const Prediction* b) { return a->score > b->score; });

  std::vector<PrPoint> curve;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && order[j]->score == order[i]->score) {
      tp += is_positive(truth, order[j]->doc_id) ? 1 : 0;
      ++j;
    }
    seen += j - i;
    curve.push_back({static_cast<double>(tp) / static_cast<double>(positives),
                     static_cast<double>(tp) / static_cast<double>(seen), 0.0});
    i = j;
  }
  double best = 0.0;
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    best = std::max(best, it->precision);
    it->interpolated = best;
  }
  return curve;
}

double pr_auc(const std::vector<Prediction>& preds, const Truth& truth) {
  const auto curve = pr_curve(preds, truth);
  double area = 0.0;
  double previous_recall = 0.0;
  for (const auto& point : curve) {
    area += (point.recall - previous_recall) * point.interpolated;
    previous_recall = point.recall;
  }
  return area;
}

MetricReport evaluate(const std::vector<Prediction>& preds, const Truth& truth) {
  MetricReport m = basic_metrics(confusion(preds, truth));
  const bool any_positive = std::any_of(truth.begin(), truth.end(), [](const auto& kv) {
    return kv.second == Label::Relevant;
  });
  m.auc = any_positive ? pr_auc(preds, truth) : 0.0;
  return m;
}

TTest paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("paired t-test needs samples of equal length");
  if (a.size() < 2) throw InvalidArgument("paired t-test needs at least 2 pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  TTest r;
  r.df = a.size() - 1;
  const double sd = std::sqrt(ss / (n - 1.0));
  if (sd == 0.0) {
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  const boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

double t_critical(std::size_t df, double alpha) {
  if (df == 0 || !(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("bad t_critical arguments");
  const boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

void write_predictions(std::ostream& out, const std::vector<Prediction>& preds) {
  for (const auto& p : preds) {
    out << p.doc_id << '\t' << label_code(p.label) << '\t' << format_real(p.score) << '\n';
  }
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError("expected doc_id, label, score", line_no);
    Prediction p;
    p.doc_id = std::string(fields[0]);
    if (fields[1] == "R") {
      p.label = Label::Relevant;
    } else if (fields[1] == "I") {
      p.label = Label::Irrelevant;
    } else {
      throw ParseError("prediction label must be R or I", line_no);
    }
    if (!parse_real(fields[2], p.score)) throw ParseError("bad score", line_no);
    out.push_back(std::move(p));
  }
  return out;
}

void save_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write predictions " + path.string());
  write_predictions(out, preds);
  if (!out) throw Error("error writing predictions " + path.string());
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open predictions " + path.string());
  return read_predictions(in);
}

void write_metric_report(std::ostream& out, const std::string& name, const MetricReport& m,
                         const Confusion& c) {
  const std::pair<const char*, double> fields[] = {
      {"precision", m.precision}, {"recall", m.recall}, {"fscore", m.fscore},
      {"accuracy", m.accuracy},   {"auc", m.auc},       {"mcc", m.mcc}};
  out << "name=" << name << '\n';
  out << "tp=" << c.tp << "\nfp=" << c.fp << "\ntn=" << c.tn << "\nfn=" << c.fn << '\n';
  for (const auto& [key, value] : fields) out << key << '=' << format_fixed(value, 6) << '\n';
  out << "metrics\tname=" << name << "\ttp=" << c.tp << "\tfp=" << c.fp << "\ttn=" << c.tn
      << "\tfn=" << c.fn;
  for (const auto& [key, value] : fields) out << '\t' << key << '=' << format_fixed(value, 6);
  out << '\n';
}

}  // namespace abcrm
