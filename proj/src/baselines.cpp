#include "abcrm/baselines.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "abcrm/error.hpp"
#include "abcrm/format.hpp"

namespace abcrm {

NbModel::NbModel(double prior_relevant, double alpha, std::vector<NbFeature> features)
    : prior_relevant_(prior_relevant), alpha_(alpha), features_(std::move(features)) {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!index_.emplace(features_[i].feature, i).second) {
      throw InvalidArgument("duplicate feature '" + features_[i].feature + "' in model");
    }
  }
}

const NbFeature* NbModel::find(std::string_view stem) const {
  const auto it = index_.find(std::string(stem));
  return it == index_.end() ? nullptr : &features_[it->second];
}

NbModel nb_fit(const std::vector<PreparedDocument>& train, const FeatureSet& features,
               double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("smoothing alpha must be positive");
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> presence;
  std::size_t n_rel = 0;
  std::size_t n_irr = 0;
  for (const auto& doc : train) {
    if (doc.label == Label::Unlabeled) continue;
    const bool relevant = doc.label == Label::Relevant;
    (relevant ? n_rel : n_irr)++;
    std::unordered_set<std::string_view> seen;
    for (const auto& stem : doc.features) {
      if (!seen.insert(stem).second) continue;
      auto& counts = presence[stem];
      (relevant ? counts.first : counts.second)++;
    }
  }
  if (n_rel == 0 || n_irr == 0) {
    throw InvalidArgument("naive Bayes needs at least one document of each class");
  }

  std::vector<NbFeature> out;
  out.reserve(features.size());
  for (const auto& f : features.features()) {
    const auto it = presence.find(f.feature);
    const auto [with_rel, with_irr] = it == presence.end() ? std::pair<std::size_t, std::size_t>{0, 0} : it->second;
    out.push_back({f.feature, (static_cast<double>(with_rel) + alpha) / (static_cast<double>(n_rel) + 2 * alpha),
                   (static_cast<double>(with_irr) + alpha) / (static_cast<double>(n_irr) + 2 * alpha)});
  }
  const double prior = static_cast<double>(n_rel) / static_cast<double>(n_rel + n_irr);
  return NbModel(prior, alpha, std::move(out));
}

NbDecision nb_predict(const NbModel& model, const std::vector<std::string>& present) {
  std::unordered_set<std::string_view> on(present.begin(), present.end());
  NbDecision d;
  d.log_relevant = std::log(model.prior_relevant());
  d.log_irrelevant = std::log(1.0 - model.prior_relevant());
  for (const auto& f : model.features()) {
    if (on.count(f.feature) != 0) {
      d.log_relevant += std::log(f.p_relevant);
      d.log_irrelevant += std::log(f.p_irrelevant);
    } else {
      d.log_relevant += std::log1p(-f.p_relevant);
      d.log_irrelevant += std::log1p(-f.p_irrelevant);
    }
  }
  d.score = d.log_relevant - d.log_irrelevant;
  d.label = d.log_relevant >= d.log_irrelevant ? Label::Relevant : Label::Irrelevant;
  return d;
}

std::vector<Prediction> nb_predict_all(const NbModel& model,
                                       const std::vector<PreparedDocument>& docs) {
  std::vector<Prediction> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    const auto d = nb_predict(model, doc.features);
    out.push_back({doc.id, d.label, d.score});
  }
  return out;
}

void write_nb_model(std::ostream& out, const NbModel& model) {
  out << "# prior_relevant=" << format_real(model.prior_relevant())
      << " alpha=" << format_real(model.alpha()) << '\n';
  for (const auto& f : model.features()) {
    out << f.feature << '\t' << format_real(f.p_relevant) << '\t' << format_real(f.p_irrelevant)
        << '\n';
  }
}

NbModel read_nb_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw ParseError("missing model header", 1);
  }
  double prior = -1.0;
  double alpha = -1.0;
  std::istringstream words(line.substr(2));
  std::string word;
  while (words >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) continue;
    const auto key = word.substr(0, eq);
    const auto value = std::string_view(word).substr(eq + 1);
    if (key == "prior_relevant" && !parse_real(value, prior)) throw ParseError("bad prior", 1);
    if (key == "alpha" && !parse_real(value, alpha)) throw ParseError("bad alpha", 1);
  }
  if (!(prior > 0.0 && prior < 1.0) || !(alpha > 0.0)) {
    throw ParseError("header needs prior_relevant in (0,1) and alpha > 0", 1);
  }
  std::vector<NbFeature> features;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    NbFeature f;
    if (fields.size() != 3 || !parse_real(fields[1], f.p_relevant) ||
        !parse_real(fields[2], f.p_irrelevant)) {
      throw ParseError("expected stem, p_rel, p_irr", line_no);
    }
    f.feature = std::string(fields[0]);
    features.push_back(std::move(f));
  }
  return NbModel(prior, alpha, std::move(features));
}

}  // namespace abcrm
