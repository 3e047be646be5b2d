// Naive Bayes with boolean attributes over the selected features.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "abcrm/dynamics.hpp"
#include "abcrm/features.hpp"

namespace abcrm {

struct NbFeature {
  std::string feature;
  double p_relevant = 0.5;    // P(present | relevant)
  double p_irrelevant = 0.5;  // P(present | irrelevant)
};

class NbModel {
 public:
  NbModel() = default;
  NbModel(double prior_relevant, double alpha, std::vector<NbFeature> features);

  double prior_relevant() const noexcept { return prior_relevant_; }
  double alpha() const noexcept { return alpha_; }
  const std::vector<NbFeature>& features() const noexcept { return features_; }
  const NbFeature* find(std::string_view stem) const;

 private:
  double prior_relevant_ = 0.5;
  double alpha_ = 1.0;
  std::vector<NbFeature> features_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Laplace-smoothed presence probabilities per class:
///   p(f|c) = (docs of c containing f + alpha) / (docs of c + 2 alpha).
/// Unlabeled documents are ignored. Throws InvalidArgument on an empty class
/// or a non-positive alpha.
NbModel nb_fit(const std::vector<PreparedDocument>& train, const FeatureSet& features,
               double alpha = 1.0);

struct NbDecision {
  Label label = Label::Relevant;
  double log_relevant = 0.0;
  double log_irrelevant = 0.0;
  /// log_relevant - log_irrelevant.
  double score = 0.0;
};

/// Bernoulli log-posteriors (up to the shared evidence term): present model
/// features contribute log p, absent ones log(1 - p). Ties go to Relevant.
/// Stems outside the model are ignored.
NbDecision nb_predict(const NbModel& model, const std::vector<std::string>& present);

std::vector<Prediction> nb_predict_all(const NbModel& model,
                                       const std::vector<PreparedDocument>& docs);

/// Header `# prior_relevant=... alpha=...` then `stem \t p_rel \t p_irr`.
void write_nb_model(std::ostream& out, const NbModel& model);
NbModel read_nb_model(std::istream& in);

}  // namespace abcrm
