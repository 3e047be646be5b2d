// Feature scoring and top-K selection on a training partition.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "abcrm/corpus.hpp"

namespace abcrm {

struct LabeledBag {
  TokenBag bag;
  Label label = Label::Unlabeled;
};

using TrainingSet = std::vector<LabeledBag>;

/// Tokenizes the training partition of `corpus`.
TrainingSet training_bags(const Corpus& corpus,
                          const StopWordList& stop = StopWordList::english_default());

/// Mean over all training documents of tf(f,d) * ln(N / df(f)), with
/// tf = count / document length. Throws InvalidArgument if f never occurs.
double tfidf_avg(const TrainingSet& train, std::string_view stem);

/// |p_P(f) - p_N(f)| from document presence. Unlabeled documents are
/// ignored. Throws InvalidArgument if either class is empty.
double separation(const TrainingSet& train, std::string_view stem);

struct FeatureScore {
  std::string feature;
  double tfidf_avg = 0.0;
  double separation = 0.0;
  std::uint32_t rank_tfidf = 0;  // 0 when not known (imported sets)
  std::uint32_t rank_sep = 0;
  std::uint64_t rank_product = 0;
};

/// How the two per-feature scores are combined into the final ordering.
enum class CombineMode {
  RankProduct,   // product of the competition ranks, ascending
  ScoreProduct,  // product of the raw scores, descending
};

class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::vector<FeatureScore> features, std::size_t k);

  const std::vector<FeatureScore>& features() const noexcept { return features_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t size() const noexcept { return features_.size(); }
  bool empty() const noexcept { return features_.empty(); }

  bool contains(std::string_view stem) const;
  /// Distinct selected stems present in the bag, in lexicographic order.
  std::vector<std::string> present_in(const TokenBag& bag) const;

 private:
  std::vector<FeatureScore> features_;
  std::size_t k_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Ranks every training stem by descending average TF.IDF and by descending
/// separation (competition ranking), and keeps the k best by rank product.
/// Equal products are ordered lexicographically by stem.
FeatureSet select_features(const TrainingSet& train, std::size_t k = 650,
                           CombineMode mode = CombineMode::RankProduct);

/// `stem \t tfidf_avg \t separation \t rank_product`, one feature per line.
void write_feature_set(std::ostream& out, const FeatureSet& set);
FeatureSet read_feature_set(std::istream& in);
void save_feature_set(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet load_feature_set(const std::filesystem::path& path);

}  // namespace abcrm
