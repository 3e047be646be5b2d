#include "abcrm/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "abcrm/error.hpp"
#include "abcrm/format.hpp"

namespace abcrm {

TrainingSet training_bags(const Corpus& corpus, const StopWordList& stop) {
  TrainingSet out;
  const auto n = std::min(corpus.partition.train_count, corpus.documents.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& doc = corpus.documents[i];
    out.push_back({bag_of(doc, stop), doc.label});
  }
  return out;
}

namespace {

struct Posting {
  std::size_t doc;
  std::uint32_t count;
};

// Shared by tfidf_avg and select_features so both produce bit-identical
// sums: postings are visited in document order.
double tfidf_from_postings(const TrainingSet& train, const std::vector<Posting>& postings) {
  const auto n_docs = static_cast<double>(train.size());
  const double idf = std::log(n_docs / static_cast<double>(postings.size()));
  double sum = 0.0;
  for (const auto& p : postings) {
    const auto length = static_cast<double>(train[p.doc].bag.length());
    sum += (static_cast<double>(p.count) / length) * idf;
  }
  return sum / n_docs;
}

struct ClassCounts {
  std::size_t relevant = 0;
  std::size_t irrelevant = 0;
};

ClassCounts class_sizes(const TrainingSet& train) {
  ClassCounts c;
  for (const auto& d : train) {
    if (d.label == Label::Relevant) ++c.relevant;
    if (d.label == Label::Irrelevant) ++c.irrelevant;
  }
  if (c.relevant == 0 || c.irrelevant == 0) {
    throw InvalidArgument("separation needs at least one relevant and one irrelevant document");
  }
  return c;
}

double separation_from_counts(const ClassCounts& sizes, const ClassCounts& with_feature) {
  const double p_pos = static_cast<double>(with_feature.relevant) / static_cast<double>(sizes.relevant);
  const double p_neg =
      static_cast<double>(with_feature.irrelevant) / static_cast<double>(sizes.irrelevant);
  return std::abs(p_pos - p_neg);
}

// Competition ranks ("1224") for descending scores.
std::vector<std::uint32_t> competition_ranks(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::uint32_t> ranks(scores.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos > 0 && scores[order[pos]] == scores[order[pos - 1]]) {
      ranks[order[pos]] = ranks[order[pos - 1]];
    } else {
      ranks[order[pos]] = static_cast<std::uint32_t>(pos + 1);
    }
  }
  return ranks;
}

}  // namespace

double tfidf_avg(const TrainingSet& train, std::string_view stem) {
  std::vector<Posting> postings;
  const std::string key(stem);
  for (std::size_t d = 0; d < train.size(); ++d) {
    const auto it = train[d].bag.counts.find(key);
    if (it != train[d].bag.counts.end()) postings.push_back({d, it->second});
  }
  if (postings.empty()) throw InvalidArgument("feature '" + key + "' does not occur in training");
  return tfidf_from_postings(train, postings);
}

double separation(const TrainingSet& train, std::string_view stem) {
  const ClassCounts sizes = class_sizes(train);
  ClassCounts with;
  const std::string key(stem);
  for (const auto& d : train) {
    if (!d.bag.contains(key)) continue;
    if (d.label == Label::Relevant) ++with.relevant;
    if (d.label == Label::Irrelevant) ++with.irrelevant;
  }
  return separation_from_counts(sizes, with);
}

FeatureSet::FeatureSet(std::vector<FeatureScore> features, std::size_t k)
    : features_(std::move(features)), k_(k) {
  index_.reserve(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (!index_.emplace(features_[i].feature, i).second) {
      throw InvalidArgument("duplicate feature '" + features_[i].feature + "'");
    }
  }
}

bool FeatureSet::contains(std::string_view stem) const {
  return index_.find(std::string(stem)) != index_.end();
}

std::vector<std::string> FeatureSet::present_in(const TokenBag& bag) const {
  std::vector<std::string> out;
  for (const auto& [stem, count] : bag.counts) {
    if (index_.count(stem) != 0) out.push_back(stem);
  }
  return out;
}

FeatureSet select_features(const TrainingSet& train, std::size_t k, CombineMode mode) {
  if (k == 0) throw InvalidArgument("k must be positive");
  std::map<std::string, std::vector<Posting>> postings;
  for (std::size_t d = 0; d < train.size(); ++d) {
    for (const auto& [stem, count] : train[d].bag.counts) postings[stem].push_back({d, count});
  }
  if (postings.empty()) throw InvalidArgument("empty training vocabulary");
  const ClassCounts sizes = class_sizes(train);

  std::vector<FeatureScore> scores;
  scores.reserve(postings.size());
  std::vector<double> tfidf;
  std::vector<double> sep;
  for (const auto& [stem, list] : postings) {
    ClassCounts with;
    for (const auto& p : list) {
      if (train[p.doc].label == Label::Relevant) ++with.relevant;
      if (train[p.doc].label == Label::Irrelevant) ++with.irrelevant;
    }
    FeatureScore s;
    s.feature = stem;
    s.tfidf_avg = tfidf_from_postings(train, list);
    s.separation = separation_from_counts(sizes, with);
    tfidf.push_back(s.tfidf_avg);
    sep.push_back(s.separation);
    scores.push_back(std::move(s));
  }
  const auto rank_t = competition_ranks(tfidf);
  const auto rank_s = competition_ranks(sep);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i].rank_tfidf = rank_t[i];
    scores[i].rank_sep = rank_s[i];
    scores[i].rank_product = std::uint64_t{rank_t[i]} * rank_s[i];
  }

  // `scores` is already in lexicographic order, so a stable sort on the
  // combined key leaves equal keys ordered by stem.
  if (mode == CombineMode::RankProduct) {
    std::stable_sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
      return a.rank_product < b.rank_product;
    });
  } else {
    std::stable_sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
      return a.tfidf_avg * a.separation > b.tfidf_avg * b.separation;
    });
  }
  if (scores.size() > k) scores.resize(k);
  return FeatureSet(std::move(scores), k);
}

void write_feature_set(std::ostream& out, const FeatureSet& set) {
  for (const auto& f : set.features()) {
    out << f.feature << '\t' << format_real(f.tfidf_avg) << '\t' << format_real(f.separation)
        << '\t' << f.rank_product << '\n';
  }
}

FeatureSet read_feature_set(std::istream& in) {
  std::vector<FeatureScore> features;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 4) throw ParseError("expected 4 fields in feature line", line_no);
    FeatureScore f;
    f.feature = std::string(fields[0]);
    if (f.feature.empty()) throw ParseError("empty feature", line_no);
    if (!parse_real(fields[1], f.tfidf_avg) || !parse_real(fields[2], f.separation) ||
        !parse_integer(fields[3], f.rank_product)) {
      throw ParseError("bad number in feature line", line_no);
    }
    features.push_back(std::move(f));
  }
  const auto k = features.size();
  try {
    return FeatureSet(std::move(features), k);
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), 0);
  }
}

void save_feature_set(const std::filesystem::path& path, const FeatureSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature file " + path.string());
  write_feature_set(out, set);
  if (!out) throw Error("error writing feature file " + path.string());
}

FeatureSet load_feature_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file " + path.string());
  return read_feature_set(in);
}

}  // namespace abcrm
