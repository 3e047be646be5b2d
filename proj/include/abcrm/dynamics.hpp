// T-cell cross-regulation dynamics.
//
// Each selected feature owns two populations of monospecific agents:
// effectors (E) and regulators (R). A document becomes an antigen
// presenting cell (APC): every distinct feature is shown at exactly
// `presentations` positions, shuffled and paired into slots. Cells bind to
// the positions of their feature, co-bound pairs react, unbound cells die
// at the configured rates, and an unlabeled document is labeled by the
// normalized R-versus-E balance of its features.
//
// Per document the order is fixed: build APC, seed new features, bind,
// react, cull, classify (unlabeled documents only).

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "abcrm/corpus.hpp"
#include "abcrm/features.hpp"
#include "abcrm/rng.hpp"

namespace abcrm {

/// The six model parameters.
struct ParameterSet {
  std::uint32_t initial_effectors = 2;        // E0
  std::uint32_t initial_regulators_neg = 10;  // R0-, irrelevant or unlabeled first sight
  std::uint32_t initial_regulators_pos = 11;  // R0+, relevant first sight
  double effector_death = 0.2;                // dE
  double regulator_death = 0.3;               // dR
  std::uint32_t presentations = 18;           // nA, APC positions per feature

  /// Throws InvalidArgument unless the seeds are positive, both death
  /// rates lie in [0,1] and `presentations` is a positive even number.
  void validate() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

/// Best configuration of the canonical setup on the optimization split.
inline constexpr ParameterSet kReferenceParameters{};

struct DynamicsConfig {
  std::uint64_t seed = 0;
  bool cell_death = true;
  /// Positive-only training: irrelevant training documents are dropped
  /// from the stream.
  bool pu_training = false;
  /// Re-seed E0 and R0+/- cells every time a known feature reappears.
  bool incremental_bias = false;

  friend bool operator==(const DynamicsConfig&, const DynamicsConfig&) = default;
};

struct Population {
  std::uint64_t effectors = 0;
  std::uint64_t regulators = 0;

  friend bool operator==(const Population&, const Population&) = default;
};

/// Per-feature populations. Iteration follows first-encounter order; a
/// feature missing from the pool has never been seen, which is distinct
/// from a present feature whose populations died out.
class TCellPool {
 public:
  using Entry = std::pair<std::string, Population>;

  bool contains(std::string_view stem) const { return find_index(stem).has_value(); }
  std::optional<std::size_t> find_index(std::string_view stem) const;
  /// nullptr when the feature was never seen.
  const Population* find(std::string_view stem) const;

  /// Adds a new feature. Throws InvalidArgument if already present.
  std::size_t insert(std::string stem, Population population);

  Population& at(std::size_t index) { return entries_[index].second; }
  const Population& at(std::size_t index) const { return entries_[index].second; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  friend bool operator==(const TCellPool& a, const TCellPool& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A document rendered as a list of position pairs.
struct Apc {
  static constexpr std::int32_t kEmpty = -1;

  std::string doc_id;
  /// Distinct presented features; slot entries index into this list.
  std::vector<std::string> features;
  /// Each pair holds two feature indices; only the last slot may hold
  /// kEmpty, and only when the position count is odd.
  std::vector<std::array<std::int32_t, 2>> slots;
};

enum class Binding : std::uint8_t { Effector, Regulator, Unbound };

struct BindingAssignment {
  std::vector<std::array<Binding, 2>> slots;
  /// Per APC feature (same order as Apc::features).
  std::vector<std::uint64_t> bound_effectors;
  std::vector<std::uint64_t> bound_regulators;
};

struct Classification {
  Label label = Label::Relevant;
  double regulatory_sum = 0.0;
  double effector_sum = 0.0;
  /// regulatory_sum - effector_sum; larger means more relevant.
  double score = 0.0;
};

/// Presents each distinct feature `presentations` times at uniformly
/// shuffled positions and pairs consecutive positions into slots. Repeated
/// entries of `features` are collapsed.
Apc build_apc(std::string doc_id, std::vector<std::string> features, std::uint32_t presentations,
              Rng& rng);

/// Seeds features seen for the first time with E0 effectors and R0+
/// (relevant document) or R0- (any other) regulators. With incremental
/// bias, already-known features are topped up by the same amounts.
void init_populations(TCellPool& pool, const std::vector<std::string>& features, Label label,
                      const ParameterSet& params, const DynamicsConfig& config);

/// Binds min(positions, E+R) cells of each feature, drawn uniformly
/// without replacement, to that feature's positions in slot order.
/// Every presented feature must already be in the pool.
BindingAssignment bind(const TCellPool& pool, const Apc& apc, Rng& rng);

/// Applies the pair reactions. (E,E): both effectors duplicate.
/// (E,R): the regulator duplicates, the effector is kept. (R,R) and any
/// pair with an unbound or empty side: no change.
void react(TCellPool& pool, const Apc& apc, const BindingAssignment& assignment);

/// Removes Binomial(unbound, rate) cells of each type from every pooled
/// feature; cells bound to this APC survive. Identity without cell death.
void cull(TCellPool& pool, const Apc& apc, const BindingAssignment& assignment,
          const ParameterSet& params, Rng& rng, const DynamicsConfig& config);

/// Sums R/sqrt(R^2+E^2) and E/sqrt(R^2+E^2) over the given features
/// (unknown or empty features add nothing). Relevant iff R-sum >= E-sum.
Classification classify(const TCellPool& pool, const std::vector<std::string>& features);

/// A document reduced to its selected features.
struct PreparedDocument {
  std::string id;
  Label label = Label::Unlabeled;
  std::int64_t timestamp = 0;
  std::vector<std::string> features;  // distinct, lexicographic
};

std::vector<PreparedDocument> prepare(const std::vector<Document>& docs, const FeatureSet& features,
                                      const StopWordList& stop = StopWordList::english_default());

/// Returns a copy with every label replaced by Unlabeled.
std::vector<PreparedDocument> hide_labels(std::vector<PreparedDocument> docs);

struct Prediction {
  std::string doc_id;
  Label label = Label::Relevant;
  double score = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Stateful runner over a document stream. The pool and random stream
/// carry over from one document to the next.
class CrossRegulationModel {
 public:
  CrossRegulationModel(const ParameterSet& params, const DynamicsConfig& config);

  /// Runs one document through the pipeline; returns a prediction for
  /// unlabeled documents.
  std::optional<Prediction> process(const PreparedDocument& doc);

  const ParameterSet& params() const noexcept { return params_; }
  const DynamicsConfig& config() const noexcept { return config_; }
  const TCellPool& pool() const noexcept { return pool_; }
  const Rng& rng() const noexcept { return rng_; }
  /// Number of documents consumed so far.
  std::size_t cursor() const noexcept { return cursor_; }

  /// Header line plus `stem \t effectors \t regulators` rows.
  void save_checkpoint(std::ostream& out) const;
  static CrossRegulationModel load_checkpoint(std::istream& in);
  void save_checkpoint(const std::filesystem::path& path) const;
  static CrossRegulationModel load_checkpoint(const std::filesystem::path& path);

 private:
  ParameterSet params_;
  DynamicsConfig config_;
  TCellPool pool_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

std::vector<Prediction> process_stream(const std::vector<PreparedDocument>& stream,
                                       const ParameterSet& params, const DynamicsConfig& config);

}  // namespace abcrm
