// Documents, tokenization and document streams.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "abcrm/rng.hpp"

namespace abcrm {

enum class Label { Relevant, Irrelevant, Unlabeled };

/// Single-letter file code: R, I or U.
char label_code(Label label) noexcept;
/// Inverse of label_code. Throws InvalidArgument("unknown label ...").
Label parse_label(std::string_view code);

struct Document {
  std::string id;
  std::string text;
  Label label = Label::Unlabeled;
  std::int64_t timestamp = 0;
};

/// Stemmed token multiset of one document. Keys are lowercase, stemmed and
/// never stop words; every count is >= 1.
struct TokenBag {
  std::string doc_id;
  std::map<std::string, std::uint32_t> counts;

  /// Total number of tokens (sum of counts).
  std::size_t length() const noexcept;
  bool contains(std::string_view stem) const;
};

class StopWordList {
 public:
  StopWordList() = default;
  explicit StopWordList(std::set<std::string, std::less<>> words) : words_(std::move(words)) {}

  /// The 33 most frequent English words (Oxford English Corpus ranking)
  /// with "with" removed: 32 entries.
  static const StopWordList& english_default();
  /// One word per line; blank lines and lines starting with '#' ignored.
  static StopWordList from_file(const std::filesystem::path& path);

  bool contains(std::string_view word) const { return words_.find(word) != words_.end(); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::set<std::string, std::less<>>& words() const noexcept { return words_; }

 private:
  std::set<std::string, std::less<>> words_;
};

/// Lowercases, splits on runs of non-alphanumeric ASCII characters, drops
/// stop words, then Porter-stems purely alphabetic ASCII tokens. Tokens with
/// digits or non-ASCII characters are kept verbatim after case folding.
TokenBag tokenize(std::string_view text, const StopWordList& stop = StopWordList::english_default());

/// tokenize() applied to a document, carrying its id.
TokenBag bag_of(const Document& doc, const StopWordList& stop = StopWordList::english_default());

struct Partition {
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

/// Ordered documents split into a training prefix and a test suffix.
struct Corpus {
  std::vector<Document> documents;
  Partition partition;

  std::size_t size() const noexcept { return documents.size(); }
  std::vector<Document> train() const;
  std::vector<Document> test() const;
  /// Throws InvalidArgument on empty/duplicate ids or a partition that does
  /// not cover the documents.
  void validate() const;
};

/// Reads the tab-separated corpus format:
///   id <TAB> label(R|I|U) <TAB> timestamp <TAB> text
/// `\t`, `\n` and `\\` inside text are escapes. Lines starting with '#' are
/// comments; a comment may declare the split as `train=N test=M`. Without a
/// declaration, the trailing run of U-labeled documents is the test set.
Corpus load_corpus(const std::filesystem::path& path);
Corpus read_corpus(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

std::string escape_text(std::string_view text);
std::string unescape_text(std::string_view text);

enum class OrderMode { ByTimestamp, Shuffled };
enum class OrderScope { TrainOnly, TestOnly, Both };

struct StreamOrder {
  OrderMode mode = OrderMode::ByTimestamp;
  OrderScope scope = OrderScope::Both;
  std::uint64_t seed = 0;  // used by Shuffled only
};

/// Reorders documents inside the selected scope; the other part keeps its
/// input order. Training documents always precede test documents.
/// ByTimestamp sorts ascending with ties broken by ascending id.
std::vector<Document> order_stream(const Corpus& corpus, const StreamOrder& order);

/// order_stream() for any document type with `id` and `timestamp` members.
template <class Doc>
std::vector<Doc> order_parts(std::vector<Doc> train, std::vector<Doc> test, const StreamOrder& order) {
  Rng rng(order.seed);
  auto apply = [&](std::vector<Doc>& part) {
    if (order.mode == OrderMode::ByTimestamp) {
      std::stable_sort(part.begin(), part.end(), [](const Doc& a, const Doc& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.id < b.id;
      });
    } else {
      rng.shuffle(part.begin(), part.end());
    }
  };
  if (order.scope != OrderScope::TestOnly) apply(train);
  if (order.scope != OrderScope::TrainOnly) apply(test);
  train.insert(train.end(), std::make_move_iterator(test.begin()), std::make_move_iterator(test.end()));
  return train;
}

/// Parameters of the synthetic two-class corpus generator.
struct SyntheticSpec {
  std::size_t relevant_vocab = 10;
  std::size_t irrelevant_vocab = 10;
  std::size_t shared_vocab = 0;
  std::size_t min_length = 20;
  std::size_t max_length = 40;
  /// Probability that a token comes from the document's class vocabulary
  /// rather than the shared one (ignored when shared_vocab == 0).
  double class_word_rate = 0.7;
  /// Zipf exponent of word frequencies inside each vocabulary (0 = uniform).
  double zipf = 0.0;
  std::size_t train_relevant = 20;
  std::size_t train_irrelevant = 20;
  std::size_t test_relevant = 20;
  std::size_t test_irrelevant = 20;
  /// Per-document probability that one word of the document's class
  /// vocabulary is retired and replaced by a fresh word.
  double drift_rate = 0.0;
  /// Test documents keep their R/I labels when true, otherwise U.
  bool label_test = true;
};

/// Deterministic under `seed`. Documents are emitted in strictly increasing
/// timestamp order, classes interleaved at random; training precedes test.
Corpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace abcrm
