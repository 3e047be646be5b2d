#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "abcrm/corpus.hpp"
#include "abcrm/error.hpp"
#include "abcrm/porter.hpp"
#include "abcrm/rng.hpp"

using namespace abcrm;

namespace {

std::map<std::string, std::uint32_t> bag(std::string_view text) { return tokenize(text).counts; }

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_corpus(in);
}

std::string random_text(Rng& rng, std::size_t words) {
  static const char* pool[] = {"Protein", "interactions", "with",   "the",      "lysates", "binding",
                               "42",      "kinase",       "THE",    "running",  "ran",     "é",
                               "naïve",   "x-ray",        "Ωmega",  "caresses", "a",       "of"};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += pool[rng.uniform_below(std::size(pool))];
    out += " ,.;\t"[rng.uniform_below(5)];
  }
  return out;
}

}  // namespace

TEST(Tokenize, Examples) {
  // "with" is not on the default list.
  EXPECT_EQ(bag("Protein interactions with lysates"),
            (std::map<std::string, std::uint32_t>{{"protein", 1}, {"interact", 1}, {"with", 1}, {"lysat", 1}}));
  EXPECT_EQ(bag("Protein interactions of lysates"),
            (std::map<std::string, std::uint32_t>{{"protein", 1}, {"interact", 1}, {"lysat", 1}}));
  EXPECT_TRUE(bag("").empty());
  EXPECT_EQ(bag("transfected Transfected TRANSFECTED"), (std::map<std::string, std::uint32_t>{{"transfect", 3}}));
}

TEST(Tokenize, SplitsOnNonAlphanumericAndKeepsNumbers) {
  EXPECT_EQ(bag("p53-binding,  2010;x"),
            (std::map<std::string, std::uint32_t>{{"p53", 1}, {"bind", 1}, {"2010", 1}, {"x", 1}}));
}

TEST(Tokenize, StopWordsRemovedBeforeStemming) {
  // "as" is a stop word; "ass" would stem to "ass", not be removed.
  EXPECT_EQ(bag("as The AND"), (std::map<std::string, std::uint32_t>{}));
  EXPECT_EQ(bag("with"), (std::map<std::string, std::uint32_t>{{"with", 1}}));
}

TEST(Tokenize, NonAsciiFoldedButNotStemmed) {
  EXPECT_EQ(bag("ÉTUDES études"), (std::map<std::string, std::uint32_t>{{"études", 2}}));
  EXPECT_EQ(bag("ΩMEGA"), (std::map<std::string, std::uint32_t>{{"ωmega", 1}}));
}

TEST(Tokenize, IdempotentWhenStemsAreFixedPoints) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto first = tokenize(random_text(rng, 1 + rng.uniform_below(30)));
    std::string joined;
    bool fixed = true;
    for (const auto& [stem, count] : first.counts) {
      const bool verbatim = std::any_of(stem.begin(), stem.end(), [](char c) {
        return (c >= '0' && c <= '9') || static_cast<unsigned char>(c) >= 0x80;
      });
      fixed &= verbatim || porter_stem(stem) == stem;
      for (std::uint32_t i = 0; i < count; ++i) joined += stem + " ";
    }
    if (fixed) {
      EXPECT_EQ(tokenize(joined).counts, first.counts) << joined;
    }
  }
}

TEST(Tokenize, PorterIsNotAlwaysIdempotent) {
  EXPECT_EQ(bag("kinase"), (std::map<std::string, std::uint32_t>{{"kinas", 1}}));
  EXPECT_EQ(bag("kinas"), (std::map<std::string, std::uint32_t>{{"kina", 1}}));
}

TEST(Tokenize, NoStopWordKeys) {
  Rng rng(6);
  const auto& stop = StopWordList::english_default();
  for (int trial = 0; trial < 200; ++trial) {
    for (const auto& [stem, count] : tokenize(random_text(rng, 20)).counts) {
      EXPECT_FALSE(stop.contains(stem)) << stem;
      EXPECT_GE(count, 1u);
      EXPECT_FALSE(stem.empty());
    }
  }
}

TEST(StopWords, DefaultListHas32WordsWithoutWith) {
  const auto& stop = StopWordList::english_default();
  EXPECT_EQ(stop.size(), 32u);
  EXPECT_FALSE(stop.contains("with"));
  EXPECT_TRUE(stop.contains("the"));
}

TEST(StopWords, PinnedFileMatchesBuiltIn) {
  const auto from_file = StopWordList::from_file(std::string(ABCRM_DATA_DIR) + "/stopwords_en.txt");
  EXPECT_EQ(from_file.words(), StopWordList::english_default().words());
}

TEST(CorpusFile, FourDocuments) {
  const Corpus c = parse(
      "# train=2 test=2\n"
      "a\tR\t1\tprotein binding\n"
      "b\tI\t2\tweather report\n"
      "c\tR\t3\tkinase\n"
      "d\tI\t4\tsports\n");
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c.partition.train_count, 2u);
  EXPECT_EQ(c.partition.test_count, 2u);
  EXPECT_EQ(c.documents[1].label, Label::Irrelevant);
  EXPECT_EQ(c.test().front().id, "c");
}

TEST(CorpusFile, DuplicateIdNamesIt) {
  try {
    parse("x\tR\t1\ta\nx\tI\t2\tb\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(CorpusFile, UnknownLabel) {
  try {
    parse("x\tmaybe\t1\ta\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown label"), std::string::npos);
  }
}

TEST(CorpusFile, BadTimestampAndFieldCount) {
  EXPECT_THROW(parse("x\tR\tnoon\ta\n"), ParseError);
  EXPECT_THROW(parse("x\tR\t1\n"), ParseError);
}

TEST(CorpusFile, DefaultPartitionIsTrailingUnlabeledRun) {
  const Corpus c = parse("a\tR\t1\tx\nb\tI\t2\ty\nc\tU\t3\tz\nd\tU\t4\tw\n");
  EXPECT_EQ(c.partition.train_count, 2u);
  EXPECT_EQ(c.partition.test_count, 2u);
}

TEST(CorpusFile, RoundTripWithEscapes) {
  Corpus c;
  c.documents = {{"a", "tab\there\nnew line \\ back", Label::Relevant, 5},
                 {"b", "plain", Label::Unlabeled, 6}};
  c.partition = {1, 1};
  std::ostringstream out;
  write_corpus(out, c);
  const Corpus back = parse(out.str());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.documents[0].text, c.documents[0].text);
  EXPECT_EQ(back.documents[1].label, Label::Unlabeled);
  EXPECT_EQ(back.partition.train_count, 1u);
  EXPECT_EQ(unescape_text(escape_text("a\\tb\t")), "a\\tb\t");
}

TEST(OrderStream, SortsByTimestampThenId) {
  Corpus c;
  c.documents = {{"c", "", Label::Relevant, 3}, {"a", "", Label::Relevant, 1}, {"b", "", Label::Relevant, 2}};
  c.partition = {3, 0};
  const auto out = order_stream(c, {OrderMode::ByTimestamp, OrderScope::Both, 0});
  EXPECT_EQ(out[0].timestamp, 1);
  EXPECT_EQ(out[1].timestamp, 2);
  EXPECT_EQ(out[2].timestamp, 3);

  c.documents = {{"z", "", Label::Relevant, 1}, {"y", "", Label::Relevant, 1}};
  c.partition = {2, 0};
  EXPECT_EQ(order_stream(c, {}).front().id, "y");
}

TEST(OrderStream, ShuffleIsDeterministicAndScoped) {
  const Corpus c = generate_synthetic({}, 1);
  const StreamOrder shuffled{OrderMode::Shuffled, OrderScope::Both, 7};
  const auto a = order_stream(c, shuffled);
  const auto b = order_stream(c, shuffled);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);

  const auto test_only = order_stream(c, {OrderMode::Shuffled, OrderScope::TestOnly, 7});
  const std::size_t n_train = c.partition.train_count;
  for (std::size_t i = 0; i < n_train; ++i) EXPECT_EQ(test_only[i].id, c.documents[i].id);
  // Training documents always precede test documents.
  std::set<std::string> train_ids;
  for (const auto& d : c.train()) train_ids.insert(d.id);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(train_ids.count(a[i].id) == 1, i < n_train);
}

TEST(OrderStream, ShuffledIsPermutation) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Corpus c = generate_synthetic({}, trial);
    const auto out = order_stream(c, {OrderMode::Shuffled, OrderScope::Both, rng.next()});
    std::multiset<std::string> in_ids, out_ids;
    for (const auto& d : c.documents) in_ids.insert(d.id);
    for (const auto& d : out) out_ids.insert(d.id);
    EXPECT_EQ(in_ids, out_ids);
    const auto sorted = order_stream(c, {});
    EXPECT_TRUE(std::is_sorted(sorted.begin(), sorted.end(),
                               [](const Document& x, const Document& y) { return x.timestamp < y.timestamp; }));
  }
}

TEST(Synthetic, SeparableWithoutSharedWords) {
  SyntheticSpec spec;
  const Corpus c = generate_synthetic(spec, 3);
  EXPECT_EQ(c.partition.train_count, 40u);
  EXPECT_EQ(c.partition.test_count, 40u);
  std::set<std::string> rel, irr;
  for (const auto& d : c.documents) {
    for (const auto& [w, n] : tokenize(d.text).counts) (d.label == Label::Relevant ? rel : irr).insert(w);
  }
  for (const auto& w : rel) EXPECT_EQ(irr.count(w), 0u) << w;
  EXPECT_LE(rel.size(), 10u);
  EXPECT_LE(irr.size(), 10u);
}

TEST(Synthetic, DeterministicUnderSeed) {
  SyntheticSpec spec;
  spec.shared_vocab = 30;
  spec.drift_rate = 0.1;
  const Corpus a = generate_synthetic(spec, 9);
  const Corpus b = generate_synthetic(spec, 9);
  const Corpus c = generate_synthetic(spec, 10);
  std::ostringstream sa, sb, sc;
  write_corpus(sa, a);
  write_corpus(sb, b);
  write_corpus(sc, c);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Synthetic, TimestampsIncreaseAndLabelsHideOnRequest) {
  SyntheticSpec spec;
  spec.label_test = false;
  const Corpus c = generate_synthetic(spec, 4);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LT(c.documents[i - 1].timestamp, c.documents[i].timestamp);
  for (const auto& d : c.test()) EXPECT_EQ(d.label, Label::Unlabeled);
  for (const auto& d : c.train()) EXPECT_NE(d.label, Label::Unlabeled);
}

TEST(Synthetic, DriftIntroducesFreshWords) {
  SyntheticSpec spec;
  spec.drift_rate = 0.05;
  spec.train_relevant = spec.train_irrelevant = 200;
  spec.test_relevant = spec.test_irrelevant = 0;
  const Corpus c = generate_synthetic(spec, 8);
  const std::size_t quarter = c.size() / 4;
  std::set<std::string> early;
  for (std::size_t i = 0; i < quarter; ++i) {
    for (const auto& [w, n] : tokenize(c.documents[i].text).counts) early.insert(w);
  }
  std::set<std::string> fresh;
  for (std::size_t i = quarter; i < c.size(); ++i) {
    for (const auto& [w, n] : tokenize(c.documents[i].text).counts) {
      if (!early.count(w)) fresh.insert(w);
    }
  }
  // 300 later documents at 5% introduce 15 words in expectation (sd ~3.8);
  // a few may be retired again before they are ever emitted.
  EXPECT_GE(fresh.size(), 5u);
  EXPECT_LE(fresh.size(), 30u);
}

TEST(Synthetic, RejectsEmptyVocabulary) {
  SyntheticSpec spec;
  spec.relevant_vocab = 0;
  EXPECT_THROW(generate_synthetic(spec, 1), InvalidArgument);
}
