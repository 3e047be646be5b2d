#include "abcrm/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "abcrm/error.hpp"
#include "abcrm/porter.hpp"
#include "abcrm/rng.hpp"

namespace abcrm {

char label_code(Label label) noexcept {
  switch (label) {
    case Label::Relevant:
      return 'R';
    case Label::Irrelevant:
      return 'I';
    case Label::Unlabeled:
      break;
  }
  return 'U';
}

Label parse_label(std::string_view code) {
  if (code == "R") return Label::Relevant;
  if (code == "I") return Label::Irrelevant;
  if (code == "U") return Label::Unlabeled;
  throw InvalidArgument("unknown label '" + std::string(code) + "'");
}

std::size_t TokenBag::length() const noexcept {
  std::size_t n = 0;
  for (const auto& [stem, count] : counts) n += count;
  return n;
}

bool TokenBag::contains(std::string_view stem) const {
  return counts.find(std::string(stem)) != counts.end();
}

const StopWordList& StopWordList::english_default() {
  static const StopWordList list({"the",  "be",  "to",   "of",   "and",  "a",  "in",  "that",
                                  "have", "i",   "it",   "for",  "not",  "on", "he",  "as",
                                  "you",  "do",  "at",   "this", "but",  "his", "by", "from",
                                  "they", "we",  "say",  "her",  "she",  "or", "an",  "will"});
  return list;
}

StopWordList StopWordList::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stop-word file " + path.string());
  std::set<std::string, std::less<>> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::transform(line.begin(), line.end(), line.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(line);
  }
  return StopWordList(std::move(words));
}

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Simple case folding for the Latin-1, Latin Extended-A, Greek and Cyrillic
// capital ranges. Everything else maps to itself.
char32_t fold(char32_t cp) {
  if ((cp >= 0xC0 && cp <= 0xDE && cp != 0xD7)) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 &&
      cp != 0x149 && cp != 0x17F) {
    const bool odd_pairs = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (odd_pairs) return (cp % 2 == 1) ? cp + 1 : cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  return cp;
}

// Non-ASCII code points that separate tokens: Latin-1 punctuation and
// symbols, the multiplication/division signs and general punctuation.
bool is_separator(char32_t cp) {
  return (cp >= 0xA0 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2000 && cp <= 0x206F) || cp == 0x3000 || cp == 0xFEFF;
}

// Decodes one UTF-8 sequence starting at text[i]; returns its length, or 1
// with cp set to the raw byte for malformed input.
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    cp = b0;
    return 1;
  }
  if (i + len > text.size()) {
    cp = b0;
    return 1;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      cp = b0;
      return 1;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  return len;
}

bool is_ascii_alpha_word(std::string_view token) {
  return std::all_of(token.begin(), token.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

}  // namespace

TokenBag tokenize(std::string_view text, const StopWordList& stop) {
  TokenBag bag;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (!stop.contains(token)) {
      std::string stem = is_ascii_alpha_word(token) ? porter_stem(token) : token;
      if (!stem.empty()) ++bag.counts[std::move(stem)];
    }
    token.clear();
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (std::isalnum(c)) {
        token.push_back(static_cast<char>(std::tolower(c)));
      } else {
        flush();
      }
      ++i;
      continue;
    }
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, i, cp);
    if (len == 1 && cp >= 0x80 && cp == c) {
      token.push_back(static_cast<char>(c));  // stray byte, kept verbatim
    } else if (is_separator(cp)) {
      flush();
    } else {
      append_utf8(token, fold(cp));
    }
    i += len;
  }
  flush();
  return bag;
}

TokenBag bag_of(const Document& doc, const StopWordList& stop) {
  TokenBag bag = tokenize(doc.text, stop);
  bag.doc_id = doc.id;
  return bag;
}

std::vector<Document> Corpus::train() const {
  const auto n = std::min(partition.train_count, documents.size());
  return {documents.begin(), documents.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<Document> Corpus::test() const {
  const auto n = std::min(partition.train_count, documents.size());
  return {documents.begin() + static_cast<std::ptrdiff_t>(n), documents.end()};
}

void Corpus::validate() const {
  if (partition.train_count + partition.test_count != documents.size()) {
    throw InvalidArgument("partition train=" + std::to_string(partition.train_count) +
                          " test=" + std::to_string(partition.test_count) + " does not cover " +
                          std::to_string(documents.size()) + " documents");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& doc : documents) {
    if (doc.id.empty()) throw InvalidArgument("document with empty id");
    if (!seen.insert(doc.id).second) throw InvalidArgument("duplicate id '" + doc.id + "'");
  }
}

std::string escape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\t':
        out += "\\t";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '\\':
        out += "\\\\";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string unescape_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out.push_back(text[i]);
      continue;
    }
    switch (text[++i]) {
      case 't':
        out.push_back('\t');
        break;
      case 'n':
        out.push_back('\n');
        break;
      case 'r':
        out.push_back('\r');
        break;
      case '\\':
        out.push_back('\\');
        break;
      default:
        out.push_back('\\');
        out.push_back(text[i]);
    }
  }
  return out;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line, std::size_t max_fields) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (fields.size() + 1 < max_fields) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) break;
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  fields.push_back(line.substr(start));
  return fields;
}

template <class T>
bool parse_number(std::string_view s, T& value) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  return ec == std::errc() && ptr == end;
}

// Reads `train=N` / `test=M` declarations out of a comment line.
void scan_partition(std::string_view comment, std::optional<std::size_t>& train,
                    std::optional<std::size_t>& test, std::size_t line_no) {
  std::istringstream words{std::string(comment)};
  std::string word;
  while (words >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) continue;
    const auto key = std::string_view(word).substr(0, eq);
    const auto value = std::string_view(word).substr(eq + 1);
    if (key != "train" && key != "test") continue;
    std::size_t n = 0;
    if (!parse_number(value, n)) throw ParseError("bad partition value '" + word + "'", line_no);
    (key == "train" ? train : test) = n;
  }
}

}  // namespace

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::optional<std::size_t> declared_train;
  std::optional<std::size_t> declared_test;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      scan_partition(std::string_view(line).substr(1), declared_train, declared_test, line_no);
      continue;
    }
    const auto fields = split_tabs(line, 4);
    if (fields.size() != 4) {
      throw ParseError("expected 4 tab-separated fields (id, label, timestamp, text), got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    Document doc;
    doc.id = std::string(fields[0]);
    if (doc.id.empty()) throw ParseError("empty document id", line_no);
    try {
      doc.label = parse_label(fields[1]);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!parse_number(fields[2], doc.timestamp)) {
      throw ParseError("bad timestamp '" + std::string(fields[2]) + "'", line_no);
    }
    doc.text = unescape_text(fields[3]);
    if (!ids.insert(doc.id).second) throw ParseError("duplicate id '" + doc.id + "'", line_no);
    corpus.documents.push_back(std::move(doc));
  }

  const std::size_t total = corpus.documents.size();
  if (declared_train || declared_test) {
    const std::size_t train = declared_train.value_or(total - std::min(total, declared_test.value_or(0)));
    const std::size_t test = declared_test.value_or(total - std::min(total, train));
    if (train + test != total) {
      throw ParseError("declared partition train=" + std::to_string(train) + " test=" +
                           std::to_string(test) + " does not match " + std::to_string(total) +
                           " documents",
                       0);
    }
    corpus.partition = {train, test};
  } else {
    std::size_t test = 0;
    while (test < total && corpus.documents[total - 1 - test].label == Label::Unlabeled) ++test;
    corpus.partition = {total - test, test};
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << "# train=" << corpus.partition.train_count << " test=" << corpus.partition.test_count
      << '\n';
  for (const auto& doc : corpus.documents) {
    out << doc.id << '\t' << label_code(doc.label) << '\t' << doc.timestamp << '\t'
        << escape_text(doc.text) << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
  if (!out) throw Error("error writing corpus file " + path.string());
}

std::vector<Document> order_stream(const Corpus& corpus, const StreamOrder& order) {
  return order_parts(corpus.train(), corpus.test(), order);
}

namespace {

// Draws vocabulary positions, uniformly or with Zipf weights.
class PositionSampler {
 public:
  PositionSampler(std::size_t n, double exponent) : n_(n) {
    if (exponent > 0.0) {
      cumulative_.reserve(n);
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
        cumulative_.push_back(total);
      }
    }
  }

  std::size_t operator()(Rng& rng) const {
    if (cumulative_.empty()) return static_cast<std::size_t>(rng.uniform_below(n_));
    const double u = rng.uniform01() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), n_ - 1);
  }

 private:
  std::size_t n_;
  std::vector<double> cumulative_;
};

std::string make_word(char prefix, std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return std::string(1, prefix) + "w" + digits;
}

}  // namespace

Corpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.relevant_vocab == 0 || spec.irrelevant_vocab == 0) {
    throw InvalidArgument("synthetic corpus needs a non-empty vocabulary for both classes");
  }
  if (spec.max_length == 0 || spec.min_length > spec.max_length) {
    throw InvalidArgument("synthetic document length range is empty");
  }
  if (spec.drift_rate < 0.0 || spec.drift_rate > 1.0 || spec.class_word_rate < 0.0 ||
      spec.class_word_rate > 1.0) {
    throw InvalidArgument("synthetic rates must lie in [0,1]");
  }

  Rng rng(derive_seed(seed, "synth"));

  struct ClassVocab {
    char prefix;
    std::vector<std::string> active;
    std::size_t next_index;
    PositionSampler sampler;
  };
  auto make_vocab = [&](char prefix, std::size_t n) {
    ClassVocab v{prefix, {}, n, PositionSampler(n, spec.zipf)};
    for (std::size_t i = 0; i < n; ++i) v.active.push_back(make_word(prefix, i));
    return v;
  };
  ClassVocab relevant = make_vocab('r', spec.relevant_vocab);
  ClassVocab irrelevant = make_vocab('i', spec.irrelevant_vocab);
  std::vector<std::string> shared;
  for (std::size_t i = 0; i < spec.shared_vocab; ++i) shared.push_back(make_word('s', i));
  const PositionSampler shared_sampler(std::max<std::size_t>(spec.shared_vocab, 1), spec.zipf);

  auto schedule = [&](std::size_t n_rel, std::size_t n_irr) {
    std::vector<Label> labels(n_rel, Label::Relevant);
    labels.insert(labels.end(), n_irr, Label::Irrelevant);
    rng.shuffle(labels.begin(), labels.end());
    return labels;
  };
  const auto train_labels = schedule(spec.train_relevant, spec.train_irrelevant);
  const auto test_labels = schedule(spec.test_relevant, spec.test_irrelevant);

  Corpus corpus;
  std::int64_t timestamp = 0;
  auto emit = [&](Label label, bool is_test) {
    ClassVocab& vocab = label == Label::Relevant ? relevant : irrelevant;
    if (spec.drift_rate > 0.0 && rng.bernoulli(spec.drift_rate)) {
      const auto slot = static_cast<std::size_t>(rng.uniform_below(vocab.active.size()));
      vocab.active[slot] = make_word(vocab.prefix, vocab.next_index++);
    }
    const auto span = spec.max_length - spec.min_length + 1;
    const auto length = spec.min_length + static_cast<std::size_t>(rng.uniform_below(span));
    std::string text;
    for (std::size_t t = 0; t < length; ++t) {
      if (!text.empty()) text.push_back(' ');
      if (!shared.empty() && !rng.bernoulli(spec.class_word_rate)) {
        text += shared[shared_sampler(rng)];
      } else {
        text += vocab.active[vocab.sampler(rng)];
      }
    }
    ++timestamp;
    Document doc;
    doc.id = "d" + std::to_string(timestamp);
    if (doc.id.size() < 6) doc.id.insert(1, 6 - doc.id.size(), '0');
    doc.text = std::move(text);
    doc.label = (is_test && !spec.label_test) ? Label::Unlabeled : label;
    doc.timestamp = timestamp;
    corpus.documents.push_back(std::move(doc));
  };
  for (Label l : train_labels) emit(l, false);
  for (Label l : test_labels) emit(l, true);
  corpus.partition = {train_labels.size(), test_labels.size()};
  return corpus;
}

}  // namespace abcrm
