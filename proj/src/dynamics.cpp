#include "abcrm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "abcrm/error.hpp"
#include "abcrm/format.hpp"

namespace abcrm {

void ParameterSet::validate() const {
  if (initial_effectors == 0 || initial_regulators_neg == 0 || initial_regulators_pos == 0) {
    throw InvalidArgument("initial populations E0, R0-, R0+ must be positive");
  }
  if (!(effector_death >= 0.0 && effector_death <= 1.0) ||
      !(regulator_death >= 0.0 && regulator_death <= 1.0)) {
    throw InvalidArgument("death rates must lie in [0,1]");
  }
  if (presentations == 0 || presentations % 2 != 0) {
    throw InvalidArgument("nA must be a positive even number, got " + std::to_string(presentations));
  }
}

std::optional<std::size_t> TCellPool::find_index(std::string_view stem) const {
  const auto it = index_.find(std::string(stem));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const Population* TCellPool::find(std::string_view stem) const {
  const auto idx = find_index(stem);
  return idx ? &entries_[*idx].second : nullptr;
}

std::size_t TCellPool::insert(std::string stem, Population population) {
  const auto [it, inserted] = index_.emplace(stem, entries_.size());
  if (!inserted) throw InvalidArgument("feature '" + stem + "' already in pool");
  entries_.emplace_back(std::move(stem), population);
  return it->second;
}

Apc build_apc(std::string doc_id, std::vector<std::string> features, std::uint32_t presentations,
              Rng& rng) {
  std::sort(features.begin(), features.end());
  features.erase(std::unique(features.begin(), features.end()), features.end());

  Apc apc;
  apc.doc_id = std::move(doc_id);
  apc.features = std::move(features);

  std::vector<std::int32_t> positions;
  positions.reserve(apc.features.size() * presentations);
  for (std::size_t f = 0; f < apc.features.size(); ++f) {
    positions.insert(positions.end(), presentations, static_cast<std::int32_t>(f));
  }
  rng.shuffle(positions.begin(), positions.end());
  apc.slots.reserve((positions.size() + 1) / 2);
  for (std::size_t i = 0; i < positions.size(); i += 2) {
    const std::int32_t second = i + 1 < positions.size() ? positions[i + 1] : Apc::kEmpty;
    apc.slots.push_back({positions[i], second});
  }
  return apc;
}

void init_populations(TCellPool& pool, const std::vector<std::string>& features, Label label,
                      const ParameterSet& params, const DynamicsConfig& config) {
  const std::uint64_t regulators =
      label == Label::Relevant ? params.initial_regulators_pos : params.initial_regulators_neg;
  for (const auto& stem : features) {
    if (const auto idx = pool.find_index(stem)) {
      if (config.incremental_bias) {
        auto& p = pool.at(*idx);
        p.effectors += params.initial_effectors;
        p.regulators += regulators;
      }
    } else {
      pool.insert(stem, {params.initial_effectors, regulators});
    }
  }
}

namespace {

// Pool index of each APC feature.
std::vector<std::size_t> resolve(const TCellPool& pool, const Apc& apc) {
  std::vector<std::size_t> out;
  out.reserve(apc.features.size());
  for (const auto& stem : apc.features) {
    const auto idx = pool.find_index(stem);
    if (!idx) throw InvalidArgument("feature '" + stem + "' presented before being seeded");
    out.push_back(*idx);
  }
  return out;
}

}  // namespace

BindingAssignment bind(const TCellPool& pool, const Apc& apc, Rng& rng) {
  const auto pool_index = resolve(pool, apc);
  const std::size_t n_features = apc.features.size();

  // Positions (slot * 2 + side) of every feature, in slot order.
  std::vector<std::vector<std::uint32_t>> positions(n_features);
  for (std::size_t s = 0; s < apc.slots.size(); ++s) {
    for (std::size_t side = 0; side < 2; ++side) {
      const auto f = apc.slots[s][side];
      if (f != Apc::kEmpty) positions[static_cast<std::size_t>(f)].push_back(static_cast<std::uint32_t>(2 * s + side));
    }
  }

  BindingAssignment out;
  out.slots.assign(apc.slots.size(), {Binding::Unbound, Binding::Unbound});
  out.bound_effectors.assign(n_features, 0);
  out.bound_regulators.assign(n_features, 0);
  for (std::size_t f = 0; f < n_features; ++f) {
    const Population& pop = pool.at(pool_index[f]);
    std::uint64_t effectors_left = pop.effectors;
    std::uint64_t regulators_left = pop.regulators;
    for (const std::uint32_t pos : positions[f]) {
      const std::uint64_t remaining = effectors_left + regulators_left;
      if (remaining == 0) break;
      Binding b;
      if (rng.uniform_below(remaining) < effectors_left) {
        b = Binding::Effector;
        --effectors_left;
        ++out.bound_effectors[f];
      } else {
        b = Binding::Regulator;
        --regulators_left;
        ++out.bound_regulators[f];
      }
      out.slots[pos / 2][pos % 2] = b;
    }
  }
  return out;
}

void react(TCellPool& pool, const Apc& apc, const BindingAssignment& assignment) {
  const auto pool_index = resolve(pool, apc);
  std::vector<Population> delta(apc.features.size());
  for (std::size_t s = 0; s < apc.slots.size(); ++s) {
    const auto [f, g] = apc.slots[s];
    const auto [bf, bg] = assignment.slots[s];
    if (f == Apc::kEmpty || g == Apc::kEmpty) continue;
    if (bf == Binding::Unbound || bg == Binding::Unbound) continue;
    const auto fi = static_cast<std::size_t>(f);
    const auto gi = static_cast<std::size_t>(g);
    if (bf == Binding::Effector && bg == Binding::Effector) {
      ++delta[fi].effectors;
      ++delta[gi].effectors;
    } else if (bf == Binding::Effector && bg == Binding::Regulator) {
      ++delta[gi].regulators;
    } else if (bf == Binding::Regulator && bg == Binding::Effector) {
      ++delta[fi].regulators;
    }
  }
  for (std::size_t f = 0; f < delta.size(); ++f) {
    auto& p = pool.at(pool_index[f]);
    p.effectors += delta[f].effectors;
    p.regulators += delta[f].regulators;
  }
}

void cull(TCellPool& pool, const Apc& apc, const BindingAssignment& assignment,
          const ParameterSet& params, Rng& rng, const DynamicsConfig& config) {
  if (!config.cell_death) return;
  std::vector<std::uint64_t> bound_e(pool.size(), 0);
  std::vector<std::uint64_t> bound_r(pool.size(), 0);
  for (std::size_t f = 0; f < apc.features.size(); ++f) {
    if (const auto idx = pool.find_index(apc.features[f])) {
      bound_e[*idx] = assignment.bound_effectors[f];
      bound_r[*idx] = assignment.bound_regulators[f];
    }
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto& p = pool.at(i);
    const std::uint64_t unbound_e = p.effectors - std::min(p.effectors, bound_e[i]);
    const std::uint64_t unbound_r = p.regulators - std::min(p.regulators, bound_r[i]);
    p.effectors -= rng.binomial(unbound_e, params.effector_death);
    p.regulators -= rng.binomial(unbound_r, params.regulator_death);
  }
}

Classification classify(const TCellPool& pool, const std::vector<std::string>& features) {
  Classification c;
  for (const auto& stem : features) {
    const Population* p = pool.find(stem);
    if (p == nullptr || (p->effectors == 0 && p->regulators == 0)) continue;
    const auto e = static_cast<double>(p->effectors);
    const auto r = static_cast<double>(p->regulators);
    const double norm = std::sqrt(r * r + e * e);
    c.regulatory_sum += r / norm;
    c.effector_sum += e / norm;
  }
  c.score = c.regulatory_sum - c.effector_sum;
  c.label = c.regulatory_sum >= c.effector_sum ? Label::Relevant : Label::Irrelevant;
  return c;
}

std::vector<PreparedDocument> prepare(const std::vector<Document>& docs, const FeatureSet& features,
                                      const StopWordList& stop) {
  std::vector<PreparedDocument> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    out.push_back({doc.id, doc.label, doc.timestamp, features.present_in(tokenize(doc.text, stop))});
  }
  return out;
}

std::vector<PreparedDocument> hide_labels(std::vector<PreparedDocument> docs) {
  for (auto& d : docs) d.label = Label::Unlabeled;
  return docs;
}

CrossRegulationModel::CrossRegulationModel(const ParameterSet& params, const DynamicsConfig& config)
    : params_(params), config_(config), rng_(config.seed) {
  params_.validate();
}

std::optional<Prediction> CrossRegulationModel::process(const PreparedDocument& doc) {
  ++cursor_;
  if (config_.pu_training && doc.label == Label::Irrelevant) return std::nullopt;

  const Apc apc = build_apc(doc.id, doc.features, params_.presentations, rng_);
  init_populations(pool_, apc.features, doc.label, params_, config_);
  const BindingAssignment assignment = bind(pool_, apc, rng_);
  react(pool_, apc, assignment);
  cull(pool_, apc, assignment, params_, rng_, config_);
  if (doc.label != Label::Unlabeled) return std::nullopt;
  const Classification c = classify(pool_, apc.features);
  return Prediction{doc.id, c.label, c.score};
}

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

void CrossRegulationModel::save_checkpoint(std::ostream& out) const {
  const auto& s = rng_.state();
  out << "# abcrm-pool v1"
      << " seed=" << config_.seed << " cursor=" << cursor_ << " e0=" << params_.initial_effectors
      << " r0_minus=" << params_.initial_regulators_neg
      << " r0_plus=" << params_.initial_regulators_pos
      << " de=" << format_real(params_.effector_death)
      << " dr=" << format_real(params_.regulator_death) << " na=" << params_.presentations
      << " cell_death=" << config_.cell_death << " pu_training=" << config_.pu_training
      << " incremental_bias=" << config_.incremental_bias << " rng=" << hex64(s[0]) << ','
      << hex64(s[1]) << ',' << hex64(s[2]) << ',' << hex64(s[3]) << '\n';
  for (const auto& [stem, p] : pool_.entries()) {
    out << stem << '\t' << p.effectors << '\t' << p.regulators << '\n';
  }
}

CrossRegulationModel CrossRegulationModel::load_checkpoint(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("# abcrm-pool v1", 0) != 0) {
    throw ParseError("missing pool checkpoint header", 1);
  }
  std::map<std::string, std::string, std::less<>> kv;
  std::istringstream words(header.substr(15));
  std::string word;
  while (words >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) throw ParseError("bad header token '" + word + "'", 1);
    kv[word.substr(0, eq)] = word.substr(eq + 1);
  }
  auto get = [&](std::string_view key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("checkpoint header lacks '" + std::string(key) + "'", 1);
    return it->second;
  };
  auto get_int = [&](std::string_view key, auto& value) {
    if (!parse_integer(get(key), value)) throw ParseError("bad value for '" + std::string(key) + "'", 1);
  };
  auto get_real = [&](std::string_view key, double& value) {
    if (!parse_real(get(key), value)) throw ParseError("bad value for '" + std::string(key) + "'", 1);
  };
  auto get_flag = [&](std::string_view key) {
    const auto& v = get(key);
    if (v != "0" && v != "1") throw ParseError("bad flag for '" + std::string(key) + "'", 1);
    return v == "1";
  };

  ParameterSet params;
  DynamicsConfig config;
  std::size_t cursor = 0;
  get_int("seed", config.seed);
  get_int("cursor", cursor);
  get_int("e0", params.initial_effectors);
  get_int("r0_minus", params.initial_regulators_neg);
  get_int("r0_plus", params.initial_regulators_pos);
  get_real("de", params.effector_death);
  get_real("dr", params.regulator_death);
  get_int("na", params.presentations);
  config.cell_death = get_flag("cell_death");
  config.pu_training = get_flag("pu_training");
  config.incremental_bias = get_flag("incremental_bias");

  Rng::State state{};
  const auto words_rng = split(get("rng"), ',');
  if (words_rng.size() != 4) throw ParseError("rng state needs 4 words", 1);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto w = words_rng[i];
    const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), state[i], 16);
    if (ec != std::errc() || ptr != w.data() + w.size()) throw ParseError("bad rng word", 1);
  }

  CrossRegulationModel model(params, config);
  model.rng_.set_state(state);
  model.cursor_ = cursor;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    Population p;
    if (fields.size() != 3 || fields[0].empty() || !parse_integer(fields[1], p.effectors) ||
        !parse_integer(fields[2], p.regulators)) {
      throw ParseError("expected stem, effectors, regulators", line_no);
    }
    try {
      model.pool_.insert(std::string(fields[0]), p);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return model;
}

void CrossRegulationModel::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  save_checkpoint(out);
}

CrossRegulationModel CrossRegulationModel::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

std::vector<Prediction> process_stream(const std::vector<PreparedDocument>& stream,
                                       const ParameterSet& params, const DynamicsConfig& config) {
  CrossRegulationModel model(params, config);
  std::vector<Prediction> out;
  for (const auto& doc : stream) {
    if (auto p = model.process(doc)) out.push_back(std::move(*p));
  }
  return out;
}

}  // namespace abcrm
