#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "abcrm/baselines.hpp"
#include "abcrm/corpus.hpp"
#include "abcrm/dynamics.hpp"
#include "abcrm/error.hpp"
#include "abcrm/features.hpp"
#include "abcrm/metrics.hpp"
#include "abcrm/porter.hpp"
#include "abcrm/search.hpp"

namespace py = pybind11;
using namespace abcrm;

namespace {

StreamOrder order_named(const std::string& name, std::uint64_t seed) {
  StreamOrder order;
  if (name == "ordered") return order;
  order.mode = OrderMode::Shuffled;
  order.seed = seed;
  if (name == "shuffled") {
    order.scope = OrderScope::Both;
  } else if (name == "shuffled-train") {
    order.scope = OrderScope::TrainOnly;
  } else if (name == "shuffled-test") {
    order.scope = OrderScope::TestOnly;
  } else {
    throw InvalidArgument("unknown order '" + name + "'");
  }
  return order;
}

py::dict report_dict(const MetricReport& m) {
  py::dict d;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["fscore"] = m.fscore;
  d["accuracy"] = m.accuracy;
  d["auc"] = m.auc;
  d["mcc"] = m.mcc;
  return d;
}

}  // namespace

PYBIND11_MODULE(_abcrm, m) {
  m.doc() = "Agent-based cross-regulation text classifier";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::enum_<Label>(m, "Label")
      .value("Relevant", Label::Relevant)
      .value("Irrelevant", Label::Irrelevant)
      .value("Unlabeled", Label::Unlabeled);

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def(py::init([](std::string id, std::string text, Label label, std::int64_t timestamp) {
             return Document{std::move(id), std::move(text), label, timestamp};
           }),
           py::arg("id"), py::arg("text"), py::arg("label") = Label::Unlabeled, py::arg("timestamp") = 0)
      .def_readwrite("id", &Document::id)
      .def_readwrite("text", &Document::text)
      .def_readwrite("label", &Document::label)
      .def_readwrite("timestamp", &Document::timestamp)
      .def("__repr__", [](const Document& d) {
        return "Document(" + d.id + ", " + label_code(d.label) + ", " + std::to_string(d.timestamp) + ")";
      });

  py::class_<Corpus>(m, "Corpus")
      .def(py::init([](std::vector<Document> docs, std::size_t train_count) {
             Corpus c;
             c.partition = {train_count, docs.size() - std::min(train_count, docs.size())};
             c.documents = std::move(docs);
             c.validate();
             return c;
           }),
           py::arg("documents"), py::arg("train_count"))
      .def_readonly("documents", &Corpus::documents)
      .def_property_readonly("train_count", [](const Corpus& c) { return c.partition.train_count; })
      .def_property_readonly("test_count", [](const Corpus& c) { return c.partition.test_count; })
      .def("train", &Corpus::train)
      .def("test", &Corpus::test)
      .def("__len__", &Corpus::size);

  m.def("porter_stem", [](const std::string& w) { return porter_stem(w); }, py::arg("word"));
  m.def(
      "tokenize", [](const std::string& text) { return tokenize(text).counts; }, py::arg("text"),
      "Stemmed token counts of `text` with the default stop words removed.");
  m.def("load_corpus", &load_corpus, py::arg("path"));
  m.def("save_corpus", &save_corpus, py::arg("path"), py::arg("corpus"));
  m.def(
      "generate_synthetic",
      [](std::uint64_t seed, std::size_t relevant_vocab, std::size_t irrelevant_vocab, std::size_t shared_vocab,
         std::size_t min_length, std::size_t max_length, double class_word_rate, double zipf,
         std::size_t train_relevant, std::size_t train_irrelevant, std::size_t test_relevant,
         std::size_t test_irrelevant, double drift_rate, bool label_test) {
        SyntheticSpec s;
        s.relevant_vocab = relevant_vocab;
        s.irrelevant_vocab = irrelevant_vocab;
        s.shared_vocab = shared_vocab;
        s.min_length = min_length;
        s.max_length = max_length;
        s.class_word_rate = class_word_rate;
        s.zipf = zipf;
        s.train_relevant = train_relevant;
        s.train_irrelevant = train_irrelevant;
        s.test_relevant = test_relevant;
        s.test_irrelevant = test_irrelevant;
        s.drift_rate = drift_rate;
        s.label_test = label_test;
        return generate_synthetic(s, seed);
      },
      py::arg("seed"), py::kw_only(), py::arg("relevant_vocab") = 10, py::arg("irrelevant_vocab") = 10,
      py::arg("shared_vocab") = 0, py::arg("min_length") = 20, py::arg("max_length") = 40,
      py::arg("class_word_rate") = 0.7, py::arg("zipf") = 0.0, py::arg("train_relevant") = 20,
      py::arg("train_irrelevant") = 20, py::arg("test_relevant") = 20, py::arg("test_irrelevant") = 20,
      py::arg("drift_rate") = 0.0, py::arg("label_test") = true);

  py::class_<FeatureScore>(m, "FeatureScore")
      .def_readonly("feature", &FeatureScore::feature)
      .def_readonly("tfidf_avg", &FeatureScore::tfidf_avg)
      .def_readonly("separation", &FeatureScore::separation)
      .def_readonly("rank_tfidf", &FeatureScore::rank_tfidf)
      .def_readonly("rank_sep", &FeatureScore::rank_sep)
      .def_readonly("rank_product", &FeatureScore::rank_product);

  py::class_<FeatureSet>(m, "FeatureSet")
      .def_property_readonly("features", &FeatureSet::features)
      .def_property_readonly("k", &FeatureSet::k)
      .def("__len__", &FeatureSet::size)
      .def("__contains__", [](const FeatureSet& f, const std::string& s) { return f.contains(s); })
      .def("stems", [](const FeatureSet& f) {
        std::vector<std::string> out;
        for (const auto& s : f.features()) out.push_back(s.feature);
        return out;
      });
  m.def(
      "select_features",
      [](const Corpus& corpus, std::size_t k, const std::string& combine) {
        if (combine != "rank" && combine != "score") throw InvalidArgument("combine must be 'rank' or 'score'");
        return select_features(training_bags(corpus), k,
                               combine == "rank" ? CombineMode::RankProduct : CombineMode::ScoreProduct);
      },
      py::arg("corpus"), py::arg("k") = 650, py::arg("combine") = "rank");
  m.def("load_feature_set", &load_feature_set, py::arg("path"));
  m.def("save_feature_set", &save_feature_set, py::arg("path"), py::arg("features"));

  py::class_<ParameterSet>(m, "ParameterSet")
      .def(py::init([](std::uint32_t e0, std::uint32_t r0_minus, std::uint32_t r0_plus, double de, double dr,
                       std::uint32_t na) {
             ParameterSet p{e0, r0_minus, r0_plus, de, dr, na};
             p.validate();
             return p;
           }),
           py::kw_only(), py::arg("e0") = kReferenceParameters.initial_effectors,
           py::arg("r0_minus") = kReferenceParameters.initial_regulators_neg,
           py::arg("r0_plus") = kReferenceParameters.initial_regulators_pos,
           py::arg("de") = kReferenceParameters.effector_death,
           py::arg("dr") = kReferenceParameters.regulator_death,
           py::arg("na") = kReferenceParameters.presentations)
      .def_readonly("e0", &ParameterSet::initial_effectors)
      .def_readonly("r0_minus", &ParameterSet::initial_regulators_neg)
      .def_readonly("r0_plus", &ParameterSet::initial_regulators_pos)
      .def_readonly("de", &ParameterSet::effector_death)
      .def_readonly("dr", &ParameterSet::regulator_death)
      .def_readonly("na", &ParameterSet::presentations)
      .def(py::self == py::self)
      .def("__repr__", [](const ParameterSet& p) {
        return "ParameterSet(e0=" + std::to_string(p.initial_effectors) +
               ", r0_minus=" + std::to_string(p.initial_regulators_neg) +
               ", r0_plus=" + std::to_string(p.initial_regulators_pos) + ", de=" + std::to_string(p.effector_death) +
               ", dr=" + std::to_string(p.regulator_death) + ", na=" + std::to_string(p.presentations) + ")";
      });

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("doc_id", &Prediction::doc_id)
      .def_readonly("label", &Prediction::label)
      .def_readonly("score", &Prediction::score)
      .def(py::self == py::self);

  m.def(
      "classify_stream",
      [](const Corpus& corpus, const FeatureSet& features, const ParameterSet& params, std::uint64_t seed,
         bool cell_death, bool pu_training, bool incremental_bias, const std::string& order) {
        DynamicsConfig config;
        config.seed = derive_seed(seed, "dynamics");
        config.cell_death = cell_death;
        config.pu_training = pu_training;
        config.incremental_bias = incremental_bias;
        const auto train = prepare(corpus.train(), features);
        const auto test = hide_labels(prepare(corpus.test(), features));
        py::gil_scoped_release release;
        return process_stream(order_parts(train, test, order_named(order, derive_seed(seed, "order"))), params,
                              config);
      },
      py::arg("corpus"), py::arg("features"), py::arg("params") = kReferenceParameters, py::kw_only(),
      py::arg("seed"), py::arg("cell_death") = true, py::arg("pu_training") = false,
      py::arg("incremental_bias") = false, py::arg("order") = "ordered",
      "Streams training then test documents (test labels hidden) and returns one prediction per test document.");

  m.def(
      "naive_bayes",
      [](const Corpus& corpus, const FeatureSet& features, double alpha) {
        const NbModel model = nb_fit(prepare(corpus.train(), features), features, alpha);
        return nb_predict_all(model, prepare(corpus.test(), features));
      },
      py::arg("corpus"), py::arg("features"), py::arg("alpha") = 1.0);

  py::class_<Confusion>(m, "Confusion")
      .def(py::init([](std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
             return Confusion{tp, fp, tn, fn};
           }),
           py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"))
      .def_readonly("tp", &Confusion::tp)
      .def_readonly("fp", &Confusion::fp)
      .def_readonly("tn", &Confusion::tn)
      .def_readonly("fn", &Confusion::fn);

  m.def(
      "basic_metrics", [](const Confusion& c) { return report_dict(basic_metrics(c)); }, py::arg("confusion"));
  m.def(
      "evaluate",
      [](const std::vector<Prediction>& preds, const Corpus& corpus) {
        return report_dict(evaluate(preds, truth_of(corpus.test())));
      },
      py::arg("predictions"), py::arg("corpus"), "Metrics of test-set predictions against the corpus labels.");
  m.def(
      "paired_ttest",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const TTest t = paired_ttest(a, b);
        return py::make_tuple(t.t, t.p);
      },
      py::arg("a"), py::arg("b"));
  m.def("t_critical", &t_critical, py::arg("df"), py::arg("alpha"));

  m.def(
      "grid_size",
      [](std::optional<std::string> setup) {
        GridSpec spec;
        if (setup) spec = effective_grid(parse_setup(*setup), spec);
        return Grid(spec).size();
      },
      py::arg("setup") = py::none(), "Number of points in the default grid (optionally as swept by a setup).");

  m.def(
      "run_experiment",
      [](const std::string& setup, const Corpus& corpus, const FeatureSet& features, std::uint64_t seed,
         std::map<std::string, std::tuple<double, double, double>> axes, std::size_t workers,
         std::size_t replicates) {
        GridSpec spec;
        const std::map<std::string, Axis*> by_name = {
            {"e0", &spec.initial_effectors},    {"r0_plus", &spec.initial_regulators_pos},
            {"r0_minus", &spec.initial_regulators_neg}, {"de", &spec.effector_death},
            {"dr", &spec.regulator_death},      {"na", &spec.presentations}};
        for (const auto& [name, range] : axes) {
          const auto it = by_name.find(name);
          if (it == by_name.end()) throw InvalidArgument("unknown grid axis '" + name + "'");
          *it->second = Axis{std::get<0>(range), std::get<1>(range), std::get<2>(range)};
        }
        const ExperimentData data = prepare_experiment(corpus, features);
        SweepOptions options;
        options.seed = seed;
        options.workers = workers;
        options.replicates = replicates;
        SweepOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_experiment(parse_setup(setup), data, spec, options);
        }
        py::list rows;
        for (const auto& r : outcome.results) {
          py::dict row = report_dict(r.report);
          row["params"] = r.params;
          row["grid_index"] = r.grid_index;
          row["seeds"] = r.seeds;
          rows.append(row);
        }
        return rows;
      },
      py::arg("setup"), py::arg("corpus"), py::arg("features"), py::kw_only(), py::arg("seed"),
      py::arg("axes") = std::map<std::string, std::tuple<double, double, double>>{}, py::arg("workers") = 1,
      py::arg("replicates") = 8,
      "Sweeps a grid (default axes, each overridable as name -> (min, max, step)); one dict per grid point.");
}
