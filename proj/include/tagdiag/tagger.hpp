#pragma once

// Reference tagger: a linear-chain CRF over discrete feature templates,
// trained by mini-batch gradient descent on the L2-regularized negative
// conditional log-likelihood, with early stopping on a development set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tagdiag/corpus.hpp"
#include "tagdiag/crf.hpp"
#include "tagdiag/evaluation.hpp"
#include "tagdiag/features.hpp"

namespace tagdiag {

struct Hyperparams {
  double l2 = 1e-4;
  double learning_rate = 0.1;
  std::size_t epochs = 50;
  std::size_t batch = 8;  // 0 means full batch
  std::size_t patience = 20;
  std::uint64_t seed = 1;
  std::size_t stopwords = 25;
};

// Parameters are one flat vector: emission weights (feature x label), then
// transitions (label x label), then start scores (label).
struct CrfModel {
  label_scheme scheme = label_scheme::bio;
  std::vector<std::string> labels;
  std::vector<std::string> features;
  std::unordered_map<std::string, std::uint32_t> feature_ids;
  std::vector<double> params;
  AggregatorConfig agg;
  std::vector<FeatureTemplate> templates;
  ContextFilter filter;
  Hyperparams hyper;

  std::size_t label_count() const { return labels.size(); }
  std::size_t emission_size() const { return features.size() * labels.size(); }
  std::span<const double> transitions() const {
    return std::span<const double>(params).subspan(emission_size(), labels.size() * labels.size());
  }
  std::span<const double> starts() const {
    return std::span<const double>(params).subspan(emission_size() + labels.size() * labels.size(),
                                                   labels.size());
  }
  std::size_t transition_offset() const { return emission_size(); }
  std::size_t start_offset() const { return emission_size() + labels.size() * labels.size(); }

  void resize_params() { params.assign(start_offset() + labels.size(), 0.0); }

  std::uint32_t add_feature(const std::string& f) {
    auto [it, inserted] = feature_ids.try_emplace(f, static_cast<std::uint32_t>(features.size()));
    if (inserted) features.push_back(f);
    return it->second;
  }
};

struct EncodedSequence {
  std::vector<std::vector<std::uint32_t>> features;  // per position
  std::vector<std::size_t> labels;                   // gold label ids (empty when unknown)
};

inline Lattice make_lattice(const CrfModel& m, const EncodedSequence& seq) {
  Lattice lat;
  lat.length = seq.features.size();
  lat.labels = m.label_count();
  lat.emission.assign(lat.length * lat.labels, 0.0);
  for (std::size_t t = 0; t < lat.length; ++t)
    for (auto f : seq.features[t]) {
      const double* w = &m.params[static_cast<std::size_t>(f) * lat.labels];
      for (std::size_t y = 0; y < lat.labels; ++y) lat.emission[t * lat.labels + y] += w[y];
    }
  lat.transition = m.transitions();
  lat.start = m.starts();
  return lat;
}

inline double crf_log_partition(const CrfModel& m, const EncodedSequence& seq) {
  return log_partition(make_lattice(m, seq));
}

inline std::vector<std::size_t> crf_viterbi(const CrfModel& m, const EncodedSequence& seq) {
  return viterbi(make_lattice(m, seq)).labels;
}

// Mean negative log-likelihood over `data` plus (l2 / 2) * |w|^2. When `grad`
// is non-null it receives the gradient (same layout as params).
inline double objective(const CrfModel& m, std::span<const EncodedSequence> data, double l2,
                        std::vector<double>* grad = nullptr) {
  const std::size_t L = m.label_count();
  std::vector<double> local;
  std::vector<double>& g = grad ? *grad : local;
  g.assign(m.params.size(), 0.0);
  std::span<double> tg(g.data() + m.transition_offset(), L * L);
  std::span<double> sg(g.data() + m.start_offset(), L);
  double nll = 0;
  for (const auto& seq : data) {
    if (seq.features.empty()) continue;
    const auto lat = make_lattice(m, seq);
    const auto lg = lattice_gradient(lat, seq.labels, tg, sg);
    nll += lg.negative_log_likelihood;
    for (std::size_t t = 0; t < lat.length; ++t)
      for (auto f : seq.features[t]) {
        double* gw = &g[static_cast<std::size_t>(f) * L];
        for (std::size_t y = 0; y < L; ++y) gw[y] += lg.emission[t * L + y];
      }
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, data.size()));
  double norm2 = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = g[i] / n + l2 * m.params[i];
    norm2 += m.params[i] * m.params[i];
  }
  return nll / n + 0.5 * l2 * norm2;
}

// ---------------------------------------------------------------------------
// Encoding windows

// One decodable sequence plus where each position came from.
struct WindowSequence {
  EncodedSequence encoded;
  std::size_t doc = 0;
  std::vector<std::pair<std::size_t, std::size_t>> origin;  // (sentence, token)
};

namespace detail {

// Extracts every window of `corpus` and maps features and labels to ids.
// `feature_id` returns -1 for features to drop; `label_id` is only called
// when `with_labels` is set.
template <typename FeatureId, typename LabelId>
std::vector<WindowSequence> encode_windows(const Corpus& corpus, const AggregatorConfig& agg,
                                           const std::vector<FeatureTemplate>& templates,
                                           const ContextFilter& filter, FeatureId&& feature_id,
                                           LabelId&& label_id, bool with_labels) {
  std::vector<WindowSequence> out;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const auto& doc = corpus.documents[d];
    for (const auto& group : window_partition(doc, d, agg.k)) {
      const auto gf = extract_features(doc, group, templates, agg, filter);
      std::vector<std::pair<std::size_t, std::size_t>> origin;
      for (std::size_t s = group.first_sentence; s <= group.last_sentence(); ++s)
        for (std::size_t t = 0; t < doc.sentences[s].size(); ++t) origin.push_back({s, t});
      for (const auto& [begin, end] : gf.segments) {
        if (begin == end) continue;
        WindowSequence ws;
        ws.doc = d;
        for (std::size_t i = begin; i < end; ++i) {
          std::vector<std::uint32_t> ids;
          for (const auto& f : gf.positions[i]) {
            const long id = feature_id(f);
            if (id >= 0) ids.push_back(static_cast<std::uint32_t>(id));
          }
          std::sort(ids.begin(), ids.end());
          ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
          ws.encoded.features.push_back(std::move(ids));
          ws.origin.push_back(origin[i]);
          if (with_labels)
            ws.encoded.labels.push_back(
                label_id(doc.sentences[origin[i].first].tokens[origin[i].second].gold_label));
        }
        out.push_back(std::move(ws));
      }
    }
  }
  return out;
}

}  // namespace detail

// Encodes with the model's feature index; unseen features are dropped and
// unseen gold labels rejected.
inline std::vector<WindowSequence> encode_corpus(const CrfModel& m, const Corpus& corpus,
                                                 const AggregatorConfig& agg,
                                                 bool with_labels = true) {
  std::unordered_map<std::string, std::size_t> label_ids;
  for (std::size_t i = 0; i < m.labels.size(); ++i) label_ids[m.labels[i]] = i;
  return detail::encode_windows(
      corpus, agg, m.templates, m.filter,
      [&](const std::string& f) -> long {
        auto it = m.feature_ids.find(f);
        return it == m.feature_ids.end() ? -1 : static_cast<long>(it->second);
      },
      [&](const std::string& lab) {
        auto it = label_ids.find(lab);
        if (it == label_ids.end()) throw_input("label '" + lab + "' was not seen in training");
        return it->second;
      },
      with_labels);
}

// Encodes training data, adding every feature it meets to the model.
inline std::vector<WindowSequence> encode_training(CrfModel& m, const Corpus& corpus,
                                                   const AggregatorConfig& agg) {
  std::unordered_map<std::string, std::size_t> label_ids;
  for (std::size_t i = 0; i < m.labels.size(); ++i) label_ids[m.labels[i]] = i;
  return detail::encode_windows(
      corpus, agg, m.templates, m.filter,
      [&](const std::string& f) -> long { return static_cast<long>(m.add_feature(f)); },
      [&](const std::string& lab) {
        auto it = label_ids.find(lab);
        if (it == label_ids.end()) throw_input("label '" + lab + "' is not in the label set");
        return it->second;
      },
      true);
}

// Decodes pre-encoded windows and redistributes labels to their sentences.
inline SystemOutput decode_windows(const CrfModel& m, const Corpus& corpus,
                                   const std::vector<WindowSequence>& windows, std::string name,
                                   unsigned jobs = 1) {
  SystemOutput out;
  out.name = std::move(name);
  for (const auto& d : corpus.documents) {
    auto& dg = out.labels.emplace_back();
    for (const auto& s : d.sentences) dg.emplace_back(s.size());
  }
  auto run = [&](std::size_t from, std::size_t to) {
    for (std::size_t w = from; w < to; ++w) {
      const auto& ws = windows[w];
      const auto path = crf_viterbi(m, ws.encoded);
      for (std::size_t i = 0; i < path.size(); ++i)
        out.labels[ws.doc][ws.origin[i].first][ws.origin[i].second] = m.labels[path[i]];
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1 || windows.size() < 2) {
    run(0, windows.size());
  } else {
    // Windows write disjoint cells, so chunks can run side by side.
    std::vector<std::future<void>> parts;
    const std::size_t chunk = (windows.size() + jobs - 1) / jobs;
    for (std::size_t from = 0; from < windows.size(); from += chunk)
      parts.push_back(std::async(std::launch::async, run, from, std::min(windows.size(), from + chunk)));
    for (auto& p : parts) p.get();
  }
  return out;
}

inline SystemOutput tag_corpus(const CrfModel& model, const Corpus& corpus,
                               const AggregatorConfig& agg, std::string name = "crf",
                               unsigned jobs = 1) {
  agg.validate();
  if (agg.mode != model.agg.mode)
    throw_input(std::string("model was trained with the ") + aggregator_name(model.agg.mode) +
                " aggregator, asked to tag with " + aggregator_name(agg.mode));
  const auto windows = encode_corpus(model, corpus, agg, false);
  return decode_windows(model, corpus, windows, std::move(name), jobs);
}

inline SystemOutput tag_corpus(const CrfModel& model, const Corpus& corpus) {
  return tag_corpus(model, corpus, model.agg);
}

// ---------------------------------------------------------------------------
// Training

struct TrainLog {
  std::vector<double> objective;   // per epoch, on the full training set
  std::vector<double> dev_metric;  // per epoch
  std::size_t best_epoch = 0;      // 1-based
  std::size_t stopped_epoch = 0;   // last epoch run
};

struct TrainResult {
  CrfModel model;
  TrainLog log;
};

inline TrainResult crf_train(const Corpus& train, const Corpus& dev,
                             const std::vector<FeatureTemplate>& templates,
                             const AggregatorConfig& agg, const Hyperparams& hyper) {
  agg.validate();
  if (train.token_count() == 0) throw_input("training corpus is empty");

  TrainResult result;
  CrfModel& m = result.model;
  m.scheme = train.scheme;
  m.agg = agg;
  m.templates = templates;
  m.hyper = hyper;
  m.filter = build_context_filter(train, hyper.stopwords);

  // Fixed label order, independent of corpus order.
  std::set<std::string> label_set;
  train.for_each_sentence([&](const Sentence& s) {
    for (const auto& t : s.tokens) label_set.insert(t.gold_label);
  });
  m.labels.assign(label_set.begin(), label_set.end());

  auto train_windows = encode_training(m, train, agg);
  m.resize_params();
  std::vector<EncodedSequence> data;
  data.reserve(train_windows.size());
  for (auto& w : train_windows) data.push_back(std::move(w.encoded));

  const bool have_dev = dev.token_count() > 0;
  std::vector<WindowSequence> dev_windows;
  if (have_dev) dev_windows = encode_corpus(m, dev, agg, false);

  const std::size_t batch = hyper.batch == 0 ? data.size() : hyper.batch;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  std::vector<EncodedSequence> mb;

  double best_metric = -std::numeric_limits<double>::infinity();
  std::vector<double> best_params = m.params;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    std::mt19937_64 engine(hyper.seed * 1000003ULL + epoch);
    if (batch < data.size()) std::shuffle(order.begin(), order.end(), engine);
    for (std::size_t from = 0; from < order.size(); from += batch) {
      mb.clear();
      for (std::size_t i = from; i < std::min(order.size(), from + batch); ++i) mb.push_back(data[order[i]]);
      objective(m, mb, hyper.l2, &grad);
      for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i] -= hyper.learning_rate * grad[i];
    }

    const double obj = objective(m, data, hyper.l2);
    if (!std::isfinite(obj))
      throw error(error_code::internal,
                  "training diverged at epoch " + std::to_string(epoch) + " (objective is not finite)");
    result.log.objective.push_back(obj);

    const double metric = have_dev ? headline_score(dev, decode_windows(m, dev, dev_windows, "dev"))
                                   : -obj;
    result.log.dev_metric.push_back(metric);
    result.log.stopped_epoch = epoch;
    if (metric > best_metric) {
      best_metric = metric;
      best_params = m.params;
      result.log.best_epoch = epoch;
      stale = 0;
    } else if (++stale > hyper.patience) {
      break;
    }
  }
  m.params = std::move(best_params);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int model_format_version = 1;

inline nlohmann::ordered_json model_to_json(const CrfModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "tagdiag-crf";
  j["version"] = model_format_version;
  j["scheme"] = scheme_name(m.scheme);
  j["labels"] = m.labels;
  j["aggregator"] = {{"mode", aggregator_name(m.agg.mode)},
                     {"k", m.agg.k},
                     {"bag_size", m.agg.bag_size},
                     {"context_bag", m.agg.context_bag}};
  std::vector<std::string> ids;
  for (const auto& t : m.templates) ids.push_back(t.id);
  j["templates"] = ids;
  j["stopwords"] = m.filter.stopwords;
  j["hyperparams"] = {{"l2", m.hyper.l2},         {"learning_rate", m.hyper.learning_rate},
                      {"epochs", m.hyper.epochs}, {"batch", m.hyper.batch},
                      {"patience", m.hyper.patience}, {"seed", m.hyper.seed},
                      {"stopwords", m.hyper.stopwords}};
  j["features"] = m.features;
  j["params"] = m.params;
  return j;
}

inline CrfModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tagdiag-crf") throw_input("not a tagger model file");
  if (j.value("version", 0) != model_format_version)
    throw_input("unsupported model version " + std::to_string(j.value("version", 0)));
  CrfModel m;
  m.scheme = parse_scheme(j.at("scheme").get<std::string>());
  m.labels = j.at("labels").get<std::vector<std::string>>();
  const auto& a = j.at("aggregator");
  m.agg.mode = parse_aggregator(a.at("mode").get<std::string>());
  m.agg.k = a.at("k").get<std::size_t>();
  m.agg.bag_size = a.at("bag_size").get<std::size_t>();
  m.agg.context_bag = a.at("context_bag").get<bool>();
  m.templates = templates_from_ids(j.at("templates").get<std::vector<std::string>>());
  m.filter.stopwords = j.at("stopwords").get<std::set<std::string>>();
  const auto& h = j.at("hyperparams");
  m.hyper.l2 = h.at("l2").get<double>();
  m.hyper.learning_rate = h.at("learning_rate").get<double>();
  m.hyper.epochs = h.at("epochs").get<std::size_t>();
  m.hyper.batch = h.at("batch").get<std::size_t>();
  m.hyper.patience = h.at("patience").get<std::size_t>();
  m.hyper.seed = h.at("seed").get<std::uint64_t>();
  m.hyper.stopwords = h.at("stopwords").get<std::size_t>();
  for (const auto& f : j.at("features").get<std::vector<std::string>>()) m.add_feature(f);
  m.params = j.at("params").get<std::vector<double>>();
  if (m.params.size() != m.start_offset() + m.labels.size())
    throw_input("model parameter count does not match its features and labels");
  for (double p : m.params)
    if (!std::isfinite(p)) throw_input("model contains a non-finite weight");
  return m;
}

}  // namespace tagdiag
