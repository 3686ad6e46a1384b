// tagdiag: command-line front end for evaluation, diagnosis and the reference
// CRF tagger. Every subcommand writes deterministic artifacts; failures print
// one line "error: E_CODE message" to stderr and exit 2, 3 or 4.

#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tagdiag/diagnosis.hpp"
#include "tagdiag/tagger.hpp"

namespace fs = std::filesystem;
using namespace tagdiag;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* tool_version = "0.1.0";
constexpr std::uint64_t default_seed = 20210601;

struct Options {
  std::string task = "ner";
  std::string scheme;  // empty: derived from the task
  std::vector<std::string> train, test, pred;
  std::string dev;
  std::vector<std::string> attrs;
  std::size_t buckets = 4;
  std::vector<std::size_t> ks;
  std::string mode = "norm";
  std::string bucket_mode = "interval";
  std::size_t boot_b = 1000;
  double level = 0.95;
  std::optional<std::uint64_t> seed;
  std::string sided = "two-sided";
  unsigned jobs = 1;
  std::string out;
  std::string format = "json";
  std::string zeta, gains, model;
  // Training.
  std::size_t epochs = 50, patience = 20, batch = 8;
  double l2 = 1e-4, learning_rate = 0.1;
};

// A named input: "NAME=path" or a bare path named after its file stem.
struct NamedPath {
  std::string name, path;
};

NamedPath split_named(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0) return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {fs::path(arg).stem().string(), arg};
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Inputs are read once and checksummed for the provenance block.
class Inputs {
 public:
  const std::string& read(const std::string& path) {
    for (const auto& [p, text] : files_)
      if (p == path) return text;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_input("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    files_.emplace_back(path, os.str());
    return files_.back().second;
  }

  ojson checksums() const {
    ojson arr = ojson::array();
    for (const auto& [p, text] : files_)
      arr.push_back({{"path", p}, {"fnv1a64", hex64(fnv1a(text))}, {"bytes", text.size()}});
    return arr;
  }

 private:
  std::deque<std::pair<std::string, std::string>> files_;  // stable references
};

label_scheme scheme_of(const Options& o) {
  if (!o.scheme.empty()) return parse_scheme(o.scheme);
  if (o.task == "ner" || o.task == "chunk") return label_scheme::bio;
  if (o.task == "cws") return label_scheme::bmes;
  if (o.task == "pos") return label_scheme::pos;
  throw_input("unknown task '" + o.task + "'");
}

std::uint64_t seed_of(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("TAGDIAG_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string_view(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw_input(std::string("TAGDIAG_SEED is not an unsigned integer: '") + env + "'");
  }
  return default_seed;
}

std::vector<attribute> attributes_of(const Options& o, label_scheme scheme) {
  if (o.attrs.empty()) return attributes_for(scheme);
  std::vector<attribute> out;
  for (const auto& a : o.attrs) out.push_back(parse_attribute(a));
  return out;
}

ojson config_json(const std::string& sub, const Options& o) {
  return {{"subcommand", sub},
          {"task", o.task},
          {"scheme", scheme_name(scheme_of(o))},
          {"train", o.train},
          {"test", o.test},
          {"pred", o.pred},
          {"dev", o.dev},
          {"attributes", o.attrs},
          {"buckets", o.buckets},
          {"k", o.ks},
          {"mode", o.mode},
          {"bucket_mode", o.bucket_mode},
          {"boot_B", o.boot_b},
          {"level", o.level},
          {"seed", seed_of(o)},
          {"sided", o.sided},
          {"format", o.format},
          {"zeta", o.zeta},
          {"gains", o.gains},
          {"model", o.model},
          {"epochs", o.epochs},
          {"patience", o.patience},
          {"batch", o.batch},
          {"l2", o.l2},
          {"learning_rate", o.learning_rate}};
}

// Collects named artifacts, then writes them to --out or stdout.
class Sink {
 public:
  Sink(std::string sub, const Options& o) : sub_(std::move(sub)), opts_(o) {}

  ojson& json() { return body_; }
  void table(const std::string& name, std::string tsv) { tables_.emplace_back(name, std::move(tsv)); }
  void file(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void flush(const Inputs& inputs) {
    const auto config = config_json(sub_, opts_);
    ojson doc;
    doc["provenance"] = {{"tool", "tagdiag"},
                         {"version", tool_version},
                         {"config", config},
                         {"config_hash", hex64(fnv1a(config.dump()))},
                         {"inputs", inputs.checksums()}};
    for (auto& [k, v] : body_.items()) doc[k] = v;

    if (!opts_.out.empty()) {
      std::error_code ec;
      fs::create_directories(opts_.out, ec);
      if (ec) throw_input("cannot create output directory '" + opts_.out + "': " + ec.message());
      auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream f(fs::path(opts_.out) / name, std::ios::binary);
        if (!f) throw_input("cannot write '" + (fs::path(opts_.out) / name).string() + "'");
        f << content;
      };
      if (opts_.format == "json") {
        put(sub_ + ".json", doc.dump(2) + "\n");
      } else {
        put(sub_ + ".provenance.json", ojson{{"provenance", doc["provenance"]}}.dump(2) + "\n");
        for (const auto& [name, tsv] : tables_) put(name + ".tsv", tsv);
      }
      for (const auto& [name, content] : files_) put(name, content);
      return;
    }
    if (opts_.format == "json") {
      std::cout << doc.dump(2) << "\n";
    } else {
      bool first = true;
      for (const auto& [name, tsv] : tables_) {
        if (!first) std::cout << "\n";
        first = false;
        std::cout << "# " << name << "\n" << tsv;
      }
    }
  }

 private:
  std::string sub_;
  const Options& opts_;
  ojson body_ = ojson::object();
  std::vector<std::pair<std::string, std::string>> tables_, files_;
};

Corpus load_corpus(Inputs& in, const std::string& path, label_scheme scheme) {
  try {
    return parse_conll(in.read(path), ConllConfig{scheme, 0, -1});
  } catch (const error& e) {
    throw error(e.code(), path + ": " + e.what());
  }
}

Corpus concat(std::vector<Corpus> parts) {
  Corpus out = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    out.explicit_documents = out.explicit_documents || parts[i].explicit_documents;
    for (auto& d : parts[i].documents) out.documents.push_back(std::move(d));
  }
  return out;
}

Corpus load_all(Inputs& in, const std::vector<std::string>& paths, label_scheme scheme) {
  std::vector<Corpus> parts;
  for (const auto& p : paths) parts.push_back(load_corpus(in, split_named(p).path, scheme));
  return concat(std::move(parts));
}

SystemOutput load_system(Inputs& in, const std::string& arg, const Corpus& gold) {
  const auto np = split_named(arg);
  auto out = system_output_from(np.name, load_corpus(in, np.path, gold.scheme));
  try {
    check_alignment(gold, out);
  } catch (const error& e) {
    throw error(e.code(), np.path + ": " + e.what());
  }
  return out;
}

bool needs_stats(attribute a) {
  return a != attribute::span_length && a != attribute::sentence_length &&
         a != attribute::entity_density;
}

// Training statistics for test set i: one training file per test set, one
// shared file, or none (only attributes that ignore training data allowed).
TrainingStats stats_for(Inputs& in, const Options& o, std::size_t i, label_scheme scheme,
                        const std::vector<attribute>& attrs) {
  if (o.train.empty()) {
    for (attribute a : attrs)
      if (needs_stats(a))
        throw_input("attribute " + attribute_name(a, scheme == label_scheme::bmes) +
                    " needs --train");
    TrainingStats empty;
    empty.scheme = scheme;
    return empty;
  }
  if (o.train.size() != 1 && o.train.size() != o.test.size())
    throw_input("give one --train per --test, or a single shared --train");
  const auto& path = o.train.size() == 1 ? o.train[0] : o.train[i];
  return build_training_stats(load_corpus(in, split_named(path).path, scheme));
}

bucket_mode bucket_mode_of(const Options& o) {
  if (o.bucket_mode == "interval") return bucket_mode::interval;
  if (o.bucket_mode == "recall") return bucket_mode::recall_only;
  throw_input("unknown bucket mode '" + o.bucket_mode + "' (interval or recall)");
}

void require(bool ok, const std::string& what) {
  if (!ok) throw_input(what);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_stats(const Options& o, Inputs& in, Sink& sink) {
  require(!o.train.empty(), "stats needs --train");
  const auto train = load_all(in, o.train, scheme_of(o));
  const auto stats = build_training_stats(train);
  sink.json()["stats"] = stats_to_json(stats);
  sink.json()["sentences"] = train.sentence_count();
  sink.json()["tokens"] = train.token_count();
  sink.table("stats_summary", tsv_table({{"sentences", "tokens", "documents"},
                                         {std::to_string(train.sentence_count()),
                                          std::to_string(train.token_count()),
                                          std::to_string(train.documents.size())}}));
  sink.file("stats.json", stats_to_json(stats).dump() + "\n");
  return 0;
}

ojson overall_json(const Corpus& gold, const SystemOutput& sys) {
  ojson j = to_json(span_f1(gold, sys));
  j["system"] = sys.name;
  j["token_accuracy"] = token_accuracy(gold, sys);
  j["headline"] = headline_score(gold, sys);
  return j;
}

struct EvalResult {
  ojson json;
  std::vector<std::pair<std::string, std::string>> tables;
  std::vector<std::vector<BucketReport>> per_attr;  // attribute -> system reports
};

EvalResult evaluate(const Options& o, const Corpus& gold, const std::vector<SystemOutput>& systems,
                    const TrainingStats& stats, const std::vector<attribute>& attrs) {
  EvalResult r;
  ojson overall = ojson::array();
  std::vector<std::vector<std::string>> rows{{"system", "precision", "recall", "f1", "token_accuracy"}};
  for (const auto& s : systems) {
    overall.push_back(overall_json(gold, s));
    const auto p = span_f1(gold, s);
    rows.push_back({s.name, fixed(p.precision, 6), fixed(p.recall, 6), fixed(p.f1, 6),
                    fixed(token_accuracy(gold, s), 6)});
  }
  r.json["overall"] = overall;
  r.tables.emplace_back("overall", tsv_table(rows));
  ojson buckets = ojson::array();
  for (attribute a : attrs) {
    auto reports = bucket_breakdown(gold, systems, stats, a, o.buckets, bucket_mode_of(o));
    for (const auto& rep : reports) {
      buckets.push_back(to_json(rep));
      r.tables.emplace_back("buckets_" + rep.system + "_" + rep.attribute, to_tsv(rep));
    }
    r.per_attr.push_back(std::move(reports));
  }
  r.json["buckets"] = buckets;
  return r;
}

int cmd_eval(const Options& o, Inputs& in, Sink& sink) {
  require(o.test.size() == 1, "eval needs exactly one --test");
  require(!o.pred.empty(), "eval needs at least one --pred");
  const auto scheme = scheme_of(o);
  const auto attrs = attributes_of(o, scheme);
  const auto gold = load_corpus(in, split_named(o.test[0]).path, scheme);
  const auto stats = stats_for(in, o, 0, scheme, attrs);
  std::vector<SystemOutput> systems;
  for (const auto& p : o.pred) systems.push_back(load_system(in, p, gold));
  auto r = evaluate(o, gold, systems, stats, attrs);
  for (auto& [k, v] : r.json.items()) sink.json()[k] = v;
  for (auto& [name, tsv] : r.tables) sink.table(name, tsv);
  return 0;
}

int cmd_compare(const Options& o, Inputs& in, Sink& sink) {
  require(!o.test.empty(), "compare needs --test");
  require(o.pred.size() == 2 * o.test.size(),
          "compare needs two --pred per --test (baseline, then the compared system)");
  const auto scheme = scheme_of(o);
  const auto attrs = attributes_of(o, scheme);
  const auto seed = seed_of(o);

  ojson datasets = ojson::array();
  std::vector<double> deltas;
  std::vector<std::vector<std::string>> overall_rows{{"dataset", "base", "other", "delta", "ci_lower", "ci_upper"}};
  std::vector<std::pair<std::string, DeltaReport>> heat;
  for (std::size_t i = 0; i < o.test.size(); ++i) {
    const auto np = split_named(o.test[i]);
    const auto gold = load_corpus(in, np.path, scheme);
    const auto stats = stats_for(in, o, i, scheme, attrs);
    const auto base = load_system(in, o.pred[2 * i], gold);
    const auto other = load_system(in, o.pred[2 * i + 1], gold);
    const double hb = headline_score(gold, base), ho = headline_score(gold, other);
    const double delta = 100.0 * (ho - hb);
    deltas.push_back(delta);
    const auto ci = delta_ci(gold, base, other, o.boot_b, o.level, seed + i, o.jobs);

    ojson d{{"dataset", np.name},
            {"base", overall_json(gold, base)},
            {"other", overall_json(gold, other)},
            {"delta_points", delta},
            {"delta_ci", to_json(ci)}};
    auto& reports = d["deltas"] = ojson::array();
    for (attribute a : attrs) {
      const auto br = bucket_breakdown(gold, {base, other}, stats, a, o.buckets, bucket_mode_of(o));
      const auto dr = relative_improvement(br[0], br[1]);
      reports.push_back(to_json(dr));
      sink.table("delta_" + np.name + "_" + dr.attribute, to_tsv(dr));
      heat.emplace_back(np.name, dr);
    }
    datasets.push_back(std::move(d));
    overall_rows.push_back({np.name, fixed(100 * hb, 4), fixed(100 * ho, 4), fixed(delta, 4),
                            fixed(100 * ci.lower, 4), fixed(100 * ci.upper, 4)});
  }
  sink.json()["datasets"] = datasets;
  sink.table("overall_delta", tsv_table(overall_rows));
  if (!heat.empty()) sink.table("heatmap", heatmap_tsv(heat));

  try {
    const auto t = wilcoxon_signed_rank(deltas, parse_sidedness(o.sided));
    sink.json()["wilcoxon"] = to_json(t);
    sink.table("wilcoxon", tsv_table({{"n", "w_plus", "w_minus", "statistic", "p_value", "method", "side"},
                                      {std::to_string(t.n), fixed(t.w_plus, 1), fixed(t.w_minus, 1),
                                       fixed(t.statistic, 1), fixed(t.p_value, 8), t.method,
                                       sidedness_name(parse_sidedness(o.sided))}}));
  } catch (const error& e) {
    if (e.code() != error_code::undefined) throw;
    // Artifacts still get written; the exit status reports the undefined test.
    sink.json()["wilcoxon"] = {{"error", error_code_name(e.code())}, {"message", e.what()}};
    sink.table("wilcoxon", tsv_table({{"error", "message"}, {error_code_name(e.code()), e.what()}}));
    sink.flush(in);
    throw;
  }
  return 0;
}

int cmd_zeta(const Options& o, Inputs& in, Sink& sink) {
  require(!o.test.empty(), "zeta needs at least one --test");
  const auto scheme = scheme_of(o);
  const auto attrs = attributes_of(o, scheme);
  const bool cws = scheme == label_scheme::bmes;
  MeasureTable table;
  for (attribute a : attrs) table.attributes.push_back(attribute_name(a, cws));
  for (std::size_t i = 0; i < o.test.size(); ++i) {
    const auto np = split_named(o.test[i]);
    const auto test = load_corpus(in, np.path, scheme);
    const auto stats = stats_for(in, o, i, scheme, attrs);
    DatasetMeasure row{np.name, {}};
    for (attribute a : attrs) row.values[attribute_name(a, cws)] = dataset_measure(test, stats, a);
    table.rows.push_back(std::move(row));
  }
  ojson rows = ojson::array();
  for (const auto& r : table.rows) {
    ojson v = ojson::object();
    for (const auto& a : table.attributes) v[a] = r.values.at(a);
    rows.push_back({{"dataset", r.dataset}, {"values", v}});
  }
  sink.json()["zeta"] = rows;
  sink.table("zeta", measure_table_tsv(table));
  return 0;
}

int cmd_correlate(const Options& o, Inputs& in, Sink& sink) {
  require(!o.zeta.empty() && !o.gains.empty(), "correlate needs --zeta and --gains");
  const auto measures = parse_measure_table(in.read(o.zeta));
  const auto gains = parse_gain_table(in.read(o.gains));
  const double alpha = 1.0 - o.level;
  CorrelationTable table;
  ojson rows = ojson::array(), recs = ojson::array();
  for (const auto& g : gains) {
    table.push_back(correlate(measures, g, alpha));
    rows.push_back(to_json(table.back()));
    recs.push_back(to_json(recommend(table.back(), measures)));
  }
  sink.json()["correlation"] = rows;
  sink.json()["recommendations"] = recs;
  sink.table("correlation", correlation_table_tsv(table));
  sink.table("correlation_detail", correlation_detail_tsv(table));
  std::vector<std::vector<std::string>> rec_rows{{"aggregator", "rank", "dataset", "score", "rationale"}};
  for (const auto& row : table) {
    const auto set = recommend(row, measures);
    for (std::size_t i = 0; i < set.ranked.size(); ++i)
      rec_rows.push_back({set.aggregator, std::to_string(i + 1), set.ranked[i].dataset,
                          fixed(set.ranked[i].score, 4), set.ranked[i].rationale});
  }
  sink.table("recommendations", tsv_table(rec_rows));
  return 0;
}

Hyperparams hyper_of(const Options& o) {
  Hyperparams h;
  h.epochs = o.epochs;
  h.patience = o.patience;
  h.batch = o.batch;
  h.l2 = o.l2;
  h.learning_rate = o.learning_rate;
  h.seed = seed_of(o);
  return h;
}

int cmd_train(const Options& o, Inputs& in, Sink& sink) {
  require(!o.train.empty(), "train needs --train");
  require(!o.out.empty(), "train needs --out for the model files");
  const auto scheme = scheme_of(o);
  const auto train = load_all(in, o.train, scheme);
  const Corpus dev = o.dev.empty() ? Corpus{{}, scheme, false} : load_corpus(in, o.dev, scheme);
  const auto mode = parse_aggregator(o.mode);
  std::vector<std::size_t> ks = o.ks;
  if (ks.empty()) ks.push_back(mode == aggregator::norm ? 1 : 3);

  ojson runs = ojson::array();
  std::vector<std::vector<std::string>> rows{{"mode", "k", "best_epoch", "stopped_epoch", "final_objective", "file"}};
  for (std::size_t k : ks) {
    const AggregatorConfig agg{mode, k, 20, true};
    const auto res = crf_train(train, dev, default_templates(), agg, hyper_of(o));
    const std::string file = std::string("model_") + aggregator_name(mode) + "_k" + std::to_string(k) + ".json";
    sink.file(file, model_to_json(res.model).dump() + "\n");
    runs.push_back({{"mode", aggregator_name(mode)},
                    {"k", k},
                    {"file", file},
                    {"best_epoch", res.log.best_epoch},
                    {"stopped_epoch", res.log.stopped_epoch},
                    {"objective", res.log.objective},
                    {"dev_metric", res.log.dev_metric}});
    rows.push_back({aggregator_name(mode), std::to_string(k), std::to_string(res.log.best_epoch),
                    std::to_string(res.log.stopped_epoch), fixed(res.log.objective.back(), 6), file});
  }
  sink.json()["models"] = runs;
  sink.table("training", tsv_table(rows));
  return 0;
}

int cmd_tag(const Options& o, Inputs& in, Sink& sink) {
  require(!o.model.empty(), "tag needs --model");
  require(!o.test.empty(), "tag needs --test");
  require(!o.out.empty(), "tag needs --out for the prediction files");
  nlohmann::json mj;
  try {
    mj = nlohmann::json::parse(in.read(o.model));
  } catch (const nlohmann::json::exception& e) {
    throw_input(o.model + ": " + e.what());
  }
  const auto model = model_from_json(mj);
  ojson files = ojson::array();
  std::vector<std::vector<std::string>> rows{{"dataset", "file", "headline"}};
  for (const auto& t : o.test) {
    const auto np = split_named(t);
    const auto corpus = load_corpus(in, np.path, model.scheme);
    const auto out = tag_corpus(model, corpus, model.agg, np.name, o.jobs);
    const std::string file = np.name + ".pred.conll";
    sink.file(file, write_conll_with_predictions(corpus, out.labels));
    const double h = headline_score(corpus, out);
    files.push_back({{"dataset", np.name}, {"file", file}, {"headline", h}});
    rows.push_back({np.name, file, fixed(h, 6)});
  }
  sink.json()["predictions"] = files;
  sink.table("tagging", tsv_table(rows));
  return 0;
}

// Everything eval produces, plus deltas against the first system, the test
// set's zeta row and, when tables are given, the correlation analysis.
int cmd_report(const Options& o, Inputs& in, Sink& sink) {
  require(o.test.size() == 1, "report needs exactly one --test");
  require(!o.pred.empty(), "report needs at least one --pred");
  const auto scheme = scheme_of(o);
  const auto attrs = attributes_of(o, scheme);
  const auto np = split_named(o.test[0]);
  const auto gold = load_corpus(in, np.path, scheme);
  const auto stats = stats_for(in, o, 0, scheme, attrs);
  std::vector<SystemOutput> systems;
  for (const auto& p : o.pred) systems.push_back(load_system(in, p, gold));
  auto r = evaluate(o, gold, systems, stats, attrs);
  for (auto& [k, v] : r.json.items()) sink.json()[k] = v;
  for (auto& [name, tsv] : r.tables) sink.table(name, tsv);

  ojson deltas = ojson::array(), cis = ojson::array();
  for (std::size_t s = 1; s < systems.size(); ++s) {
    for (const auto& per : r.per_attr) {
      const auto dr = relative_improvement(per[0], per[s]);
      deltas.push_back(to_json(dr));
      sink.table("delta_" + dr.other_system + "_" + dr.attribute, to_tsv(dr));
    }
    auto ci = to_json(delta_ci(gold, systems[0], systems[s], o.boot_b, o.level, seed_of(o) + s, o.jobs));
    ci["base"] = systems[0].name;
    ci["other"] = systems[s].name;
    cis.push_back(ci);
  }
  sink.json()["deltas"] = deltas;
  sink.json()["delta_cis"] = cis;

  const bool cws = scheme == label_scheme::bmes;
  ojson zeta = ojson::object();
  std::vector<std::string> head{"dataset"}, vals{np.name};
  for (attribute a : attrs) {
    const double v = dataset_measure(gold, stats, a);
    zeta[attribute_name(a, cws)] = v;
    head.push_back(attribute_name(a, cws));
    vals.push_back(fixed(v, 6));
  }
  sink.json()["zeta"] = {{"dataset", np.name}, {"values", zeta}};
  sink.table("zeta", tsv_table({head, vals}));

  if (!o.zeta.empty() && !o.gains.empty()) {
    const auto measures = parse_measure_table(in.read(o.zeta));
    CorrelationTable table;
    ojson rows = ojson::array();
    for (const auto& g : parse_gain_table(in.read(o.gains))) {
      table.push_back(correlate(measures, g, 1.0 - o.level));
      rows.push_back(to_json(table.back()));
    }
    sink.json()["correlation"] = rows;
    sink.table("correlation", correlation_table_tsv(table));
  }
  return 0;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--task", o.task, "ner, chunk, cws or pos")
      ->check(CLI::IsMember({"ner", "chunk", "cws", "pos"}));
  app->add_option("--scheme", o.scheme, "label scheme (bio, bioes, bmes, pos); default from --task");
  app->add_option("--format", o.format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
  app->add_option("--out", o.out, "output directory (default: stdout)");
  app->add_option("--seed", o.seed, "random seed (fallback: TAGDIAG_SEED)");
  app->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Sequence tagging evaluation and diagnosis"};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1);

  auto* stats = app.add_subcommand("stats", "build training statistics");
  auto* eval = app.add_subcommand("eval", "overall scores and bucket breakdowns");
  auto* compare = app.add_subcommand("compare", "paired comparison across datasets");
  auto* zeta = app.add_subcommand("zeta", "dataset-level attribute measures");
  auto* correlate_cmd = app.add_subcommand("correlate", "correlate measures with gains");
  auto* train = app.add_subcommand("train", "train the reference CRF tagger");
  auto* tag = app.add_subcommand("tag", "tag corpora with a trained model");
  auto* report = app.add_subcommand("report", "assemble a full report for one test set");

  for (auto* s : {stats, eval, compare, zeta, correlate_cmd, train, tag, report}) add_common(s, o);
  for (auto* s : {stats, eval, compare, zeta, train, report})
    s->add_option("--train", o.train, "training corpus (repeatable)");
  for (auto* s : {eval, compare, zeta, tag, report})
    s->add_option("--test", o.test, "test corpus, optionally NAME=path (repeatable)");
  for (auto* s : {eval, compare, report})
    s->add_option("--pred", o.pred, "predictions, optionally NAME=path (repeatable)");
  for (auto* s : {eval, compare, zeta, report})
    s->add_option("--attr", o.attrs, "attribute (repeatable; default all)");
  for (auto* s : {eval, compare, report}) {
    s->add_option("--buckets", o.buckets, "number of buckets")->check(CLI::Range(2, 64));
    s->add_option("--bucket-mode", o.bucket_mode, "interval or recall");
  }
  for (auto* s : {compare, report}) {
    s->add_option("--boot-B", o.boot_b, "bootstrap replicates")->check(CLI::Range(100, 1000000));
    s->add_option("--level", o.level, "confidence level")->check(CLI::Range(0.5, 0.999));
  }
  compare->add_option("--sided", o.sided, "two-sided, greater or less");
  correlate_cmd->add_option("--level", o.level, "significance is 1 - level")->check(CLI::Range(0.5, 0.999));
  for (auto* s : {correlate_cmd, report}) {
    s->add_option("--zeta", o.zeta, "measure table (TSV)");
    s->add_option("--gains", o.gains, "gain table (TSV, wide or long)");
  }
  train->add_option("--dev", o.dev, "development corpus for early stopping");
  train->add_option("--mode", o.mode, "norm, bow or seq")->check(CLI::IsMember({"norm", "bow", "seq"}));
  train->add_option("--k", o.ks, "window size (repeatable; one model per k)");
  train->add_option("--epochs", o.epochs, "maximum epochs");
  train->add_option("--patience", o.patience, "epochs without improvement before stopping");
  train->add_option("--batch", o.batch, "minibatch size, 0 for full batch");
  train->add_option("--l2", o.l2, "L2 penalty");
  train->add_option("--lr", o.learning_rate, "learning rate");
  tag->add_option("--model", o.model, "model file written by train");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: E_INPUT " << e.what() << "\n";
    return static_cast<int>(error_code::input);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  Inputs inputs;
  Sink sink(sub, o);
  try {
    int rc = 0;
    if (sub == "stats") rc = cmd_stats(o, inputs, sink);
    else if (sub == "eval") rc = cmd_eval(o, inputs, sink);
    else if (sub == "compare") rc = cmd_compare(o, inputs, sink);
    else if (sub == "zeta") rc = cmd_zeta(o, inputs, sink);
    else if (sub == "correlate") rc = cmd_correlate(o, inputs, sink);
    else if (sub == "train") rc = cmd_train(o, inputs, sink);
    else if (sub == "tag") rc = cmd_tag(o, inputs, sink);
    else if (sub == "report") rc = cmd_report(o, inputs, sink);
    sink.flush(inputs);
    return rc;
  } catch (const error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << " " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: E_INTERNAL " << e.what() << "\n";
    return static_cast<int>(error_code::internal);
  }
}
