#pragma once

// Corpus-level scoring, equal-population bucketing and bucket-wise
// breakdowns of one or more systems against a gold corpus.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "tagdiag/attributes.hpp"
#include "tagdiag/corpus.hpp"
#include "tagdiag/error.hpp"
#include "tagdiag/statistics.hpp"

namespace tagdiag {

// Predicted labels indexed [document][sentence][token].
using LabelGrid = std::vector<std::vector<std::vector<std::string>>>;

struct SystemOutput {
  std::string name;
  LabelGrid labels;
};

inline LabelGrid gold_grid(const Corpus& corpus) {
  LabelGrid grid;
  for (const auto& d : corpus.documents) {
    auto& dg = grid.emplace_back();
    for (const auto& s : d.sentences) dg.push_back(s.labels());
  }
  return grid;
}

// Reads a system output from a corpus whose label column holds predictions.
inline SystemOutput system_output_from(std::string name, const Corpus& predicted) {
  return SystemOutput{std::move(name), gold_grid(predicted)};
}

inline void check_alignment(const Corpus& gold, const SystemOutput& pred) {
  auto fail = [&](const std::string& where) {
    throw_input("system '" + pred.name + "' is misaligned with the gold corpus at " + where);
  };
  if (pred.labels.size() != gold.documents.size())
    fail("document count (" + std::to_string(pred.labels.size()) + " vs " +
         std::to_string(gold.documents.size()) + ")");
  for (std::size_t d = 0; d < gold.documents.size(); ++d) {
    const auto& gd = gold.documents[d];
    if (pred.labels[d].size() != gd.sentences.size())
      fail("document " + std::to_string(d) + " (sentence count)");
    for (std::size_t s = 0; s < gd.sentences.size(); ++s)
      if (pred.labels[d][s].size() != gd.sentences[s].size())
        fail("document " + std::to_string(d) + ", sentence " + std::to_string(s) +
             " (token count " + std::to_string(pred.labels[d][s].size()) + " vs " +
             std::to_string(gd.sentences[s].size()) + ")");
  }
}

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tp = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;

  static PRF from_counts(std::size_t tp, std::size_t n_pred, std::size_t n_gold) {
    PRF r;
    r.tp = tp;
    r.n_pred = n_pred;
    r.n_gold = n_gold;
    r.precision = n_pred == 0 ? (tp == 0 ? 1.0 : 0.0)
                              : static_cast<double>(tp) / static_cast<double>(n_pred);
    r.recall = n_gold == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(n_gold);
    r.f1 = r.precision + r.recall > 0
               ? 2 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
  }

  PRF& operator+=(const PRF& o) {
    *this = from_counts(tp + o.tp, n_pred + o.n_pred, n_gold + o.n_gold);
    return *this;
  }
};

namespace detail {

inline std::size_t count_matches(std::vector<RawSpan> a, std::vector<RawSpan> b) {
  auto less = [](const RawSpan& x, const RawSpan& y) {
    return std::tie(x.start, x.end, x.label) < std::tie(y.start, y.end, y.label);
  };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  std::vector<RawSpan> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common), less);
  return common.size();
}

}  // namespace detail

// Counts for one sentence; used for pooled scores and sentence-level resampling.
inline PRF sentence_prf(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                        label_scheme scheme) {
  auto g = decode_spans(gold, scheme);
  auto p = decode_spans(pred, scheme);
  const std::size_t ng = g.size(), np = p.size();
  return PRF::from_counts(detail::count_matches(std::move(g), std::move(p)), np, ng);
}

// Micro-averaged exact-match span scores over the whole corpus.
inline PRF span_f1(const Corpus& gold, const SystemOutput& pred) {
  check_alignment(gold, pred);
  std::size_t tp = 0, np = 0, ng = 0;
  for (std::size_t d = 0; d < gold.documents.size(); ++d)
    for (std::size_t s = 0; s < gold.documents[d].sentences.size(); ++s) {
      auto r = sentence_prf(gold.documents[d].sentences[s].labels(), pred.labels[d][s], gold.scheme);
      tp += r.tp;
      np += r.n_pred;
      ng += r.n_gold;
    }
  return PRF::from_counts(tp, np, ng);
}

inline double token_accuracy(const Corpus& gold, const SystemOutput& pred) {
  check_alignment(gold, pred);
  std::size_t correct = 0, total = 0;
  for (std::size_t d = 0; d < gold.documents.size(); ++d)
    for (std::size_t s = 0; s < gold.documents[d].sentences.size(); ++s) {
      const auto& sent = gold.documents[d].sentences[s];
      for (std::size_t t = 0; t < sent.size(); ++t) {
        ++total;
        if (sent.tokens[t].gold_label == pred.labels[d][s][t]) ++correct;
      }
    }
  if (total == 0) throw_input("token accuracy of an empty corpus");
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Headline metric: accuracy for POS, span F1 otherwise.
inline double headline_score(const Corpus& gold, const SystemOutput& pred) {
  return gold.scheme == label_scheme::pos ? token_accuracy(gold, pred) : span_f1(gold, pred).f1;
}

// ---------------------------------------------------------------------------
// Bucketing

inline std::vector<std::string> bucket_names(std::size_t n) {
  switch (n) {
    case 1: return {"ALL"};
    case 2: return {"S", "L"};
    case 3: return {"S", "M", "L"};
    case 4: return {"XS", "S", "L", "XL"};
    case 5: return {"XS", "S", "M", "L", "XL"};
    default: break;
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("B" + std::to_string(i + 1));
  return out;
}

struct Interval {
  std::string name;
  double lo = 0;
  double hi = 0;
  std::vector<std::size_t> members;  // indices into the bucketized values
};

struct Bucketing {
  std::vector<Interval> buckets;
  std::vector<std::string> warnings;

  // Bucket for a value measured with the same attribute function: the first
  // bucket whose upper bound is not below it, else the last.
  std::size_t locate(double value) const {
    for (std::size_t i = 0; i < buckets.size(); ++i)
      if (value <= buckets[i].hi) return i;
    return buckets.size() - 1;
  }
};

namespace detail {

// Cut positions (edge indices into the tie-group boundary array) that keep
// every bucket within `limit` of the ideal population; empty if impossible.
inline std::vector<std::size_t> minimax_cuts(const std::vector<std::size_t>& edges,
                                             std::size_t buckets, double ideal) {
  const std::size_t groups = edges.size() - 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(buckets + 1, std::vector<double>(groups + 1, inf));
  std::vector<std::vector<std::size_t>> from(buckets + 1, std::vector<std::size_t>(groups + 1, 0));
  cost[0][0] = 0;
  for (std::size_t j = 1; j <= buckets; ++j)
    for (std::size_t e = j; e + (buckets - j) <= groups; ++e)
      for (std::size_t p = j - 1; p < e; ++p) {
        if (cost[j - 1][p] == inf) continue;
        const double dev = std::abs(static_cast<double>(edges[e] - edges[p]) - ideal);
        const double c = std::max(cost[j - 1][p], dev);
        if (c < cost[j][e]) {
          cost[j][e] = c;
          from[j][e] = p;
        }
      }
  std::vector<std::size_t> cuts(buckets + 1);
  cuts[buckets] = groups;
  for (std::size_t j = buckets; j > 0; --j) cuts[j - 1] = from[j][cuts[j]];
  return cuts;
}

}  // namespace detail

// Splits values into `n` equal-population buckets at quantile boundaries.
// Tied values always share a bucket; with fewer distinct values than `n`
// the bucket count is reduced and a warning recorded.
inline Bucketing bucketize(std::span<const double> values, std::size_t n) {
  if (values.empty()) throw_input("bucketize: no values");
  if (n < 2) throw_input("bucketize: at least 2 buckets are required");
  Bucketing out;

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // edges[g] = number of values strictly before tie group g.
  std::vector<std::size_t> edges{0};
  std::size_t largest_tie = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    largest_tie = std::max(largest_tie, j - i);
    edges.push_back(j);
    i = j;
  }
  const std::size_t groups = edges.size() - 1;
  if (groups < n) {
    out.warnings.push_back("only " + std::to_string(groups) + " distinct values; using " +
                           std::to_string(groups) + " bucket(s) instead of " + std::to_string(n));
    n = groups;
  }

  const double total = static_cast<double>(values.size());
  const double ideal = total / static_cast<double>(n);
  std::vector<std::size_t> cuts{0};
  for (std::size_t j = 1; j < n; ++j) {
    const double target = ideal * static_cast<double>(j);
    const std::size_t lo = cuts.back() + 1;
    const std::size_t hi = groups - (n - j);
    std::size_t best = lo;
    for (std::size_t e = lo; e <= hi; ++e) {
      if (std::abs(static_cast<double>(edges[e]) - target) <
          std::abs(static_cast<double>(edges[best]) - target))
        best = e;
      if (static_cast<double>(edges[e]) > target) break;
    }
    cuts.push_back(best);
  }
  cuts.push_back(groups);

  auto worst = [&](const std::vector<std::size_t>& c) {
    double w = 0;
    for (std::size_t j = 1; j < c.size(); ++j)
      w = std::max(w, std::abs(static_cast<double>(edges[c[j]] - edges[c[j - 1]]) - ideal));
    return w;
  };
  // Quantile cuts can drift when large tie groups crowd one end; fall back
  // to the exact minimax placement then.
  if (worst(cuts) > static_cast<double>(largest_tie) && groups <= 4000)
    cuts = detail::minimax_cuts(edges, n, ideal);

  const auto names = bucket_names(n);
  for (std::size_t j = 0; j < n; ++j) {
    Interval b;
    b.name = names[j];
    for (std::size_t i = edges[cuts[j]]; i < edges[cuts[j + 1]]; ++i) b.members.push_back(order[i]);
    b.lo = values[order[edges[cuts[j]]]];
    b.hi = values[order[edges[cuts[j + 1]] - 1]];
    out.buckets.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Breakdown

enum class bucket_mode {
  interval,     // predicted units assigned by their own attribute value
  recall_only,  // score each bucket by recall over its gold units
};

struct Bucket {
  std::string attribute;
  std::string name;
  double lo = 0;
  double hi = 0;
  std::size_t gold_units = 0;
  PRF prf;
  double score = 0;  // F1, recall (recall-only mode) or accuracy (POS)
};

struct BucketReport {
  std::string system;
  std::string attribute;
  std::vector<Bucket> buckets;
  PRF overall;
  double overall_score = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// One analysis unit (span or token) with its attribute value.
struct Unit {
  std::size_t doc = 0, sent = 0, start = 0, end = 0;
  std::string label;
  double value = 0;

  auto key() const { return std::tie(doc, sent, start, end, label); }
};

inline std::vector<Unit> collect_units(const Corpus& gold, const LabelGrid& labels,
                                       const TrainingStats& stats, attribute attr) {
  std::vector<Unit> units;
  const bool token_level = is_token_level(attr);
  for (std::size_t d = 0; d < gold.documents.size(); ++d)
    for (std::size_t s = 0; s < gold.documents[d].sentences.size(); ++s) {
      const auto& sent = gold.documents[d].sentences[s];
      const auto& labs = labels[d][s];
      if (token_level) {
        const auto projected = projected_labels(sent, labs, gold.scheme);
        const bool every_token = gold.scheme == label_scheme::bmes || gold.scheme == label_scheme::pos;
        for (std::size_t t = 0; t < sent.size(); ++t) {
          if (!every_token && projected[t] == outside_label) continue;
          auto v = token_attributes(sent.tokens[t].surface, projected[t], stats);
          units.push_back({d, s, t, t, projected[t], v.get(attr)});
        }
      } else {
        const auto ctx = sentence_context(sent, stats);
        for (const auto& sp : sentence_spans(sent, labs, gold.scheme))
          units.push_back({d, s, sp.start, sp.end, sp.label,
                           span_attributes(sp, ctx, stats).get(attr)});
      }
    }
  return units;
}

}  // namespace detail

// Bucket-wise scores for each system on one attribute. Gold units fix the
// bucket intervals; each bucket's recall counts its gold units and, in
// interval mode, its precision counts predicted units whose attribute value
// falls into the bucket's interval.
inline std::vector<BucketReport> bucket_breakdown(const Corpus& gold,
                                                  const std::vector<SystemOutput>& systems,
                                                  const TrainingStats& stats, attribute attr,
                                                  std::size_t n_buckets,
                                                  bucket_mode mode = bucket_mode::interval) {
  if (gold.scheme == label_scheme::bmes && attr == attribute::entity_density)
    throw_input("entity density is not defined for CWS");
  const bool cws = gold.scheme == label_scheme::bmes;
  const std::string attr_name = attribute_name(attr, cws);

  const auto gold_units = detail::collect_units(gold, gold_grid(gold), stats, attr);
  if (gold_units.empty()) throw_input("no gold units to bucket for attribute " + attr_name);
  std::vector<double> values;
  values.reserve(gold_units.size());
  for (const auto& u : gold_units) values.push_back(u.value);
  const auto bucketing = bucketize(values, n_buckets);

  std::vector<std::size_t> gold_bucket(gold_units.size());
  for (std::size_t b = 0; b < bucketing.buckets.size(); ++b)
    for (std::size_t i : bucketing.buckets[b].members) gold_bucket[i] = b;

  std::vector<BucketReport> reports;
  for (const auto& sys : systems) {
    check_alignment(gold, sys);
    const auto pred_units = detail::collect_units(gold, sys.labels, stats, attr);

    std::vector<std::size_t> tp(bucketing.buckets.size(), 0), np(tp.size(), 0), ng(tp.size(), 0);
    for (std::size_t i = 0; i < gold_units.size(); ++i) ++ng[gold_bucket[i]];

    std::vector<std::size_t> gold_order(gold_units.size());
    std::iota(gold_order.begin(), gold_order.end(), 0);
    std::sort(gold_order.begin(), gold_order.end(),
              [&](std::size_t a, std::size_t b) { return gold_units[a].key() < gold_units[b].key(); });

    for (const auto& p : pred_units) {
      auto it = std::lower_bound(gold_order.begin(), gold_order.end(), p,
                                 [&](std::size_t g, const detail::Unit& u) {
                                   return gold_units[g].key() < u.key();
                                 });
      const bool match = it != gold_order.end() && gold_units[*it].key() == p.key();
      // A matched unit counts in its gold bucket; its value is identical.
      const std::size_t b = match ? gold_bucket[*it] : bucketing.locate(p.value);
      ++np[b];
      if (match) ++tp[b];
    }

    BucketReport rep;
    rep.system = sys.name;
    rep.attribute = attr_name;
    rep.warnings = bucketing.warnings;
    std::size_t TP = 0, NP = 0, NG = 0;
    for (std::size_t b = 0; b < bucketing.buckets.size(); ++b) {
      Bucket bk;
      bk.attribute = attr_name;
      bk.name = bucketing.buckets[b].name;
      bk.lo = bucketing.buckets[b].lo;
      bk.hi = bucketing.buckets[b].hi;
      bk.gold_units = ng[b];
      bk.prf = PRF::from_counts(tp[b], np[b], ng[b]);
      const bool recall_like = mode == bucket_mode::recall_only || gold.scheme == label_scheme::pos;
      bk.score = recall_like ? bk.prf.recall : bk.prf.f1;
      rep.buckets.push_back(bk);
      TP += tp[b];
      NP += np[b];
      NG += ng[b];
    }
    rep.overall = PRF::from_counts(TP, NP, NG);
    rep.overall_score = gold.scheme == label_scheme::pos ? rep.overall.recall : rep.overall.f1;
    reports.push_back(std::move(rep));
  }
  return reports;
}

struct BucketDelta {
  std::string name;
  double lo = 0, hi = 0;
  double precision = 0, recall = 0, f1 = 0, score = 0;
};

struct DeltaReport {
  std::string attribute;
  std::string base_system;
  std::string other_system;
  std::vector<BucketDelta> buckets;
  BucketDelta overall;
};

// Per-bucket and overall differences (other - base).
inline DeltaReport relative_improvement(const BucketReport& base, const BucketReport& other) {
  if (base.attribute != other.attribute)
    throw_input("cannot compare breakdowns of different attributes (" + base.attribute + " vs " +
                other.attribute + ")");
  if (base.buckets.size() != other.buckets.size())
    throw_input("bucket count differs between reports");
  DeltaReport d;
  d.attribute = base.attribute;
  d.base_system = base.system;
  d.other_system = other.system;
  for (std::size_t i = 0; i < base.buckets.size(); ++i) {
    const auto& a = base.buckets[i];
    const auto& b = other.buckets[i];
    if (a.lo != b.lo || a.hi != b.hi || a.name != b.name)
      throw_input("bucket boundaries differ at bucket " + std::to_string(i));
    d.buckets.push_back({a.name, a.lo, a.hi, b.prf.precision - a.prf.precision,
                         b.prf.recall - a.prf.recall, b.prf.f1 - a.prf.f1, b.score - a.score});
  }
  d.overall = {"overall", 0, 0, other.overall.precision - base.overall.precision,
               other.overall.recall - base.overall.recall, other.overall.f1 - base.overall.f1,
               other.overall_score - base.overall_score};
  return d;
}

// ---------------------------------------------------------------------------
// Paired sentence-level bootstrap of the headline score difference

struct SentencePair {
  PRF base;
  PRF other;
};

inline std::vector<SentencePair> sentence_pairs(const Corpus& gold, const SystemOutput& base,
                                                const SystemOutput& other) {
  check_alignment(gold, base);
  check_alignment(gold, other);
  std::vector<SentencePair> out;
  for (std::size_t d = 0; d < gold.documents.size(); ++d)
    for (std::size_t s = 0; s < gold.documents[d].sentences.size(); ++s) {
      const auto g = gold.documents[d].sentences[s].labels();
      out.push_back({sentence_prf(g, base.labels[d][s], gold.scheme),
                     sentence_prf(g, other.labels[d][s], gold.scheme)});
    }
  return out;
}

inline double pooled_delta(std::span<const SentencePair> sample, bool accuracy) {
  PRF a, b;
  for (const auto& p : sample) {
    a += p.base;
    b += p.other;
  }
  return accuracy ? b.recall - a.recall : b.f1 - a.f1;
}

inline ConfidenceInterval delta_ci(const Corpus& gold, const SystemOutput& base,
                                   const SystemOutput& other, std::size_t replicates,
                                   double level, std::uint64_t seed, unsigned jobs = 1) {
  const auto pairs = sentence_pairs(gold, base, other);
  const bool accuracy = gold.scheme == label_scheme::pos;
  return bootstrap_ci(std::span<const SentencePair>(pairs),
                      [accuracy](std::span<const SentencePair> s) { return pooled_delta(s, accuracy); },
                      replicates, level, seed, jobs);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json to_json(const PRF& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
          {"tp", p.tp},               {"n_pred", p.n_pred}, {"n_gold", p.n_gold}};
}

inline nlohmann::ordered_json to_json(const BucketReport& r) {
  nlohmann::ordered_json j;
  j["system"] = r.system;
  j["attribute"] = r.attribute;
  j["overall"] = to_json(r.overall);
  j["overall_score"] = r.overall_score;
  auto& bs = j["buckets"] = nlohmann::ordered_json::array();
  for (const auto& b : r.buckets)
    bs.push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}, {"gold_units", b.gold_units},
                  {"score", b.score}, {"prf", to_json(b.prf)}});
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

inline nlohmann::ordered_json to_json(const BucketDelta& d) {
  return {{"name", d.name}, {"lo", d.lo},         {"hi", d.hi},       {"precision", d.precision},
          {"recall", d.recall}, {"f1", d.f1}, {"score", d.score}};
}

inline nlohmann::ordered_json to_json(const DeltaReport& d) {
  nlohmann::ordered_json j;
  j["attribute"] = d.attribute;
  j["base"] = d.base_system;
  j["other"] = d.other_system;
  j["overall"] = to_json(d.overall);
  auto& bs = j["buckets"] = nlohmann::ordered_json::array();
  for (const auto& b : d.buckets) bs.push_back(to_json(b));
  return j;
}

inline nlohmann::ordered_json to_json(const ConfidenceInterval& ci) {
  return {{"estimate", ci.estimate}, {"lower", ci.lower},         {"upper", ci.upper},
          {"level", ci.level},       {"replicates", ci.replicates}, {"seed", ci.seed}};
}

inline nlohmann::ordered_json to_json(const TestResult& t) {
  return {{"statistic", t.statistic}, {"w_plus", t.w_plus}, {"w_minus", t.w_minus},
          {"p_value", t.p_value},     {"n", t.n},           {"method", t.method},
          {"sidedness", sidedness_name(t.side)}};
}

// Aligned human-readable table; every row ends with a newline.
inline std::string aligned_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], r[i].size());
    }
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += r[i];
      if (i + 1 < r.size()) {
        out.append(width[i] - r[i].size() + 2, ' ');
      }
    }
    out += '\n';
  }
  return out;
}

inline std::string tsv_table(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += '\t';
      out += r[i];
    }
    out += '\n';
  }
  return out;
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string to_tsv(const BucketReport& r) {
  std::vector<std::vector<std::string>> rows{
      {"system", "attribute", "bucket", "lo", "hi", "gold", "pred", "tp", "P", "R", "F1", "score"}};
  for (const auto& b : r.buckets)
    rows.push_back({r.system, r.attribute, b.name, fixed(b.lo), fixed(b.hi),
                    std::to_string(b.prf.n_gold), std::to_string(b.prf.n_pred),
                    std::to_string(b.prf.tp), fixed(b.prf.precision), fixed(b.prf.recall),
                    fixed(b.prf.f1), fixed(b.score)});
  rows.push_back({r.system, r.attribute, "overall", "", "", std::to_string(r.overall.n_gold),
                  std::to_string(r.overall.n_pred), std::to_string(r.overall.tp),
                  fixed(r.overall.precision), fixed(r.overall.recall), fixed(r.overall.f1),
                  fixed(r.overall_score)});
  return tsv_table(rows);
}

inline std::string to_tsv(const DeltaReport& d) {
  std::vector<std::vector<std::string>> rows{
      {"attribute", "bucket", "lo", "hi", "dP", "dR", "dF1", "dscore"}};
  for (const auto& b : d.buckets)
    rows.push_back({d.attribute, b.name, fixed(b.lo), fixed(b.hi), fixed(b.precision),
                    fixed(b.recall), fixed(b.f1), fixed(b.score)});
  rows.push_back({d.attribute, "overall", "", "", fixed(d.overall.precision),
                  fixed(d.overall.recall), fixed(d.overall.f1), fixed(d.overall.score)});
  return tsv_table(rows);
}

// Long-format heatmap rows: dataset, attribute, bucket, delta score.
inline std::string heatmap_tsv(const std::vector<std::pair<std::string, DeltaReport>>& deltas) {
  std::string out = "dataset\tattribute\tbucket\tdelta\n";
  for (const auto& [dataset, d] : deltas)
    for (const auto& b : d.buckets)
      out += dataset + "\t" + d.attribute + "\t" + b.name + "\t" + fixed(b.score, 6) + "\n";
  return out;
}

}  // namespace tagdiag
