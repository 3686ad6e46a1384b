#pragma once

// Dataset-level attribute measures, their rank correlation with aggregator
// gains across datasets, and dataset recommendations per aggregator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tagdiag/attributes.hpp"
#include "tagdiag/evaluation.hpp"
#include "tagdiag/statistics.hpp"

namespace tagdiag {

// Mean attribute value over the test set's analysis units (gold spans for
// span attributes, tokens inside gold spans for token attributes).
inline double dataset_measure(const Corpus& test, const TrainingStats& stats, attribute attr) {
  const auto units = detail::collect_units(test, gold_grid(test), stats, attr);
  if (units.empty())
    throw_input("no analysis units for " + attribute_name(attr, test.scheme == label_scheme::bmes));
  double sum = 0;
  for (const auto& u : units) sum += u.value;
  return sum / static_cast<double>(units.size());
}

struct DatasetMeasure {
  std::string dataset;
  std::map<std::string, double> values;  // attribute name -> zeta
};

struct MeasureTable {
  std::vector<std::string> attributes;  // column order
  std::vector<DatasetMeasure> rows;

  const DatasetMeasure* find(const std::string& dataset) const {
    for (const auto& r : rows)
      if (r.dataset == dataset) return &r;
    return nullptr;
  }
};

struct GainVector {
  std::string aggregator;
  std::map<std::string, double> gains;         // dataset -> improvement
  std::map<std::string, std::size_t> chosen_k;  // filled when reduced over k
};

struct CorrelationCell {
  std::string attribute;
  std::optional<double> rho;  // empty when the measure column is constant
  double p_value = 1;
  bool significant = false;
};

struct CorrelationRow {
  std::string aggregator;
  std::vector<std::string> datasets;
  std::vector<CorrelationCell> cells;

  const CorrelationCell& cell(const std::string& attr) const {
    for (const auto& c : cells)
      if (c.attribute == attr) return c;
    throw_input("no correlation for attribute " + attr);
  }
};

using CorrelationTable = std::vector<CorrelationRow>;

// ---------------------------------------------------------------------------
// Tab-separated tables

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, '\t')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

inline std::vector<std::vector<std::string>> read_tsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(split_tabs(line));
  }
  return rows;
}

inline double parse_number(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw_input("row " + std::to_string(row) + ": '" + s + "' is not a number");
  }
}

}  // namespace detail

// Layout: header "dataset<TAB>attr1<TAB>attr2...", one dataset per row.
inline MeasureTable parse_measure_table(const std::string& text) {
  const auto rows = detail::read_tsv(text);
  if (rows.size() < 2) throw_input("measure table needs a header and at least one row");
  MeasureTable t;
  t.attributes.assign(rows[0].begin() + 1, rows[0].end());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw_input("measure table row " + std::to_string(r + 1) + " has " +
                  std::to_string(rows[r].size()) + " cells, header has " +
                  std::to_string(rows[0].size()));
    DatasetMeasure m;
    m.dataset = rows[r][0];
    for (std::size_t c = 1; c < rows[r].size(); ++c)
      m.values[t.attributes[c - 1]] = detail::parse_number(rows[r][c], r + 1);
    t.rows.push_back(std::move(m));
  }
  return t;
}

inline std::string measure_table_tsv(const MeasureTable& t, int digits = 6) {
  std::string out = "dataset";
  for (const auto& a : t.attributes) out += "\t" + a;
  out += "\n";
  for (const auto& r : t.rows) {
    out += r.dataset;
    for (const auto& a : t.attributes) {
      auto it = r.values.find(a);
      out += "\t" + (it == r.values.end() ? std::string("NA") : fixed(it->second, digits));
    }
    out += "\n";
  }
  return out;
}

// Picks, per dataset, the largest improvement over the supplied window sizes.
// k = 1 is the baseline itself and is ignored.
inline GainVector best_over_k(const std::string& aggregator,
                              const std::map<std::string, std::map<std::size_t, double>>& runs) {
  GainVector g;
  g.aggregator = aggregator;
  for (const auto& [dataset, by_k] : runs) {
    std::optional<std::pair<std::size_t, double>> best;
    for (const auto& [k, gain] : by_k)
      if (k != 1 && (!best || gain > best->second)) best = {k, gain};
    if (!best) continue;
    g.gains[dataset] = best->second;
    g.chosen_k[dataset] = best->first;
  }
  return g;
}

// Two layouts are accepted. Wide: header "aggregator<TAB>ds1<TAB>ds2...",
// one aggregator per row. Long: header "aggregator dataset k gain", reduced
// to the best k per (aggregator, dataset).
inline std::vector<GainVector> parse_gain_table(const std::string& text) {
  const auto rows = detail::read_tsv(text);
  if (rows.size() < 2) throw_input("gain table needs a header and at least one row");
  std::vector<GainVector> out;
  const auto& head = rows[0];
  if (head.size() == 4 && head[1] == "dataset" && head[2] == "k") {
    std::map<std::string, std::map<std::string, std::map<std::size_t, double>>> runs;
    std::vector<std::string> order;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 4) throw_input("gain table row " + std::to_string(r + 1) + " malformed");
      if (!runs.count(rows[r][0])) order.push_back(rows[r][0]);
      const auto k = static_cast<std::size_t>(detail::parse_number(rows[r][2], r + 1));
      runs[rows[r][0]][rows[r][1]][k] = detail::parse_number(rows[r][3], r + 1);
    }
    for (const auto& agg : order) out.push_back(best_over_k(agg, runs[agg]));
    return out;
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != head.size())
      throw_input("gain table row " + std::to_string(r + 1) + " has the wrong number of cells");
    GainVector g;
    g.aggregator = rows[r][0];
    for (std::size_t c = 1; c < head.size(); ++c)
      g.gains[head[c]] = detail::parse_number(rows[r][c], r + 1);
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation

inline constexpr std::size_t exhaustive_permutation_limit = 9;

// Two-sided permutation p-value of Spearman's rho: the share of orderings of
// `y` whose |rho| reaches the observed one. Exhaustive for small n, otherwise
// Monte Carlo with a fixed seed.
inline double spearman_permutation_p(std::span<const double> x, std::span<const double> y,
                                     std::uint64_t seed = 20210601, std::size_t draws = 200000) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double observed = std::abs(pearson(rx, ry));
  const std::size_t n = rx.size();
  const double mean = (static_cast<double>(n) + 1) / 2.0;
  double sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  const double norm = std::sqrt(sxx * syy);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto rho_of = [&] {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (rx[i] - mean) * (ry[perm[i]] - mean);
    return std::abs(s / norm);
  };
  constexpr double slack = 1e-12;
  double hits = 0, total = 0;
  if (n <= exhaustive_permutation_limit) {
    do {
      total += 1;
      if (rho_of() >= observed - slack) hits += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::mt19937_64 engine(seed);
    for (std::size_t d = 0; d < draws; ++d) {
      std::shuffle(perm.begin(), perm.end(), engine);
      total += 1;
      if (rho_of() >= observed - slack) hits += 1;
    }
  }
  return hits / total;
}

inline CorrelationRow correlate(const MeasureTable& measures, const GainVector& gains,
                                double alpha = 0.05) {
  std::vector<std::string> missing;
  for (const auto& [dataset, g] : gains.gains)
    if (!measures.find(dataset)) missing.push_back(dataset + " (no measures)");
  for (const auto& r : measures.rows)
    if (!gains.gains.count(r.dataset)) missing.push_back(r.dataset + " (no gain)");
  if (!missing.empty()) {
    std::string msg = "dataset sets differ for aggregator " + gains.aggregator + ":";
    for (const auto& m : missing) msg += " " + m;
    throw_input(msg);
  }
  if (measures.rows.size() < 3) throw_input("correlation needs at least 3 datasets");

  CorrelationRow row;
  row.aggregator = gains.aggregator;
  std::vector<double> y;
  for (const auto& r : measures.rows) {
    row.datasets.push_back(r.dataset);
    y.push_back(gains.gains.at(r.dataset));
  }
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); }))
    throw_undefined("correlation undefined: gains of " + gains.aggregator +
                    " are identical across datasets");

  for (const auto& attr : measures.attributes) {
    std::vector<double> x;
    for (const auto& r : measures.rows) x.push_back(r.values.at(attr));
    CorrelationCell cell;
    cell.attribute = attr;
    if (std::any_of(x.begin(), x.end(), [&](double v) { return v != x.front(); })) {
      cell.rho = spearman(x, y);
      cell.p_value = spearman_permutation_p(x, y);
      cell.significant = cell.p_value < alpha;
    }
    row.cells.push_back(cell);
  }
  return row;
}

inline std::string correlation_table_tsv(const CorrelationTable& table) {
  if (table.empty()) return "";
  std::string out = "aggregator";
  for (const auto& c : table.front().cells) out += "\t" + c.attribute;
  out += "\n";
  for (const auto& row : table) {
    out += row.aggregator;
    for (const auto& c : row.cells) out += "\t" + (c.rho ? fixed(*c.rho, 3) : std::string("NA"));
    out += "\n";
  }
  return out;
}

// Same layout with "rho;p;flag" cells, flag being "*" for significant.
inline std::string correlation_detail_tsv(const CorrelationTable& table) {
  if (table.empty()) return "";
  std::string out = "aggregator";
  for (const auto& c : table.front().cells) out += "\t" + c.attribute;
  out += "\n";
  for (const auto& row : table) {
    out += row.aggregator;
    for (const auto& c : row.cells)
      out += "\t" + (c.rho ? fixed(*c.rho, 3) : std::string("NA")) + ";" + fixed(c.p_value, 4) +
             (c.significant ? ";*" : ";");
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recommendations

struct Evidence {
  std::string attribute;
  double rho = 0;
  double zeta = 0;
  double standardized = 0;
};

struct Recommendation {
  std::string dataset;
  double score = 0;
  std::vector<Evidence> evidence;
  std::string rationale;
};

struct RecommendationSet {
  std::string aggregator;
  std::vector<Recommendation> ranked;
  std::string explanation;
};

// Scores each dataset by the sum, over the aggregator's significant
// attributes, of sign(rho) times the dataset's standardized measure: a
// negative correlation favours datasets with low values and vice versa.
inline RecommendationSet recommend(const CorrelationRow& row, const MeasureTable& measures) {
  RecommendationSet out;
  out.aggregator = row.aggregator;
  std::vector<const CorrelationCell*> used;
  for (const auto& c : row.cells)
    if (c.significant && c.rho && *c.rho != 0) used.push_back(&c);
  if (used.empty()) {
    out.explanation = "no attribute correlates significantly with the gains of " + row.aggregator;
    return out;
  }

  std::map<std::string, std::pair<double, double>> moments;  // attribute -> (mean, sd)
  for (const auto* c : used) {
    double sum = 0, sq = 0;
    for (const auto& d : row.datasets) sum += measures.find(d)->values.at(c->attribute);
    const double mean = sum / static_cast<double>(row.datasets.size());
    for (const auto& d : row.datasets) {
      const double v = measures.find(d)->values.at(c->attribute) - mean;
      sq += v * v;
    }
    moments[c->attribute] = {mean, std::sqrt(sq / static_cast<double>(row.datasets.size()))};
  }

  for (const auto& d : row.datasets) {
    Recommendation r;
    r.dataset = d;
    std::ostringstream why;
    for (const auto* c : used) {
      const double zeta = measures.find(d)->values.at(c->attribute);
      const auto [mean, sd] = moments[c->attribute];
      const double z = sd > 0 ? (zeta - mean) / sd : 0.0;
      const double sign = *c->rho > 0 ? 1.0 : -1.0;
      r.score += sign * z;
      r.evidence.push_back({c->attribute, *c->rho, zeta, z});
      if (why.tellp() > 0) why << "; ";
      why << c->attribute << " rho=" << fixed(*c->rho, 3) << " zeta=" << fixed(zeta, 3) << " ("
          << (z < 0 ? "below" : "above") << " mean)";
    }
    r.rationale = why.str();
    out.ranked.push_back(std::move(r));
  }
  std::sort(out.ranked.begin(), out.ranked.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.dataset < b.dataset;
  });
  return out;
}

inline nlohmann::ordered_json to_json(const CorrelationRow& row) {
  nlohmann::ordered_json j;
  j["aggregator"] = row.aggregator;
  j["datasets"] = row.datasets;
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : row.cells)
    cells.push_back({{"attribute", c.attribute},
                     {"rho", c.rho ? nlohmann::ordered_json(*c.rho) : nlohmann::ordered_json()},
                     {"p_value", c.p_value},
                     {"significant", c.significant}});
  return j;
}

inline nlohmann::ordered_json to_json(const RecommendationSet& set) {
  nlohmann::ordered_json j;
  j["aggregator"] = set.aggregator;
  if (!set.explanation.empty()) j["explanation"] = set.explanation;
  auto& ranked = j["ranked"] = nlohmann::ordered_json::array();
  for (const auto& r : set.ranked) {
    nlohmann::ordered_json e = nlohmann::ordered_json::array();
    for (const auto& ev : r.evidence)
      e.push_back({{"attribute", ev.attribute}, {"rho", ev.rho}, {"zeta", ev.zeta},
                   {"standardized", ev.standardized}});
    ranked.push_back({{"dataset", r.dataset}, {"score", r.score}, {"evidence", e},
                      {"rationale", r.rationale}});
  }
  return j;
}

}  // namespace tagdiag
