#pragma once

// Rank and resampling statistics: Spearman correlation, the Wilcoxon
// signed-rank test and percentile bootstrap intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tagdiag/error.hpp"

namespace tagdiag {

// Ranks starting at 1; tied values share the average of their ranks.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw_undefined("correlation is undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw_input("spearman: vectors differ in length (" + std::to_string(x.size()) + " vs " +
                std::to_string(y.size()) + ")");
  if (x.size() < 3) throw_input("spearman: at least 3 paired observations are required");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank

enum class sidedness { two_sided, greater, less };
enum class test_method { automatic, exact, normal };

inline const char* sidedness_name(sidedness s) {
  switch (s) {
    case sidedness::two_sided: return "two-sided";
    case sidedness::greater: return "greater";
    case sidedness::less: return "less";
  }
  return "?";
}

inline sidedness parse_sidedness(const std::string& s) {
  if (s == "two-sided" || s == "two" || s == "2") return sidedness::two_sided;
  if (s == "greater" || s == "one-sided" || s == "one" || s == "1") return sidedness::greater;
  if (s == "less") return sidedness::less;
  throw_input("unknown sidedness '" + s + "'");
}

struct TestResult {
  double statistic = 0;  // min(W+, W-)
  double w_plus = 0;
  double w_minus = 0;
  double p_value = 1;
  std::size_t n = 0;  // nonzero differences
  std::string method;  // "exact" or "normal-approximation"
  sidedness side = sidedness::two_sided;
};

inline constexpr std::size_t wilcoxon_exact_limit = 20;

namespace detail {

// Number of sign assignments for each achievable doubled W+ value.
inline std::vector<double> signed_rank_distribution(const std::vector<long>& doubled_ranks) {
  long total = 0;
  for (long r : doubled_ranks) total += r;
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  long reach = 0;
  for (long r : doubled_ranks) {
    for (long s = reach; s >= 0; --s)
      if (counts[static_cast<std::size_t>(s)] != 0)
        counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
    reach += r;
  }
  return counts;
}

}  // namespace detail

inline TestResult wilcoxon_signed_rank(std::span<const double> deltas,
                                       sidedness side = sidedness::two_sided,
                                       test_method method = test_method::automatic,
                                       std::size_t min_n = 5) {
  std::vector<double> nonzero;
  for (double d : deltas)
    if (d != 0.0) nonzero.push_back(d);
  if (nonzero.empty()) throw_undefined("no signed information: every difference is zero");
  if (nonzero.size() < min_n)
    throw_undefined("wilcoxon: " + std::to_string(nonzero.size()) +
                    " nonzero differences, at least " + std::to_string(min_n) + " required");

  const std::size_t n = nonzero.size();
  std::vector<double> magnitudes(n);
  for (std::size_t i = 0; i < n; ++i) magnitudes[i] = std::abs(nonzero[i]);
  const auto ranks = average_ranks(magnitudes);

  TestResult r;
  r.n = n;
  r.side = side;
  for (std::size_t i = 0; i < n; ++i) (nonzero[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
  r.statistic = std::min(r.w_plus, r.w_minus);

  const bool exact = method == test_method::exact ||
                     (method == test_method::automatic && n <= wilcoxon_exact_limit);
  if (exact) {
    r.method = "exact";
    std::vector<long> doubled(n);
    long total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = std::lround(2.0 * ranks[i]);
      total += doubled[i];
    }
    const auto counts = detail::signed_rank_distribution(doubled);
    const long observed = std::lround(2.0 * r.w_plus);
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double hits = 0;
    for (long s = 0; s <= total; ++s) {
      const double c = counts[static_cast<std::size_t>(s)];
      if (c == 0) continue;
      bool extreme = false;
      switch (side) {
        case sidedness::two_sided: extreme = std::labs(2 * s - total) >= std::labs(2 * observed - total); break;
        case sidedness::greater: extreme = s >= observed; break;
        case sidedness::less: extreme = s <= observed; break;
      }
      if (extreme) hits += c;
    }
    r.p_value = std::min(1.0, hits / all);
  } else {
    r.method = "normal-approximation";
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1) / 4.0;
    double var = nn * (nn + 1) * (2 * nn + 1) / 24.0;
    auto sorted = magnitudes;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    const double sd = std::sqrt(var);
    switch (side) {
      case sidedness::two_sided: {
        const double z = (std::abs(r.w_plus - mean) - 0.5) / sd;
        r.p_value = z <= 0 ? 1.0 : std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
        break;
      }
      case sidedness::greater:
        r.p_value = 1.0 - normal_cdf((r.w_plus - mean - 0.5) / sd);
        break;
      case sidedness::less:
        r.p_value = normal_cdf((r.w_plus - mean + 0.5) / sd);
        break;
    }
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bootstrap

struct ConfidenceInterval {
  double estimate = 0;  // statistic on the original sample
  double lower = 0;
  double upper = 0;
  double level = 0.95;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

// Linear-interpolation quantile of sorted data, q in [0, 1].
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw_input("quantile of an empty sample");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Independent stream for replicate `b`, so replicates can run in any order.
inline std::mt19937_64 replicate_engine(std::uint64_t seed, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

// Percentile bootstrap. `statistic` is called with a resample (a span of
// units drawn with replacement) and returns a real.
template <typename Unit, typename Statistic>
ConfidenceInterval bootstrap_ci(std::span<const Unit> units, Statistic&& statistic,
                                std::size_t replicates, double level, std::uint64_t seed,
                                unsigned jobs = 1) {
  if (units.empty()) throw_input("bootstrap: no units to resample");
  if (replicates < 100) throw_input("bootstrap: at least 100 replicates are required");
  if (!(level > 0 && level < 1)) throw_input("bootstrap: level must lie in (0, 1)");

  const std::size_t n = units.size();
  std::vector<double> values(replicates);
  auto run = [&](std::size_t from, std::size_t to) {
    std::vector<Unit> sample;
    sample.reserve(n);
    for (std::size_t b = from; b < to; ++b) {
      auto engine = replicate_engine(seed, b);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      sample.clear();
      for (std::size_t i = 0; i < n; ++i) sample.push_back(units[pick(engine)]);
      values[b] = statistic(std::span<const Unit>(sample));
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    run(0, replicates);
  } else {
    std::vector<std::future<void>> parts;
    const std::size_t chunk = (replicates + jobs - 1) / jobs;
    for (std::size_t from = 0; from < replicates; from += chunk)
      parts.push_back(std::async(std::launch::async, run, from, std::min(replicates, from + chunk)));
    for (auto& p : parts) p.get();
  }

  std::sort(values.begin(), values.end());
  ConfidenceInterval ci;
  ci.estimate = statistic(units);
  ci.lower = sorted_quantile(values, (1.0 - level) / 2.0);
  ci.upper = sorted_quantile(values, (1.0 + level) / 2.0);
  ci.level = level;
  ci.replicates = replicates;
  ci.seed = seed;
  return ci;
}

}  // namespace tagdiag
