#pragma once

// Linear-chain CRF inference over dense score lattices: forward/backward
// log-partition, marginals, Viterbi decoding and the log-likelihood gradient.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tagdiag/error.hpp"

namespace tagdiag {

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Scores of one sequence: emission(t, y), transition(from, to) and the
// score of starting in y. Transition and start scores are borrowed.
struct Lattice {
  std::size_t length = 0;
  std::size_t labels = 0;
  std::vector<double> emission;         // length x labels, row-major
  std::span<const double> transition;   // labels x labels
  std::span<const double> start;        // labels

  double emit(std::size_t t, std::size_t y) const { return emission[t * labels + y]; }
  double trans(std::size_t from, std::size_t to) const { return transition[from * labels + to]; }
};

inline void require_nonempty(const Lattice& lat) {
  if (lat.length == 0) throw_input("CRF inference on an empty sequence");
  if (lat.labels == 0) throw_input("CRF with no labels");
}

// Unnormalized log score of a complete label sequence.
inline double sequence_score(const Lattice& lat, std::span<const std::size_t> y) {
  double s = lat.start[y[0]] + lat.emit(0, y[0]);
  for (std::size_t t = 1; t < lat.length; ++t) s += lat.trans(y[t - 1], y[t]) + lat.emit(t, y[t]);
  return s;
}

// alpha(t, y): log-sum of all prefixes ending in y at t.
inline std::vector<double> forward_scores(const Lattice& lat) {
  require_nonempty(lat);
  const std::size_t L = lat.labels;
  std::vector<double> alpha(lat.length * L);
  std::vector<double> buf(L);
  for (std::size_t y = 0; y < L; ++y) alpha[y] = lat.start[y] + lat.emit(0, y);
  for (std::size_t t = 1; t < lat.length; ++t)
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t p = 0; p < L; ++p) buf[p] = alpha[(t - 1) * L + p] + lat.trans(p, y);
      alpha[t * L + y] = log_sum_exp(buf) + lat.emit(t, y);
    }
  return alpha;
}

// beta(t, y): log-sum of all suffixes after position t given y at t.
inline std::vector<double> backward_scores(const Lattice& lat) {
  require_nonempty(lat);
  const std::size_t L = lat.labels;
  std::vector<double> beta(lat.length * L, 0.0);
  std::vector<double> buf(L);
  for (std::size_t t = lat.length - 1; t-- > 0;)
    for (std::size_t y = 0; y < L; ++y) {
      for (std::size_t n = 0; n < L; ++n)
        buf[n] = lat.trans(y, n) + lat.emit(t + 1, n) + beta[(t + 1) * L + n];
      beta[t * L + y] = log_sum_exp(buf);
    }
  return beta;
}

inline double log_partition(const Lattice& lat) {
  const auto alpha = forward_scores(lat);
  return log_sum_exp(std::span<const double>(alpha).subspan((lat.length - 1) * lat.labels, lat.labels));
}

inline double log_partition_backward(const Lattice& lat) {
  const auto beta = backward_scores(lat);
  std::vector<double> buf(lat.labels);
  for (std::size_t y = 0; y < lat.labels; ++y) buf[y] = lat.start[y] + lat.emit(0, y) + beta[y];
  return log_sum_exp(buf);
}

// Posterior label marginals p(y_t = y | x), row-major length x labels.
inline std::vector<double> marginals(const Lattice& lat) {
  const auto alpha = forward_scores(lat);
  const auto beta = backward_scores(lat);
  const double z = log_sum_exp(
      std::span<const double>(alpha).subspan((lat.length - 1) * lat.labels, lat.labels));
  std::vector<double> p(alpha.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(alpha[i] + beta[i] - z);
  return p;
}

struct ViterbiResult {
  std::vector<std::size_t> labels;
  double score = 0;
};

// Highest-scoring sequence; ties go to the lowest label index.
inline ViterbiResult viterbi(const Lattice& lat) {
  require_nonempty(lat);
  const std::size_t L = lat.labels, T = lat.length;
  std::vector<double> best(T * L);
  std::vector<std::size_t> back(T * L, 0);
  for (std::size_t y = 0; y < L; ++y) best[y] = lat.start[y] + lat.emit(0, y);
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t y = 0; y < L; ++y) {
      std::size_t arg = 0;
      double top = best[(t - 1) * L] + lat.trans(0, y);
      for (std::size_t p = 1; p < L; ++p) {
        const double s = best[(t - 1) * L + p] + lat.trans(p, y);
        if (s > top) {
          top = s;
          arg = p;
        }
      }
      best[t * L + y] = top + lat.emit(t, y);
      back[t * L + y] = arg;
    }
  ViterbiResult r;
  r.labels.resize(T);
  std::size_t last = 0;
  for (std::size_t y = 1; y < L; ++y)
    if (best[(T - 1) * L + y] > best[(T - 1) * L + last]) last = y;
  r.score = best[(T - 1) * L + last];
  r.labels[T - 1] = last;
  for (std::size_t t = T - 1; t > 0; --t) r.labels[t - 1] = back[t * L + r.labels[t]];
  return r;
}

// Gradient of log Z - score for one sequence. Emission gradients are
// returned per (t, y); transition and start gradients are accumulated into
// the given buffers.
struct LatticeGradient {
  std::vector<double> emission;  // length x labels
  double negative_log_likelihood = 0;
};

inline LatticeGradient lattice_gradient(const Lattice& lat, std::span<const std::size_t> gold,
                                        std::span<double> transition_grad,
                                        std::span<double> start_grad) {
  const std::size_t L = lat.labels, T = lat.length;
  const auto alpha = forward_scores(lat);
  const auto beta = backward_scores(lat);
  const double z = log_sum_exp(std::span<const double>(alpha).subspan((T - 1) * L, L));

  LatticeGradient g;
  g.emission.assign(T * L, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t y = 0; y < L; ++y) g.emission[t * L + y] = std::exp(alpha[t * L + y] + beta[t * L + y] - z);
  for (std::size_t y = 0; y < L; ++y) start_grad[y] += g.emission[y];
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t p = 0; p < L; ++p)
      for (std::size_t y = 0; y < L; ++y)
        transition_grad[p * L + y] +=
            std::exp(alpha[(t - 1) * L + p] + lat.trans(p, y) + lat.emit(t, y) + beta[t * L + y] - z);

  for (std::size_t t = 0; t < T; ++t) g.emission[t * L + gold[t]] -= 1.0;
  start_grad[gold[0]] -= 1.0;
  for (std::size_t t = 1; t < T; ++t) transition_grad[gold[t - 1] * L + gold[t]] -= 1.0;
  g.negative_log_likelihood = z - sequence_score(lat, gold);
  return g;
}

}  // namespace tagdiag
