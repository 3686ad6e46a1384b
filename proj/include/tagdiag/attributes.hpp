#pragma once

// Training-set statistics and per-span / per-token attribute functions.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tagdiag/corpus.hpp"
#include "tagdiag/error.hpp"

namespace tagdiag {

enum class attribute {
  span_length,        // eLen / wLen
  sentence_length,    // sLen
  entity_density,     // eDen (not defined for CWS)
  oov_density,        // dOov
  span_frequency,     // eFre / wFre
  span_consistency,   // eCon / wCon
  token_frequency,    // tFre / cFre
  token_consistency,  // tCon / cCon
};

inline constexpr attribute all_attributes[] = {
    attribute::span_consistency, attribute::token_consistency, attribute::span_frequency,
    attribute::token_frequency,  attribute::span_length,       attribute::oov_density,
    attribute::sentence_length,  attribute::entity_density,
};

inline bool is_token_level(attribute a) {
  return a == attribute::token_frequency || a == attribute::token_consistency;
}

inline bool is_bounded(attribute a) {
  return a != attribute::span_length && a != attribute::sentence_length;
}

inline std::string attribute_name(attribute a, bool cws = false) {
  switch (a) {
    case attribute::span_length: return cws ? "wLen" : "eLen";
    case attribute::sentence_length: return "sLen";
    case attribute::entity_density: return "eDen";
    case attribute::oov_density: return "dOov";
    case attribute::span_frequency: return cws ? "wFre" : "eFre";
    case attribute::span_consistency: return cws ? "wCon" : "eCon";
    case attribute::token_frequency: return cws ? "cFre" : "tFre";
    case attribute::token_consistency: return cws ? "cCon" : "tCon";
  }
  return "?";
}

inline attribute parse_attribute(std::string_view name) {
  for (attribute a : all_attributes)
    if (attribute_name(a, false) == name || attribute_name(a, true) == name) return a;
  throw_input("unknown attribute '" + std::string(name) + "'");
}

// Attributes reported for a scheme; CWS omits density (it is always one).
inline std::vector<attribute> attributes_for(label_scheme scheme) {
  std::vector<attribute> out;
  for (attribute a : all_attributes)
    if (!(scheme == label_scheme::bmes && a == attribute::entity_density)) out.push_back(a);
  return out;
}

struct TrainingStats {
  label_scheme scheme = label_scheme::bio;
  bool case_fold = false;

  std::map<std::string, std::size_t> span_count;
  std::map<std::string, std::map<std::string, std::size_t>> span_label_count;
  std::map<std::string, std::size_t> token_count;
  std::map<std::string, std::map<std::string, std::size_t>> token_label_count;
  std::set<std::string> vocabulary;
  std::size_t total_spans = 0;
  std::size_t total_tokens = 0;

  std::string key(std::string_view surface) const {
    std::string k(surface);
    if (case_fold)
      std::transform(k.begin(), k.end(), k.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return k;
  }

  bool in_vocabulary(std::string_view surface) const { return vocabulary.count(key(surface)) > 0; }
};

// Label each token carries for token-level statistics: the category of the
// gold span covering it, or "O". BMES/POS tags are used as they are.
inline std::vector<std::string> projected_labels(const Sentence& sentence,
                                                 const std::vector<std::string>& labels,
                                                 label_scheme scheme) {
  if (scheme == label_scheme::bmes || scheme == label_scheme::pos) return labels;
  std::vector<std::string> out(sentence.size(), std::string(outside_label));
  for (const auto& s : decode_spans(labels, scheme))
    for (std::size_t i = s.start; i <= s.end; ++i) out[i] = s.label;
  return out;
}

inline TrainingStats build_training_stats(const Corpus& train, bool case_fold = false) {
  if (train.token_count() == 0) throw_input("training corpus is empty");
  TrainingStats stats;
  stats.scheme = train.scheme;
  stats.case_fold = case_fold;
  train.for_each_sentence([&](const Sentence& s) {
    const auto labels = s.labels();
    for (const auto& span : sentence_spans(s, labels, train.scheme)) {
      const auto k = stats.key(span.surface);
      ++stats.span_count[k];
      ++stats.span_label_count[k][span.label];
      ++stats.total_spans;
    }
    const auto projected = projected_labels(s, labels, train.scheme);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto k = stats.key(s.tokens[i].surface);
      ++stats.token_count[k];
      ++stats.token_label_count[k][projected[i]];
      stats.vocabulary.insert(k);
      ++stats.total_tokens;
    }
  });
  return stats;
}

// Fraction of training occurrences of `surface` that carry `label`; zero
// for surfaces never seen in training.
inline double consistency(std::string_view surface, std::string_view label,
                          const TrainingStats& stats) {
  const auto k = stats.key(surface);
  auto it = stats.span_count.find(k);
  if (it == stats.span_count.end() || it->second == 0) return 0.0;
  const auto& by_label = stats.span_label_count.at(k);
  auto jt = by_label.find(std::string(label));
  if (jt == by_label.end()) return 0.0;
  return static_cast<double>(jt->second) / static_cast<double>(it->second);
}

inline double token_consistency(std::string_view surface, std::string_view projected_label,
                                const TrainingStats& stats) {
  const auto k = stats.key(surface);
  auto it = stats.token_count.find(k);
  if (it == stats.token_count.end() || it->second == 0) return 0.0;
  const auto& by_label = stats.token_label_count.at(k);
  auto jt = by_label.find(std::string(projected_label));
  if (jt == by_label.end()) return 0.0;
  return static_cast<double>(jt->second) / static_cast<double>(it->second);
}

enum class unit_level { span, token };

inline std::size_t raw_count(std::string_view surface, const TrainingStats& stats,
                             unit_level level) {
  const auto& table = level == unit_level::span ? stats.span_count : stats.token_count;
  auto it = table.find(stats.key(surface));
  return it == table.end() ? 0 : it->second;
}

// Relative training frequency count(surface) / total at the given level.
inline double frequency(std::string_view surface, const TrainingStats& stats, unit_level level) {
  const std::size_t total = level == unit_level::span ? stats.total_spans : stats.total_tokens;
  if (total == 0) return 0.0;
  return static_cast<double>(raw_count(surface, stats, level)) / static_cast<double>(total);
}

struct AttributeVector {
  double span_length = 0;
  double sentence_length = 0;
  std::optional<double> entity_density;  // absent for CWS
  double oov_density = 0;
  double span_frequency = 0;
  double span_frequency_raw = 0;
  double span_consistency = 0;

  double get(attribute a) const {
    switch (a) {
      case attribute::span_length: return span_length;
      case attribute::sentence_length: return sentence_length;
      case attribute::entity_density:
        if (!entity_density) throw_input("entity density is not defined for CWS");
        return *entity_density;
      case attribute::oov_density: return oov_density;
      case attribute::span_frequency: return span_frequency;
      case attribute::span_consistency: return span_consistency;
      default: break;
    }
    throw_input("'" + attribute_name(a) + "' is a token-level attribute");
  }
};

struct TokenAttributeVector {
  double token_frequency = 0;
  double token_frequency_raw = 0;
  double token_consistency = 0;

  double get(attribute a) const {
    if (a == attribute::token_frequency) return token_frequency;
    if (a == attribute::token_consistency) return token_consistency;
    throw_input("'" + attribute_name(a) + "' is a span-level attribute");
  }
};

// Sentence-level quantities shared by every span of one sentence.
struct SentenceContext {
  double length = 0;
  double entity_density = 0;
  double oov_density = 0;
};

inline SentenceContext sentence_context(const Sentence& sentence, const TrainingStats& stats) {
  SentenceContext ctx;
  ctx.length = static_cast<double>(sentence.size());
  if (sentence.size() == 0) return ctx;
  std::size_t covered = 0;
  for (const auto& s : decode_spans(sentence.labels(), stats.scheme)) covered += s.end - s.start + 1;
  std::size_t oov = 0;
  for (const auto& t : sentence.tokens)
    if (!stats.in_vocabulary(t.surface)) ++oov;
  ctx.entity_density = static_cast<double>(covered) / ctx.length;
  ctx.oov_density = static_cast<double>(oov) / ctx.length;
  return ctx;
}

inline AttributeVector span_attributes(const Span& span, const SentenceContext& ctx,
                                       const TrainingStats& stats) {
  AttributeVector v;
  v.span_length = static_cast<double>(span.length());
  v.sentence_length = ctx.length;
  if (stats.scheme != label_scheme::bmes) v.entity_density = ctx.entity_density;
  v.oov_density = ctx.oov_density;
  v.span_frequency = frequency(span.surface, stats, unit_level::span);
  v.span_frequency_raw = static_cast<double>(raw_count(span.surface, stats, unit_level::span));
  v.span_consistency = consistency(span.surface, span.label, stats);
  return v;
}

// `span` may be a gold or a predicted span; density is always measured on the
// sentence's gold annotation.
inline AttributeVector span_attributes(const Span& span, const Sentence& sentence,
                                       const TrainingStats& stats) {
  if (span.start > span.end || span.end >= sentence.size())
    throw_input("span [" + std::to_string(span.start) + "," + std::to_string(span.end) +
                "] lies outside a sentence of length " + std::to_string(sentence.size()));
  return span_attributes(span, sentence_context(sentence, stats), stats);
}

inline TokenAttributeVector token_attributes(std::string_view surface,
                                             std::string_view projected_label,
                                             const TrainingStats& stats) {
  TokenAttributeVector v;
  v.token_frequency = frequency(surface, stats, unit_level::token);
  v.token_frequency_raw = static_cast<double>(raw_count(surface, stats, unit_level::token));
  v.token_consistency = token_consistency(surface, projected_label, stats);
  return v;
}

inline TokenAttributeVector token_attributes(const Token& token, const Sentence& sentence,
                                             const TrainingStats& stats) {
  const auto projected = projected_labels(sentence, sentence.labels(), stats.scheme);
  return token_attributes(token.surface, projected.at(token.position), stats);
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int stats_format_version = 1;

inline nlohmann::json stats_to_json(const TrainingStats& stats) {
  nlohmann::json j;
  j["format"] = "tagdiag-stats";
  j["version"] = stats_format_version;
  j["scheme"] = scheme_name(stats.scheme);
  j["case_fold"] = stats.case_fold;
  j["total_spans"] = stats.total_spans;
  j["total_tokens"] = stats.total_tokens;
  j["span_label_count"] = stats.span_label_count;
  j["token_label_count"] = stats.token_label_count;
  return j;
}

inline TrainingStats stats_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "tagdiag-stats") throw_input("not a statistics file");
  if (j.value("version", 0) != stats_format_version)
    throw_input("unsupported statistics version " + std::to_string(j.value("version", 0)));
  TrainingStats stats;
  stats.scheme = parse_scheme(j.at("scheme").get<std::string>());
  stats.case_fold = j.at("case_fold").get<bool>();
  stats.total_spans = j.at("total_spans").get<std::size_t>();
  stats.total_tokens = j.at("total_tokens").get<std::size_t>();
  stats.span_label_count =
      j.at("span_label_count").get<std::map<std::string, std::map<std::string, std::size_t>>>();
  stats.token_label_count =
      j.at("token_label_count").get<std::map<std::string, std::map<std::string, std::size_t>>>();
  for (const auto& [surface, labels] : stats.span_label_count)
    for (const auto& [label, n] : labels) stats.span_count[surface] += n;
  for (const auto& [surface, labels] : stats.token_label_count) {
    for (const auto& [label, n] : labels) stats.token_count[surface] += n;
    stats.vocabulary.insert(surface);
  }
  return stats;
}

}  // namespace tagdiag
