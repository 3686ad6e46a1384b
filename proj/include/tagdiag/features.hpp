#pragma once

// Discrete feature templates and window-level feature extraction for the
// reference tagger's three context modes.

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tagdiag/corpus.hpp"
#include "tagdiag/error.hpp"

namespace tagdiag {

// norm: one sentence at a time (k = 1).
// bow:  each sentence tagged alone, plus a bag of the window's content words
//       attached to every position.
// seq:  the window's sentences concatenated into one sequence.
enum class aggregator { norm, bow, seq };

inline const char* aggregator_name(aggregator a) {
  switch (a) {
    case aggregator::norm: return "norm";
    case aggregator::bow: return "bow";
    case aggregator::seq: return "seq";
  }
  return "?";
}

inline aggregator parse_aggregator(std::string_view s) {
  if (s == "norm") return aggregator::norm;
  if (s == "bow") return aggregator::bow;
  if (s == "seq") return aggregator::seq;
  throw_input("unknown aggregator '" + std::string(s) + "' (expected norm, bow or seq)");
}

struct AggregatorConfig {
  aggregator mode = aggregator::norm;
  std::size_t k = 1;
  std::size_t bag_size = 20;
  bool context_bag = true;

  void validate() const {
    if (k == 0) throw_input("window size k must be at least 1");
    if (mode == aggregator::norm && k != 1) throw_input("the norm aggregator requires k = 1");
  }
};

enum class template_kind { bias, word, lower, prefix, suffix, shape, neighbor, context_bag };

struct FeatureTemplate {
  std::string id;
  template_kind kind = template_kind::bias;
  int param = 0;  // affix length or neighbor offset
};

inline std::vector<FeatureTemplate> default_templates() {
  std::vector<FeatureTemplate> t{{"bias", template_kind::bias, 0},
                                 {"w", template_kind::word, 0},
                                 {"lw", template_kind::lower, 0},
                                 {"shape", template_kind::shape, 0}};
  for (int n = 1; n <= 3; ++n) {
    t.push_back({"p" + std::to_string(n), template_kind::prefix, n});
    t.push_back({"s" + std::to_string(n), template_kind::suffix, n});
  }
  for (int off : {-2, -1, 1, 2})
    t.push_back({"w[" + std::to_string(off) + "]", template_kind::neighbor, off});
  t.push_back({"ctx", template_kind::context_bag, 0});
  return t;
}

inline std::vector<FeatureTemplate> templates_from_ids(const std::vector<std::string>& ids) {
  const auto all = default_templates();
  std::vector<FeatureTemplate> out;
  for (const auto& id : ids) {
    auto it = std::find_if(all.begin(), all.end(), [&](const auto& t) { return t.id == id; });
    if (it == all.end()) throw_input("unknown feature template '" + id + "'");
    out.push_back(*it);
  }
  return out;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Collapsed character-class shape: "McDonald's" -> "AaAa'a", "1984" -> "0".
inline std::string word_shape(std::string_view w) {
  std::string out;
  for (unsigned char c : w) {
    char cls;
    if (std::isupper(c)) cls = 'A';
    else if (std::islower(c)) cls = 'a';
    else if (std::isdigit(c)) cls = '0';
    else if (c >= 0x80) cls = 'x';
    else cls = static_cast<char>(c);
    if (out.empty() || out.back() != cls) out.push_back(cls);
  }
  return out;
}

namespace detail {

// Affixes are taken on whole UTF-8 characters.
inline std::vector<std::string> utf8_chars(std::string_view w) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < w.size();) {
    std::size_t n = std::min(utf8_length(static_cast<unsigned char>(w[i])), w.size() - i);
    out.emplace_back(w.substr(i, n));
    i += n;
  }
  return out;
}

inline bool has_letter(std::string_view w) {
  return std::any_of(w.begin(), w.end(), [](unsigned char c) { return std::isalpha(c) || c >= 0x80; });
}

}  // namespace detail

// Words excluded from context bags: the most frequent lowercased training words.
struct ContextFilter {
  std::set<std::string> stopwords;

  bool is_content(const std::string& lowered) const {
    return detail::has_letter(lowered) && !stopwords.count(lowered);
  }
};

inline ContextFilter build_context_filter(const Corpus& train, std::size_t stopword_count = 25) {
  std::map<std::string, std::size_t> freq;
  train.for_each_sentence([&](const Sentence& s) {
    for (const auto& t : s.tokens) ++freq[lowercase(t.surface)];
  });
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ContextFilter f;
  for (std::size_t i = 0; i < ranked.size() && i < stopword_count; ++i)
    f.stopwords.insert(ranked[i].first);
  return f;
}

// Features of one window, position by position over the concatenated
// sentences; `segments` are the [begin, end) ranges decoded as one sequence.
struct GroupFeatures {
  std::vector<std::vector<std::string>> positions;
  std::vector<std::pair<std::size_t, std::size_t>> segments;
};

// The window's most frequent content words, count-descending then
// lexicographic, capped at `limit`.
inline std::vector<std::string> context_bag(const Document& doc, const SentenceGroup& group,
                                            const ContextFilter& filter, std::size_t limit) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t s = group.first_sentence; s <= group.last_sentence(); ++s)
    for (const auto& t : doc.sentences[s].tokens) {
      auto w = lowercase(t.surface);
      if (filter.is_content(w)) ++counts[w];
    }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) out.push_back(ranked[i].first);
  return out;
}

inline GroupFeatures extract_features(const Document& doc, const SentenceGroup& group,
                                      const std::vector<FeatureTemplate>& templates,
                                      const AggregatorConfig& agg, const ContextFilter& filter) {
  GroupFeatures out;
  std::vector<const Token*> tokens;
  for (std::size_t s = group.first_sentence; s <= group.last_sentence(); ++s) {
    const auto& sent = doc.sentences.at(s);
    if (agg.mode != aggregator::seq) out.segments.push_back({tokens.size(), tokens.size() + sent.size()});
    for (const auto& t : sent.tokens) tokens.push_back(&t);
  }
  if (agg.mode == aggregator::seq) out.segments.push_back({0, tokens.size()});

  std::vector<std::string> bag;
  const bool use_bag = agg.mode == aggregator::bow && agg.context_bag;
  if (use_bag) bag = context_bag(doc, group, filter, agg.bag_size);

  out.positions.resize(tokens.size());
  for (const auto& [begin, end] : out.segments) {
    for (std::size_t i = begin; i < end; ++i) {
      auto& feats = out.positions[i];
      const std::string& w = tokens[i]->surface;
      for (const auto& tpl : templates) {
        switch (tpl.kind) {
          case template_kind::bias: feats.push_back("bias"); break;
          case template_kind::word: feats.push_back("w=" + w); break;
          case template_kind::lower: feats.push_back("lw=" + lowercase(w)); break;
          case template_kind::shape: feats.push_back("shape=" + word_shape(w)); break;
          case template_kind::prefix:
          case template_kind::suffix: {
            const auto chars = detail::utf8_chars(w);
            const auto n = static_cast<std::size_t>(tpl.param);
            if (chars.size() < n) break;
            std::string affix;
            if (tpl.kind == template_kind::prefix)
              for (std::size_t c = 0; c < n; ++c) affix += chars[c];
            else
              for (std::size_t c = chars.size() - n; c < chars.size(); ++c) affix += chars[c];
            feats.push_back(tpl.id + "=" + affix);
            break;
          }
          case template_kind::neighbor: {
            const long j = static_cast<long>(i) + tpl.param;
            std::string v;
            if (j < static_cast<long>(begin)) v = "<s>";
            else if (j >= static_cast<long>(end)) v = "</s>";
            else v = lowercase(tokens[static_cast<std::size_t>(j)]->surface);
            feats.push_back(tpl.id + "=" + v);
            break;
          }
          case template_kind::context_bag:
            if (use_bag)
              for (const auto& b : bag) feats.push_back("ctx=" + b);
            break;
        }
      }
    }
  }
  return out;
}

}  // namespace tagdiag
