#pragma once

// Column-format corpora (CoNLL style), label schemes, span codecs and
// document windowing.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "tagdiag/error.hpp"

namespace tagdiag {

enum class label_scheme { bio, bioes, bmes, pos };

inline const char* scheme_name(label_scheme scheme) {
  switch (scheme) {
    case label_scheme::bio: return "BIO";
    case label_scheme::bioes: return "BIOES";
    case label_scheme::bmes: return "BMES";
    case label_scheme::pos: return "POS";
  }
  return "?";
}

inline label_scheme parse_scheme(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bio" || lower == "iob2") return label_scheme::bio;
  if (lower == "bioes" || lower == "iobes") return label_scheme::bioes;
  if (lower == "bmes" || lower == "bmes-cws" || lower == "cws") return label_scheme::bmes;
  if (lower == "pos" || lower == "plain-pos" || lower == "plain") return label_scheme::pos;
  throw_input("unknown label scheme '" + std::string(name) + "'");
}

// Spans under BMES are words; their category is always this string.
inline constexpr std::string_view cws_word_label = "WORD";
inline constexpr std::string_view outside_label = "O";

struct Token {
  std::string surface;
  std::string gold_label;
  std::size_t position = 0;
  // Every whitespace-separated field of the source line, kept for writing.
  std::vector<std::string> fields;
};

struct Sentence {
  std::vector<Token> tokens;
  std::size_t doc_index = 0;
  std::size_t sent_index = 0;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.gold_label);
    return out;
  }
};

struct Document {
  std::vector<Sentence> sentences;
  // Raw "-DOCSTART-" line that opened this document, if any.
  std::optional<std::string> header;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }
};

struct Corpus {
  std::vector<Document> documents;
  label_scheme scheme = label_scheme::bio;
  // False when the source had no document markers and the whole file was
  // treated as one document.
  bool explicit_documents = false;

  std::size_t sentence_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.sentences.size();
    return n;
  }
  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& d : documents) n += d.token_count();
    return n;
  }

  template <typename F>
  void for_each_sentence(F&& f) const {
    for (const auto& d : documents)
      for (const auto& s : d.sentences) f(s);
  }
};

struct Span {
  std::size_t doc_index = 0;
  std::size_t sent_index = 0;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // inclusive
  std::string label;
  std::string surface;

  std::size_t length() const { return end - start + 1; }

  auto key() const { return std::tie(doc_index, sent_index, start, end, label); }
  friend bool operator==(const Span& a, const Span& b) { return a.key() == b.key(); }
  friend bool operator<(const Span& a, const Span& b) { return a.key() < b.key(); }
};

// ---------------------------------------------------------------------------
// Label grammar

namespace detail {

// Splits "B-PER" into ('B', "PER"). Labels without a prefix return prefix 0.
inline std::pair<char, std::string_view> split_tag(std::string_view label) {
  if (label.size() >= 2 && label[1] == '-') return {label[0], label.substr(2)};
  if (label.size() == 1) return {label[0], {}};
  return {0, label};
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

// Byte length of the UTF-8 sequence starting with `lead`.
inline std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace detail

inline bool valid_label(std::string_view label, label_scheme scheme) {
  if (label.empty()) return false;
  if (label == outside_label) return scheme != label_scheme::bmes;
  auto [prefix, type] = detail::split_tag(label);
  switch (scheme) {
    case label_scheme::bio:
      return (prefix == 'B' || prefix == 'I') && label.size() > 2 && !type.empty();
    case label_scheme::bioes:
      return (prefix == 'B' || prefix == 'I' || prefix == 'E' || prefix == 'S') &&
             label.size() > 2 && !type.empty();
    case label_scheme::bmes:
      return label == "B" || label == "M" || label == "E" || label == "S";
    case label_scheme::pos:
      return label.find_first_of(" \t") == std::string_view::npos;
  }
  return false;
}

// Category a token carries inside its span: "PER" for "B-PER", "O" outside.
// BMES and POS tags are their own category.
inline std::string label_category(std::string_view label, label_scheme scheme) {
  if (scheme == label_scheme::bmes || scheme == label_scheme::pos) return std::string(label);
  if (label == outside_label) return std::string(outside_label);
  return std::string(detail::split_tag(label).second);
}

// True when the sequence obeys the scheme's transition grammar.
inline bool well_formed(const std::vector<std::string>& labels, label_scheme scheme) {
  for (const auto& l : labels)
    if (!valid_label(l, scheme)) return false;
  if (scheme == label_scheme::pos) return true;

  // `open` is the type of a span that must be continued by the next label.
  std::optional<std::string_view> open;
  std::optional<std::string_view> prev_inside;  // BIO: type of previous B/I
  for (const auto& l : labels) {
    auto [prefix, type] = detail::split_tag(l);
    if (l == outside_label) prefix = 'O';
    switch (scheme) {
      case label_scheme::bio:
        if (prefix == 'I' && (!prev_inside || *prev_inside != type)) return false;
        prev_inside = prefix == 'O' ? std::nullopt : std::optional<std::string_view>(type);
        break;
      case label_scheme::bioes:
      case label_scheme::bmes: {
        bool continues = prefix == 'I' || prefix == 'E' || prefix == 'M';
        if (continues != open.has_value()) return false;
        if (continues && *open != type) return false;
        bool keeps_open = prefix == 'B' || prefix == 'I' || prefix == 'M';
        open = keeps_open ? std::optional<std::string_view>(type) : std::nullopt;
        break;
      }
      case label_scheme::pos: break;
    }
  }
  return !open.has_value();
}

// ---------------------------------------------------------------------------
// Span codec

inline std::string join_surface(const Sentence& sentence, std::size_t start, std::size_t end,
                                label_scheme scheme) {
  std::string out;
  for (std::size_t i = start; i <= end && i < sentence.size(); ++i) {
    if (i > start && scheme != label_scheme::bmes) out.push_back(' ');
    out += sentence.tokens[i].surface;
  }
  return out;
}

// Spans as (start, end, label) triples, without corpus coordinates.
struct RawSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;
  friend bool operator==(const RawSpan&, const RawSpan&) = default;
};

enum class decode_mode { lenient, strict };

// Decodes a label sequence into maximal spans. Lenient mode repairs invalid
// transitions (an I-X without an open X span opens one); strict mode throws.
inline std::vector<RawSpan> decode_spans(const std::vector<std::string>& labels,
                                         label_scheme scheme,
                                         decode_mode mode = decode_mode::lenient) {
  if (mode == decode_mode::strict && !well_formed(labels, scheme))
    throw_input("label sequence violates the " + std::string(scheme_name(scheme)) + " grammar");

  std::vector<RawSpan> spans;
  if (scheme == label_scheme::pos) {
    for (std::size_t i = 0; i < labels.size(); ++i) spans.push_back({i, i, labels[i]});
    return spans;
  }

  std::optional<RawSpan> cur;
  auto close = [&] {
    if (cur) spans.push_back(*cur);
    cur.reset();
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string& l = labels[i];
    char prefix;
    std::string type;
    if (scheme == label_scheme::bmes) {
      prefix = l.empty() ? 'S' : l[0];
      type = std::string(cws_word_label);
    } else if (l == outside_label || l.empty()) {
      close();
      continue;
    } else {
      auto [p, t] = detail::split_tag(l);
      prefix = p;
      type = std::string(t);
    }

    const bool same = cur && cur->label == type;
    switch (prefix) {
      case 'B':
        close();
        cur = RawSpan{i, i, type};
        if (scheme == label_scheme::bmes && i + 1 == labels.size()) close();
        break;
      case 'I':
      case 'M':
        if (same) cur->end = i;
        else { close(); cur = RawSpan{i, i, type}; }
        break;
      case 'E':
        if (same) cur->end = i;
        else { close(); cur = RawSpan{i, i, type}; }
        close();
        break;
      case 'S':
        close();
        spans.push_back({i, i, type});
        break;
      default:
        // Unknown prefix; treat as a single-token span of the full label.
        close();
        spans.push_back({i, i, l});
        break;
    }
  }
  close();
  return spans;
}

inline std::vector<Span> sentence_spans(const Sentence& sentence,
                                        const std::vector<std::string>& labels,
                                        label_scheme scheme) {
  std::vector<Span> out;
  for (auto& r : decode_spans(labels, scheme)) {
    out.push_back(Span{sentence.doc_index, sentence.sent_index, r.start, r.end, r.label,
                       join_surface(sentence, r.start, r.end, scheme)});
  }
  return out;
}

inline std::vector<Span> gold_spans(const Sentence& sentence, label_scheme scheme) {
  return sentence_spans(sentence, sentence.labels(), scheme);
}

inline std::vector<Span> gold_spans(const Corpus& corpus) {
  std::vector<Span> out;
  corpus.for_each_sentence([&](const Sentence& s) {
    auto spans = gold_spans(s, corpus.scheme);
    out.insert(out.end(), spans.begin(), spans.end());
  });
  return out;
}

// Encodes non-overlapping spans into labels. BMES requires every position to
// be covered; POS requires single-token spans.
inline std::vector<std::string> encode_labels(std::vector<RawSpan> spans,
                                              std::size_t sentence_length,
                                              label_scheme scheme) {
  std::sort(spans.begin(), spans.end(),
            [](const RawSpan& a, const RawSpan& b) { return a.start < b.start; });
  std::vector<std::string> labels(sentence_length, std::string(outside_label));
  std::vector<bool> covered(sentence_length, false);
  for (const auto& s : spans) {
    if (s.start > s.end || s.end >= sentence_length)
      throw_input("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                  "] is out of bounds for length " + std::to_string(sentence_length));
    if (s.label.empty()) throw_input("span with empty label");
    for (std::size_t i = s.start; i <= s.end; ++i) {
      if (covered[i])
        throw_input("overlapping spans collide at position " + std::to_string(i) + " (span [" +
                    std::to_string(s.start) + "," + std::to_string(s.end) + "] " + s.label + ")");
      covered[i] = true;
    }
    const std::size_t len = s.end - s.start + 1;
    for (std::size_t i = s.start; i <= s.end; ++i) {
      switch (scheme) {
        case label_scheme::bio:
          labels[i] = (i == s.start ? "B-" : "I-") + s.label;
          break;
        case label_scheme::bioes:
          if (len == 1) labels[i] = "S-" + s.label;
          else if (i == s.start) labels[i] = "B-" + s.label;
          else if (i == s.end) labels[i] = "E-" + s.label;
          else labels[i] = "I-" + s.label;
          break;
        case label_scheme::bmes:
          if (len == 1) labels[i] = "S";
          else if (i == s.start) labels[i] = "B";
          else if (i == s.end) labels[i] = "E";
          else labels[i] = "M";
          break;
        case label_scheme::pos:
          if (len != 1) throw_input("POS spans must cover exactly one token");
          labels[i] = s.label;
          break;
      }
    }
  }
  if (scheme == label_scheme::bmes || scheme == label_scheme::pos) {
    for (std::size_t i = 0; i < sentence_length; ++i)
      if (!covered[i])
        throw_input("position " + std::to_string(i) + " is not covered by any span");
  }
  return labels;
}

// ---------------------------------------------------------------------------
// CoNLL column format

struct ConllConfig {
  label_scheme scheme = label_scheme::bio;
  std::size_t token_column = 0;
  // Negative values count from the end; -1 is the last column.
  int label_column = -1;
};

inline constexpr std::string_view docstart_marker = "-DOCSTART-";

inline Corpus parse_conll(std::string_view text, const ConllConfig& config) {
  Corpus corpus;
  corpus.scheme = config.scheme;

  std::vector<Document> docs;
  Document doc;
  Sentence sent;
  bool doc_started = false;  // current `doc` was opened by a marker or has content
  std::optional<std::size_t> expected_columns;

  auto flush_sentence = [&] {
    if (sent.tokens.empty()) return;
    sent.sent_index = doc.sentences.size();
    doc.sentences.push_back(std::move(sent));
    sent = Sentence{};
    doc_started = true;
  };
  auto flush_document = [&] {
    flush_sentence();
    if (doc_started) docs.push_back(std::move(doc));
    doc = Document{};
    doc_started = false;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    const bool last = nl >= text.size();
    pos = nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (detail::is_blank(line)) {
      flush_sentence();
      if (last) break;
      continue;
    }
    auto fields = detail::split_fields(line);
    if (fields.front() == docstart_marker) {
      flush_document();
      corpus.explicit_documents = true;
      doc.header = std::string(line);
      doc_started = true;
      if (last) break;
      continue;
    }

    if (!expected_columns) expected_columns = fields.size();
    if (fields.size() != *expected_columns)
      throw_input("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(*expected_columns) + " columns, found " +
                  std::to_string(fields.size()));
    const long label_idx = config.label_column < 0
                               ? static_cast<long>(fields.size()) + config.label_column
                               : config.label_column;
    if (config.token_column >= fields.size() || label_idx < 0 ||
        static_cast<std::size_t>(label_idx) >= fields.size())
      throw_input("line " + std::to_string(line_no) + ": token or label column missing");

    Token tok;
    tok.surface = std::string(fields[config.token_column]);
    tok.gold_label = std::string(fields[static_cast<std::size_t>(label_idx)]);
    if (!valid_label(tok.gold_label, config.scheme))
      throw_input("line " + std::to_string(line_no) + ": invalid label '" + tok.gold_label +
                  "' under scheme " + scheme_name(config.scheme));
    tok.position = sent.tokens.size();
    tok.fields.reserve(fields.size());
    for (auto f : fields) tok.fields.emplace_back(f);
    sent.tokens.push_back(std::move(tok));
    if (last) break;
  }
  flush_document();

  for (std::size_t d = 0; d < docs.size(); ++d)
    for (auto& s : docs[d].sentences) s.doc_index = d;
  corpus.documents = std::move(docs);
  return corpus;
}

// Writes the canonical column form: fields joined by single spaces, one blank
// line after every sentence, and each document marker followed by a blank line.
inline std::string write_conll(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.documents) {
    if (doc.header) {
      out += *doc.header;
      out += "\n\n";
    }
    for (const auto& s : doc.sentences) {
      for (const auto& t : s.tokens) {
        if (t.fields.empty()) {
          out += t.surface + " " + t.gold_label;
        } else {
          for (std::size_t i = 0; i < t.fields.size(); ++i) {
            if (i) out.push_back(' ');
            out += t.fields[i];
          }
        }
        out.push_back('\n');
      }
      out.push_back('\n');
    }
  }
  return out;
}

// Writes the corpus with one extra final column holding `predicted` labels.
inline std::string write_conll_with_predictions(
    const Corpus& corpus, const std::vector<std::vector<std::vector<std::string>>>& predicted) {
  std::string out;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    const auto& doc = corpus.documents[d];
    if (doc.header) {
      out += *doc.header + "\n\n";
    }
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      const auto& sent = doc.sentences[s];
      for (std::size_t t = 0; t < sent.size(); ++t) {
        const auto& tok = sent.tokens[t];
        if (tok.fields.empty()) {
          out += tok.surface + " " + tok.gold_label;
        } else {
          for (std::size_t i = 0; i < tok.fields.size(); ++i) {
            if (i) out.push_back(' ');
            out += tok.fields[i];
          }
        }
        out += " " + predicted.at(d).at(s).at(t) + "\n";
      }
      out.push_back('\n');
    }
  }
  return out;
}

// Structural equality: same documents, sentences, surfaces and labels.
inline bool same_structure(const Corpus& a, const Corpus& b) {
  if (a.documents.size() != b.documents.size() || a.scheme != b.scheme) return false;
  for (std::size_t d = 0; d < a.documents.size(); ++d) {
    const auto& da = a.documents[d];
    const auto& db = b.documents[d];
    if (da.sentences.size() != db.sentences.size()) return false;
    for (std::size_t s = 0; s < da.sentences.size(); ++s) {
      const auto& sa = da.sentences[s];
      const auto& sb = db.sentences[s];
      if (sa.size() != sb.size() || sa.doc_index != sb.doc_index ||
          sa.sent_index != sb.sent_index)
        return false;
      for (std::size_t t = 0; t < sa.size(); ++t) {
        const auto& ta = sa.tokens[t];
        const auto& tb = sb.tokens[t];
        if (ta.surface != tb.surface || ta.gold_label != tb.gold_label ||
            ta.position != tb.position)
          return false;
      }
    }
  }
  return true;
}

// Splits every token surface into UTF-8 characters for CWS: a segmented
// sentence "ab cde" becomes five tokens labelled B E B M E.
inline Corpus characters_from_words(const Corpus& words) {
  Corpus out;
  out.scheme = label_scheme::bmes;
  out.explicit_documents = words.explicit_documents;
  for (const auto& doc : words.documents) {
    Document nd;
    nd.header = doc.header;
    for (const auto& s : doc.sentences) {
      Sentence ns;
      ns.doc_index = s.doc_index;
      ns.sent_index = s.sent_index;
      for (const auto& w : s.tokens) {
        std::vector<std::string> chars;
        for (std::size_t i = 0; i < w.surface.size();) {
          std::size_t n = detail::utf8_length(static_cast<unsigned char>(w.surface[i]));
          chars.push_back(w.surface.substr(i, n));
          i += n;
        }
        for (std::size_t c = 0; c < chars.size(); ++c) {
          Token t;
          t.surface = chars[c];
          if (chars.size() == 1) t.gold_label = "S";
          else if (c == 0) t.gold_label = "B";
          else if (c + 1 == chars.size()) t.gold_label = "E";
          else t.gold_label = "M";
          t.position = ns.tokens.size();
          t.fields = {t.surface, t.gold_label};
          ns.tokens.push_back(std::move(t));
        }
      }
      nd.sentences.push_back(std::move(ns));
    }
    out.documents.push_back(std::move(nd));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windows

struct SentenceGroup {
  std::size_t doc_index = 0;
  std::size_t first_sentence = 0;
  std::size_t size = 0;
  std::size_t k_requested = 1;

  std::size_t last_sentence() const { return first_sentence + size - 1; }
};

// Consecutive, non-overlapping groups of k sentences; the final group keeps
// the remainder. Groups never cross documents.
inline std::vector<SentenceGroup> window_partition(const Document& document,
                                                   std::size_t doc_index, std::size_t k) {
  if (k == 0) throw_input("window size k must be at least 1");
  std::vector<SentenceGroup> groups;
  const std::size_t n = document.sentences.size();
  for (std::size_t first = 0; first < n; first += k)
    groups.push_back({doc_index, first, std::min(k, n - first), k});
  return groups;
}

inline std::vector<SentenceGroup> window_partition(const Corpus& corpus, std::size_t k) {
  std::vector<SentenceGroup> out;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    auto g = window_partition(corpus.documents[d], d, k);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

}  // namespace tagdiag
