#include <gtest/gtest.h>

#include <random>

#include "support/synthetic.hpp"
#include "tagdiag/attributes.hpp"

using namespace tagdiag;

namespace {

Corpus bio(const std::string& text) { return parse_conll(text, ConllConfig{label_scheme::bio, 0, -1}); }

// Ten spans; Washington alone three times (LOC, LOC, PER).
const char* kTrain =
    "Washington B-LOC\nis O\nbig O\n\n"
    "Washington B-LOC\nagain O\n\n"
    "George B-PER\nWashington I-PER\n\n"
    "Washington B-PER\nspoke O\n\n"
    "Paris B-LOC\nand O\nRome B-LOC\n\n"
    "New B-LOC\nYork I-LOC\n\n"
    "York B-LOC\nYork B-LOC\nYork O\n\n"
    "IBM B-ORG\n\n";

}  // namespace

TEST(TrainingStats, CountsSpansAndTokens) {
  auto stats = build_training_stats(bio(kTrain));
  EXPECT_EQ(stats.span_count.at("Washington"), 3u);
  EXPECT_EQ(stats.span_label_count.at("Washington").at("LOC"), 2u);
  EXPECT_EQ(stats.total_spans, 10u);
  EXPECT_EQ(stats.token_count.at("Washington"), 4u);
  EXPECT_EQ(stats.total_tokens, 18u);
  EXPECT_TRUE(stats.in_vocabulary("spoke"));
  EXPECT_FALSE(stats.in_vocabulary("Berlin"));
}

TEST(TrainingStats, EmptyCorpusIsAnError) {
  Corpus empty;
  EXPECT_THROW(build_training_stats(empty), error);
}

TEST(Consistency, FractionOfOccurrencesWithLabel) {
  auto stats = build_training_stats(bio(kTrain));
  EXPECT_DOUBLE_EQ(consistency("Washington", "LOC", stats), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(consistency("Washington", "PER", stats), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(consistency("Washington", "ORG", stats), 0.0);
  EXPECT_DOUBLE_EQ(consistency("Berlin", "LOC", stats), 0.0);
  EXPECT_DOUBLE_EQ(consistency("George Washington", "PER", stats), 1.0);
}

TEST(Consistency, TokenLevelUsesProjectedLabel) {
  auto stats = build_training_stats(bio(kTrain));
  // York: inside LOC spans three times, outside once.
  EXPECT_DOUBLE_EQ(token_consistency("York", "LOC", stats), 0.75);
  EXPECT_DOUBLE_EQ(token_consistency("York", "O", stats), 0.25);
  EXPECT_DOUBLE_EQ(token_consistency("Washington", "PER", stats), 0.5);
}

TEST(Frequency, RelativeToTotal) {
  auto stats = build_training_stats(bio("a B-PER\n\nb B-PER\n\nc B-LOC\nd B-LOC\n\ne B-LOC\nf B-LOC\ng B-LOC\nh B-LOC\ni B-LOC\nj B-LOC\n"));
  EXPECT_EQ(stats.total_spans, 10u);
  EXPECT_DOUBLE_EQ(frequency("a", stats, unit_level::span), 0.1);
  EXPECT_DOUBLE_EQ(frequency("zz", stats, unit_level::span), 0.0);
  EXPECT_EQ(raw_count("a", stats, unit_level::token), 1u);
}

TEST(Frequency, CaseFolding) {
  auto stats = build_training_stats(bio("Paris B-LOC\n\nPARIS B-LOC\n"), true);
  EXPECT_EQ(raw_count("paris", stats, unit_level::span), 2u);
  auto plain = build_training_stats(bio("Paris B-LOC\n\nPARIS B-LOC\n"));
  EXPECT_EQ(raw_count("Paris", plain, unit_level::span), 1u);
}

TEST(SpanAttributes, WorkedExample) {
  auto stats = build_training_stats(bio(kTrain));
  auto test = bio("Mr O\nWashington B-PER\nvisited O\nNew B-LOC\nYork I-LOC\n");
  const auto& sent = test.documents[0].sentences[0];
  auto spans = gold_spans(sent, label_scheme::bio);
  ASSERT_EQ(spans.size(), 2u);

  auto v = span_attributes(spans[1], sent, stats);
  EXPECT_DOUBLE_EQ(v.span_length, 2);
  EXPECT_DOUBLE_EQ(v.sentence_length, 5);
  EXPECT_DOUBLE_EQ(*v.entity_density, 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(v.oov_density, 2.0 / 5.0);  // Mr, visited
  EXPECT_DOUBLE_EQ(v.span_consistency, 1.0);
  EXPECT_DOUBLE_EQ(v.span_frequency, 1.0 / 10.0);
  EXPECT_DOUBLE_EQ(v.span_frequency_raw, 1.0);

  auto w = span_attributes(spans[0], sent, stats);
  EXPECT_DOUBLE_EQ(w.span_consistency, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(w.get(attribute::span_length), 1);
  EXPECT_THROW(w.get(attribute::token_frequency), error);

  auto t = token_attributes(sent.tokens[4], sent, stats);
  EXPECT_DOUBLE_EQ(t.token_consistency, 0.75);
  EXPECT_DOUBLE_EQ(t.token_frequency, 4.0 / 18.0);
}

TEST(SpanAttributes, OutOfBoundsSpan) {
  auto stats = build_training_stats(bio(kTrain));
  auto test = bio("a O\nb O\n");
  Span s{0, 0, 1, 5, "LOC", "x"};
  EXPECT_THROW(span_attributes(s, test.documents[0].sentences[0], stats), error);
}

TEST(SpanAttributes, CwsHasNoDensity) {
  auto chars = parse_conll("a B\nb E\nc S\n", ConllConfig{label_scheme::bmes, 0, -1});
  auto stats = build_training_stats(chars);
  const auto& sent = chars.documents[0].sentences[0];
  auto v = span_attributes(gold_spans(sent, label_scheme::bmes)[0], sent, stats);
  EXPECT_FALSE(v.entity_density.has_value());
  EXPECT_THROW(v.get(attribute::entity_density), error);
  for (auto a : attributes_for(label_scheme::bmes)) EXPECT_NE(a, attribute::entity_density);
  EXPECT_EQ(attribute_name(attribute::span_length, true), "wLen");
  EXPECT_EQ(parse_attribute("wCon"), attribute::span_consistency);
  EXPECT_EQ(parse_attribute("eCon"), attribute::span_consistency);
}

// Counts recomputed by scanning the training corpus once per query.
TEST(TrainingStats, AgreesWithDirectSummation) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto train = testkit::random_corpus(rng, {5, 6, 8, 3, 6, label_scheme::bio, true});
    auto stats = build_training_stats(train);
    auto test = testkit::random_corpus(rng, {2, 4, 8, 3, 9, label_scheme::bio, true});

    std::size_t total_spans = 0;
    train.for_each_sentence([&](const Sentence& s) { total_spans += gold_spans(s, train.scheme).size(); });

    for (const auto& q : gold_spans(test)) {
      std::size_t n = 0, with_label = 0;
      train.for_each_sentence([&](const Sentence& s) {
        for (const auto& g : gold_spans(s, train.scheme))
          if (g.surface == q.surface) {
            ++n;
            if (g.label == q.label) ++with_label;
          }
      });
      const double con = n ? static_cast<double>(with_label) / n : 0.0;
      ASSERT_DOUBLE_EQ(consistency(q.surface, q.label, stats), con);
      ASSERT_DOUBLE_EQ(frequency(q.surface, stats, unit_level::span),
                       static_cast<double>(n) / static_cast<double>(total_spans));

      const auto& sent = test.documents[q.doc_index].sentences[q.sent_index];
      auto v = span_attributes(q, sent, stats);
      for (double x : {v.span_consistency, v.span_frequency, *v.entity_density, v.oov_density}) {
        ASSERT_GE(x, 0.0);
        ASSERT_LE(x, 1.0);
      }
      ASSERT_GE(v.span_length, 1.0);
      ASSERT_LE(v.span_length, v.sentence_length);
    }
  }
}

TEST(TrainingStats, JsonRoundTrip) {
  auto stats = build_training_stats(bio(kTrain), true);
  auto back = stats_from_json(stats_to_json(stats));
  EXPECT_EQ(back.span_label_count, stats.span_label_count);
  EXPECT_EQ(back.token_label_count, stats.token_label_count);
  EXPECT_EQ(back.total_tokens, stats.total_tokens);
  EXPECT_EQ(back.case_fold, true);
  EXPECT_EQ(stats_to_json(back), stats_to_json(stats));
}
