#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "dafa/tfidf.hpp"
#include "oracles.hpp"

namespace dafa {
namespace {

DepSentence flat(const std::vector<std::string>& forms) {
  std::vector<Token> toks;
  for (std::size_t k = 0; k < forms.size(); ++k)
    toks.push_back({k + 1, forms[k], k == 0 ? std::size_t{0} : std::size_t{1}, k == 0 ? "root" : "dep"});
  return DepSentence(std::move(toks));
}

TEST(TfIdf, FitCounts) {
  const auto one = TfIdfModel::fit({flat({"a", "b"})});
  EXPECT_EQ(one.doc_count(), 1u);
  EXPECT_EQ(one.df("a"), 1u);
  EXPECT_EQ(one.df("b"), 1u);

  const auto two = TfIdfModel::fit({flat({"a", "b", "a"}), flat({"A"})});
  EXPECT_EQ(two.doc_count(), 2u);
  EXPECT_EQ(two.df("a"), 2u);
  EXPECT_EQ(two.df("b"), 1u);
  EXPECT_EQ(two.df("zzz"), 0u);
  EXPECT_THROW(TfIdfModel::fit({}), std::invalid_argument);
}

TEST(TfIdf, RandomCorpusMatchesRecount) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> vocab{"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "W1", "w9"};
  std::vector<DepSentence> corpus;
  for (int k = 0; k < 100; ++k) {
    std::vector<std::string> forms;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int t = 0; t < n; ++t) forms.push_back(vocab[rng() % vocab.size()]);
    corpus.push_back(flat(forms));
  }
  const auto model = TfIdfModel::fit(corpus);
  for (const auto& [form, df] : model.df()) {
    std::size_t recount = 0;
    for (const auto& s : corpus) {
      bool hit = false;
      for (const auto& t : s.tokens()) hit = hit || oracle::lower(t.form) == form;
      recount += hit;
    }
    EXPECT_EQ(df, recount) << form;
    EXPECT_GE(df, 1u);
    EXPECT_LE(df, 100u);
  }
}

TEST(TfIdf, WeightFormula) {
  // df = N: idf floor of exactly 1.
  const auto everywhere = TfIdfModel(3, {{"x", 3}, {"y", 1}, {"z", 1}, {"w", 2}});
  const auto w = everywhere.weights(flat({"x", "y", "z", "w"}));
  EXPECT_DOUBLE_EQ(w[0], 0.25);
  // Unseen form, N = 1, one-token sentence: 1 * (ln 2 + 1).
  const auto small = TfIdfModel(1, {});
  EXPECT_NEAR(small.weights(flat({"novel"}))[0], 1.6931471805599454, 1e-15);
}

TEST(TfIdf, RepeatedFormsAndDeterminism) {
  const auto model = TfIdfModel::fit({flat({"a", "b"}), flat({"b"})});
  const auto s = flat({"b", "a", "b"});
  const auto w = model.weights(s);
  EXPECT_NEAR(w[0], 2.0 / 3.0 * (std::log(3.0 / 3.0) + 1.0), 1e-15);
  EXPECT_NEAR(w[1], 1.0 / 3.0 * (std::log(3.0 / 2.0) + 1.0), 1e-15);
  EXPECT_EQ(w[0], w[2]);
  EXPECT_EQ(w, model.weights(s));
}

TEST(TfIdf, WeightsPositiveAndMonotoneInDf) {
  const TfIdfModel model(50, {{"rare", 1}, {"mid", 10}, {"common", 50}});
  for (const auto& f : {"rare", "mid", "common", "unseen"}) {
    const auto w = model.weights(flat({f, "pad"}))[0];
    EXPECT_GT(w, 0.0);
    EXPECT_TRUE(std::isfinite(w));
  }
  const double unseen = model.weights(flat({"unseen", "p"}))[0];
  const double rare = model.weights(flat({"rare", "p"}))[0];
  const double mid = model.weights(flat({"mid", "p"}))[0];
  const double common = model.weights(flat({"common", "p"}))[0];
  EXPECT_GE(unseen, rare);
  EXPECT_GE(rare, mid);
  EXPECT_GE(mid, common);
}

TEST(TfIdf, JsonRoundTrip) {
  const TfIdfModel empty(1, {});
  EXPECT_EQ(empty.serialize(), "{\"df\":{},\"doc_count\":1}");
  EXPECT_EQ(TfIdfModel::deserialize(empty.serialize()), empty);

  const auto fitted = TfIdfModel::fit({flat({"a", "b"}), flat({"b", "c"}), flat({"Quote\"d", "\xc3\xa9t\xc3\xa9"})});
  EXPECT_EQ(TfIdfModel::deserialize(fitted.serialize()), fitted);
}

TEST(TfIdf, DeserializeErrors) {
  EXPECT_THROW(TfIdfModel::deserialize("{\"doc_count\":1,\"df\":{"), std::invalid_argument);
  EXPECT_THROW(TfIdfModel::deserialize("{\"doc_count\":2,\"df\":{\"a\":-1}}"), std::invalid_argument);
  EXPECT_THROW(TfIdfModel::deserialize("{\"doc_count\":-3,\"df\":{}}"), std::invalid_argument);
  EXPECT_THROW(TfIdfModel::deserialize("{\"doc_count\":1,\"df\":{\"a\":2}}"), std::invalid_argument);
  EXPECT_THROW(TfIdfModel::deserialize("[]"), std::invalid_argument);
}

}  // namespace
}  // namespace dafa
