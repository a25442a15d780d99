#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "dafa/json_io.hpp"
#include "dafa/pipeline.hpp"
#include "oracles.hpp"

namespace dafa {
namespace {

namespace fs = std::filesystem;

DepSentence sent(std::vector<Token> toks) { return DepSentence(std::move(toks)); }

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("dafa_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

LayerConfig small_config() {
  LayerConfig cfg;
  cfg.attn = AttnConfig{6, 2, 4, 3};
  cfg.d_hid = 3;
  return cfg;
}

TEST(Layout, Arithmetic) {
  const auto a = sent({{1, "x", 0, "root"}, {2, "y", 1, "dep"}});
  const auto b = sent({{1, "p", 0, "root"}, {2, "q", 1, "dep"}, {3, "r", 1, "dep"}});
  const auto l = build_layout(a, b);
  EXPECT_EQ(l.d_seq, 8u);
  EXPECT_EQ(l.a.begin, 1u);
  EXPECT_EQ(l.a.end(), 3u);
  EXPECT_EQ(l.b.begin, 4u);
  EXPECT_EQ(l.b.end(), 7u);
  EXPECT_NO_THROW(l.validate());
  const auto one = sent({{1, "x", 0, "root"}});
  EXPECT_EQ(build_layout(one, one).d_seq, 5u);
  EXPECT_EQ(sequence_tokens(a, b), (std::vector<std::string>{"<CLS>", "x", "y", "<SEP>", "p", "q", "r", "<SEP>"}));
}

TEST(Embeddings, SeededAndUnk) {
  const std::vector<std::string> vocab{"b", "A", "a"};
  const auto t1 = init_embeddings(vocab, 5, 9);
  const auto t2 = init_embeddings(vocab, 5, 9);
  const auto t3 = init_embeddings(vocab, 5, 10);
  EXPECT_TRUE(t1.table() == t2.table());
  EXPECT_FALSE(t1.table() == t3.table());
  EXPECT_EQ(t1.size(), 5u);  // <CLS> <SEP> <UNK> a b
  EXPECT_LE(t1.table().cwiseAbs().maxCoeff(), 0.1);
  EXPECT_EQ(t1.lookup("never-seen"), t1.lookup(kUnkToken));
  EXPECT_EQ(t1.lookup("A"), t1.lookup("a"));
  EXPECT_NE(t1.row(kClsToken), t1.row(kSepToken));
}

TEST(Layer, NoEvidenceMeansDepEqualsSem) {
  const auto a = sent({{1, "dogs", 2, "nsubj"}, {2, "bark", 0, "root"}});
  const auto b = sent({{1, "birds", 2, "nsubj"}, {2, "sing", 0, "root"}, {3, "loudly", 2, "advmod"}});
  const SentencePair pair{"disjoint", a, b};
  const auto cfg = small_config();
  const auto tfidf = TfIdfModel::fit({a, b});
  const EmbeddingTable emb(pair_vocabulary({pair}), cfg.attn.d_model, 1);
  Rng rng(2);
  const auto attn = AttnParams::random(cfg.attn, rng);
  const auto fp = fusion_params_for(8, cfg, 3);
  const auto out = dafa_layer(pair, tfidf, emb, attn, fp, cfg);
  EXPECT_TRUE(out.final_matrix.isZero(0));
  EXPECT_TRUE(out.calibration.isOnes(0));
  for (const auto& h : out.heads) {
    EXPECT_TRUE(h.dep == h.sem);
    EXPECT_TRUE(h.dep_weights == h.sem_weights);
  }
}

TEST(Layer, AlignedDiagonalGainsMass) {
  // Chain with distinct words: the only cross-block evidence is the aligned diagonal.
  const auto s = sent({{1, "alpha", 2, "amod"}, {2, "beta", 3, "nsubj"}, {3, "gamma", 0, "root"}});
  const SentencePair pair{"self", s, s};
  auto cfg = small_config();
  cfg.dep.theta = 1.0;
  const auto tfidf = TfIdfModel::fit({s});
  const auto w = tfidf.weights(s);
  EXPECT_EQ(w[0], w[1]);
  EXPECT_EQ(w[1], w[2]);

  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const EmbeddingTable emb(pair_vocabulary({pair}), cfg.attn.d_model, seed);
    Rng rng(seed + 100);
    const auto attn = AttnParams::random(cfg.attn, rng);
    const auto out = dafa_layer(pair, tfidf, emb, attn, fusion_params_for(9, cfg, seed), cfg);
    const auto& lay = out.layout;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto p = static_cast<Eigen::Index>(lay.a.begin + i), q = static_cast<Eigen::Index>(lay.b.begin + i);
      EXPECT_GT(out.calibration(p, q), 1.0);
      for (std::size_t j = 0; j < 3; ++j)
        if (j != i) EXPECT_EQ(out.calibration(p, static_cast<Eigen::Index>(lay.b.begin + j)), 1.0);
      for (std::size_t h = 0; h < attn.heads.size(); ++h) {
        const auto& hp = attn.heads[h];
        const Eigen::MatrixXd x = emb.embed(out.tokens);
        const Eigen::MatrixXd z = (x * hp.w_q) * (x * hp.w_k).transpose();
        if (z(p, q) > 0) {
          EXPECT_GT(out.heads[h].dep_weights(p, q), out.heads[h].sem_weights(p, q));
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Layer, FusedIsHeadMeanAndDeterministic) {
  const auto pairs = parse_pairs_jsonl(read_file(std::string(DAFA_TEST_DATA_DIR) + "/pairs.jsonl"));
  ASSERT_GE(pairs.size(), 2u);
  const auto cfg = small_config();
  std::vector<DepSentence> corpus;
  for (const auto& p : pairs) {
    corpus.push_back(p.a);
    corpus.push_back(p.b);
  }
  const auto tfidf = TfIdfModel::fit(corpus);
  const EmbeddingTable emb(pair_vocabulary(pairs), cfg.attn.d_model, 42);
  Rng rng(42);
  const auto attn = AttnParams::random(cfg.attn, rng);
  const auto& pair = pairs[1];
  const auto d_seq = static_cast<Eigen::Index>(pair.a.size() + pair.b.size() + 3);
  const auto fp = fusion_params_for(d_seq, cfg, 42);
  const auto out = dafa_layer(pair, tfidf, emb, attn, fp, cfg);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(d_seq, cfg.attn.d_v);
  for (const auto& h : out.heads) mean += fuse(h.sem, h.dep, fp).l;
  mean /= 2.0;
  EXPECT_LT((out.fused - mean).cwiseAbs().maxCoeff(), 1e-15);

  const auto again = dafa_layer(pair, tfidf, emb, attn, fp, cfg);
  EXPECT_EQ(layer_output_to_json(out).dump(), layer_output_to_json(again).dump());
  EXPECT_THROW(dafa_layer(pair, tfidf, emb, attn, fusion_params_for(d_seq + 1, cfg, 42), cfg), std::invalid_argument);
}

TEST(Layer, PositionPermutationCommutesWithHeadMean) {
  // Permuting positions of X and C together permutes every head's signals,
  // so the head-mean of any row-wise statistic permutes with them.
  Rng rng(21);
  const AttnConfig acfg{4, 3, 3, 2};
  const auto attn = AttnParams::random(acfg, rng);
  Eigen::MatrixXd x(5, 4);
  fill_uniform(x, 1.0, rng);
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(5, 5);
  c(1, 3) = c(3, 1) = 2.5;
  const std::vector<int> perm{3, 0, 4, 1, 2};
  Eigen::MatrixXd xp(5, 4), cp(5, 5);
  for (int i = 0; i < 5; ++i) {
    xp.row(i) = x.row(perm[i]);
    for (int j = 0; j < 5; ++j) cp(i, j) = c(perm[i], perm[j]);
  }
  const auto h1 = multi_head_dafa(x, attn, c);
  const auto h2 = multi_head_dafa(xp, attn, cp);
  Eigen::MatrixXd m1 = Eigen::MatrixXd::Zero(5, 2), m2 = m1;
  for (std::size_t h = 0; h < 3; ++h) {
    m1 += h1[h].dep;
    m2 += h2[h].dep;
  }
  for (int i = 0; i < 5; ++i) EXPECT_LT((m2.row(i) - m1.row(perm[i])).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(JsonIo, PairRecords) {
  const auto pairs = parse_pairs_jsonl(read_file(std::string(DAFA_TEST_DATA_DIR) + "/apple_pair.jsonl"));
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].id, "apple");
  EXPECT_EQ(pairs[0].a.size(), 4u);
  const auto back = parse_pair_record(pair_to_json_line(pairs[0]));
  EXPECT_EQ(back.a, pairs[0].a);
  EXPECT_EQ(back.b, pairs[0].b);

  try {
    parse_pairs_jsonl(pair_to_json_line(pairs[0]) + "\n\n{\"id\": \"bad\", \"a\": \"1\\tx\\t_\\t_\\t_\\t_\\t1\\troot\\t_\\t_\\n\", \"b\": \"\"}\n");
    FAIL();
  } catch (const RecordError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.id(), "bad");
  }
  EXPECT_THROW(parse_pair_record("{not json"), RecordError);
  EXPECT_THROW(parse_pair_record("{\"a\": \"\", \"b\": \"\"}"), RecordError);
}

TEST(JsonIo, FusionParamsRoundTrip) {
  Rng rng(30);
  const auto p = FusionParams::random(3, 2, 4, rng);
  const auto back = fusion_params_from_json(nlohmann::json::parse(fusion_params_to_json(p).dump()));
  bool equal = true;
  std::vector<std::vector<double>> a, b;
  p.for_each_tensor([&](std::string_view, std::span<const double> d) { a.emplace_back(d.begin(), d.end()); });
  back.for_each_tensor([&](std::string_view, std::span<const double> d) { b.emplace_back(d.begin(), d.end()); });
  equal = a == b;
  EXPECT_TRUE(equal);
  auto j = fusion_params_to_json(p);
  j.erase("w_gate");
  EXPECT_THROW(fusion_params_from_json(j), std::invalid_argument);
}

TEST(JsonIo, HeatmapCsvRoundTrip) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + trial % 6;
    Eigen::MatrixXd m(n, n);
    fill_uniform(m, 1.0, rng);
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < n; ++i) labels.push_back(i % 2 ? "tok,\"" + std::to_string(i) + "\"" : "w" + std::to_string(i));
    const auto h = heatmap_from_csv(heatmap_to_csv(labels, m));
    EXPECT_EQ(h.labels, labels);
    EXPECT_TRUE(h.values == m);
  }
  EXPECT_THROW(heatmap_from_csv(",a,b\na,1\n"), std::invalid_argument);
}

TEST(Demo, WritesParseableDeterministicFiles) {
  const auto pairs = parse_pairs_jsonl(read_file(std::string(DAFA_TEST_DATA_DIR) + "/pairs.jsonl"));
  const auto cfg = small_config();
  std::vector<DepSentence> corpus;
  for (const auto& p : pairs) corpus.push_back(p.a);
  const auto tfidf = TfIdfModel::fit(corpus);
  const auto d1 = scratch_dir("demo1"), d2 = scratch_dir("demo2");
  const auto f1 = run_demo(pairs, tfidf, cfg, 5, d1);
  const auto f2 = run_demo(pairs, tfidf, cfg, 5, d2);
  ASSERT_EQ(f1.size(), pairs.size());
  for (std::size_t k = 0; k < f1.size(); ++k) {
    EXPECT_EQ(read_file(f1[k].json.string()), read_file(f2[k].json.string()));
    const auto j = nlohmann::json::parse(read_file(f1[k].json.string()));
    EXPECT_EQ(j["id"], pairs[k].id);
    ASSERT_EQ(f1[k].sem_csv.size(), 2u);
    for (std::size_t h = 0; h < 2; ++h) {
      EXPECT_EQ(read_file(f1[k].dep_csv[h].string()), read_file(f2[k].dep_csv[h].string()));
      const auto sem = heatmap_from_csv(read_file(f1[k].sem_csv[h].string()));
      EXPECT_TRUE(sem.values == matrix_from_json(j["heads"][h]["sem_weights"]));
    }
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

}  // namespace
}  // namespace dafa
