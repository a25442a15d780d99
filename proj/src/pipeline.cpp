#include "dafa/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace dafa {

PairLayout build_layout(const DepSentence& a, const DepSentence& b) {
  PairLayout layout;
  layout.d_seq = a.size() + b.size() + 3;
  layout.a = Span{1, a.size()};
  layout.b = Span{a.size() + 2, b.size()};
  return layout;
}

std::vector<std::string> sequence_tokens(const DepSentence& a, const DepSentence& b) {
  std::vector<std::string> out;
  out.reserve(a.size() + b.size() + 3);
  out.emplace_back(kClsToken);
  for (const auto& t : a.tokens()) out.push_back(t.form);
  out.emplace_back(kSepToken);
  for (const auto& t : b.tokens()) out.push_back(t.form);
  out.emplace_back(kSepToken);
  return out;
}

EmbeddingTable::EmbeddingTable(const std::vector<std::string>& vocab, Eigen::Index d_model, std::uint64_t seed)
    : seed_(seed) {
  if (d_model < 1) throw std::invalid_argument("d_model must be >= 1");
  std::vector<std::string> forms = {kClsToken, kSepToken, kUnkToken};
  std::set<std::string> sorted;
  for (const auto& v : vocab) sorted.insert(lowercase(v));
  for (const char* special : {kClsToken, kSepToken, kUnkToken}) sorted.erase(special);
  forms.insert(forms.end(), sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < forms.size(); ++k) rows_.emplace(forms[k], k);
  Rng rng(seed);
  table_.resize(static_cast<Eigen::Index>(forms.size()), d_model);
  fill_uniform(table_, 0.1, rng);
}

std::size_t EmbeddingTable::row(const std::string& form) const {
  auto it = rows_.find(form);
  if (it == rows_.end()) it = rows_.find(lowercase(form));
  return it == rows_.end() ? rows_.at(kUnkToken) : it->second;
}

Eigen::VectorXd EmbeddingTable::lookup(const std::string& form) const {
  return table_.row(static_cast<Eigen::Index>(row(form))).transpose();
}

Eigen::MatrixXd EmbeddingTable::embed(const std::vector<std::string>& labels) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(labels.size()), d_model());
  for (std::size_t i = 0; i < labels.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = table_.row(static_cast<Eigen::Index>(row(labels[i])));
  return x;
}

EmbeddingTable init_embeddings(const std::vector<std::string>& vocab, Eigen::Index d_model, std::uint64_t seed) {
  return EmbeddingTable(vocab, d_model, seed);
}

LayerOutput dafa_layer(const SentencePair& pair, const TfIdfModel& tfidf, const EmbeddingTable& embeddings,
                       const AttnParams& attn_params, const FusionParams& fusion_params, const LayerConfig& cfg) {
  cfg.dep.validate();
  attn_params.validate(cfg.attn);
  if (embeddings.d_model() != cfg.attn.d_model)
    throw std::invalid_argument("embedding width does not match attention d_model");

  LayerOutput out;
  out.id = pair.id;
  out.tokens = sequence_tokens(pair.a, pair.b);
  out.layout = build_layout(pair.a, pair.b);
  const auto d_seq = static_cast<Eigen::Index>(out.layout.d_seq);
  if (fusion_params.d_seq != d_seq || fusion_params.d_v != cfg.attn.d_v)
    throw std::invalid_argument("fusion params sized for d_seq=" + std::to_string(fusion_params.d_seq) +
                                ", d_v=" + std::to_string(fusion_params.d_v) + " but pair needs d_seq=" +
                                std::to_string(d_seq) + ", d_v=" + std::to_string(cfg.attn.d_v));

  out.base = base_matrix(pair.a, pair.b, cfg.dep);
  out.subgraph = subgraph_matrix(pair.a, pair.b, cfg.dep);
  out.final_matrix = final_matrix(out.base, out.subgraph, tfidf.weights(pair.a), tfidf.weights(pair.b));
  out.calibration = embed_calibration(out.final_matrix, out.layout);

  const Eigen::MatrixXd x = embeddings.embed(out.tokens);
  out.heads = multi_head_dafa(x, attn_params, out.calibration);
  out.fused = Eigen::MatrixXd::Zero(d_seq, cfg.attn.d_v);
  for (const auto& h : out.heads) {
    out.head_fusion.push_back(fuse(h.sem, h.dep, fusion_params));
    out.fused += out.head_fusion.back().l;
  }
  out.fused /= static_cast<double>(out.heads.size());
  return out;
}

FusionParams fusion_params_for(Eigen::Index d_seq, const LayerConfig& cfg, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(d_seq), 0x66757365u};
  Rng rng(seq);
  return FusionParams::random(d_seq, cfg.attn.d_v, cfg.d_hid, rng);
}

std::vector<std::string> pair_vocabulary(const std::vector<SentencePair>& pairs) {
  std::set<std::string> forms;
  for (const auto& p : pairs) {
    for (const auto& t : p.a.tokens()) forms.insert(lowercase(t.form));
    for (const auto& t : p.b.tokens()) forms.insert(lowercase(t.form));
  }
  return {forms.begin(), forms.end()};
}

nlohmann::json layer_output_to_json(const LayerOutput& out) {
  nlohmann::json j;
  j["id"] = out.id;
  j["tokens"] = out.tokens;
  j["d_seq"] = out.layout.d_seq;
  j["a_span"] = {out.layout.a.begin, out.layout.a.end()};
  j["b_span"] = {out.layout.b.begin, out.layout.b.end()};
  j["M"] = matrix_to_json(out.base);
  j["S"] = matrix_to_json(out.subgraph);
  j["MF"] = matrix_to_json(out.final_matrix);
  j["calibration"] = matrix_to_json(out.calibration);
  nlohmann::json heads = nlohmann::json::array();
  for (std::size_t h = 0; h < out.heads.size(); ++h) {
    nlohmann::json hj;
    hj["sem_weights"] = matrix_to_json(out.heads[h].sem_weights);
    hj["dep_weights"] = matrix_to_json(out.heads[h].dep_weights);
    hj["L"] = matrix_to_json(out.head_fusion[h].l);
    hj["g"] = vector_to_json(out.head_fusion[h].g);
    hj["f"] = vector_to_json(out.head_fusion[h].f);
    heads.push_back(std::move(hj));
  }
  j["heads"] = std::move(heads);
  j["fused"] = matrix_to_json(out.fused);
  return j;
}

namespace {

std::string file_stem(std::size_t ordinal, const std::string& id) {
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%04zu_", ordinal);
  std::string safe = id;
  for (char& c : safe) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return prefix + safe;
}

}  // namespace

std::vector<DemoFiles> run_demo(const std::vector<SentencePair>& pairs, const TfIdfModel& tfidf,
                                const LayerConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  const EmbeddingTable embeddings(pair_vocabulary(pairs), cfg.attn.d_model, seed);
  std::seed_seq attn_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6174746eu};
  Rng attn_rng(attn_seq);
  const AttnParams attn = AttnParams::random(cfg.attn, attn_rng);

  std::vector<DemoFiles> files;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& pair = pairs[k];
    const auto d_seq = static_cast<Eigen::Index>(pair.a.size() + pair.b.size() + 3);
    const auto out = dafa_layer(pair, tfidf, embeddings, attn, fusion_params_for(d_seq, cfg, seed), cfg);
    const std::string stem = file_stem(k + 1, pair.id);
    DemoFiles f;
    f.json = out_dir / (stem + ".json");
    write_file(f.json.string(), layer_output_to_json(out).dump(1) + "\n");
    for (std::size_t h = 0; h < out.heads.size(); ++h) {
      const std::string tag = ".h" + std::to_string(h) + ".csv";
      f.sem_csv.push_back(out_dir / (stem + ".sem" + tag));
      f.dep_csv.push_back(out_dir / (stem + ".dep" + tag));
      write_file(f.sem_csv.back().string(), heatmap_to_csv(out.tokens, out.heads[h].sem_weights));
      write_file(f.dep_csv.back().string(), heatmap_to_csv(out.tokens, out.heads[h].dep_weights));
    }
    files.push_back(std::move(f));
  }
  return files;
}

}  // namespace dafa
