#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dafa/attention.hpp"
#include "dafa/conllu.hpp"
#include "dafa/dep_matrix.hpp"
#include "dafa/fusion.hpp"
#include "dafa/json_io.hpp"
#include "dafa/tfidf.hpp"

namespace dafa {

inline constexpr const char* kClsToken = "<CLS>";
inline constexpr const char* kSepToken = "<SEP>";
inline constexpr const char* kUnkToken = "<UNK>";

/// Sequence layout [CLS] A [SEP] B [SEP]: d_seq = n + m + 3.
PairLayout build_layout(const DepSentence& a, const DepSentence& b);

/// Labels of every sequence position for `build_layout`.
std::vector<std::string> sequence_tokens(const DepSentence& a, const DepSentence& b);

/// Seeded toy embeddings standing in for a pre-trained encoder's input layer.
class EmbeddingTable {
 public:
  /// Forms are lowercased and deduplicated; the special tokens are always present.
  /// Rows are U[-0.1, 0.1].
  EmbeddingTable(const std::vector<std::string>& vocab, Eigen::Index d_model, std::uint64_t seed);

  Eigen::Index d_model() const { return table_.cols(); }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return rows_.size(); }
  const Eigen::MatrixXd& table() const { return table_; }

  /// Row index for `form`, falling back to <UNK>.
  std::size_t row(const std::string& form) const;
  Eigen::VectorXd lookup(const std::string& form) const;
  /// Stacks one embedding per label.
  Eigen::MatrixXd embed(const std::vector<std::string>& labels) const;

 private:
  std::map<std::string, std::size_t> rows_;
  Eigen::MatrixXd table_;
  std::uint64_t seed_;
};

EmbeddingTable init_embeddings(const std::vector<std::string>& vocab, Eigen::Index d_model, std::uint64_t seed);

struct LayerConfig {
  DepMatrixConfig dep;
  AttnConfig attn;
  Eigen::Index d_hid = 8;
};

struct LayerOutput {
  std::string id;
  std::vector<std::string> tokens;
  PairLayout layout;
  PairMatrix base;          // M
  PairMatrix subgraph;      // S
  PairMatrix final_matrix;  // M_F
  Eigen::MatrixXd calibration;
  std::vector<CalibratedSignals> heads;
  std::vector<FusionOutput> head_fusion;
  Eigen::MatrixXd fused;  // mean of per-head L, d_seq x d_v
};

/// One DAFA layer over a pair: calibration from the dependency matrix, both
/// attention paths per head, adaptive fusion per head, mean over heads.
LayerOutput dafa_layer(const SentencePair& pair, const TfIdfModel& tfidf, const EmbeddingTable& embeddings,
                       const AttnParams& attn_params, const FusionParams& fusion_params, const LayerConfig& cfg);

/// Fusion parameters for a sequence length, seeded independently of other lengths.
FusionParams fusion_params_for(Eigen::Index d_seq, const LayerConfig& cfg, std::uint64_t seed);

/// Lowercased forms of every sentence in `pairs`.
std::vector<std::string> pair_vocabulary(const std::vector<SentencePair>& pairs);

nlohmann::json layer_output_to_json(const LayerOutput& out);

struct DemoFiles {
  std::filesystem::path json;
  std::vector<std::filesystem::path> sem_csv;  // per head
  std::vector<std::filesystem::path> dep_csv;  // per head
};

/// Runs dafa_layer on every pair and writes `<k>_<id>.json` plus per-head
/// `<k>_<id>.sem.h<h>.csv` / `.dep.h<h>.csv` heatmaps into `out_dir`.
std::vector<DemoFiles> run_demo(const std::vector<SentencePair>& pairs, const TfIdfModel& tfidf,
                                const LayerConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace dafa
