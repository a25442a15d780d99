#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dafa/random.hpp"

namespace dafa {

struct AttnConfig {
  Eigen::Index d_model = 16;
  Eigen::Index heads = 2;
  Eigen::Index d_k = 8;
  Eigen::Index d_v = 8;

  void validate() const;
};

struct HeadParams {
  Eigen::MatrixXd w_q;  // d_model x d_k
  Eigen::MatrixXd w_k;  // d_model x d_k
  Eigen::MatrixXd w_v;  // d_model x d_v
};

struct AttnParams {
  std::vector<HeadParams> heads;
  Eigen::MatrixXd w_o;  // (heads * d_v) x d_model

  static AttnParams random(const AttnConfig& cfg, Rng& rng);
  /// Throws std::invalid_argument if any shape disagrees with `cfg`.
  void validate(const AttnConfig& cfg) const;
};

/// Row-stochastic weights (d_seq x d_seq) and the pooled values (d_seq x d_v).
struct AttentionResult {
  Eigen::MatrixXd weights;
  Eigen::MatrixXd output;
};

/// Per-row softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// softmax(Q K^T / sqrt(d_k)) V.
AttentionResult sem_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v);

/// softmax((Q K^T (.) C) / sqrt(d_k)) V, with `c` the d_seq x d_seq calibration.
AttentionResult dep_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v,
                              const Eigen::MatrixXd& c);

/// Positions-major signals of one head: rows index sequence positions.
struct CalibratedSignals {
  Eigen::MatrixXd sem;
  Eigen::MatrixXd dep;
  Eigen::MatrixXd sem_weights;
  Eigen::MatrixXd dep_weights;
};

/// Projects `x` (d_seq x d_model) per head and evaluates both attention paths
/// with the same calibration `c` for every head.
std::vector<CalibratedSignals> multi_head_dafa(const Eigen::MatrixXd& x, const AttnParams& params,
                                               const Eigen::MatrixXd& c);

/// Concatenates per-head outputs (each d_seq x d_v) and applies w_o.
Eigen::MatrixXd merge_heads(const std::vector<Eigen::MatrixXd>& per_head, const AttnParams& params);

}  // namespace dafa
