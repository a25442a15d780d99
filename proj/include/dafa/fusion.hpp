#pragma once

#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "dafa/random.hpp"

namespace dafa {

/// Parameters of the adaptive fusion network, shared across positions.
/// Signals are positions-major (d_seq x d_v).
struct FusionParams {
  Eigen::Index d_seq = 0;
  Eigen::Index d_v = 0;
  Eigen::Index d_hid = 0;

  // Semantic-guided attention over Dep.
  Eigen::MatrixXd w_dep_signal;    // W_D: d_seq x d_v
  Eigen::MatrixXd w_sem_query;     // W_s: d_seq x d_v
  Eigen::VectorXd b_sem_query;     // d_seq
  Eigen::VectorXd w_dep_score;     // 2*d_seq
  double b_dep_score = 0.0;

  // Dependency-guided attention over Sem.
  Eigen::MatrixXd w_sem_signal;    // W_S: d_seq x d_v
  Eigen::MatrixXd w_dep_query;     // W_d*: d_seq x d_v
  Eigen::VectorXd b_dep_query;     // d_seq
  Eigen::VectorXd w_sem_score;     // 2*d_seq
  double b_sem_score = 0.0;

  // Gated fusion.
  Eigen::MatrixXd w_dep_hidden;    // d_hid x d_v
  Eigen::VectorXd b_dep_hidden;    // d_hid
  Eigen::MatrixXd w_sem_hidden;    // d_hid x d_v
  Eigen::VectorXd b_sem_hidden;    // d_hid
  Eigen::VectorXd w_gate;          // 2*d_hid

  // Filtration gate.
  Eigen::MatrixXd w_fused_value;   // W_v: d_v x d_hid
  Eigen::VectorXd b_fused_value;   // d_v
  Eigen::MatrixXd w_fused_out;     // W_l: d_v x d_hid
  Eigen::VectorXd b_fused_out;     // d_v
  Eigen::VectorXd w_filter;        // 2*d_v

  static FusionParams zeros(Eigen::Index d_seq, Eigen::Index d_v, Eigen::Index d_hid);
  /// U[-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor, drawn in declaration order.
  static FusionParams random(Eigen::Index d_seq, Eigen::Index d_v, Eigen::Index d_hid, Rng& rng);

  void validate() const;

  /// Visits every tensor as (name, flat storage) in declaration order.
  template <typename Visitor>
  void for_each_tensor(Visitor&& visit);
  template <typename Visitor>
  void for_each_tensor(Visitor&& visit) const;
};

struct GuidedResult {
  Eigen::VectorXd pooled;   // d_v
  Eigen::VectorXd weights;  // d_seq, stochastic
};

struct GateResult {
  Eigen::VectorXd fused;       // v_i, d_hid
  double gate = 0.0;           // g_i
  Eigen::VectorXd dep_hidden;  // d-hat
  Eigen::VectorXd sem_hidden;  // s-hat
};

struct FiltrationResult {
  Eigen::VectorXd out;  // l_i, d_v
  double gate = 0.0;    // f_i
};

struct FusionOutput {
  Eigen::MatrixXd l;           // d_seq x d_v
  Eigen::VectorXd g;           // d_seq
  Eigen::VectorXd f;           // d_seq
  Eigen::MatrixXd dep_star;    // rows d*_i
  Eigen::MatrixXd sem_star;    // rows s*_i
  Eigen::MatrixXd fused;       // rows v_i, d_seq x d_hid
  Eigen::MatrixXd dep_hidden;  // rows d-hat_i
  Eigen::MatrixXd sem_hidden;  // rows s-hat_i
  Eigen::MatrixXd dep_pool_weights;  // row i: softmax used to pool Dep for position i
  Eigen::MatrixXd sem_pool_weights;  // row i: softmax used to pool Sem for position i
};

double sigmoid(double x);

GuidedResult semantic_guided(const Eigen::MatrixXd& dep, const Eigen::VectorXd& sem_i, const FusionParams& p);
GuidedResult dependency_guided(const Eigen::MatrixXd& sem, const Eigen::VectorXd& dep_star_i,
                               const FusionParams& p);
GateResult gated_fuse(const Eigen::VectorXd& dep_star_i, const Eigen::VectorXd& sem_star_i, const FusionParams& p);
FiltrationResult filtration(const Eigen::VectorXd& sem_i, const Eigen::VectorXd& fused_i, const FusionParams& p);

FusionOutput fuse(const Eigen::MatrixXd& sem, const Eigen::MatrixXd& dep, const FusionParams& p);

// ---------------------------------------------------------------------------

namespace detail {
inline std::span<double> flat(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> flat(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> flat(double& x) { return {&x, 1}; }
inline std::span<const double> flat(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> flat(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<const double> flat(const double& x) { return {&x, 1}; }

template <typename Self, typename Visitor>
void visit_fusion(Self& p, Visitor&& visit) {
  visit(std::string_view("w_dep_signal"), flat(p.w_dep_signal));
  visit(std::string_view("w_sem_query"), flat(p.w_sem_query));
  visit(std::string_view("b_sem_query"), flat(p.b_sem_query));
  visit(std::string_view("w_dep_score"), flat(p.w_dep_score));
  visit(std::string_view("b_dep_score"), flat(p.b_dep_score));
  visit(std::string_view("w_sem_signal"), flat(p.w_sem_signal));
  visit(std::string_view("w_dep_query"), flat(p.w_dep_query));
  visit(std::string_view("b_dep_query"), flat(p.b_dep_query));
  visit(std::string_view("w_sem_score"), flat(p.w_sem_score));
  visit(std::string_view("b_sem_score"), flat(p.b_sem_score));
  visit(std::string_view("w_dep_hidden"), flat(p.w_dep_hidden));
  visit(std::string_view("b_dep_hidden"), flat(p.b_dep_hidden));
  visit(std::string_view("w_sem_hidden"), flat(p.w_sem_hidden));
  visit(std::string_view("b_sem_hidden"), flat(p.b_sem_hidden));
  visit(std::string_view("w_gate"), flat(p.w_gate));
  visit(std::string_view("w_fused_value"), flat(p.w_fused_value));
  visit(std::string_view("b_fused_value"), flat(p.b_fused_value));
  visit(std::string_view("w_fused_out"), flat(p.w_fused_out));
  visit(std::string_view("b_fused_out"), flat(p.b_fused_out));
  visit(std::string_view("w_filter"), flat(p.w_filter));
}
}  // namespace detail

template <typename Visitor>
void FusionParams::for_each_tensor(Visitor&& visit) {
  detail::visit_fusion(*this, visit);
}

template <typename Visitor>
void FusionParams::for_each_tensor(Visitor&& visit) const {
  detail::visit_fusion(*this, visit);
}

}  // namespace dafa
