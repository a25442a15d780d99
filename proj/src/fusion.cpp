#include "dafa/fusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dafa {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_signal(const Eigen::MatrixXd& m, const FusionParams& p, const char* name) {
  require(m.rows() == p.d_seq && m.cols() == p.d_v,
          std::string(name) + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
              ", fusion expects " + std::to_string(p.d_seq) + "x" + std::to_string(p.d_v));
}

void check_vector(const Eigen::VectorXd& v, Eigen::Index n, const char* name) {
  require(v.size() == n, std::string(name) + " has length " + std::to_string(v.size()) + ", expected " +
                             std::to_string(n));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

// Pools `signal` rows with scores from tanh([W_signal signal^T ; (W_q q + b_q) 1^T]).
GuidedResult guided(const Eigen::MatrixXd& signal, const Eigen::MatrixXd& w_signal, const Eigen::MatrixXd& w_query,
                    const Eigen::VectorXd& b_query, const Eigen::VectorXd& w_score, double b_score,
                    const Eigen::VectorXd& query) {
  const Eigen::Index n = signal.rows();
  Eigen::MatrixXd stacked(2 * n, n);
  stacked.topRows(n) = w_signal * signal.transpose();
  stacked.bottomRows(n) = (w_query * query + b_query).replicate(1, n);
  const Eigen::MatrixXd delta = stacked.array().tanh().matrix();
  const Eigen::VectorXd scores = (delta.transpose() * w_score).array() + b_score;
  GuidedResult r;
  r.weights = softmax(scores);
  r.pooled = signal.transpose() * r.weights;
  return r;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

FusionParams FusionParams::zeros(Eigen::Index d_seq, Eigen::Index d_v, Eigen::Index d_hid) {
  require(d_seq >= 1 && d_v >= 1 && d_hid >= 1, "fusion dimensions must be >= 1");
  FusionParams p;
  p.d_seq = d_seq;
  p.d_v = d_v;
  p.d_hid = d_hid;
  p.w_dep_signal = Eigen::MatrixXd::Zero(d_seq, d_v);
  p.w_sem_query = Eigen::MatrixXd::Zero(d_seq, d_v);
  p.b_sem_query = Eigen::VectorXd::Zero(d_seq);
  p.w_dep_score = Eigen::VectorXd::Zero(2 * d_seq);
  p.w_sem_signal = Eigen::MatrixXd::Zero(d_seq, d_v);
  p.w_dep_query = Eigen::MatrixXd::Zero(d_seq, d_v);
  p.b_dep_query = Eigen::VectorXd::Zero(d_seq);
  p.w_sem_score = Eigen::VectorXd::Zero(2 * d_seq);
  p.w_dep_hidden = Eigen::MatrixXd::Zero(d_hid, d_v);
  p.b_dep_hidden = Eigen::VectorXd::Zero(d_hid);
  p.w_sem_hidden = Eigen::MatrixXd::Zero(d_hid, d_v);
  p.b_sem_hidden = Eigen::VectorXd::Zero(d_hid);
  p.w_gate = Eigen::VectorXd::Zero(2 * d_hid);
  p.w_fused_value = Eigen::MatrixXd::Zero(d_v, d_hid);
  p.b_fused_value = Eigen::VectorXd::Zero(d_v);
  p.w_fused_out = Eigen::MatrixXd::Zero(d_v, d_hid);
  p.b_fused_out = Eigen::VectorXd::Zero(d_v);
  p.w_filter = Eigen::VectorXd::Zero(2 * d_v);
  return p;
}

FusionParams FusionParams::random(Eigen::Index d_seq, Eigen::Index d_v, Eigen::Index d_hid, Rng& rng) {
  FusionParams p = zeros(d_seq, d_v, d_hid);
  const double by_v = fan_in_bound(d_v);
  const double by_seq2 = fan_in_bound(2 * d_seq);
  const double by_hid = fan_in_bound(d_hid);
  fill_uniform(p.w_dep_signal, by_v, rng);
  fill_uniform(p.w_sem_query, by_v, rng);
  fill_uniform(p.b_sem_query, by_v, rng);
  fill_uniform(p.w_dep_score, by_seq2, rng);
  p.b_dep_score = uniform_scalar(by_seq2, rng);
  fill_uniform(p.w_sem_signal, by_v, rng);
  fill_uniform(p.w_dep_query, by_v, rng);
  fill_uniform(p.b_dep_query, by_v, rng);
  fill_uniform(p.w_sem_score, by_seq2, rng);
  p.b_sem_score = uniform_scalar(by_seq2, rng);
  fill_uniform(p.w_dep_hidden, by_v, rng);
  fill_uniform(p.b_dep_hidden, by_v, rng);
  fill_uniform(p.w_sem_hidden, by_v, rng);
  fill_uniform(p.b_sem_hidden, by_v, rng);
  fill_uniform(p.w_gate, fan_in_bound(2 * d_hid), rng);
  fill_uniform(p.w_fused_value, by_hid, rng);
  fill_uniform(p.b_fused_value, by_hid, rng);
  fill_uniform(p.w_fused_out, by_hid, rng);
  fill_uniform(p.b_fused_out, by_hid, rng);
  fill_uniform(p.w_filter, fan_in_bound(2 * d_v), rng);
  return p;
}

void FusionParams::validate() const {
  require(d_seq >= 1 && d_v >= 1 && d_hid >= 1, "fusion dimensions must be >= 1");
  auto mat = [&](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c, const char* name) {
    require(m.rows() == r && m.cols() == c, std::string("fusion parameter ") + name + " is " +
                                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                                ", expected " + std::to_string(r) + "x" + std::to_string(c));
  };
  mat(w_dep_signal, d_seq, d_v, "w_dep_signal");
  mat(w_sem_query, d_seq, d_v, "w_sem_query");
  check_vector(b_sem_query, d_seq, "b_sem_query");
  check_vector(w_dep_score, 2 * d_seq, "w_dep_score");
  mat(w_sem_signal, d_seq, d_v, "w_sem_signal");
  mat(w_dep_query, d_seq, d_v, "w_dep_query");
  check_vector(b_dep_query, d_seq, "b_dep_query");
  check_vector(w_sem_score, 2 * d_seq, "w_sem_score");
  mat(w_dep_hidden, d_hid, d_v, "w_dep_hidden");
  check_vector(b_dep_hidden, d_hid, "b_dep_hidden");
  mat(w_sem_hidden, d_hid, d_v, "w_sem_hidden");
  check_vector(b_sem_hidden, d_hid, "b_sem_hidden");
  check_vector(w_gate, 2 * d_hid, "w_gate");
  mat(w_fused_value, d_v, d_hid, "w_fused_value");
  check_vector(b_fused_value, d_v, "b_fused_value");
  mat(w_fused_out, d_v, d_hid, "w_fused_out");
  check_vector(b_fused_out, d_v, "b_fused_out");
  check_vector(w_filter, 2 * d_v, "w_filter");
}

GuidedResult semantic_guided(const Eigen::MatrixXd& dep, const Eigen::VectorXd& sem_i, const FusionParams& p) {
  check_signal(dep, p, "dep");
  check_vector(sem_i, p.d_v, "s_i");
  return guided(dep, p.w_dep_signal, p.w_sem_query, p.b_sem_query, p.w_dep_score, p.b_dep_score, sem_i);
}

GuidedResult dependency_guided(const Eigen::MatrixXd& sem, const Eigen::VectorXd& dep_star_i,
                               const FusionParams& p) {
  check_signal(sem, p, "sem");
  check_vector(dep_star_i, p.d_v, "d*_i");
  return guided(sem, p.w_sem_signal, p.w_dep_query, p.b_dep_query, p.w_sem_score, p.b_sem_score, dep_star_i);
}

GateResult gated_fuse(const Eigen::VectorXd& dep_star_i, const Eigen::VectorXd& sem_star_i, const FusionParams& p) {
  check_vector(dep_star_i, p.d_v, "d*_i");
  check_vector(sem_star_i, p.d_v, "s*_i");
  GateResult r;
  r.dep_hidden = (p.w_dep_hidden * dep_star_i + p.b_dep_hidden).array().tanh().matrix();
  r.sem_hidden = (p.w_sem_hidden * sem_star_i + p.b_sem_hidden).array().tanh().matrix();
  const double pre = p.w_gate.head(p.d_hid).dot(r.dep_hidden) + p.w_gate.tail(p.d_hid).dot(r.sem_hidden);
  r.gate = sigmoid(pre);
  r.fused = r.gate * r.sem_hidden + (1.0 - r.gate) * r.dep_hidden;
  return r;
}

FiltrationResult filtration(const Eigen::VectorXd& sem_i, const Eigen::VectorXd& fused_i, const FusionParams& p) {
  check_vector(sem_i, p.d_v, "s_i");
  check_vector(fused_i, p.d_hid, "v_i");
  const Eigen::VectorXd value = p.w_fused_value * fused_i + p.b_fused_value;
  FiltrationResult r;
  r.gate = sigmoid(p.w_filter.head(p.d_v).dot(sem_i) + p.w_filter.tail(p.d_v).dot(value));
  r.out = r.gate * (p.w_fused_out * fused_i + p.b_fused_out).array().tanh().matrix();
  return r;
}

FusionOutput fuse(const Eigen::MatrixXd& sem, const Eigen::MatrixXd& dep, const FusionParams& p) {
  p.validate();
  check_signal(sem, p, "sem");
  check_signal(dep, p, "dep");
  const Eigen::Index n = p.d_seq;
  FusionOutput out;
  out.l.resize(n, p.d_v);
  out.g.resize(n);
  out.f.resize(n);
  out.dep_star.resize(n, p.d_v);
  out.sem_star.resize(n, p.d_v);
  out.fused.resize(n, p.d_hid);
  out.dep_hidden.resize(n, p.d_hid);
  out.sem_hidden.resize(n, p.d_hid);
  out.dep_pool_weights.resize(n, n);
  out.sem_pool_weights.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd s_i = sem.row(i).transpose();
    const auto dg = semantic_guided(dep, s_i, p);
    const auto sg = dependency_guided(sem, dg.pooled, p);
    const auto gate = gated_fuse(dg.pooled, sg.pooled, p);
    const auto filt = filtration(s_i, gate.fused, p);
    out.l.row(i) = filt.out.transpose();
    out.g(i) = gate.gate;
    out.f(i) = filt.gate;
    out.dep_star.row(i) = dg.pooled.transpose();
    out.sem_star.row(i) = sg.pooled.transpose();
    out.fused.row(i) = gate.fused.transpose();
    out.dep_hidden.row(i) = gate.dep_hidden.transpose();
    out.sem_hidden.row(i) = gate.sem_hidden.transpose();
    out.dep_pool_weights.row(i) = dg.weights.transpose();
    out.sem_pool_weights.row(i) = sg.weights.transpose();
  }
  return out;
}

}  // namespace dafa
