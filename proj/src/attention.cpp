#include "dafa/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dafa {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_qkv(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v) {
  if (q.cols() != k.cols() || q.cols() == 0)
    throw std::invalid_argument("Q " + shape(q) + " and K " + shape(k) + " disagree on d_k");
  if (k.rows() != v.rows())
    throw std::invalid_argument("K " + shape(k) + " and V " + shape(v) + " disagree on d_seq");
  if (q.rows() == 0 || v.cols() == 0) throw std::invalid_argument("empty attention input");
}

AttentionResult attend(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& v) {
  AttentionResult r;
  r.weights = softmax_rows(logits);
  r.output = r.weights * v;
  return r;
}

}  // namespace

void AttnConfig::validate() const {
  if (d_model < 1 || heads < 1 || d_k < 1 || d_v < 1)
    throw std::invalid_argument("attention dimensions must all be >= 1");
}

AttnParams AttnParams::random(const AttnConfig& cfg, Rng& rng) {
  cfg.validate();
  AttnParams p;
  const double bound = fan_in_bound(cfg.d_model);
  for (Eigen::Index h = 0; h < cfg.heads; ++h) {
    HeadParams hp{Eigen::MatrixXd(cfg.d_model, cfg.d_k), Eigen::MatrixXd(cfg.d_model, cfg.d_k),
                  Eigen::MatrixXd(cfg.d_model, cfg.d_v)};
    fill_uniform(hp.w_q, bound, rng);
    fill_uniform(hp.w_k, bound, rng);
    fill_uniform(hp.w_v, bound, rng);
    p.heads.push_back(std::move(hp));
  }
  p.w_o.resize(cfg.heads * cfg.d_v, cfg.d_model);
  fill_uniform(p.w_o, fan_in_bound(cfg.heads * cfg.d_v), rng);
  return p;
}

void AttnParams::validate(const AttnConfig& cfg) const {
  cfg.validate();
  if (static_cast<Eigen::Index>(heads.size()) != cfg.heads)
    throw std::invalid_argument("expected " + std::to_string(cfg.heads) + " heads, got " +
                                std::to_string(heads.size()));
  for (const auto& h : heads) {
    if (h.w_q.rows() != cfg.d_model || h.w_q.cols() != cfg.d_k || h.w_k.rows() != cfg.d_model ||
        h.w_k.cols() != cfg.d_k || h.w_v.rows() != cfg.d_model || h.w_v.cols() != cfg.d_v)
      throw std::invalid_argument("head projection shapes disagree with attention config");
  }
  if (w_o.rows() != cfg.heads * cfg.d_v || w_o.cols() != cfg.d_model)
    throw std::invalid_argument("output projection is " + shape(w_o));
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - mx);
      sum += out(i, j);
    }
    out.row(i) /= sum;
  }
  return out;
}

AttentionResult sem_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v) {
  check_qkv(q, k, v);
  const Eigen::MatrixXd scores = q * k.transpose();
  const double scale = std::sqrt(static_cast<double>(q.cols()));
  return attend(scores / scale, v);
}

AttentionResult dep_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v,
                              const Eigen::MatrixXd& c) {
  check_qkv(q, k, v);
  if (c.rows() != q.rows() || c.cols() != k.rows())
    throw std::invalid_argument("calibration " + shape(c) + " does not match logits " +
                                std::to_string(q.rows()) + "x" + std::to_string(k.rows()));
  const Eigen::MatrixXd scores = q * k.transpose();
  const double scale = std::sqrt(static_cast<double>(q.cols()));
  return attend(scores.cwiseProduct(c) / scale, v);
}

std::vector<CalibratedSignals> multi_head_dafa(const Eigen::MatrixXd& x, const AttnParams& params,
                                               const Eigen::MatrixXd& c) {
  if (params.heads.empty()) throw std::invalid_argument("no attention heads");
  std::vector<CalibratedSignals> out;
  out.reserve(params.heads.size());
  for (const auto& h : params.heads) {
    if (x.cols() != h.w_q.rows())
      throw std::invalid_argument("input " + shape(x) + " does not match projection " + shape(h.w_q));
    const Eigen::MatrixXd q = x * h.w_q;
    const Eigen::MatrixXd k = x * h.w_k;
    const Eigen::MatrixXd v = x * h.w_v;
    auto sem = sem_attention(q, k, v);
    auto dep = dep_attention(q, k, v, c);
    out.push_back({std::move(sem.output), std::move(dep.output), std::move(sem.weights),
                   std::move(dep.weights)});
  }
  return out;
}

Eigen::MatrixXd merge_heads(const std::vector<Eigen::MatrixXd>& per_head, const AttnParams& params) {
  if (per_head.empty()) throw std::invalid_argument("no head outputs to merge");
  const Eigen::Index rows = per_head.front().rows();
  const Eigen::Index dv = per_head.front().cols();
  Eigen::MatrixXd concat(rows, dv * static_cast<Eigen::Index>(per_head.size()));
  for (std::size_t h = 0; h < per_head.size(); ++h) {
    if (per_head[h].rows() != rows || per_head[h].cols() != dv)
      throw std::invalid_argument("head outputs differ in shape");
    concat.middleCols(static_cast<Eigen::Index>(h) * dv, dv) = per_head[h];
  }
  if (concat.cols() != params.w_o.rows())
    throw std::invalid_argument("concatenated heads " + shape(concat) + " do not match w_o " + shape(params.w_o));
  return concat * params.w_o;
}

}  // namespace dafa
