#include "dafa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace dafa {

double probe_loss(const Eigen::MatrixXd& m) { return 0.5 * m.squaredNorm(); }
double probe_loss(const FusionOutput& out) { return probe_loss(out.l); }
double probe_loss(const CalibratedSignals& signals) { return probe_loss(signals.dep); }

double FuseProblem::loss() const { return probe_loss(fuse(sem, dep, params)); }

AttentionResult AttentionProblem::forward() const {
  const Eigen::MatrixXd q = x * w_q;
  const Eigen::MatrixXd k = x * w_k;
  const Eigen::MatrixXd v = x * w_v;
  return calibrated ? dep_attention(q, k, v, calibration) : sem_attention(q, k, v);
}

double AttentionProblem::loss() const { return probe_loss(forward().output); }

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::vector<double> point, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("fd_gradient: eps must be > 0");
  std::vector<double> grad(point.size());
  for (std::size_t k = 0; k < point.size(); ++k) {
    const double saved = point[k];
    point[k] = saved + eps;
    const double up = f(point);
    point[k] = saved - eps;
    const double down = f(point);
    point[k] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::domain_error("fd_gradient: non-finite function value");
    grad[k] = (up - down) / (2.0 * eps);
  }
  return grad;
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd softmax_backward(const Eigen::VectorXd& y, const Eigen::VectorXd& gy) {
  return (y.array() * (gy.array() - y.dot(gy))).matrix();
}

Eigen::MatrixXd tanh_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& gy) {
  return gy.cwiseProduct((1.0 - y.array().square()).matrix());
}

// Guided-attention pooling for one position, keeping what backward needs.
struct GuidedTape {
  Eigen::MatrixXd tanh_stack;  // 2n x n
  Eigen::VectorXd weights;     // n
  Eigen::VectorXd pooled;      // d_v
};

GuidedTape guided_forward(const Eigen::MatrixXd& signal, const Eigen::MatrixXd& signal_proj,
                          const Eigen::MatrixXd& w_query, const Eigen::VectorXd& b_query,
                          const Eigen::VectorXd& w_score, double b_score, const Eigen::VectorXd& query) {
  const Eigen::Index n = signal.rows();
  Eigen::MatrixXd stacked(2 * n, n);
  stacked.topRows(n) = signal_proj;
  stacked.bottomRows(n) = (w_query * query + b_query).replicate(1, n);
  GuidedTape t;
  t.tanh_stack = stacked.array().tanh().matrix();
  const Eigen::VectorXd scores = (t.tanh_stack.transpose() * w_score).array() + b_score;
  t.weights = softmax(scores);
  t.pooled = signal.transpose() * t.weights;
  return t;
}

// Accumulates gradients of one guided pooling. Returns the gradient with
// respect to the query vector.
Eigen::VectorXd guided_backward(const GuidedTape& t, const Eigen::VectorXd& g_pooled, const Eigen::MatrixXd& signal,
                                const Eigen::MatrixXd& w_query, const Eigen::VectorXd& w_score,
                                const Eigen::VectorXd& query, Eigen::MatrixXd& g_signal,
                                Eigen::MatrixXd& g_signal_proj, Eigen::MatrixXd& g_w_query,
                                Eigen::VectorXd& g_b_query, Eigen::VectorXd& g_w_score, double& g_b_score) {
  const Eigen::Index n = signal.rows();
  g_signal += t.weights * g_pooled.transpose();
  const Eigen::VectorXd g_weights = signal * g_pooled;
  const Eigen::VectorXd g_scores = softmax_backward(t.weights, g_weights);
  g_w_score += t.tanh_stack * g_scores;
  g_b_score += g_scores.sum();
  const Eigen::MatrixXd g_stack = tanh_backward(t.tanh_stack, w_score * g_scores.transpose());
  g_signal_proj += g_stack.topRows(n);
  const Eigen::VectorXd g_u = g_stack.bottomRows(n).rowwise().sum();
  g_w_query += g_u * query.transpose();
  g_b_query += g_u;
  return w_query.transpose() * g_u;
}

}  // namespace

Gradient analytic_gradient(const FuseProblem& problem) {
  const auto& p = problem.params;
  const auto& sem = problem.sem;
  const auto& dep = problem.dep;
  p.validate();
  if (sem.rows() != p.d_seq || sem.cols() != p.d_v || dep.rows() != p.d_seq || dep.cols() != p.d_v)
    throw std::invalid_argument("analytic_gradient: signal shapes disagree with fusion params");

  FuseProblem grad{Eigen::MatrixXd::Zero(sem.rows(), sem.cols()), Eigen::MatrixXd::Zero(dep.rows(), dep.cols()),
                   FusionParams::zeros(p.d_seq, p.d_v, p.d_hid)};
  auto& gp = grad.params;
  const Eigen::Index n = p.d_seq;
  const Eigen::Index hid = p.d_hid;
  const Eigen::Index dv = p.d_v;

  const Eigen::MatrixXd dep_proj = p.w_dep_signal * dep.transpose();
  const Eigen::MatrixXd sem_proj = p.w_sem_signal * sem.transpose();
  Eigen::MatrixXd g_dep_proj = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd g_sem_proj = Eigen::MatrixXd::Zero(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd s_i = sem.row(i).transpose();

    // Forward.
    const auto dg = guided_forward(dep, dep_proj, p.w_sem_query, p.b_sem_query, p.w_dep_score, p.b_dep_score, s_i);
    const Eigen::VectorXd& dstar = dg.pooled;
    const auto sg =
        guided_forward(sem, sem_proj, p.w_dep_query, p.b_dep_query, p.w_sem_score, p.b_sem_score, dstar);
    const Eigen::VectorXd& sstar = sg.pooled;
    const Eigen::VectorXd dh = (p.w_dep_hidden * dstar + p.b_dep_hidden).array().tanh().matrix();
    const Eigen::VectorXd sh = (p.w_sem_hidden * sstar + p.b_sem_hidden).array().tanh().matrix();
    const double g = sigmoid(p.w_gate.head(hid).dot(dh) + p.w_gate.tail(hid).dot(sh));
    const Eigen::VectorXd v = g * sh + (1.0 - g) * dh;
    const Eigen::VectorXd z = p.w_fused_value * v + p.b_fused_value;
    const double f = sigmoid(p.w_filter.head(dv).dot(s_i) + p.w_filter.tail(dv).dot(z));
    const Eigen::VectorXd t = (p.w_fused_out * v + p.b_fused_out).array().tanh().matrix();
    const Eigen::VectorXd l = f * t;

    // Backward of 0.5 * |l|^2.
    const Eigen::VectorXd& g_l = l;
    const double g_f = g_l.dot(t);
    const Eigen::VectorXd g_t_pre = tanh_backward(t, f * g_l);
    gp.w_fused_out += g_t_pre * v.transpose();
    gp.b_fused_out += g_t_pre;
    Eigen::VectorXd g_v = p.w_fused_out.transpose() * g_t_pre;

    const double g_f_pre = g_f * f * (1.0 - f);
    gp.w_filter.head(dv) += g_f_pre * s_i;
    gp.w_filter.tail(dv) += g_f_pre * z;
    Eigen::VectorXd g_s_i = g_f_pre * p.w_filter.head(dv);
    const Eigen::VectorXd g_z = g_f_pre * p.w_filter.tail(dv);
    gp.w_fused_value += g_z * v.transpose();
    gp.b_fused_value += g_z;
    g_v += p.w_fused_value.transpose() * g_z;

    const double g_g = g_v.dot(sh - dh);
    Eigen::VectorXd g_sh = g * g_v;
    Eigen::VectorXd g_dh = (1.0 - g) * g_v;
    const double g_g_pre = g_g * g * (1.0 - g);
    gp.w_gate.head(hid) += g_g_pre * dh;
    gp.w_gate.tail(hid) += g_g_pre * sh;
    g_dh += g_g_pre * p.w_gate.head(hid);
    g_sh += g_g_pre * p.w_gate.tail(hid);

    const Eigen::VectorXd g_sh_pre = tanh_backward(sh, g_sh);
    gp.w_sem_hidden += g_sh_pre * sstar.transpose();
    gp.b_sem_hidden += g_sh_pre;
    const Eigen::VectorXd g_sstar = p.w_sem_hidden.transpose() * g_sh_pre;
    const Eigen::VectorXd g_dh_pre = tanh_backward(dh, g_dh);
    gp.w_dep_hidden += g_dh_pre * dstar.transpose();
    gp.b_dep_hidden += g_dh_pre;
    Eigen::VectorXd g_dstar = p.w_dep_hidden.transpose() * g_dh_pre;

    g_dstar += guided_backward(sg, g_sstar, sem, p.w_dep_query, p.w_sem_score, dstar, grad.sem, g_sem_proj,
                               gp.w_dep_query, gp.b_dep_query, gp.w_sem_score, gp.b_sem_score);
    g_s_i += guided_backward(dg, g_dstar, dep, p.w_sem_query, p.w_dep_score, s_i, grad.dep, g_dep_proj,
                             gp.w_sem_query, gp.b_sem_query, gp.w_dep_score, gp.b_dep_score);
    grad.sem.row(i) += g_s_i.transpose();
  }

  gp.w_dep_signal = g_dep_proj * dep;
  grad.dep += g_dep_proj.transpose() * p.w_dep_signal;
  gp.w_sem_signal = g_sem_proj * sem;
  grad.sem += g_sem_proj.transpose() * p.w_sem_signal;
  return flatten(grad);
}

Gradient analytic_gradient(const AttentionProblem& problem) {
  const Eigen::MatrixXd q = problem.x * problem.w_q;
  const Eigen::MatrixXd k = problem.x * problem.w_k;
  const Eigen::MatrixXd v = problem.x * problem.w_v;
  const auto fwd = problem.calibrated ? dep_attention(q, k, v, problem.calibration) : sem_attention(q, k, v);
  const Eigen::MatrixXd& w = fwd.weights;
  const double scale = std::sqrt(static_cast<double>(q.cols()));

  const Eigen::MatrixXd& g_out = fwd.output;
  const Eigen::MatrixXd g_v = w.transpose() * g_out;
  const Eigen::MatrixXd g_w = g_out * v.transpose();
  const Eigen::VectorXd row_dot = w.cwiseProduct(g_w).rowwise().sum();
  const Eigen::MatrixXd g_logits = w.cwiseProduct(g_w - row_dot.replicate(1, w.cols()));
  Eigen::MatrixXd g_scores = g_logits / scale;
  if (problem.calibrated) g_scores = g_scores.cwiseProduct(problem.calibration);
  const Eigen::MatrixXd g_q = g_scores * k;
  const Eigen::MatrixXd g_k = g_scores.transpose() * q;

  AttentionProblem grad;
  grad.x = g_q * problem.w_q.transpose() + g_k * problem.w_k.transpose() + g_v * problem.w_v.transpose();
  grad.w_q = problem.x.transpose() * g_q;
  grad.w_k = problem.x.transpose() * g_k;
  grad.w_v = problem.x.transpose() * g_v;
  return flatten(grad);
}

std::string_view to_string(GradOp op) {
  switch (op) {
    case GradOp::fuse:
      return "fuse";
    case GradOp::dep_attention:
      return "dep_attention";
    case GradOp::sem_attention:
      return "sem_attention";
  }
  return "unknown";
}

GradOp parse_grad_op(std::string_view name) {
  if (name == "fuse") return GradOp::fuse;
  if (name == "dep_attention") return GradOp::dep_attention;
  if (name == "sem_attention") return GradOp::sem_attention;
  throw std::invalid_argument("unknown gradient op '" + std::string(name) + "'");
}

GradConfig GradConfig::from_seed(std::uint64_t seed) {
  Rng rng(seed);
  auto pick = [&](Eigen::Index hi) {
    return static_cast<Eigen::Index>(std::uniform_int_distribution<int>(1, static_cast<int>(hi))(rng));
  };
  GradConfig cfg;
  cfg.d_seq = pick(6);
  cfg.d_model = pick(6);
  cfg.d_k = pick(6);
  cfg.d_v = pick(8);
  cfg.d_hid = pick(5);
  return cfg;
}

FuseProblem make_fuse_problem(const GradConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  FuseProblem p;
  p.sem.resize(cfg.d_seq, cfg.d_v);
  p.dep.resize(cfg.d_seq, cfg.d_v);
  fill_uniform(p.sem, 1.0, rng);
  fill_uniform(p.dep, 1.0, rng);
  p.params = FusionParams::random(cfg.d_seq, cfg.d_v, cfg.d_hid, rng);
  return p;
}

AttentionProblem make_attention_problem(const GradConfig& cfg, std::uint64_t seed, bool calibrated) {
  Rng rng(seed);
  AttentionProblem p;
  p.calibrated = calibrated;
  p.x.resize(cfg.d_seq, cfg.d_model);
  fill_uniform(p.x, 1.0, rng);
  const double bound = fan_in_bound(cfg.d_model);
  p.w_q.resize(cfg.d_model, cfg.d_k);
  p.w_k.resize(cfg.d_model, cfg.d_k);
  p.w_v.resize(cfg.d_model, cfg.d_v);
  fill_uniform(p.w_q, bound, rng);
  fill_uniform(p.w_k, bound, rng);
  fill_uniform(p.w_v, bound, rng);
  p.calibration = Eigen::MatrixXd::Ones(cfg.d_seq, cfg.d_seq);
  if (calibrated) {
    std::uniform_real_distribution<double> extra(0.0, 2.0);
    for (Eigen::Index i = 0; i < cfg.d_seq; ++i)
      for (Eigen::Index j = i; j < cfg.d_seq; ++j) p.calibration(i, j) = p.calibration(j, i) = 1.0 + extra(rng);
  }
  return p;
}

GradReport compare(std::string op_name, std::uint64_t seed, const Gradient& analytic, const Gradient& fd, double tol,
                   double abs_floor) {
  if (analytic.size() != fd.size()) throw std::invalid_argument("compare: gradient structures differ");
  GradReport report{std::move(op_name), seed, tol, {}, true};
  for (std::size_t t = 0; t < analytic.size(); ++t) {
    const auto& a = analytic[t];
    const auto& b = fd[t];
    if (a.name != b.name || a.values.size() != b.values.size())
      throw std::invalid_argument("compare: tensor '" + a.name + "' does not line up");
    GradEntry e{a.name, 0.0, 0.0, true};
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      const double abs_err = std::abs(a.values[k] - b.values[k]);
      const double denom = std::max({std::abs(a.values[k]), std::abs(b.values[k]), 1e-12});
      const double rel_err = abs_err / denom;
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
      e.max_rel_error = std::max(e.max_rel_error, rel_err);
      if (!(rel_err < tol || abs_err < abs_floor)) e.pass = false;
    }
    report.pass = report.pass && e.pass;
    report.entries.push_back(std::move(e));
  }
  return report;
}

GradReport check(GradOp op, const GradConfig& cfg, std::uint64_t seed, double tol) {
  if (op == GradOp::fuse) {
    const auto problem = make_fuse_problem(cfg, seed);
    return compare(std::string(to_string(op)), seed, analytic_gradient(problem), fd_gradient(problem, cfg.eps), tol,
                   cfg.abs_floor);
  }
  const auto problem = make_attention_problem(cfg, seed, op == GradOp::dep_attention);
  return compare(std::string(to_string(op)), seed, analytic_gradient(problem), fd_gradient(problem, cfg.eps), tol,
                 cfg.abs_floor);
}

}  // namespace dafa
