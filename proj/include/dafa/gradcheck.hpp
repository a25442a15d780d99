#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dafa/attention.hpp"
#include "dafa/fusion.hpp"

namespace dafa {

/// Fixed scalarization used for gradient testing: half the squared Frobenius norm.
double probe_loss(const Eigen::MatrixXd& m);
double probe_loss(const FusionOutput& out);
/// Uses the Dep signal.
double probe_loss(const CalibratedSignals& signals);

struct NamedGradient {
  std::string name;
  std::vector<double> values;
};
using Gradient = std::vector<NamedGradient>;

/// Inputs and parameters of a fuse evaluation; probe loss is taken on L.
struct FuseProblem {
  Eigen::MatrixXd sem;
  Eigen::MatrixXd dep;
  FusionParams params;

  double loss() const;

  template <typename Visitor>
  void for_each_tensor(Visitor&& visit) {
    visit(std::string_view("sem"), detail::flat(sem));
    visit(std::string_view("dep"), detail::flat(dep));
    params.for_each_tensor(visit);
  }
  template <typename Visitor>
  void for_each_tensor(Visitor&& visit) const {
    visit(std::string_view("sem"), detail::flat(sem));
    visit(std::string_view("dep"), detail::flat(dep));
    params.for_each_tensor(visit);
  }
};

/// Single attention head with its projections: Q = X W_q, K = X W_k, V = X W_v.
/// When `calibrated` the dependency path with `calibration` is used, otherwise
/// the plain semantic path. The calibration is data, not a parameter.
struct AttentionProblem {
  Eigen::MatrixXd x;
  Eigen::MatrixXd w_q;
  Eigen::MatrixXd w_k;
  Eigen::MatrixXd w_v;
  Eigen::MatrixXd calibration;
  bool calibrated = true;

  AttentionResult forward() const;
  double loss() const;

  template <typename Visitor>
  void for_each_tensor(Visitor&& visit) {
    visit(std::string_view("x"), detail::flat(x));
    visit(std::string_view("w_q"), detail::flat(w_q));
    visit(std::string_view("w_k"), detail::flat(w_k));
    visit(std::string_view("w_v"), detail::flat(w_v));
  }
  template <typename Visitor>
  void for_each_tensor(Visitor&& visit) const {
    visit(std::string_view("x"), detail::flat(x));
    visit(std::string_view("w_q"), detail::flat(w_q));
    visit(std::string_view("w_k"), detail::flat(w_k));
    visit(std::string_view("w_v"), detail::flat(w_v));
  }
};

/// Flattens every tensor of `p` into a Gradient-shaped record.
template <typename Problem>
Gradient flatten(const Problem& p) {
  Gradient g;
  p.for_each_tensor([&](std::string_view name, std::span<const double> data) {
    g.push_back({std::string(name), std::vector<double>(data.begin(), data.end())});
  });
  return g;
}

/// Central differences (f(p + eps e) - f(p - eps e)) / (2 eps) for every
/// scalar of every tensor. Throws std::domain_error on a non-finite loss.
template <typename Problem, typename Loss>
Gradient fd_gradient(const Problem& problem, Loss&& loss, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("fd_gradient: eps must be > 0");
  Problem probe = problem;
  Gradient out;
  probe.for_each_tensor([&](std::string_view name, std::span<double> data) {
    NamedGradient g{std::string(name), std::vector<double>(data.size())};
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double saved = data[k];
      data[k] = saved + eps;
      const double up = loss(std::as_const(probe));
      data[k] = saved - eps;
      const double down = loss(std::as_const(probe));
      data[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::domain_error("fd_gradient: non-finite loss while probing " + g.name);
      g.values[k] = (up - down) / (2.0 * eps);
    }
    out.push_back(std::move(g));
  });
  return out;
}

template <typename Problem>
Gradient fd_gradient(const Problem& problem, double eps) {
  return fd_gradient(problem, [](const Problem& p) { return p.loss(); }, eps);
}

/// Flat-vector variant for plain functions of a few scalars.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::vector<double> point, double eps);

/// Reverse-mode gradients of the probe loss, in the same tensor order as
/// the problem's for_each_tensor.
Gradient analytic_gradient(const FuseProblem& problem);
Gradient analytic_gradient(const AttentionProblem& problem);

enum class GradOp { fuse, dep_attention, sem_attention };

std::string_view to_string(GradOp op);
/// Accepts "fuse", "dep_attention", "sem_attention".
GradOp parse_grad_op(std::string_view name);

struct GradConfig {
  Eigen::Index d_seq = 3;
  Eigen::Index d_model = 4;
  Eigen::Index d_k = 3;
  Eigen::Index d_v = 2;
  Eigen::Index d_hid = 2;
  double eps = 1e-5;
  double abs_floor = 1e-8;

  /// Shape drawn from `seed`: d_seq <= 6, d_model <= 6, d_k <= 6, d_v <= 8, d_hid <= 5.
  static GradConfig from_seed(std::uint64_t seed);
};

FuseProblem make_fuse_problem(const GradConfig& cfg, std::uint64_t seed);
/// Calibration entries are symmetric and drawn from [1, 3].
AttentionProblem make_attention_problem(const GradConfig& cfg, std::uint64_t seed, bool calibrated);

struct GradEntry {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool pass = true;

  bool operator==(const GradEntry&) const = default;
};

struct GradReport {
  std::string op_name;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  std::vector<GradEntry> entries;
  bool pass = true;

  bool operator==(const GradReport&) const = default;
};

/// A scalar passes when its relative error (denominator
/// max(|analytic|, |fd|, 1e-12)) is below `tol` or its absolute error is
/// below `abs_floor`.
GradReport compare(std::string op_name, std::uint64_t seed, const Gradient& analytic, const Gradient& fd,
                   double tol, double abs_floor);

GradReport check(GradOp op, const GradConfig& cfg, std::uint64_t seed, double tol);

}  // namespace dafa
