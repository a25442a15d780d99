#include <gtest/gtest.h>

#include <cmath>

#include "dafa/gradcheck.hpp"

namespace dafa {
namespace {

double max_abs_diff(const Gradient& a, const Gradient& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t k = 0; k < a[t].values.size(); ++k)
      worst = std::max(worst, std::abs(a[t].values[k] - b[t].values[k]));
  return worst;
}

TEST(ProbeLoss, Values) {
  EXPECT_EQ(probe_loss(Eigen::MatrixXd::Zero(3, 2)), 0.0);
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(2, 2);
  one(1, 0) = 2.0;
  EXPECT_EQ(probe_loss(one), 2.0);
  Rng rng(1);
  Eigen::MatrixXd m(4, 3);
  fill_uniform(m, 1.0, rng);
  double direct = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) direct += m(i, j) * m(i, j);
  EXPECT_NEAR(probe_loss(m), 0.5 * direct, 1e-15);
}

TEST(FdGradient, ScalarFunctions) {
  const auto id = fd_gradient([](std::span<const double> x) { return x[0]; }, {0.7}, 1e-5);
  EXPECT_NEAR(id[0], 1.0, 1e-10);
  const auto quad = fd_gradient([](std::span<const double> x) { return 0.5 * x[0] * x[0]; }, {3.0}, 1e-5);
  EXPECT_NEAR(quad[0], 3.0, 1e-9);
  EXPECT_THROW(fd_gradient([](std::span<const double>) { return NAN; }, {1.0}, 1e-5), std::domain_error);
  EXPECT_THROW(fd_gradient([](std::span<const double> x) { return x[0]; }, {1.0}, 0.0), std::invalid_argument);
}

TEST(FdGradient, FuseAtSeedSevenIsFinite) {
  GradConfig cfg;  // d_seq 3, d_v 2, d_hid 2
  const auto problem = make_fuse_problem(cfg, 7);
  const auto fd = fd_gradient(problem, 1e-5);
  std::size_t count = 0;
  for (const auto& g : fd)
    for (double x : g.values) {
      EXPECT_TRUE(std::isfinite(x)) << g.name;
      ++count;
    }
  EXPECT_GT(count, 0u);
}

TEST(AnalyticGradient, ZeroParameterFuse) {
  GradConfig cfg;
  auto problem = make_fuse_problem(cfg, 3);
  problem.params = FusionParams::zeros(cfg.d_seq, cfg.d_v, cfg.d_hid);
  const auto analytic = analytic_gradient(problem);
  const auto fd = fd_gradient(problem, 1e-5);
  const auto report = compare("fuse", 3, analytic, fd, 1e-7, 1e-8);
  EXPECT_TRUE(report.pass);
  // With zero parameters l = 0.5 * tanh(W_l v + b_l) and v = 0, so only the
  // output bias has a first-order effect: dL/db_l = 0.5 * tanh'(0) * l = 0 at l = 0.
  for (const auto& g : analytic)
    for (double x : g.values) EXPECT_EQ(x, 0.0) << g.name;
}

TEST(AnalyticGradient, ZeroStateClosedForm) {
  // Zero parameters except b_l: d* = mean(dep), v = 0, f = 0.5, l = 0.5 tanh(b_l).
  GradConfig cfg;
  auto problem = make_fuse_problem(cfg, 4);
  problem.params = FusionParams::zeros(cfg.d_seq, cfg.d_v, cfg.d_hid);
  problem.params.b_fused_out << 0.3, -0.2;
  const auto analytic = analytic_gradient(problem);
  const Eigen::ArrayXd t = problem.params.b_fused_out.array().tanh();
  const Eigen::ArrayXd l = 0.5 * t;
  for (const auto& g : analytic) {
    if (g.name == "b_fused_out") {
      for (int k = 0; k < 2; ++k)
        EXPECT_NEAR(g.values[k], cfg.d_seq * l(k) * 0.5 * (1 - t(k) * t(k)), 1e-15);
    }
    if (g.name == "w_filter") {
      // df/dpre = 0.25 = sigmoid'(0); dL/df = sum_i l_i . t
      const double g_f_pre = 0.25 * (l * t).sum();
      for (int k = 0; k < 2; ++k) {
        double s_sum = 0.0;
        for (Eigen::Index i = 0; i < cfg.d_seq; ++i) s_sum += problem.sem(i, k);
        EXPECT_NEAR(g.values[k], g_f_pre * s_sum, 1e-14);
        EXPECT_NEAR(g.values[2 + k], 0.0, 1e-15);
      }
    }
  }
  EXPECT_TRUE(compare("fuse", 4, analytic, fd_gradient(problem, 1e-5), 1e-7, 1e-8).pass);
}

TEST(AnalyticGradient, NeutralCalibrationMatchesSemantic) {
  GradConfig cfg;
  auto dep = make_attention_problem(cfg, 5, true);
  dep.calibration.setOnes();
  const auto sem = make_attention_problem(cfg, 5, false);
  EXPECT_EQ(max_abs_diff(analytic_gradient(dep), analytic_gradient(sem)), 0.0);
}

TEST(AnalyticGradient, RandomConfigurationsAgreeWithFiniteDifferences) {
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const auto cfg = GradConfig::from_seed(seed);
    for (auto op : {GradOp::fuse, GradOp::dep_attention, GradOp::sem_attention}) {
      const auto r = check(op, cfg, seed, 1e-5);
      EXPECT_TRUE(r.pass) << to_string(op) << " seed " << seed;
    }
  }
}

TEST(GradConfig, FromSeedRespectsBounds) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto c = GradConfig::from_seed(seed);
    EXPECT_TRUE(c.d_seq >= 1 && c.d_seq <= 6);
    EXPECT_TRUE(c.d_v >= 1 && c.d_v <= 8);
    EXPECT_TRUE(c.d_hid >= 1 && c.d_hid <= 5);
    EXPECT_TRUE(c.d_model >= 1 && c.d_k >= 1);
  }
}

TEST(Check, PassesAndIsDeterministic) {
  GradConfig cfg;
  const auto a = check(GradOp::fuse, cfg, 7, 1e-5);
  EXPECT_TRUE(a.pass);
  EXPECT_EQ(a.op_name, "fuse");
  EXPECT_EQ(a.entries.size(), 22u);
  EXPECT_EQ(a, check(GradOp::fuse, cfg, 7, 1e-5));
  EXPECT_TRUE(check(GradOp::dep_attention, cfg, 7, 1e-5).pass);
  EXPECT_TRUE(check(GradOp::sem_attention, cfg, 7, 1e-5).pass);
}

TEST(Check, InjectedFaultFails) {
  GradConfig cfg;
  const auto problem = make_fuse_problem(cfg, 7);
  auto analytic = analytic_gradient(problem);
  const auto fd = fd_gradient(problem, cfg.eps);
  for (auto& g : analytic)
    if (g.name == "w_gate") g.values[0] += 1e-2;
  const auto r = compare("fuse", 7, analytic, fd, 1e-5, 1e-8);
  EXPECT_FALSE(r.pass);
  for (const auto& e : r.entries) EXPECT_EQ(e.pass, e.name != "w_gate") << e.name;
}

TEST(Check, OpNames) {
  EXPECT_EQ(parse_grad_op("fuse"), GradOp::fuse);
  EXPECT_EQ(parse_grad_op("dep_attention"), GradOp::dep_attention);
  EXPECT_EQ(to_string(GradOp::sem_attention), "sem_attention");
  EXPECT_THROW(parse_grad_op("conv"), std::invalid_argument);
}

}  // namespace
}  // namespace dafa
