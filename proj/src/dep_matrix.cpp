#include "dafa/dep_matrix.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dafa {

void DepMatrixConfig::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw std::invalid_argument("theta must be a finite value > 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be >= 0");
  if (!(nu >= 0.0 && nu < 1.0)) throw std::invalid_argument("nu must lie in [0, 1)");
}

void PairLayout::validate() const {
  if (a.end() > d_seq || b.end() > d_seq)
    throw std::invalid_argument("layout span exceeds d_seq = " + std::to_string(d_seq));
  const bool overlap = a.size && b.size && a.begin < b.end() && b.begin < a.end();
  if (overlap) throw std::invalid_argument("layout spans overlap");
}

double word_match(std::string_view a, std::string_view b) {
  return lowercase(a) == lowercase(b) ? 1.0 : 0.0;
}

double rel_match(std::string_view a, std::string_view b, double theta) {
  return a == b ? theta : 1.0;
}

PairMatrix base_matrix(const DepSentence& a, const DepSentence& b, const DepMatrixConfig& cfg) {
  cfg.validate();
  const auto ta = trigrams(a);
  const auto tb = trigrams(b);
  PairMatrix m(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    for (std::size_t j = 0; j < tb.size(); ++j) {
      const Trigram& x = ta[i];
      const Trigram& y = tb[j];
      const double tail = word_match(x.tail_form, y.tail_form);
      double head = 0.0;
      if (x.is_root() && y.is_root())
        head = tail;
      else if (!x.is_root() && !y.is_root())
        head = word_match(x.head_form, y.head_form);
      m(i, j) = (head + tail) * rel_match(x.rel, y.rel, cfg.theta);
    }
  }
  return m;
}

namespace {

class SubgraphScorer {
 public:
  SubgraphScorer(const DepSentence& a, const DepSentence& b, const DepMatrixConfig& cfg)
      : a_(a), b_(b), cfg_(cfg),
        memo_(PairMatrix::Constant(a.size(), b.size(), std::numeric_limits<double>::quiet_NaN())) {}

  // 1-based token indices.
  double score(std::size_t i, std::size_t j) {
    double& cell = memo_(i - 1, j - 1);
    if (!std::isnan(cell)) return cell;
    const Token& x = a_.token(i);
    const Token& y = b_.token(j);
    if (word_match(x.form, y.form) == 0.0 || x.deprel != y.deprel) return cell = 0.0;
    double sum = 0.0;
    for (auto cx : a_.children(i))
      for (auto cy : b_.children(j)) sum += score(cx, cy);
    return cell = cfg_.alpha * word_match(x.form, y.form) + cfg_.nu * sum;
  }

  PairMatrix run() {
    for (std::size_t i = 1; i <= a_.size(); ++i)
      for (std::size_t j = 1; j <= b_.size(); ++j) score(i, j);
    return memo_;
  }

 private:
  const DepSentence& a_;
  const DepSentence& b_;
  const DepMatrixConfig& cfg_;
  PairMatrix memo_;
};

}  // namespace

PairMatrix subgraph_matrix(const DepSentence& a, const DepSentence& b, const DepMatrixConfig& cfg) {
  cfg.validate();
  return SubgraphScorer(a, b, cfg).run();
}

PairMatrix final_matrix(const PairMatrix& m, const PairMatrix& s, const std::vector<double>& weights_a,
                        const std::vector<double>& weights_b) {
  if (m.rows() != s.rows() || m.cols() != s.cols())
    throw std::invalid_argument("M and S shapes differ");
  if (static_cast<std::size_t>(m.rows()) != weights_a.size() ||
      static_cast<std::size_t>(m.cols()) != weights_b.size())
    throw std::invalid_argument("tf-idf weight vectors do not match matrix shape");
  PairMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out(i, j) = std::abs(m(i, j) + s(i, j)) * (weights_a[i] * weights_b[j]);
  return out;
}

PairMatrix final_matrix(const DepSentence& a, const DepSentence& b, const TfIdfModel& tfidf,
                        const DepMatrixConfig& cfg) {
  return final_matrix(base_matrix(a, b, cfg), subgraph_matrix(a, b, cfg), tfidf.weights(a),
                      tfidf.weights(b));
}

Eigen::MatrixXd embed_calibration(const PairMatrix& mf, const PairLayout& layout) {
  layout.validate();
  if (static_cast<std::size_t>(mf.rows()) != layout.a.size ||
      static_cast<std::size_t>(mf.cols()) != layout.b.size)
    throw std::invalid_argument("M_F is " + std::to_string(mf.rows()) + "x" + std::to_string(mf.cols()) +
                                " but layout spans are " + std::to_string(layout.a.size) + " and " +
                                std::to_string(layout.b.size));
  const auto d = static_cast<Eigen::Index>(layout.d_seq);
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(d, d);
  const auto a0 = static_cast<Eigen::Index>(layout.a.begin);
  const auto b0 = static_cast<Eigen::Index>(layout.b.begin);
  for (Eigen::Index i = 0; i < mf.rows(); ++i) {
    for (Eigen::Index j = 0; j < mf.cols(); ++j) {
      c(a0 + i, b0 + j) = mf(i, j) + 1.0;
      c(b0 + j, a0 + i) = mf(i, j) + 1.0;
    }
  }
  return c;
}

}  // namespace dafa
