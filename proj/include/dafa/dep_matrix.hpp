#pragma once

#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

#include "dafa/conllu.hpp"
#include "dafa/tfidf.hpp"

namespace dafa {

struct DepMatrixConfig {
  double theta = 2.0;  // dependency-type match factor
  double alpha = 1.0;  // fixed score for a matching node pair
  double nu = 0.5;     // decay applied to matched child subtrees

  /// Throws std::invalid_argument unless theta > 0, alpha >= 0, 0 <= nu < 1.
  void validate() const;
};

/// n x m cross-sentence score matrix (rows index sentence A, columns B).
using PairMatrix = Eigen::MatrixXd;

/// Half-open position range inside the full input sequence.
struct Span {
  std::size_t begin = 0;
  std::size_t size = 0;

  std::size_t end() const { return begin + size; }
  bool contains(std::size_t p) const { return p >= begin && p < end(); }
};

struct PairLayout {
  std::size_t d_seq = 0;
  Span a;
  Span b;

  /// Throws std::invalid_argument if the spans overlap or exceed d_seq.
  void validate() const;
};

double word_match(std::string_view a, std::string_view b);
double rel_match(std::string_view a, std::string_view b, double theta);

/// Trigram agreement: M(i,j) = [s(head) + s(tail)] * r(rel).
///
/// The root token has no head word. Two root trigrams count their heads as
/// matching exactly when their tails match; a root head never matches a word.
PairMatrix base_matrix(const DepSentence& a, const DepSentence& b, const DepMatrixConfig& cfg);

/// Recursive subtree agreement. For tails and relations that both match,
///   S(i,j) = alpha * s(A_i, B_j) + nu * sum_{x in T(i), y in T(j)} S(x,y),
/// and 0 otherwise. Memoized over (i,j).
PairMatrix subgraph_matrix(const DepSentence& a, const DepSentence& b, const DepMatrixConfig& cfg);

/// M_F(i,j) = |M(i,j) + S(i,j)| * w_a[i] * w_b[j].
PairMatrix final_matrix(const PairMatrix& m, const PairMatrix& s, const std::vector<double>& weights_a,
                        const std::vector<double>& weights_b);
PairMatrix final_matrix(const DepSentence& a, const DepSentence& b, const TfIdfModel& tfidf,
                        const DepMatrixConfig& cfg);

/// Places M_F + 1 on both cross blocks of a d_seq x d_seq matrix of ones.
Eigen::MatrixXd embed_calibration(const PairMatrix& mf, const PairLayout& layout);

}  // namespace dafa
