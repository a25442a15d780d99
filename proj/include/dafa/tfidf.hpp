#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dafa/conllu.hpp"

namespace dafa {

/// Sentence-level document frequencies over lowercased forms.
///
///   tf(t, s)  = count(t in s) / |s|
///   idf(t)    = ln((1 + N) / (1 + df(t))) + 1
///
/// `idf` is strictly positive, so unseen and ubiquitous forms still carry
/// weight.
class TfIdfModel {
 public:
  TfIdfModel() = default;
  TfIdfModel(std::size_t doc_count, std::map<std::string, std::size_t> df);

  static TfIdfModel fit(const std::vector<DepSentence>& corpus);

  std::size_t doc_count() const { return doc_count_; }
  const std::map<std::string, std::size_t>& df() const { return df_; }
  /// 0 for forms never seen during fitting.
  std::size_t df(const std::string& form) const;

  double idf(const std::string& form) const;
  /// One weight per token of `s`, in token order.
  std::vector<double> weights(const DepSentence& s) const;

  std::string serialize() const;
  /// Throws std::invalid_argument on malformed JSON or invalid counts.
  static TfIdfModel deserialize(const std::string& json);

  bool operator==(const TfIdfModel&) const = default;

 private:
  std::size_t doc_count_ = 0;
  std::map<std::string, std::size_t> df_;
};

}  // namespace dafa
