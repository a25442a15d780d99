#include "dafa/tfidf.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace dafa {

TfIdfModel::TfIdfModel(std::size_t doc_count, std::map<std::string, std::size_t> df)
    : doc_count_(doc_count), df_(std::move(df)) {
  if (doc_count_ == 0) throw std::invalid_argument("tf-idf model needs doc_count >= 1");
  for (const auto& [form, count] : df_) {
    if (count == 0 || count > doc_count_)
      throw std::invalid_argument("df('" + form + "') = " + std::to_string(count) +
                                  " outside [1, " + std::to_string(doc_count_) + "]");
  }
}

TfIdfModel TfIdfModel::fit(const std::vector<DepSentence>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("cannot fit tf-idf on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& s : corpus) {
    std::set<std::string> seen;
    for (const auto& t : s.tokens()) seen.insert(lowercase(t.form));
    for (const auto& form : seen) ++df[form];
  }
  return TfIdfModel(corpus.size(), std::move(df));
}

std::size_t TfIdfModel::df(const std::string& form) const {
  auto it = df_.find(form);
  return it == df_.end() ? 0 : it->second;
}

double TfIdfModel::idf(const std::string& form) const {
  const double n = static_cast<double>(doc_count_);
  return std::log((1.0 + n) / (1.0 + static_cast<double>(df(form)))) + 1.0;
}

std::vector<double> TfIdfModel::weights(const DepSentence& s) const {
  std::vector<std::string> forms;
  forms.reserve(s.size());
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : s.tokens()) {
    forms.push_back(lowercase(t.form));
    ++counts[forms.back()];
  }
  const double len = static_cast<double>(s.size());
  std::vector<double> w;
  w.reserve(forms.size());
  for (const auto& f : forms) w.push_back(static_cast<double>(counts[f]) / len * idf(f));
  return w;
}

std::string TfIdfModel::serialize() const {
  nlohmann::json j;
  j["doc_count"] = doc_count_;
  j["df"] = nlohmann::json::object();
  for (const auto& [form, count] : df_) j["df"][form] = count;
  return j.dump();
}

TfIdfModel TfIdfModel::deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("tf-idf JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("doc_count") || !j.contains("df") || !j["df"].is_object())
    throw std::invalid_argument("tf-idf JSON must be an object with doc_count and df");
  const auto& n = j["doc_count"];
  if (!n.is_number_integer() || n.get<long long>() < 1)
    throw std::invalid_argument("tf-idf JSON: doc_count must be a positive integer");
  std::map<std::string, std::size_t> df;
  for (const auto& [form, count] : j["df"].items()) {
    if (!count.is_number_integer() || count.get<long long>() < 0)
      throw std::invalid_argument("tf-idf JSON: df('" + form + "') must be a non-negative integer");
    df[form] = count.get<std::size_t>();
  }
  return TfIdfModel(n.get<std::size_t>(), std::move(df));
}

}  // namespace dafa
