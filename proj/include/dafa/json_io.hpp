#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dafa/conllu.hpp"
#include "dafa/fusion.hpp"

namespace dafa {

/// A sentence-pair record from a JSON Lines stream:
///   {"id": "...", "a": "<conllu block>", "b": "<conllu block>"}
struct SentencePair {
  std::string id;
  DepSentence a;
  DepSentence b;
};

/// Malformed record in a JSONL stream. `line` is 1-based; `id` is empty when
/// the record id could not be read.
class RecordError : public std::runtime_error {
 public:
  RecordError(std::size_t line, std::string id, const std::string& what);
  std::size_t line() const { return line_; }
  const std::string& id() const { return id_; }

 private:
  std::size_t line_;
  std::string id_;
};

SentencePair parse_pair_record(std::string_view json_line, std::size_t line_no = 1);
/// Blank lines are ignored.
std::vector<SentencePair> parse_pairs_jsonl(std::string_view text);
std::string pair_to_json_line(const SentencePair& pair);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json row_major_to_json(const Eigen::MatrixXd& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json fusion_params_to_json(const FusionParams& p);
FusionParams fusion_params_from_json(const nlohmann::json& j);

/// Labelled square heatmap: header row "" + labels, then one labelled row per
/// label. Fields are RFC 4180 quoted where needed; numbers use the shortest
/// round-trip representation.
std::string heatmap_to_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m);

struct Heatmap {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};
Heatmap heatmap_from_csv(std::string_view csv);

std::string format_double(double x);

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throw IoError when the file cannot be opened, read or written.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace dafa
