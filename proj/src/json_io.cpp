#include "dafa/json_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dafa {

using nlohmann::json;

RecordError::RecordError(std::size_t line, std::string id, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + (id.empty() ? std::string() : " (id " + id + ")") +
                         ": " + what),
      line_(line),
      id_(std::move(id)) {}

namespace {

DepSentence single_sentence(const std::string& block, const char* side) {
  auto sentences = parse_conllu(block);
  if (sentences.size() != 1)
    throw std::invalid_argument(std::string("field '") + side + "' must hold exactly one CoNLL-U sentence, found " +
                                std::to_string(sentences.size()));
  return std::move(sentences.front());
}

}  // namespace

SentencePair parse_pair_record(std::string_view json_line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw RecordError(line_no, "", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw RecordError(line_no, "", "record must be a JSON object");
  std::string id;
  if (j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
  if (id.empty()) throw RecordError(line_no, "", "record needs a non-empty string 'id'");
  for (const char* side : {"a", "b"}) {
    if (!j.contains(side) || !j[side].is_string())
      throw RecordError(line_no, id, std::string("record needs a string field '") + side + "'");
  }
  try {
    return SentencePair{id, single_sentence(j["a"].get<std::string>(), "a"),
                        single_sentence(j["b"].get<std::string>(), "b")};
  } catch (const std::exception& e) {
    throw RecordError(line_no, id, e.what());
  }
}

std::vector<SentencePair> parse_pairs_jsonl(std::string_view text) {
  std::vector<SentencePair> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    out.push_back(parse_pair_record(line, line_no));
  }
  return out;
}

std::string pair_to_json_line(const SentencePair& pair) {
  json j;
  j["id"] = pair.id;
  j["a"] = to_conllu(pair.a);
  j["b"] = to_conllu(pair.b);
  return j.dump();
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.front().size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument("matrix rows must be arrays of equal length");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw std::invalid_argument("matrix entries must be numbers");
      m(i, c) = x.get<double>();
    }
  }
  return m;
}

json row_major_to_json(const Eigen::MatrixXd& m) {
  json flat = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("vector must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument("vector entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json fusion_params_to_json(const FusionParams& p) {
  json j;
  j["d_seq"] = p.d_seq;
  j["d_v"] = p.d_v;
  j["d_hid"] = p.d_hid;
  j["w_dep_signal"] = matrix_to_json(p.w_dep_signal);
  j["w_sem_query"] = matrix_to_json(p.w_sem_query);
  j["b_sem_query"] = vector_to_json(p.b_sem_query);
  j["w_dep_score"] = vector_to_json(p.w_dep_score);
  j["b_dep_score"] = p.b_dep_score;
  j["w_sem_signal"] = matrix_to_json(p.w_sem_signal);
  j["w_dep_query"] = matrix_to_json(p.w_dep_query);
  j["b_dep_query"] = vector_to_json(p.b_dep_query);
  j["w_sem_score"] = vector_to_json(p.w_sem_score);
  j["b_sem_score"] = p.b_sem_score;
  j["w_dep_hidden"] = matrix_to_json(p.w_dep_hidden);
  j["b_dep_hidden"] = vector_to_json(p.b_dep_hidden);
  j["w_sem_hidden"] = matrix_to_json(p.w_sem_hidden);
  j["b_sem_hidden"] = vector_to_json(p.b_sem_hidden);
  j["w_gate"] = vector_to_json(p.w_gate);
  j["w_fused_value"] = matrix_to_json(p.w_fused_value);
  j["b_fused_value"] = vector_to_json(p.b_fused_value);
  j["w_fused_out"] = matrix_to_json(p.w_fused_out);
  j["b_fused_out"] = vector_to_json(p.b_fused_out);
  j["w_filter"] = vector_to_json(p.w_filter);
  return j;
}

FusionParams fusion_params_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("fusion params must be a JSON object");
  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) throw std::invalid_argument(std::string("fusion params missing '") + name + "'");
    return j.at(name);
  };
  auto dim = [&](const char* name) {
    const auto& x = field(name);
    if (!x.is_number_integer() || x.get<long long>() < 1)
      throw std::invalid_argument(std::string("fusion params '") + name + "' must be a positive integer");
    return static_cast<Eigen::Index>(x.get<long long>());
  };
  auto scalar = [&](const char* name) {
    const auto& x = field(name);
    if (!x.is_number()) throw std::invalid_argument(std::string("fusion params '") + name + "' must be a number");
    return x.get<double>();
  };
  FusionParams p = FusionParams::zeros(dim("d_seq"), dim("d_v"), dim("d_hid"));
  p.w_dep_signal = matrix_from_json(field("w_dep_signal"));
  p.w_sem_query = matrix_from_json(field("w_sem_query"));
  p.b_sem_query = vector_from_json(field("b_sem_query"));
  p.w_dep_score = vector_from_json(field("w_dep_score"));
  p.b_dep_score = scalar("b_dep_score");
  p.w_sem_signal = matrix_from_json(field("w_sem_signal"));
  p.w_dep_query = matrix_from_json(field("w_dep_query"));
  p.b_dep_query = vector_from_json(field("b_dep_query"));
  p.w_sem_score = vector_from_json(field("w_sem_score"));
  p.b_sem_score = scalar("b_sem_score");
  p.w_dep_hidden = matrix_from_json(field("w_dep_hidden"));
  p.b_dep_hidden = vector_from_json(field("b_dep_hidden"));
  p.w_sem_hidden = matrix_from_json(field("w_sem_hidden"));
  p.b_sem_hidden = vector_from_json(field("b_sem_hidden"));
  p.w_gate = vector_from_json(field("w_gate"));
  p.w_fused_value = matrix_from_json(field("w_fused_value"));
  p.b_fused_value = vector_from_json(field("b_fused_value"));
  p.w_fused_out = matrix_from_json(field("w_fused_out"));
  p.b_fused_out = vector_from_json(field("b_fused_out"));
  p.w_filter = vector_from_json(field("w_filter"));
  p.validate();
  return p;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::invalid_argument("CSV: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string heatmap_to_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != labels.size())
    throw std::invalid_argument("heatmap needs a square matrix with one label per row");
  std::string out;
  for (const auto& l : labels) out += "," + csv_field(l);
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += csv_field(labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + format_double(m(i, j));
    out += '\n';
  }
  return out;
}

Heatmap heatmap_from_csv(std::string_view csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty()) throw std::invalid_argument("CSV: empty heatmap");
  Heatmap h;
  h.labels.assign(rows[0].begin() + 1, rows[0].end());
  const auto n = h.labels.size();
  if (rows.size() != n + 1) throw std::invalid_argument("CSV: heatmap is not square");
  h.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i + 1];
    if (r.size() != n + 1 || r[0] != h.labels[i])
      throw std::invalid_argument("CSV: heatmap row " + std::to_string(i + 1) + " is malformed");
    for (std::size_t j = 0; j < n; ++j) {
      double x = 0.0;
      const auto& s = r[j + 1];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::invalid_argument("CSV: non-numeric cell '" + s + "'");
      h.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
    }
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace dafa
