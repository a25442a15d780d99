#include "dafa/conllu.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace dafa {

ConlluError::ConlluError(std::size_t sentence, std::size_t line, const std::string& what)
    : std::runtime_error("sentence " + std::to_string(sentence) +
                         (line ? ", line " + std::to_string(line) : std::string()) + ": " + what),
      sentence_(sentence),
      line_(line) {}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

DepSentence::DepSentence(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  const std::size_t n = tokens_.size();
  if (n == 0) throw InvalidTree("empty sentence");
  children_.assign(n + 1, {});
  std::size_t roots = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Token& t = tokens_[k];
    if (t.index != k + 1)
      throw InvalidTree("token ids must be contiguous from 1; got " + std::to_string(t.index) +
                      " at position " + std::to_string(k + 1));
    if (t.form.empty()) throw InvalidTree("token " + std::to_string(t.index) + " has empty FORM");
    if (t.deprel.empty())
      throw InvalidTree("token " + std::to_string(t.index) + " has empty DEPREL");
    if (t.head > n)
      throw InvalidTree("token " + std::to_string(t.index) + " has HEAD " + std::to_string(t.head) +
                      " beyond sentence length " + std::to_string(n));
    if (t.head == t.index) throw InvalidTree("token " + std::to_string(t.index) + " is its own head");
    if (t.head == 0) {
      ++roots;
      root_ = t.index;
    }
    children_[t.head].push_back(t.index);
  }
  if (roots != 1) throw InvalidTree("expected exactly one root, found " + std::to_string(roots));

  // Every token must reach the root by following heads.
  std::vector<int> state(n + 1, 0);  // 0 unvisited, 1 on path, 2 reaches root
  state[0] = 2;
  for (std::size_t start = 1; start <= n; ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (state[cur] == 0) {
      state[cur] = 1;
      path.push_back(cur);
      cur = tokens_[cur - 1].head;
    }
    if (state[cur] == 1) throw InvalidTree("cycle in head graph through token " + std::to_string(cur));
    for (auto p : path) state[p] = 2;
  }
}

const Token& DepSentence::token(std::size_t index) const {
  if (index == 0 || index > tokens_.size())
    throw std::out_of_range("token index " + std::to_string(index) + " out of range");
  return tokens_[index - 1];
}

const std::vector<std::size_t>& DepSentence::children(std::size_t index) const {
  if (index == 0 || index > tokens_.size())
    throw std::out_of_range("token index " + std::to_string(index) + " out of range");
  return children_[index];
}

std::vector<std::size_t> children(const DepSentence& sentence, std::size_t index) {
  return sentence.children(index);
}

std::vector<DepSentence> parse_conllu(std::string_view text) {
  std::vector<DepSentence> out;
  std::vector<Token> block;
  std::size_t block_start = 0;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (block.empty()) return;
    const std::size_t ordinal = out.size() + 1;
    try {
      out.emplace_back(std::move(block));
    } catch (const InvalidTree& e) {
      throw ConlluError(ordinal, block_start, e.what());
    }
    block.clear();
  };

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      flush();
      continue;
    }
    if (line.front() == '#') continue;

    const std::size_t ordinal = out.size() + 1;
    auto cols = split_tabs(line);
    if (cols.size() != 10)
      throw ConlluError(ordinal, line_no,
                        "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;

    Token tok;
    if (!parse_index(id, tok.index)) throw ConlluError(ordinal, line_no, "non-integer ID '" + std::string(id) + "'");
    if (!parse_index(cols[6], tok.head))
      throw ConlluError(ordinal, line_no, "non-integer HEAD '" + std::string(cols[6]) + "'");
    tok.form = std::string(cols[1]);
    tok.deprel = std::string(cols[7]);
    if (block.empty()) block_start = line_no;
    block.push_back(std::move(tok));
  }
  flush();
  return out;
}

std::string to_conllu(const DepSentence& sentence) {
  std::ostringstream os;
  for (const auto& t : sentence.tokens()) {
    os << t.index << '\t' << t.form << "\t_\t_\t_\t_\t" << t.head << '\t' << t.deprel << "\t_\t_\n";
  }
  return os.str();
}

std::vector<Trigram> trigrams(const DepSentence& sentence) {
  std::vector<Trigram> out;
  out.reserve(sentence.size());
  for (const auto& t : sentence.tokens()) {
    Trigram tri;
    tri.head_form = t.head == 0 ? std::string(kRootHead) : sentence.token(t.head).form;
    tri.rel = t.deprel;
    tri.tail_form = t.form;
    tri.tail_index = t.index;
    tri.head_index = t.head;
    out.push_back(std::move(tri));
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace dafa
