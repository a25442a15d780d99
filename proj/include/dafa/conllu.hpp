#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dafa {

/// One basic token of a dependency parse. `index` is 1-based; `head` is 0
/// for the token attached to the virtual root.
struct Token {
  std::size_t index = 0;
  std::string form;
  std::size_t head = 0;
  std::string deprel;

  bool operator==(const Token&) const = default;
};

/// Raised by DepSentence when the tokens do not form a rooted tree.
class InvalidTree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for malformed CoNLL-U input or an invalid head graph.
/// `sentence` is the 1-based block ordinal, `line` the 1-based line number
/// in the input text (0 when the error is not tied to a single line).
class ConlluError : public std::runtime_error {
 public:
  ConlluError(std::size_t sentence, std::size_t line, const std::string& what);

  std::size_t sentence() const { return sentence_; }
  std::size_t line() const { return line_; }

 private:
  std::size_t sentence_;
  std::size_t line_;
};

/// A validated rooted dependency tree. Instances are immutable once built.
class DepSentence {
 public:
  /// Validates the tokens (contiguous indices, one root, acyclic, non-empty
  /// labels) and throws InvalidTree on violation.
  explicit DepSentence(std::vector<Token> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<Token>& tokens() const { return tokens_; }
  /// 1-based access.
  const Token& token(std::size_t index) const;
  std::size_t root() const { return root_; }

  /// Dependents of token `index`, ascending. Throws std::out_of_range.
  const std::vector<std::size_t>& children(std::size_t index) const;

  bool operator==(const DepSentence& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<Token> tokens_;
  std::vector<std::vector<std::size_t>> children_;
  std::size_t root_ = 0;
};

/// One dependency branch {head word, relation, tail word}.
struct Trigram {
  std::string head_form;
  std::string rel;
  std::string tail_form;
  std::size_t tail_index = 0;
  std::size_t head_index = 0;  // 0 for the root token

  bool is_root() const { return head_index == 0; }
  bool operator==(const Trigram&) const = default;
};

inline constexpr std::string_view kRootHead = "<ROOT>";

/// Parses every sentence block. Multiword ranges ("1-2") and empty nodes
/// ("1.1") are skipped.
std::vector<DepSentence> parse_conllu(std::string_view text);

/// Serializes a sentence as a single CoNLL-U block (no trailing blank line).
/// Unused columns are written as "_".
std::string to_conllu(const DepSentence& sentence);

std::vector<std::size_t> children(const DepSentence& sentence, std::size_t index);

/// Exactly one trigram per token, trigram k having token k as its tail.
std::vector<Trigram> trigrams(const DepSentence& sentence);

std::string lowercase(std::string_view s);

}  // namespace dafa
