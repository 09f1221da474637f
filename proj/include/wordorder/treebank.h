#ifndef WORDORDER_TREEBANK_H_
#define WORDORDER_TREEBANK_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wordorder {

struct Token {
  int index = 0;  // 1-based surface position
  std::string form;
  std::string lemma;
  std::string cpos;
  std::string pos;
  std::string feats;
  int head = 0;  // 0 = root
  std::string deprel;

  bool operator==(const Token&) const = default;
};

// A linearisation of a tree: ordering[p] is the token index at position p.
using Ordering = std::vector<int>;

class DependencyTree {
 public:
  DependencyTree() = default;
  // Validates all invariants; throws TreebankError on violation.
  DependencyTree(std::string sentence_id, std::string doc_id, int position_in_doc,
                 std::vector<Token> tokens);

  const std::string& sentence_id() const { return sentence_id_; }
  const std::string& doc_id() const { return doc_id_; }
  int position_in_doc() const { return position_in_doc_; }
  void set_position_in_doc(int position) { position_in_doc_ = position; }

  std::size_t size() const { return tokens_.size(); }
  const std::vector<Token>& tokens() const { return tokens_; }
  // 1-based access.
  const Token& token(int index) const { return tokens_.at(static_cast<std::size_t>(index - 1)); }
  int root() const { return root_; }
  const std::vector<int>& children(int index) const {
    return children_.at(static_cast<std::size_t>(index));
  }

  // Head plus all transitive dependents, ascending.
  std::vector<int> yield(int head_index) const;

  Ordering surface_order() const;
  // Forms joined by single spaces in the given order.
  std::string text(const Ordering& ordering) const;
  std::string text() const { return text(surface_order()); }

  bool operator==(const DependencyTree& other) const {
    return sentence_id_ == other.sentence_id_ && doc_id_ == other.doc_id_ &&
           position_in_doc_ == other.position_in_doc_ && tokens_ == other.tokens_;
  }

 private:
  std::string sentence_id_;
  std::string doc_id_;
  int position_in_doc_ = 0;
  std::vector<Token> tokens_;
  int root_ = 0;
  std::vector<std::vector<int>> children_;  // indexed by head, 0 = virtual root
};

class TreebankError : public std::runtime_error {
 public:
  enum class Kind {
    kMalformedLine,
    kBadInteger,
    kBadIndex,
    kSelfLoop,
    kHeadOutOfRange,
    kEmptyDeprel,
    kNoRoot,
    kMultipleRoots,
    kCycle,
  };

  TreebankError(Kind kind, std::string sentence_id, std::size_t line,
                const std::string& detail);

  Kind kind() const { return kind_; }
  const std::string& sentence_id() const { return sentence_id_; }
  // 1-based line in the input; 0 when not tied to a line.
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::string sentence_id_;
  std::size_t line_;
};

const char* to_string(TreebankError::Kind kind);

struct ParseOptions {
  // Synthesised ids are "<source_name>:<block ordinal>".
  std::string source_name = "input";
  // When false the first error is thrown; otherwise the offending block is
  // skipped, logged, and recorded in ParseResult::errors.
  bool skip_invalid = false;
};

struct ParseResult {
  std::vector<DependencyTree> trees;
  std::vector<TreebankError> errors;
};

ParseResult parse_treebank(std::istream& input, const ParseOptions& options = {});
ParseResult parse_treebank_file(const std::string& path, ParseOptions options = {});

// Writes "# sent_id" / "# doc_id" comments followed by 8-column token lines.
void write_treebank(std::ostream& out, std::span<const DependencyTree> trees);

struct Constituent {
  int head_index = 0;
  std::vector<int> token_indices;  // ascending
  std::string relation;

  bool operator==(const Constituent&) const = default;
};

// Relations of root dependents that belong to the verbal complex rather than
// forming permutable constituents. A trailing '*' marks a prefix pattern.
struct VerbalComplexConfig {
  std::vector<std::string> relations = {"lwg_*", "rsym"};

  bool matches(std::string_view deprel) const;
};

// Direct dependents of the root whose whole yield precedes the root, in
// surface order. Verbal-complex dependents and dependents whose yield
// straddles the root are left out.
std::vector<Constituent> preverbal_constituents(const DependencyTree& tree,
                                                const VerbalComplexConfig& config = {});

// All direct dependents of the root with their yields, in surface order of
// their first token. Used by argument-structure features.
std::vector<Constituent> root_dependents(const DependencyTree& tree);

// Sum over arcs of the number of words strictly between head and dependent.
// Throws std::invalid_argument if `ordering` is not a permutation of 1..n.
long dependency_length(const DependencyTree& tree, const Ordering& ordering);
inline long dependency_length(const DependencyTree& tree) {
  return dependency_length(tree, tree.surface_order());
}

// position[i] = 0-based position of token i under `ordering`; validates the
// permutation. position[0] is unused.
std::vector<int> positions_of(const Ordering& ordering, std::size_t token_count);

}  // namespace wordorder

#endif  // WORDORDER_TREEBANK_H_
