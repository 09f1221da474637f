#include "wordorder/treebank.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace wordorder {

namespace {

using Kind = TreebankError::Kind;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_int(std::string_view text, int& value) {
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Recognises "# key = value", "#key = value" and "# key: value".
bool metadata_value(std::string_view comment, std::string_view key, std::string& value) {
  comment.remove_prefix(1);  // '#'
  comment = trim(comment);
  if (comment.substr(0, key.size()) != key) return false;
  auto rest = trim(comment.substr(key.size()));
  if (rest.empty() || (rest.front() != '=' && rest.front() != ':')) return false;
  rest.remove_prefix(1);
  value = std::string(trim(rest));
  return !value.empty();
}

// Validates head links; `lines` maps token position to input line (may be empty).
void validate_tokens(const std::string& sentence_id, const std::vector<Token>& tokens,
                     const std::vector<std::size_t>& lines) {
  const auto line_of = [&](std::size_t i) -> std::size_t {
    return i < lines.size() ? lines[i] : 0;
  };
  const int n = static_cast<int>(tokens.size());
  if (n == 0) {
    throw TreebankError(Kind::kNoRoot, sentence_id, 0, "sentence has no tokens");
  }
  int root = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = tokens[static_cast<std::size_t>(i)];
    if (t.index != i + 1) {
      throw TreebankError(Kind::kBadIndex, sentence_id, line_of(i),
                          fmt::format("token index {} at position {}", t.index, i + 1));
    }
    if (t.head < 0 || t.head > n) {
      throw TreebankError(Kind::kHeadOutOfRange, sentence_id, line_of(i),
                          fmt::format("head {} outside 0..{}", t.head, n));
    }
    if (t.head == t.index) {
      throw TreebankError(Kind::kSelfLoop, sentence_id, line_of(i),
                          fmt::format("token {} is its own head", t.index));
    }
    if (t.deprel.empty()) {
      throw TreebankError(Kind::kEmptyDeprel, sentence_id, line_of(i),
                          fmt::format("token {} has an empty relation", t.index));
    }
    if (t.head == 0) {
      if (root != 0) {
        throw TreebankError(Kind::kMultipleRoots, sentence_id, line_of(i),
                            fmt::format("tokens {} and {} both attach to 0", root, t.index));
      }
      root = t.index;
    }
  }
  if (root == 0) {
    throw TreebankError(Kind::kNoRoot, sentence_id, line_of(0), "no token attaches to 0");
  }
  // With a single root and n-1 other arcs, the graph is a tree iff every
  // token reaches the root within n steps.
  for (int i = 0; i < n; ++i) {
    int cur = i + 1;
    int steps = 0;
    while (cur != 0 && steps <= n) {
      cur = tokens[static_cast<std::size_t>(cur - 1)].head;
      ++steps;
    }
    if (cur != 0) {
      throw TreebankError(Kind::kCycle, sentence_id, line_of(i),
                          fmt::format("token {} does not reach the root", i + 1));
    }
  }
}

struct Block {
  std::vector<std::pair<std::size_t, std::string>> lines;
};

}  // namespace

const char* to_string(TreebankError::Kind kind) {
  switch (kind) {
    case Kind::kMalformedLine: return "MalformedLine";
    case Kind::kBadInteger: return "BadInteger";
    case Kind::kBadIndex: return "BadIndex";
    case Kind::kSelfLoop: return "SelfLoop";
    case Kind::kHeadOutOfRange: return "HeadOutOfRange";
    case Kind::kEmptyDeprel: return "EmptyDeprel";
    case Kind::kNoRoot: return "NoRoot";
    case Kind::kMultipleRoots: return "MultipleRoots";
    case Kind::kCycle: return "Cycle";
  }
  return "Unknown";
}

TreebankError::TreebankError(Kind kind, std::string sentence_id, std::size_t line,
                             const std::string& detail)
    : std::runtime_error(fmt::format("{} in sentence '{}'{}: {}", wordorder::to_string(kind),
                                     sentence_id,
                                     line ? fmt::format(" at line {}", line) : "", detail)),
      kind_(kind),
      sentence_id_(std::move(sentence_id)),
      line_(line) {}

DependencyTree::DependencyTree(std::string sentence_id, std::string doc_id,
                               int position_in_doc, std::vector<Token> tokens)
    : sentence_id_(std::move(sentence_id)),
      doc_id_(std::move(doc_id)),
      position_in_doc_(position_in_doc),
      tokens_(std::move(tokens)) {
  validate_tokens(sentence_id_, tokens_, {});
  children_.assign(tokens_.size() + 1, {});
  for (const Token& t : tokens_) {
    children_[static_cast<std::size_t>(t.head)].push_back(t.index);
    if (t.head == 0) root_ = t.index;
  }
}

std::vector<int> DependencyTree::yield(int head_index) const {
  std::vector<int> out;
  std::vector<int> stack{head_index};
  while (!stack.empty()) {
    const int cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    for (int child : children(cur)) stack.push_back(child);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Ordering DependencyTree::surface_order() const {
  Ordering order(tokens_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i + 1);
  return order;
}

std::string DependencyTree::text(const Ordering& ordering) const {
  std::string out;
  for (std::size_t p = 0; p < ordering.size(); ++p) {
    if (p) out += ' ';
    out += token(ordering[p]).form;
  }
  return out;
}

ParseResult parse_treebank(std::istream& input, const ParseOptions& options) {
  ParseResult result;
  std::string last_doc_id = options.source_name;
  std::string previous_doc;
  int position = 0;
  std::size_t ordinal = 0;

  auto process = [&](const Block& block) {
    ++ordinal;
    std::string sentence_id;
    std::string doc_id;
    std::vector<Token> tokens;
    std::vector<std::size_t> token_lines;
    const std::string fallback_id = fmt::format("{}:{}", options.source_name, ordinal);
    try {
      for (const auto& [line_no, line] : block.lines) {
        if (line.front() == '#') {
          std::string value;
          if (metadata_value(line, "sent_id", value)) sentence_id = value;
          else if (metadata_value(line, "doc_id", value)) doc_id = value;
          continue;
        }
        const std::string& id_for_errors = sentence_id.empty() ? fallback_id : sentence_id;
        const auto fields = split_tabs(line);
        if (fields.size() != 8) {
          throw TreebankError(Kind::kMalformedLine, id_for_errors, line_no,
                              fmt::format("expected 8 tab-separated columns, found {}",
                                          fields.size()));
        }
        Token t;
        if (!parse_int(fields[0], t.index)) {
          throw TreebankError(Kind::kBadInteger, id_for_errors, line_no,
                              fmt::format("non-integer ID '{}'", fields[0]));
        }
        if (!parse_int(fields[6], t.head)) {
          throw TreebankError(Kind::kBadInteger, id_for_errors, line_no,
                              fmt::format("non-integer HEAD '{}'", fields[6]));
        }
        t.form = fields[1];
        t.lemma = fields[2];
        t.cpos = fields[3];
        t.pos = fields[4];
        t.feats = fields[5];
        t.deprel = fields[7];
        tokens.push_back(std::move(t));
        token_lines.push_back(line_no);
      }
      if (sentence_id.empty()) sentence_id = fallback_id;
      if (doc_id.empty()) doc_id = last_doc_id;
      validate_tokens(sentence_id, tokens, token_lines);
    } catch (const TreebankError& e) {
      if (!options.skip_invalid) throw;
      spdlog::warn("skipping sentence: {}", e.what());
      result.errors.push_back(e);
      return;
    }
    last_doc_id = doc_id;
    position = (doc_id == previous_doc) ? position + 1 : 0;
    previous_doc = doc_id;
    result.trees.emplace_back(std::move(sentence_id), std::move(doc_id), position,
                              std::move(tokens));
  };

  Block block;
  bool has_tokens = false;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (has_tokens) process(block);
    block.lines.clear();
    has_tokens = false;
  };
  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.front() != '#') has_tokens = true;
    block.lines.emplace_back(line_no, line);
  }
  flush();
  return result;
}

ParseResult parse_treebank_file(const std::string& path, ParseOptions options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open treebank file: " + path);
  if (options.source_name == ParseOptions{}.source_name) options.source_name = path;
  return parse_treebank(in, options);
}

void write_treebank(std::ostream& out, std::span<const DependencyTree> trees) {
  for (const DependencyTree& tree : trees) {
    out << "# sent_id = " << tree.sentence_id() << '\n';
    out << "# doc_id = " << tree.doc_id() << '\n';
    for (const Token& t : tree.tokens()) {
      out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.cpos << '\t' << t.pos
          << '\t' << t.feats << '\t' << t.head << '\t' << t.deprel << '\n';
    }
    out << '\n';
  }
}

bool VerbalComplexConfig::matches(std::string_view deprel) const {
  for (const std::string& pattern : relations) {
    if (!pattern.empty() && pattern.back() == '*') {
      const std::string_view prefix(pattern.data(), pattern.size() - 1);
      if (deprel.substr(0, prefix.size()) == prefix) return true;
    } else if (deprel == pattern) {
      return true;
    }
  }
  return false;
}

std::vector<Constituent> root_dependents(const DependencyTree& tree) {
  std::vector<Constituent> out;
  for (int child : tree.children(tree.root())) {
    out.push_back({child, tree.yield(child), tree.token(child).deprel});
  }
  std::sort(out.begin(), out.end(), [](const Constituent& a, const Constituent& b) {
    return a.token_indices.front() < b.token_indices.front();
  });
  return out;
}

std::vector<Constituent> preverbal_constituents(const DependencyTree& tree,
                                                const VerbalComplexConfig& config) {
  std::vector<Constituent> out;
  for (Constituent& c : root_dependents(tree)) {
    if (config.matches(c.relation)) continue;
    if (c.token_indices.back() >= tree.root()) continue;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<int> positions_of(const Ordering& ordering, std::size_t token_count) {
  if (ordering.size() != token_count) {
    throw std::invalid_argument(fmt::format("ordering has {} entries for {} tokens",
                                            ordering.size(), token_count));
  }
  std::vector<int> position(token_count + 1, -1);
  for (std::size_t p = 0; p < ordering.size(); ++p) {
    const int idx = ordering[p];
    if (idx < 1 || static_cast<std::size_t>(idx) > token_count || position[static_cast<std::size_t>(idx)] != -1) {
      throw std::invalid_argument("ordering is not a permutation of the tree's tokens");
    }
    position[static_cast<std::size_t>(idx)] = static_cast<int>(p);
  }
  return position;
}

long dependency_length(const DependencyTree& tree, const Ordering& ordering) {
  const auto position = positions_of(ordering, tree.size());
  long total = 0;
  for (const Token& t : tree.tokens()) {
    if (t.head == 0) continue;
    const int gap = std::abs(position[static_cast<std::size_t>(t.index)] -
                             position[static_cast<std::size_t>(t.head)]) - 1;
    total += std::max(gap, 0);
  }
  return total;
}

}  // namespace wordorder
