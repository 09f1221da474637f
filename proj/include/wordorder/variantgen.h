#ifndef WORDORDER_VARIANTGEN_H_
#define WORDORDER_VARIANTGEN_H_

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wordorder/treebank.h"

namespace wordorder {

struct SentenceRecord {
  std::string sentence_id;
  std::string family_id;
  bool is_reference = false;
  Ordering ordering;
  std::string text;
  std::vector<std::string> relation_sequence;

  bool operator==(const SentenceRecord&) const = default;
};

// Ordered (left, right) relation pairs of adjacent preverbal constituents seen
// in reference trees.
class AttestedBigramSet {
 public:
  void add(const std::string& left, const std::string& right) { bigrams_.emplace(left, right); }
  bool contains(const std::string& left, const std::string& right) const {
    return bigrams_.count({left, right}) > 0;
  }
  // True when every adjacent pair of `sequence` is attested.
  bool admits(std::span<const std::string> sequence) const;
  std::size_t size() const { return bigrams_.size(); }
  const std::set<std::pair<std::string, std::string>>& bigrams() const { return bigrams_; }

 private:
  std::set<std::pair<std::string, std::string>> bigrams_;
};

AttestedBigramSet collect_attested_bigrams(std::span<const DependencyTree> trees,
                                           const VerbalComplexConfig& config = {});

struct VariantOptions {
  std::size_t cap = 100;  // records per family, reference included
  std::uint64_t seed = 0;
  // Above this many constituents, permutations are sampled instead of enumerated.
  std::size_t max_enumerated_constituents = 8;
  // Random permutations drawn per family in sampled mode, as a multiple of cap.
  std::size_t sample_pool_factor = 10;
  VerbalComplexConfig verbal_complex;
};

// Reference record first, then surviving variants in enumeration order.
// Variant ids are "<family_id>#v<n>" with n counting from 1.
std::vector<SentenceRecord> generate_variants(const DependencyTree& tree,
                                              const AttestedBigramSet& attested,
                                              const VariantOptions& options = {});

// Number of candidate orders (before filtering) for `constituent_count` items.
std::uint64_t candidate_count(std::size_t constituent_count);

// TSV: family_id, sentence_id, is_reference, ordering, text (with header).
void write_variants_tsv(std::ostream& out, std::span<const SentenceRecord> records);
// Relation sequences are not stored in the TSV; they come back empty.
std::vector<SentenceRecord> read_variants_tsv(std::istream& in);

}  // namespace wordorder

#endif  // WORDORDER_VARIANTGEN_H_
