#ifndef WORDORDER_FEATURES_H_
#define WORDORDER_FEATURES_H_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wordorder/cache_lm.h"
#include "wordorder/ngram_lm.h"
#include "wordorder/treebank.h"
#include "wordorder/variantgen.h"

namespace wordorder {

namespace feature {
inline constexpr const char* kDepLength = "dep_length";
inline constexpr const char* kTrigramSurprisal = "trigram_surp";
inline constexpr const char* kPcfgSurprisal = "pcfg_surp";
inline constexpr const char* kIsScore = "is_score";
inline constexpr const char* kLexReptSurprisal = "lex_rept_surp";
inline constexpr const char* kLstmSurprisal = "lstm_surp";
inline constexpr const char* kAdaptiveLstmSurprisal = "adaptive_lstm_surp";
}  // namespace feature

struct FeatureVector {
  std::string sentence_id;
  std::string family_id;
  bool is_reference = false;
  std::map<std::string, double> values;

  double at(const std::string& name) const;
  bool operator==(const FeatureVector&) const = default;
};

// Rows plus the column order used when writing them out.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureVector> rows;
};

// Scores produced outside the toolkit (PCFG, LSTM, adaptive LSTM surprisal),
// keyed by sentence id.
struct ExternalScoreColumn {
  std::string name;
  std::unordered_map<std::string, double> scores;

  // TSV with header "sentence_id<TAB>score".
  static ExternalScoreColumn read(const std::string& name, std::istream& in);
  static ExternalScoreColumn read_file(const std::string& name, const std::string& path);
};

enum class InfoStatus { kGiven, kNew, kAbsent };
const char* to_string(InfoStatus status);

struct IsConfig {
  std::set<std::string> subject_relations = {"k1"};
  std::set<std::string> object_relations = {"k2", "k4"};
  // Open-class tags of the HUTB (IIIT) tagset.
  std::set<std::string> content_pos = {"NN", "NNP", "NNC", "NNPC", "NST", "VM", "JJ"};
  std::set<std::string> pronoun_pos = {"PRP"};
  bool match_lemma = false;
};

struct IsAnnotation {
  InfoStatus subject_status = InfoStatus::kAbsent;
  InfoStatus object_status = InfoStatus::kAbsent;
  bool subject_first = false;  // meaningful only when both are present
  int score = 0;
};

IsAnnotation annotate_information_status(const DependencyTree& tree, const Ordering& ordering,
                                         const DependencyTree* preceding,
                                         const IsConfig& config = {});

// +1 Given-before-New, -1 New-before-Given, 0 otherwise.
inline int is_score(const DependencyTree& tree, const Ordering& ordering,
                    const DependencyTree* preceding, const IsConfig& config = {}) {
  return annotate_information_status(tree, ordering, preceding, config).score;
}

// Trees by id, with document-order lookups of preceding sentences. Context
// never crosses a doc_id boundary.
class DocumentIndex {
 public:
  explicit DocumentIndex(std::span<const DependencyTree> trees);

  const DependencyTree* find(const std::string& sentence_id) const;
  // Up to k trees immediately before `sentence_id` in its document, oldest first.
  std::vector<const DependencyTree*> preceding(const std::string& sentence_id,
                                               std::size_t k) const;

 private:
  std::span<const DependencyTree> trees_;
  std::unordered_map<std::string, std::size_t> position_;
};

struct FeaturizeOptions {
  double mu = 0.05;
  std::size_t cache_size = 100;
  CacheDenominator cache_denominator = CacheDenominator::kCapacity;
  std::size_t adapt_k = 1;
  IsConfig is;
};

// One vector per record. Variants share their reference's discourse context.
// Throws if an external column lacks a score for some record.
FeatureTable featurize(std::span<const SentenceRecord> records, const DocumentIndex& docs,
                       const NgramModel& lm, std::span<const ExternalScoreColumn> external,
                       const FeaturizeOptions& options = {});

void write_feature_csv(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_csv(std::istream& in);

}  // namespace wordorder

#endif  // WORDORDER_FEATURES_H_
