#ifndef WORDORDER_NGRAM_LM_H_
#define WORDORDER_NGRAM_LM_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wordorder {

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknown = "<unk>";

class Vocabulary {
 public:
  using Id = std::int32_t;
  static constexpr Id kStart = 0;
  static constexpr Id kEnd = 1;
  static constexpr Id kUnk = 2;

  Vocabulary();
  Id add(std::string_view word);
  // kUnk for unknown words.
  Id id(std::string_view word) const;
  bool contains(std::string_view word) const { return ids_.count(std::string(word)) > 0; }
  const std::string& word(Id id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, Id> ids_;
  std::vector<std::string> words_;
};

struct TrainOptions {
  int gt_max = 7;     // Good-Turing applies to counts 1..gt_max
  int min_count = 1;  // words seen fewer times map to <unk>
  // Left-over probability mass reserved in any distribution that would
  // otherwise assign zero probability to unseen words.
  double min_leftover = 1e-6;
};

// Trigram model with Good-Turing discounting and Katz backoff. Immutable once
// trained or loaded.
class NgramModel {
 public:
  static constexpr int kOrder = 3;
  using Id = Vocabulary::Id;

  // Each entry of `sentences` is one whitespace-tokenised sentence.
  static NgramModel train(std::span<const std::vector<std::string>> sentences,
                          const TrainOptions& options = {});
  // One sentence per line; blank lines are ignored.
  static NgramModel train(std::istream& corpus, const TrainOptions& options = {});
  static NgramModel read_arpa(std::istream& in);

  void write_arpa(std::ostream& out) const;

  const Vocabulary& vocab() const { return vocab_; }

  // P(word | history) where history holds up to the two preceding ids
  // (older first). Uses the longest available context.
  double probability(Id word, std::span<const Id> history) const;
  double probability(std::string_view word, std::span<const std::string> history) const;

  // Every id that can be predicted: the whole vocabulary except <s>.
  std::vector<Id> predictable() const;

  // Training statistics; empty for models loaded from ARPA.
  long count(std::span<const Id> ngram) const;
  long count_of_counts(int order, long r) const;
  // Good-Turing discounted count r* used for n-grams of this order seen r times.
  double discounted_count(int order, long r) const;
  // Katz backoff weight of a context (1 when the context was never seen).
  double backoff_weight(std::span<const Id> context) const;
  const TrainOptions& options() const { return options_; }

 private:
  using Key = std::uint64_t;
  static Key pack(std::span<const Id> ids);

  double unigram(Id w) const;
  double bigram(Id w, Id h1) const;
  double trigram(Id w, Id h2, Id h1) const;

  Vocabulary vocab_;
  TrainOptions options_;
  // Index 0..2 for orders 1..3.
  std::array<std::unordered_map<Key, long>, kOrder> counts_;
  std::array<std::map<long, long>, kOrder> count_of_counts_;
  std::array<std::map<long, double>, kOrder> discount_ratio_;
  std::array<std::unordered_map<Key, double>, kOrder> probs_;
  // Index 0: unigram contexts, 1: bigram contexts.
  std::array<std::unordered_map<Key, double>, kOrder - 1> backoff_;
};

struct WordSurprisal {
  std::string token;
  double bits = 0.0;
};

struct SurprisalResult {
  std::vector<WordSurprisal> per_word;  // sentence tokens then </s>
  double sentence_total = 0.0;
};

// -log2 P of each word given up to two predecessors, plus </s>.
SurprisalResult surprisal(const NgramModel& model, std::span<const std::string> sentence);

// Rows "sentence_id<TAB>token_index<TAB>token<TAB>surprisal_bits"; token_index
// counts from 1 and </s> takes the last index.
void write_surprisal_header(std::ostream& out);
void write_surprisal_rows(std::ostream& out, const std::string& sentence_id,
                          const SurprisalResult& result);

}  // namespace wordorder

#endif  // WORDORDER_NGRAM_LM_H_
