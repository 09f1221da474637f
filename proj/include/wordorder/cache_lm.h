#ifndef WORDORDER_CACHE_LM_H_
#define WORDORDER_CACHE_LM_H_

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wordorder/ngram_lm.h"

namespace wordorder {

enum class CacheDenominator {
  kCapacity,  // counts / H, even when fewer than H words are held
  kHistory,   // counts / |history|
};

// Unigram cache over the most recent `capacity` words.
class CacheState {
 public:
  explicit CacheState(std::size_t capacity = 100,
                      CacheDenominator denominator = CacheDenominator::kCapacity);

  // Appends a word, evicting the oldest once the history is full.
  void push(const std::string& word);
  void clear();

  double probability(const std::string& word) const;
  std::size_t count(const std::string& word) const;
  std::size_t size() const { return history_.size(); }
  std::size_t capacity() const { return capacity_; }
  CacheDenominator denominator() const { return denominator_; }
  const std::deque<std::string>& history() const { return history_; }

 private:
  std::size_t capacity_;
  CacheDenominator denominator_;
  std::deque<std::string> history_;
  std::unordered_map<std::string, std::size_t> counts_;
};

// A fresh cache (same capacity and denominator as `cache`) holding the tokens
// of the last `k` sentences of `context`, truncated to the most recent words.
CacheState adapt_cache(const CacheState& cache,
                       std::span<const std::vector<std::string>> context, std::size_t k);

// mu * P_cache(w) + (1 - mu) * P_trigram(w | h).
double interpolated_probability(const NgramModel& model, const CacheState& cache,
                                const std::string& word,
                                std::span<const std::string> history, double mu);

// Scores `sentence` without adding it to the cache. </s> is scored too.
SurprisalResult cache_surprisal(const NgramModel& model, const CacheState& cache,
                                std::span<const std::string> sentence, double mu = 0.05);

}  // namespace wordorder

#endif  // WORDORDER_CACHE_LM_H_
