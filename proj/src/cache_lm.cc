#include "wordorder/cache_lm.h"

#include <cmath>
#include <stdexcept>

namespace wordorder {

CacheState::CacheState(std::size_t capacity, CacheDenominator denominator)
    : capacity_(capacity), denominator_(denominator) {}

void CacheState::push(const std::string& word) {
  if (capacity_ == 0) return;
  if (history_.size() == capacity_) {
    const auto it = counts_.find(history_.front());
    if (--it->second == 0) counts_.erase(it);
    history_.pop_front();
  }
  history_.push_back(word);
  ++counts_[word];
}

void CacheState::clear() {
  history_.clear();
  counts_.clear();
}

std::size_t CacheState::count(const std::string& word) const {
  const auto it = counts_.find(word);
  return it == counts_.end() ? 0 : it->second;
}

double CacheState::probability(const std::string& word) const {
  const std::size_t c = count(word);
  if (c == 0) return 0.0;
  const std::size_t denom =
      denominator_ == CacheDenominator::kCapacity ? capacity_ : history_.size();
  return static_cast<double>(c) / static_cast<double>(denom);
}

CacheState adapt_cache(const CacheState& cache,
                       std::span<const std::vector<std::string>> context, std::size_t k) {
  CacheState adapted(cache.capacity(), cache.denominator());
  const std::size_t first = context.size() > k ? context.size() - k : 0;
  for (std::size_t s = first; s < context.size(); ++s) {
    for (const auto& w : context[s]) adapted.push(w);
  }
  return adapted;
}

double interpolated_probability(const NgramModel& model, const CacheState& cache,
                                const std::string& word,
                                std::span<const std::string> history, double mu) {
  return mu * cache.probability(word) + (1.0 - mu) * model.probability(word, history);
}

SurprisalResult cache_surprisal(const NgramModel& model, const CacheState& cache,
                                std::span<const std::string> sentence, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must lie in [0, 1]");
  SurprisalResult result;
  std::vector<std::string> history{std::string(kSentenceStart)};
  auto score = [&](const std::string& word) {
    const double p = interpolated_probability(model, cache, word, history, mu);
    const double bits = p >= 1.0 ? 0.0 : -std::log2(p);
    result.per_word.push_back({word, bits});
    result.sentence_total += bits;
    history.push_back(word);
  };
  for (const auto& w : sentence) score(w);
  score(std::string(kSentenceEnd));
  return result;
}

}  // namespace wordorder
