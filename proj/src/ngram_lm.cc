#include "wordorder/ngram_lm.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

namespace wordorder {

namespace {

constexpr int kIdBits = 21;
constexpr std::uint64_t kIdMask = (1ULL << kIdBits) - 1;

std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<NgramModel::Id> unpack(std::uint64_t key, int order) {
  std::vector<NgramModel::Id> ids(static_cast<std::size_t>(order));
  for (int i = order - 1; i >= 0; --i) {
    ids[static_cast<std::size_t>(i)] = static_cast<NgramModel::Id>(key & kIdMask);
    key >>= kIdBits;
  }
  return ids;
}

// Continuations of one context, sorted by word id.
using Continuations = std::vector<std::pair<NgramModel::Id, long>>;

}  // namespace

Vocabulary::Vocabulary() {
  add(kSentenceStart);
  add(kSentenceEnd);
  add(kUnknown);
}

Vocabulary::Id Vocabulary::add(std::string_view word) {
  auto [it, inserted] = ids_.emplace(std::string(word), static_cast<Id>(words_.size()));
  if (inserted) {
    if (words_.size() > kIdMask) throw std::length_error("vocabulary exceeds 2^21 words");
    words_.emplace_back(word);
  }
  return it->second;
}

Vocabulary::Id Vocabulary::id(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

NgramModel::Key NgramModel::pack(std::span<const Id> ids) {
  Key key = 0;
  for (Id id : ids) key = (key << kIdBits) | (static_cast<Key>(id) & kIdMask);
  return key;
}

NgramModel NgramModel::train(std::istream& corpus, const TrainOptions& options) {
  std::vector<std::vector<std::string>> sentences;
  std::string line;
  while (std::getline(corpus, line)) {
    auto tokens = tokenize(line);
    if (!tokens.empty()) sentences.push_back(std::move(tokens));
  }
  return train(sentences, options);
}

NgramModel NgramModel::train(std::span<const std::vector<std::string>> sentences,
                             const TrainOptions& options) {
  if (sentences.empty()) throw std::invalid_argument("cannot train on an empty corpus");
  if (options.gt_max < 0) throw std::invalid_argument("gt_max must be non-negative");

  NgramModel model;
  model.options_ = options;

  std::map<std::string, long> word_counts;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++word_counts[w];
  }
  for (const auto& [w, c] : word_counts) {
    if (c >= options.min_count) model.vocab_.add(w);
  }

  // Count n-grams ending in every predicted position of "<s> w1 .. wn </s>".
  std::vector<Id> seq;
  for (const auto& s : sentences) {
    seq.assign(1, Vocabulary::kStart);
    for (const auto& w : s) seq.push_back(model.vocab_.id(w));
    seq.push_back(Vocabulary::kEnd);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      for (int n = 1; n <= kOrder && static_cast<std::size_t>(n) <= i + 1; ++n) {
        const std::span<const Id> gram(seq.data() + i + 1 - n, static_cast<std::size_t>(n));
        ++model.counts_[static_cast<std::size_t>(n - 1)][pack(gram)];
      }
    }
  }

  // Good-Turing ratios r*/r per order.
  for (int n = 0; n < kOrder; ++n) {
    auto& coc = model.count_of_counts_[static_cast<std::size_t>(n)];
    for (const auto& [key, c] : model.counts_[static_cast<std::size_t>(n)]) ++coc[c];
    std::vector<long> fallbacks;
    for (long r = 1; r <= options.gt_max; ++r) {
      const auto nr = coc.find(r);
      if (nr == coc.end()) continue;  // no n-gram has this count
      const auto next = coc.find(r + 1);
      double ratio = 1.0;
      if (next != coc.end()) {
        const double rstar = static_cast<double>(r + 1) * static_cast<double>(next->second) /
                             static_cast<double>(nr->second);
        if (rstar > 0.0 && rstar <= static_cast<double>(r)) {
          ratio = rstar / static_cast<double>(r);
        } else {
          fallbacks.push_back(r);
        }
      } else {
        fallbacks.push_back(r);
      }
      model.discount_ratio_[static_cast<std::size_t>(n)][r] = ratio;
    }
    if (!fallbacks.empty()) {
      spdlog::warn("{}-gram counts-of-counts degenerate at r = {}; using raw counts there",
                   n + 1, fmt::join(fallbacks, ","));
    }
  }

  const auto ratio = [&](int order, long r) {
    const auto& table = model.discount_ratio_[static_cast<std::size_t>(order - 1)];
    const auto it = table.find(r);
    return it == table.end() ? 1.0 : it->second;
  };
  const std::vector<Id> predictable = model.predictable();
  const std::size_t predictable_size = predictable.size();
  const double eps = options.min_leftover;

  // Unigrams: discounted mass for seen words; the rest is shared by the
  // predictable words that were never seen (typically <unk>).
  {
    long total = 0;
    for (const auto& [key, c] : model.counts_[0]) total += c;
    std::vector<Id> unseen;
    double seen_mass = 0.0;
    std::map<Id, double> seen;
    for (Id w : predictable) {
      const Id ids[1] = {w};
      const auto it = model.counts_[0].find(pack(ids));
      if (it == model.counts_[0].end()) {
        unseen.push_back(w);
      } else {
        const double p = ratio(1, it->second) * static_cast<double>(it->second) /
                         static_cast<double>(total);
        seen[w] = p;
        seen_mass += p;
      }
    }
    double scale = 1.0;
    double leftover = 1.0 - seen_mass;
    if (unseen.empty()) {
      scale = 1.0 / seen_mass;
      leftover = 0.0;
    } else if (leftover < eps) {
      scale = (1.0 - eps) / seen_mass;
      leftover = eps;
    }
    for (const auto& [w, p] : seen) {
      const Id ids[1] = {w};
      model.probs_[0][pack(ids)] = p * scale;
    }
    for (Id w : unseen) {
      const Id ids[1] = {w};
      model.probs_[0][pack(ids)] = leftover / static_cast<double>(unseen.size());
    }
  }

  // Higher orders: Katz backoff over the next lower order.
  for (int n = 2; n <= kOrder; ++n) {
    std::map<Key, Continuations> by_context;
    for (const auto& [key, c] : model.counts_[static_cast<std::size_t>(n - 1)]) {
      const auto ids = unpack(key, n);
      const std::span<const Id> context(ids.data(), static_cast<std::size_t>(n - 1));
      by_context[pack(context)].emplace_back(ids.back(), c);
    }
    for (auto& [context_key, continuations] : by_context) {
      std::sort(continuations.begin(), continuations.end());
      const auto context = unpack(context_key, n - 1);
      long total = 0;
      for (const auto& [w, c] : continuations) total += c;

      std::vector<double> p_seen;
      double seen_mass = 0.0;
      double lower_mass = 0.0;
      for (const auto& [w, c] : continuations) {
        const double p = ratio(n, c) * static_cast<double>(c) / static_cast<double>(total);
        p_seen.push_back(p);
        seen_mass += p;
        lower_mass += (n == 2) ? model.unigram(w) : model.bigram(w, context[1]);
      }
      double scale = 1.0;
      double leftover = 1.0 - seen_mass;
      const bool has_unseen = continuations.size() < predictable_size;
      if (!has_unseen) {
        scale = 1.0 / seen_mass;
        leftover = 0.0;
      } else if (leftover < eps) {
        scale = (1.0 - eps) / seen_mass;
        leftover = eps;
      }
      for (std::size_t i = 0; i < continuations.size(); ++i) {
        std::vector<Id> gram = context;
        gram.push_back(continuations[i].first);
        model.probs_[static_cast<std::size_t>(n - 1)][pack(gram)] = p_seen[i] * scale;
      }
      if (has_unseen) {
        model.backoff_[static_cast<std::size_t>(n - 2)][context_key] =
            leftover / (1.0 - lower_mass);
      }
    }
  }
  return model;
}

std::vector<NgramModel::Id> NgramModel::predictable() const {
  std::vector<Id> out;
  out.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (static_cast<Id>(i) != Vocabulary::kStart) out.push_back(static_cast<Id>(i));
  }
  return out;
}

double NgramModel::unigram(Id w) const {
  const Id ids[1] = {w};
  const auto it = probs_[0].find(pack(ids));
  return it == probs_[0].end() ? 0.0 : it->second;
}

double NgramModel::bigram(Id w, Id h1) const {
  const Id ids[2] = {h1, w};
  if (const auto it = probs_[1].find(pack(ids)); it != probs_[1].end()) return it->second;
  const Id ctx[1] = {h1};
  return backoff_weight(ctx) * unigram(w);
}

double NgramModel::trigram(Id w, Id h2, Id h1) const {
  const Id ids[3] = {h2, h1, w};
  if (const auto it = probs_[2].find(pack(ids)); it != probs_[2].end()) return it->second;
  const Id ctx[2] = {h2, h1};
  return backoff_weight(ctx) * bigram(w, h1);
}

double NgramModel::probability(Id word, std::span<const Id> history) const {
  if (history.size() >= 2) {
    return trigram(word, history[history.size() - 2], history[history.size() - 1]);
  }
  if (history.size() == 1) return bigram(word, history[0]);
  return unigram(word);
}

double NgramModel::probability(std::string_view word,
                               std::span<const std::string> history) const {
  std::vector<Id> ids;
  const std::size_t start = history.size() > 2 ? history.size() - 2 : 0;
  for (std::size_t i = start; i < history.size(); ++i) ids.push_back(vocab_.id(history[i]));
  return probability(vocab_.id(word), ids);
}

long NgramModel::count(std::span<const Id> ngram) const {
  if (ngram.empty() || ngram.size() > kOrder) return 0;
  const auto& table = counts_[ngram.size() - 1];
  const auto it = table.find(pack(ngram));
  return it == table.end() ? 0 : it->second;
}

long NgramModel::count_of_counts(int order, long r) const {
  if (order < 1 || order > kOrder) return 0;
  const auto& table = count_of_counts_[static_cast<std::size_t>(order - 1)];
  const auto it = table.find(r);
  return it == table.end() ? 0 : it->second;
}

double NgramModel::discounted_count(int order, long r) const {
  if (order < 1 || order > kOrder) throw std::out_of_range("order must be 1..3");
  const auto& table = discount_ratio_[static_cast<std::size_t>(order - 1)];
  const auto it = table.find(r);
  return static_cast<double>(r) * (it == table.end() ? 1.0 : it->second);
}

double NgramModel::backoff_weight(std::span<const Id> context) const {
  if (context.empty() || context.size() >= kOrder) return 1.0;
  const auto& table = backoff_[context.size() - 1];
  const auto it = table.find(pack(context));
  return it == table.end() ? 1.0 : it->second;
}

void NgramModel::write_arpa(std::ostream& out) const {
  // Sort every section by the words of the n-gram.
  std::array<std::vector<std::pair<std::vector<std::string>, Key>>, kOrder> sections;
  for (int n = 1; n <= kOrder; ++n) {
    auto& section = sections[static_cast<std::size_t>(n - 1)];
    for (const auto& [key, p] : probs_[static_cast<std::size_t>(n - 1)]) {
      std::vector<std::string> words;
      for (Id id : unpack(key, n)) words.push_back(vocab_.word(id));
      section.emplace_back(std::move(words), key);
    }
    if (n == 1) {
      const Id start[1] = {Vocabulary::kStart};
      section.emplace_back(std::vector<std::string>{std::string(kSentenceStart)}, pack(start));
    }
    std::sort(section.begin(), section.end());
  }

  out << "\n\\data\\\n";
  for (int n = 1; n <= kOrder; ++n) {
    out << "ngram " << n << '=' << sections[static_cast<std::size_t>(n - 1)].size() << '\n';
  }
  for (int n = 1; n <= kOrder; ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [words, key] : sections[static_cast<std::size_t>(n - 1)]) {
      const auto& table = probs_[static_cast<std::size_t>(n - 1)];
      const auto it = table.find(key);
      const double logp = it == table.end() ? -99.0 : std::log10(it->second);
      out << fmt::format("{:.10g}\t{}", logp, fmt::join(words, " "));
      if (n < kOrder) {
        const auto& bows = backoff_[static_cast<std::size_t>(n - 1)];
        if (const auto b = bows.find(key); b != bows.end()) {
          out << fmt::format("\t{:.10g}", std::log10(b->second));
        }
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NgramModel NgramModel::read_arpa(std::istream& in) {
  NgramModel model;
  std::string line;
  int section = 0;
  std::vector<std::tuple<int, std::vector<std::string>, double, std::optional<double>>> entries;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") continue;
    if (line == "\\end\\") break;
    if (line.rfind("ngram ", 0) == 0) continue;
    if (line.front() == '\\') {
      section = std::stoi(line.substr(1));
      if (section < 1 || section > kOrder) {
        throw std::runtime_error("ARPA section of unsupported order: " + line);
      }
      continue;
    }
    if (section == 0) continue;
    std::istringstream fields(line);
    double logp = 0.0;
    if (!(fields >> logp)) throw std::runtime_error("bad ARPA line: " + line);
    std::vector<std::string> words(static_cast<std::size_t>(section));
    for (auto& w : words) {
      if (!(fields >> w)) throw std::runtime_error("bad ARPA line: " + line);
    }
    std::optional<double> bow;
    double b = 0.0;
    if (fields >> b) bow = b;
    entries.emplace_back(section, std::move(words), logp, bow);
  }
  for (const auto& [n, words, logp, bow] : entries) {
    if (n == 1) model.vocab_.add(words[0]);
  }
  for (const auto& [n, words, logp, bow] : entries) {
    std::vector<Id> ids;
    for (const auto& w : words) {
      if (!model.vocab_.contains(w)) {
        throw std::runtime_error("ARPA n-gram uses a word missing from the unigrams: " + w);
      }
      ids.push_back(model.vocab_.id(w));
    }
    const Key key = pack(ids);
    if (!(n == 1 && ids[0] == Vocabulary::kStart)) {
      model.probs_[static_cast<std::size_t>(n - 1)][key] = std::pow(10.0, logp);
    }
    if (bow && n < kOrder) {
      model.backoff_[static_cast<std::size_t>(n - 1)][key] = std::pow(10.0, *bow);
    }
  }
  if (model.probs_[0].empty()) throw std::runtime_error("ARPA model has no unigrams");
  return model;
}

SurprisalResult surprisal(const NgramModel& model, std::span<const std::string> sentence) {
  SurprisalResult result;
  std::vector<NgramModel::Id> history{Vocabulary::kStart};
  auto score = [&](NgramModel::Id id, const std::string& token) {
    const std::size_t start = history.size() > 2 ? history.size() - 2 : 0;
    const double p = model.probability(
        id, std::span<const NgramModel::Id>(history.data() + start, history.size() - start));
    const double bits = p >= 1.0 ? 0.0 : -std::log2(p);
    result.per_word.push_back({token, bits});
    result.sentence_total += bits;
    history.push_back(id);
  };
  for (const auto& w : sentence) score(model.vocab().id(w), w);
  score(Vocabulary::kEnd, std::string(kSentenceEnd));
  return result;
}

void write_surprisal_header(std::ostream& out) {
  out << "sentence_id\ttoken_index\ttoken\tsurprisal_bits\n";
}

void write_surprisal_rows(std::ostream& out, const std::string& sentence_id,
                          const SurprisalResult& result) {
  for (std::size_t i = 0; i < result.per_word.size(); ++i) {
    out << sentence_id << '\t' << i + 1 << '\t' << result.per_word[i].token << '\t'
        << fmt::format("{}", result.per_word[i].bits) << '\n';
  }
}

}  // namespace wordorder
