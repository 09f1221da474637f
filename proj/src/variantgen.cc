#include "wordorder/variantgen.h"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "wordorder/random.h"

namespace wordorder {

namespace {

// The sentence as a sequence of items: either a slot that receives one
// permutable constituent, or a token that stays where it is.
struct Layout {
  struct Item {
    int slot = -1;   // >= 0 for a constituent slot
    int token = 0;   // valid when slot < 0
  };
  std::vector<Item> items;
  std::vector<Constituent> constituents;  // slot k initially holds constituents[k]
};

bool contiguous(const std::vector<int>& indices) {
  return indices.back() - indices.front() + 1 == static_cast<int>(indices.size());
}

Layout make_layout(const DependencyTree& tree, const VerbalComplexConfig& config) {
  Layout layout;
  for (Constituent& c : preverbal_constituents(tree, config)) {
    if (contiguous(c.token_indices)) layout.constituents.push_back(std::move(c));
  }
  std::vector<int> slot_of(tree.size() + 1, -1);
  for (std::size_t k = 0; k < layout.constituents.size(); ++k) {
    for (int idx : layout.constituents[k].token_indices) {
      slot_of[static_cast<std::size_t>(idx)] = static_cast<int>(k);
    }
  }
  for (int idx = 1; idx <= static_cast<int>(tree.size()); ++idx) {
    const int slot = slot_of[static_cast<std::size_t>(idx)];
    if (slot < 0) {
      layout.items.push_back({-1, idx});
    } else if (layout.items.empty() || layout.items.back().slot != slot) {
      layout.items.push_back({slot, 0});
    }
  }
  return layout;
}

Ordering linearize(const Layout& layout, const std::vector<std::size_t>& perm) {
  Ordering ordering;
  for (const auto& item : layout.items) {
    if (item.slot < 0) {
      ordering.push_back(item.token);
    } else {
      const auto& c = layout.constituents[perm[static_cast<std::size_t>(item.slot)]];
      ordering.insert(ordering.end(), c.token_indices.begin(), c.token_indices.end());
    }
  }
  return ordering;
}

std::vector<std::string> relations_of(const Layout& layout,
                                      const std::vector<std::size_t>& perm) {
  std::vector<std::string> out;
  out.reserve(perm.size());
  for (std::size_t k : perm) out.push_back(layout.constituents[k].relation);
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace

bool AttestedBigramSet::admits(std::span<const std::string> sequence) const {
  for (std::size_t i = 1; i < sequence.size(); ++i) {
    if (!contains(sequence[i - 1], sequence[i])) return false;
  }
  return true;
}

AttestedBigramSet collect_attested_bigrams(std::span<const DependencyTree> trees,
                                           const VerbalComplexConfig& config) {
  AttestedBigramSet set;
  for (const DependencyTree& tree : trees) {
    const Layout layout = make_layout(tree, config);
    for (std::size_t k = 1; k < layout.constituents.size(); ++k) {
      set.add(layout.constituents[k - 1].relation, layout.constituents[k].relation);
    }
  }
  return set;
}

std::uint64_t candidate_count(std::size_t constituent_count) {
  std::uint64_t n = 1;
  for (std::size_t i = 2; i <= constituent_count; ++i) n *= i;
  return n;
}

std::vector<SentenceRecord> generate_variants(const DependencyTree& tree,
                                              const AttestedBigramSet& attested,
                                              const VariantOptions& options) {
  if (options.cap < 2) throw std::invalid_argument("variant cap must be at least 2");

  const Layout layout = make_layout(tree, options.verbal_complex);
  const std::size_t m = layout.constituents.size();
  std::vector<std::size_t> identity(m);
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  std::vector<SentenceRecord> records;
  SentenceRecord reference;
  reference.sentence_id = tree.sentence_id();
  reference.family_id = tree.sentence_id();
  reference.is_reference = true;
  reference.ordering = tree.surface_order();
  reference.text = tree.text();
  reference.relation_sequence = relations_of(layout, identity);
  records.push_back(reference);
  if (m < 2) return records;

  std::unordered_set<std::string> seen_text{reference.text};
  std::vector<SentenceRecord> survivors;
  auto consider = [&](const std::vector<std::size_t>& perm) {
    if (perm == identity) return;
    auto relations = relations_of(layout, perm);
    if (!attested.admits(relations)) return;
    Ordering ordering = linearize(layout, perm);
    std::string text = tree.text(ordering);
    if (!seen_text.insert(text).second) return;
    SentenceRecord r;
    r.family_id = tree.sentence_id();
    r.ordering = std::move(ordering);
    r.text = std::move(text);
    r.relation_sequence = std::move(relations);
    survivors.push_back(std::move(r));
  };

  Rng rng(options.seed);
  if (m <= options.max_enumerated_constituents) {
    std::vector<std::size_t> perm = identity;
    do {
      consider(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    const std::size_t draws = options.sample_pool_factor * options.cap;
    for (std::size_t d = 0; d < draws; ++d) {
      std::vector<std::size_t> perm = identity;
      seeded_shuffle(perm, rng);
      consider(perm);
    }
  }

  const std::size_t keep = options.cap - 1;
  if (survivors.size() > keep) {
    const auto chosen = sample_without_replacement(survivors.size(), keep, rng);
    std::vector<SentenceRecord> sampled;
    sampled.reserve(keep);
    for (std::size_t i : chosen) sampled.push_back(std::move(survivors[i]));
    survivors = std::move(sampled);
  }
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    survivors[i].sentence_id = fmt::format("{}#v{}", tree.sentence_id(), i + 1);
    records.push_back(std::move(survivors[i]));
  }
  return records;
}

void write_variants_tsv(std::ostream& out, std::span<const SentenceRecord> records) {
  out << "family_id\tsentence_id\tis_reference\tordering\ttext\n";
  for (const SentenceRecord& r : records) {
    out << r.family_id << '\t' << r.sentence_id << '\t' << (r.is_reference ? 1 : 0) << '\t';
    for (std::size_t i = 0; i < r.ordering.size(); ++i) {
      if (i) out << ' ';
      out << r.ordering[i];
    }
    out << '\t' << r.text << '\n';
  }
}

std::vector<SentenceRecord> read_variants_tsv(std::istream& in) {
  std::vector<SentenceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("family_id\t", 0) == 0) continue;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    if (fields.size() != 5) {
      throw std::runtime_error(fmt::format("variants TSV line {}: expected 5 columns", line_no));
    }
    SentenceRecord r;
    r.family_id = fields[0];
    r.sentence_id = fields[1];
    r.is_reference = fields[2] == "1";
    for (const auto& tok : split_ws(fields[3])) r.ordering.push_back(std::stoi(tok));
    r.text = fields[4];
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace wordorder
