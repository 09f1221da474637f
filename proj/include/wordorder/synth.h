#ifndef WORDORDER_SYNTH_H_
#define WORDORDER_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wordorder/features.h"
#include "wordorder/treebank.h"

namespace wordorder {

// A small artificial language for smoke-testing the whole pipeline. Every
// sentence is a run of preverbal constituents ([adj] noun postposition)
// followed by verb, auxiliary and full stop. Each noun carries a hidden rank;
// LM training sentences mostly order constituents by that rank, so the
// trigram model learns lexically conditioned order preferences. Each
// reference tree takes the permutation with the lowest trigram surprisal
// under that model.
struct SynthOptions {
  std::size_t families = 200;
  std::size_t constituents = 5;  // at most 5: one per relation k1 k2 k3 k4 k7t
  std::size_t lm_sentences = 4000;
  std::size_t sentences_per_doc = 10;
  std::size_t nouns = 24;
  double adjective_rate = 0.3;
  double order_noise = 0.1;  // share of LM sentences in random order
  std::size_t cap = 100;     // noise scores are written for ids up to #v(cap-1)
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<DependencyTree> trees;
  std::vector<std::vector<std::string>> lm_sentences;
  ExternalScoreColumn noise;  // standard normal draw per sentence id
};

SynthCorpus make_synthetic_corpus(const SynthOptions& options);

struct SynthFiles {
  std::filesystem::path treebank;
  std::filesystem::path lm_corpus;
  std::filesystem::path noise;
  std::filesystem::path config;
};

// Writes treebank.conll, lm_corpus.txt, noise.tsv and study.cfg into `dir`
// (created if missing). study.cfg evaluates a, b, d, e and the noise column.
SynthFiles write_synthetic_study(const SynthCorpus& corpus, const std::filesystem::path& dir,
                                 const SynthOptions& options);

}  // namespace wordorder

#endif  // WORDORDER_SYNTH_H_
