#include "wordorder/synth.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "wordorder/ngram_lm.h"
#include "wordorder/random.h"

namespace wordorder {
namespace {

struct Part {
  std::string relation;
  std::string postposition;
  int noun = 0;
  int adjective = -1;
};

const std::vector<std::pair<std::string, std::string>> kRelations = {
    {"k1", "ne"}, {"k2", "ko"}, {"k3", "se"}, {"k4", "ke_liye"}, {"k7t", "mem"}};

const std::vector<std::string> kVerbs = {"diya",  "bheja", "likha", "laya",   "becha",
                                         "sunaya", "dikhaya", "padha", "banaya", "khareeda"};

const std::vector<std::string> kAdjectives = {"bada", "chhota", "naya", "purana",
                                              "accha", "lamba", "saaf", "garam"};

std::string noun_form(int noun) { return fmt::format("n{:02d}", noun); }

std::vector<Part> draw_parts(const SynthOptions& o, Rng& rng) {
  std::vector<std::size_t> rel(kRelations.size());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = i;
  seeded_shuffle(rel, rng);
  const auto nouns = sample_without_replacement(o.nouns, o.constituents, rng);
  std::vector<Part> parts;
  for (std::size_t i = 0; i < o.constituents; ++i) {
    Part p;
    p.relation = kRelations[rel[i]].first;
    p.postposition = kRelations[rel[i]].second;
    p.noun = static_cast<int>(nouns[i]);
    if (uniform_real(rng) < o.adjective_rate) {
      p.adjective = static_cast<int>(uniform_index(rng, kAdjectives.size()));
    }
    parts.push_back(p);
  }
  std::vector<std::size_t> order(parts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  seeded_shuffle(order, rng);
  std::vector<Part> shuffled;
  for (std::size_t i : order) shuffled.push_back(parts[i]);
  return shuffled;
}

std::vector<std::string> words(const std::vector<Part>& parts, const std::vector<std::size_t>& order,
                               const std::string& verb) {
  std::vector<std::string> out;
  for (std::size_t i : order) {
    const Part& p = parts[i];
    if (p.adjective >= 0) out.push_back(kAdjectives[static_cast<std::size_t>(p.adjective)]);
    out.push_back(noun_form(p.noun));
    out.push_back(p.postposition);
  }
  out.push_back(verb);
  out.push_back("hai");
  out.push_back(".");
  return out;
}

DependencyTree build_tree(const std::string& id, const std::string& doc, int position,
                          const std::vector<Part>& parts, const std::vector<std::size_t>& order,
                          const std::string& verb) {
  std::size_t n = 3;
  for (const Part& p : parts) n += p.adjective >= 0 ? 3 : 2;
  const int verb_index = static_cast<int>(n - 2);
  std::vector<Token> tokens;
  auto add = [&](std::string form, std::string pos, int head, std::string deprel) {
    Token t;
    t.index = static_cast<int>(tokens.size() + 1);
    t.lemma = form;
    t.form = std::move(form);
    t.cpos = pos;
    t.pos = std::move(pos);
    t.feats = "_";
    t.head = head;
    t.deprel = std::move(deprel);
    tokens.push_back(std::move(t));
  };
  for (std::size_t i : order) {
    const Part& p = parts[i];
    const int noun_index = static_cast<int>(tokens.size()) + (p.adjective >= 0 ? 2 : 1);
    if (p.adjective >= 0) {
      add(kAdjectives[static_cast<std::size_t>(p.adjective)], "JJ", noun_index, "nmod__adj");
    }
    add(noun_form(p.noun), "NN", verb_index, p.relation);
    add(p.postposition, "PSP", noun_index, "lwg__psp");
  }
  add(verb, "VM", 0, "main");
  add("hai", "VAUX", verb_index, "lwg__vaux");
  add(".", "SYM", verb_index, "rsym");
  return DependencyTree(id, doc, position, std::move(tokens));
}

}  // namespace

SynthCorpus make_synthetic_corpus(const SynthOptions& o) {
  if (o.constituents < 2 || o.constituents > kRelations.size()) {
    throw std::invalid_argument("synthetic corpus needs 2 to 5 constituents per sentence");
  }
  if (o.nouns < o.constituents) throw std::invalid_argument("too few nouns");
  if (o.sentences_per_doc == 0) throw std::invalid_argument("sentences_per_doc must be positive");

  Rng rng(mix_seed(o.seed, "synth"));
  std::vector<double> rank(o.nouns);
  for (auto& r : rank) r = uniform_real(rng);

  SynthCorpus corpus;
  corpus.noise.name = "noise";
  for (std::size_t s = 0; s < o.lm_sentences; ++s) {
    const auto parts = draw_parts(o, rng);
    std::vector<std::size_t> order(parts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (uniform_real(rng) < o.order_noise) {
      seeded_shuffle(order, rng);
    } else {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return rank[static_cast<std::size_t>(parts[a].noun)] <
               rank[static_cast<std::size_t>(parts[b].noun)];
      });
    }
    const auto& verb = kVerbs[uniform_index(rng, kVerbs.size())];
    corpus.lm_sentences.push_back(words(parts, order, verb));
  }

  const NgramModel lm = NgramModel::train(corpus.lm_sentences);
  Rng noise_rng(mix_seed(o.seed, "noise"));
  for (std::size_t f = 0; f < o.families; ++f) {
    const auto parts = draw_parts(o, rng);
    const auto& verb = kVerbs[uniform_index(rng, kVerbs.size())];
    std::vector<std::size_t> order(parts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::size_t> best = order;
    double best_bits = std::numeric_limits<double>::infinity();
    do {
      const double bits = surprisal(lm, words(parts, order, verb)).sentence_total;
      if (bits < best_bits) {
        best_bits = bits;
        best = order;
      }
    } while (std::next_permutation(order.begin(), order.end()));

    const std::string id = fmt::format("s{:04d}", f + 1);
    const std::string doc = fmt::format("d{:03d}", f / o.sentences_per_doc + 1);
    corpus.trees.push_back(
        build_tree(id, doc, static_cast<int>(f % o.sentences_per_doc), parts, best, verb));
    corpus.noise.scores[id] = standard_normal(noise_rng);
    for (std::size_t v = 1; v < o.cap; ++v) {
      corpus.noise.scores[fmt::format("{}#v{}", id, v)] = standard_normal(noise_rng);
    }
  }
  return corpus;
}

SynthFiles write_synthetic_study(const SynthCorpus& corpus, const std::filesystem::path& dir,
                                 const SynthOptions& options) {
  std::filesystem::create_directories(dir);
  SynthFiles files{dir / "treebank.conll", dir / "lm_corpus.txt", dir / "noise.tsv",
                   dir / "study.cfg"};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(files.treebank);
    write_treebank(out, corpus.trees);
  }
  {
    auto out = open(files.lm_corpus);
    for (const auto& s : corpus.lm_sentences) {
      for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
      out << '\n';
    }
  }
  {
    std::vector<std::pair<std::string, double>> rows(corpus.noise.scores.begin(),
                                                     corpus.noise.scores.end());
    std::sort(rows.begin(), rows.end());
    auto out = open(files.noise);
    out << "sentence_id\tscore\n";
    for (const auto& [id, score] : rows) out << id << '\t' << fmt::format("{}", score) << '\n';
  }
  {
    auto out = open(files.config);
    out << "# synthetic study\n"
        << "treebank = treebank.conll\n"
        << "lm_corpus = lm_corpus.txt\n"
        << "external.noise = noise.tsv\n"
        << "output_dir = runs\n"
        << "cap = " << options.cap << '\n'
        << "folds = 10\n"
        << "seed = " << options.seed << '\n'
        << "subsets = a,b,d,e,noise\n";
  }
  return files;
}

}  // namespace wordorder
