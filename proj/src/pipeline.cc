#include "wordorder/pipeline.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wordorder/features.h"
#include "wordorder/ngram_lm.h"
#include "wordorder/pairrank.h"
#include "wordorder/random.h"
#include "wordorder/variantgen.h"

namespace wordorder {
namespace {

std::string fixed(const nlohmann::json& v, int digits) {
  if (v.is_number()) return fmt::format("{:.{}f}", v.get<double>(), digits);
  if (v.is_string()) return v.get<std::string>();
  return "NA";
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  spdlog::info("stage {}", name);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  template <typename Fn>
  void write(const std::string& stage_name, const std::string& file, Fn&& body) {
    std::ostringstream buffer;
    body(buffer);
    const std::string bytes = buffer.str();
    std::ofstream out(dir_ / file, std::ios::binary);
    out << bytes;
    out.close();
    if (!out) throw std::runtime_error("cannot write " + (dir_ / file).string());
    artifacts_.push_back({{"stage", stage_name},
                          {"file", file},
                          {"bytes", bytes.size()},
                          {"fnv1a64", fmt::format("{:016x}", stable_hash(bytes))}});
  }

  const nlohmann::json& artifacts() const { return artifacts_; }

 private:
  std::filesystem::path dir_;
  nlohmann::json artifacts_ = nlohmann::json::array();
};

FeatureTable featurize_parallel(const std::vector<SentenceRecord>& records,
                                const DocumentIndex& docs, const NgramModel& lm,
                                const std::vector<ExternalScoreColumn>& external,
                                const FeaturizeOptions& options, std::size_t threads) {
  threads = std::max<std::size_t>(1, std::min(threads, records.size() / 256 + 1));
  if (threads == 1) return featurize(records, docs, lm, external, options);
  const std::size_t chunk = (records.size() + threads - 1) / threads;
  std::vector<FeatureTable> parts(threads);
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          const std::size_t begin = std::min(records.size(), t * chunk);
          const std::size_t end = std::min(records.size(), begin + chunk);
          parts[t] = featurize(std::span(records).subspan(begin, end - begin), docs, lm, external,
                               options);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  FeatureTable table;
  table.names = parts.front().names;
  for (auto& p : parts) {
    std::move(p.rows.begin(), p.rows.end(), std::back_inserter(table.rows));
  }
  return table;
}

}  // namespace

StageError::StageError(std::string stage, const std::string& detail)
    : std::runtime_error(stage + ": " + detail), stage_(std::move(stage)) {}

nlohmann::json TreebankSummary::to_json() const {
  return {{"sentences", sentences},
          {"documents", documents},
          {"tokens", tokens},
          {"skipped", skipped},
          {"relations", relations}};
}

TreebankSummary summarize_treebank(const ParseResult& parsed) {
  TreebankSummary s;
  std::set<std::string> docs;
  for (const auto& tree : parsed.trees) {
    ++s.sentences;
    docs.insert(tree.doc_id());
    s.tokens += tree.size();
    for (const auto& t : tree.tokens()) ++s.relations[t.deprel];
  }
  s.documents = docs.size();
  s.skipped = parsed.errors.size();
  return s;
}

PipelineResult run_pipeline(const RunConfig& config) {
  stage("config", [&] {
    config.validate();
    return 0;
  });
  const std::uint64_t seed = *config.seed;
  PipelineResult result;
  result.run_id = config.run_id.empty() ? "run-" + config.hash() : config.run_id;
  result.run_dir = config.output_dir / result.run_id;

  stage("setup", [&] {
    std::filesystem::create_directories(config.output_dir);
    if (!std::filesystem::create_directory(result.run_dir)) {
      throw std::runtime_error("run directory already exists, refusing to overwrite: " +
                               result.run_dir.string());
    }
    return 0;
  });
  spdlog::info("writing run {} to {}", result.run_id, result.run_dir.string());
  RunWriter writer(result.run_dir);

  VerbalComplexConfig vc;
  vc.relations = config.verbal_complex;

  const ParseResult parsed = stage("ingest", [&] {
    ParseOptions po;
    po.source_name = config.treebank.stem().string();
    po.skip_invalid = config.skip_invalid;
    auto p = parse_treebank_file(config.treebank.string(), po);
    if (p.trees.empty()) throw std::runtime_error("treebank holds no valid sentences");
    const auto summary = summarize_treebank(p);
    writer.write("ingest", "summary.json",
                 [&](std::ostream& out) { out << summary.to_json().dump(2) << '\n'; });
    return p;
  });
  const auto& trees = parsed.trees;

  std::vector<SentenceRecord> records;
  std::map<std::string, ConstructionTag> tags;
  stage("variants", [&] {
    const auto attested = collect_attested_bigrams(trees, vc);
    spdlog::info("{} attested relation bigrams", attested.size());
    for (const auto& tree : trees) {
      VariantOptions vo;
      vo.cap = config.cap;
      vo.seed = mix_seed(seed, tree.sentence_id());
      vo.verbal_complex = vc;
      auto family = generate_variants(tree, attested, vo);
      if (family.size() < 2) {
        ++result.dropped_families;
        continue;
      }
      ++result.references;
      result.variants += family.size() - 1;
      tags[tree.sentence_id()] = construction_tag(tree);
      std::move(family.begin(), family.end(), std::back_inserter(records));
    }
    if (result.dropped_families) {
      spdlog::warn("{} references have no admissible variant and are left out",
                   result.dropped_families);
    }
    if (result.references == 0) throw std::runtime_error("no family has any variant");
    writer.write("variants", "variants.tsv",
                 [&](std::ostream& out) { write_variants_tsv(out, records); });
    return 0;
  });

  const NgramModel lm = stage("lm", [&] {
    std::ifstream in(config.lm_corpus);
    if (!in) throw std::runtime_error("cannot open " + config.lm_corpus.string());
    TrainOptions to;
    to.gt_max = config.gt_max;
    to.min_count = config.min_count;
    auto model = NgramModel::train(in, to);
    writer.write("lm", "lm.arpa", [&](std::ostream& out) { model.write_arpa(out); });
    return model;
  });

  const FeatureTable table = stage("features", [&] {
    std::vector<ExternalScoreColumn> external;
    for (const auto& [name, path] : config.external) {
      external.push_back(ExternalScoreColumn::read_file(name, path.string()));
    }
    FeaturizeOptions fo;
    fo.mu = config.mu;
    fo.cache_size = config.cache_size;
    fo.adapt_k = config.adapt_k;
    const DocumentIndex docs(trees);
    auto t = featurize_parallel(records, docs, lm, external, fo, config.threads);
    writer.write("features", "features.csv", [&](std::ostream& out) { write_feature_csv(out, t); });
    writer.write("features", "surprisal.tsv", [&](std::ostream& out) {
      write_surprisal_header(out);
      std::vector<std::string> words;
      for (const auto& r : records) {
        const DependencyTree* tree = docs.find(r.family_id);
        words.clear();
        for (int idx : r.ordering) words.push_back(tree->token(idx).form);
        write_surprisal_rows(out, r.sentence_id, surprisal(lm, words));
      }
    });
    return t;
  });

  const PairSet pairs = stage("pairs", [&] {
    TransformOptions opts;
    opts.seed = mix_seed(seed, "pairs");
    auto p = joachims_transform(table, opts);
    writer.write("pairs", "pairs.csv", [&](std::ostream& out) { write_pair_csv(out, p); });
    return p;
  });

  result.report = stage("evaluate", [&] {
    const auto subsets = select_subsets(config, table.names);
    const FoldPlan plan = make_fold_plan(pairs, config.folds, mix_seed(seed, "folds"));
    EvalOptions eo;
    eo.comparisons = config.comparisons;
    eo.threads = config.threads;
    auto report = cross_validate(pairs, plan, subsets, tags, eo);
    report.seed = seed;
    nlohmann::json models = nlohmann::json::object();
    for (const auto& s : report.subsets) models[s.subset.name] = s.model.to_json();
    writer.write("evaluate", "models.json",
                 [&](std::ostream& out) { out << models.dump(2) << '\n'; });
    writer.write("evaluate", "report.json",
                 [&](std::ostream& out) { out << report.to_json().dump(2) << '\n'; });
    writer.write("evaluate", "report.txt", [&](std::ostream& out) { out << report.to_text(); });
    return report;
  });

  stage("manifest", [&] {
    nlohmann::json settings = nlohmann::json::object();
    std::istringstream lines(config.canonical());
    std::string line;
    while (std::getline(lines, line)) {
      const auto eq = line.find(" = ");
      settings[line.substr(0, eq)] = line.substr(eq + 3);
    }
    nlohmann::json manifest = {{"config_hash", config.hash()},
                               {"seed", seed},
                               {"config", settings},
                               {"counts",
                                {{"references", result.references},
                                 {"variants", result.variants},
                                 {"dropped_families", result.dropped_families},
                                 {"pairs", pairs.instances.size()}}},
                               {"artifacts", writer.artifacts()}};
    std::ofstream out(result.run_dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write manifest");
    return 0;
  });
  return result;
}

std::string render_report(const nlohmann::json& r) {
  std::ostringstream out;
  out << fmt::format("Prediction accuracy ({}-fold CV; {} pairs, {} families; DO {} / IO {} pairs)\n",
                     r.value("folds", 0), r.value("pairs", 0), r.value("families", 0),
                     r.value("do_fronted_pairs", 0), r.value("io_fronted_pairs", 0));
  out << fmt::format("{:<24} {:>8} {:>8} {:>8}\n", "model", "full %", "DO %", "IO %");
  for (const auto& m : r.at("models")) {
    const auto& acc = m.at("accuracy");
    out << fmt::format("{:<24} {:>8} {:>8} {:>8}\n", m.at("name").get<std::string>(),
                       fixed(acc.at("full"), 2), fixed(acc.at("do_fronted"), 2),
                       fixed(acc.at("io_fronted"), 2));
  }
  if (r.contains("mcnemar") && !r["mcnemar"].empty()) {
    out << "\nMcNemar exact two-tailed tests\n";
    for (const auto& c : r["mcnemar"]) {
      out << fmt::format("{} vs {}: b = {}, c = {}, p = {}\n", c.at("model_a").get<std::string>(),
                         c.at("model_b").get<std::string>(), c.at("b").get<long>(),
                         c.at("c").get<long>(), fixed(c.at("p"), 4));
    }
  }
  if (r.contains("lrt") && !r["lrt"].empty()) {
    out << "\nLikelihood-ratio tests\n";
    for (const auto& t : r["lrt"]) {
      out << fmt::format("{} -> {}: chi2 = {}, df = {}, p = {}\n",
                         t.at("reduced").get<std::string>(), t.at("full").get<std::string>(),
                         fixed(t.at("chi2"), 2), t.at("df").get<int>(), fixed(t.at("p"), 4));
    }
  }
  if (r.contains("vif") && !r["vif"].empty()) {
    out << "\nVariance inflation factors\n";
    for (const auto& [name, v] : r["vif"].items()) {
      out << fmt::format("{:<24} {:>10}\n", name, fixed(v, 2));
    }
  }
  return out.str();
}

}  // namespace wordorder
