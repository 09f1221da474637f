// Acceptance checks. One PASS / FAIL / SKIP line per criterion; exit status
// is nonzero when anything fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wordorder/cache_lm.h"
#include "wordorder/config.h"
#include "wordorder/ngram_lm.h"
#include "wordorder/pairrank.h"
#include "wordorder/pipeline.h"
#include "wordorder/random.h"
#include "wordorder/regression.h"
#include "wordorder/stats.h"
#include "wordorder/synth.h"
#include "wordorder/variantgen.h"

using namespace wordorder;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const std::string& name, const std::string& status, const std::string& detail) {
  std::cout << status << "  " << name << "  (" << detail << ")" << std::endl;
  if (status == "FAIL") ++failures;
}

// Runs a check; an exception counts as a failure.
void criterion(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    report(name, ok ? "PASS" : "FAIL", detail);
  } catch (const std::exception& e) {
    report(name, "FAIL", std::string("exception: ") + e.what());
  }
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / fmt::format("wordorder_acceptance_{}", getpid()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const SubsetResult* find_subset(const EvalReport& r, const std::string& name) {
  for (const auto& s : r.subsets) {
    if (s.subset.name == name) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

std::pair<bool, std::string> joachims_example() {
  FeatureTable t;
  t.names = {"dep_length", "trigram_surp", "pcfg_surp"};
  t.rows.push_back({"ref", "ex", true, {{"dep_length", 18}, {"trigram_surp", 24.69}, {"pcfg_surp", 61.13}}});
  t.rows.push_back({"v1", "ex", false, {{"dep_length", 20}, {"trigram_surp", 23.80}, {"pcfg_surp", 60.67}}});
  t.rows.push_back({"v2", "ex", false, {{"dep_length", 18}, {"trigram_surp", 23.02}, {"pcfg_surp", 60.02}}});
  TransformOptions opts;
  opts.reference_first = false;
  const auto pairs = joachims_transform(t, opts);
  if (pairs.instances.size() != 2) return {false, "expected 2 instances"};
  const std::vector<std::vector<double>> want{{2, -0.89, -0.46}, {0, 1.67, 1.11}};
  const std::vector<int> labels{0, 1};
  double worst = 0;
  bool ok = true;
  for (std::size_t i = 0; i < 2; ++i) {
    ok = ok && pairs.instances[i].label == labels[i];
    for (std::size_t j = 0; j < 3; ++j) {
      worst = std::max(worst, std::abs(pairs.instances[i].delta[j] - want[i][j]));
    }
  }
  ok = ok && worst < 1e-9;
  return {ok, fmt::format("max deviation {:.2e}, labels {} {}", worst, pairs.instances[0].label,
                          pairs.instances[1].label)};
}

std::vector<std::vector<std::string>> toy_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> s;
    const auto len = 2 + uniform_index(rng, 7);
    for (std::uint64_t k = 0; k < len; ++k) {
      s.push_back("w" + std::to_string(uniform_index(rng, 1 + uniform_index(rng, 25))));
    }
    out.push_back(s);
  }
  return out;
}

// Counts of counts taken straight from the text.
std::map<long, long> hand_count_of_counts(const std::vector<std::vector<std::string>>& corpus,
                                          std::size_t order) {
  std::map<std::vector<std::string>, long> counts;
  for (const auto& s : corpus) {
    std::vector<std::string> seq{"<s>"};
    seq.insert(seq.end(), s.begin(), s.end());
    seq.push_back("</s>");
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (i + 1 < order) continue;
      ++counts[std::vector<std::string>(seq.begin() + long(i + 1 - order), seq.begin() + long(i + 1))];
    }
  }
  std::map<long, long> coc;
  for (const auto& [g, c] : counts) ++coc[c];
  return coc;
}

std::pair<bool, std::string> lm_normalization() {
  const auto start = Clock::now();
  const auto corpus = toy_corpus(400, 17);
  const auto lm = NgramModel::train(corpus);
  const auto ids = lm.predictable();
  Rng rng(23);
  double worst_tri = 0, worst_cache = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto& s = corpus[uniform_index(rng, corpus.size())];
    const std::vector<std::string> h = trial % 5 == 0 ? std::vector<std::string>{"<s>", s[0]}
                                                      : std::vector<std::string>{s[0], s[1]};
    CacheState cache(100);
    while (cache.size() < cache.capacity()) {
      for (const auto& w : corpus[uniform_index(rng, corpus.size())]) cache.push(w);
    }
    double tri = 0, mixed = 0;
    for (auto id : ids) {
      const auto& w = lm.vocab().word(id);
      tri += lm.probability(w, h);
      mixed += interpolated_probability(lm, cache, w, h, 0.05);
    }
    worst_tri = std::max(worst_tri, std::abs(tri - 1.0));
    worst_cache = std::max(worst_cache, std::abs(mixed - 1.0));
  }

  double worst_gt = 0;
  int checked = 0;
  const int gt_max = lm.options().gt_max;
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto coc = hand_count_of_counts(corpus, n);
    for (long r = 1; r <= gt_max; ++r) {
      const auto nr = coc.count(r) ? coc.at(r) : 0;
      const auto next = coc.count(r + 1) ? coc.at(r + 1) : 0;
      if (nr == 0 || next == 0) continue;
      const double rstar = double(r + 1) * double(next) / double(nr);
      if (rstar > double(r)) continue;
      worst_gt = std::max(worst_gt, std::abs(lm.discounted_count(int(n), r) - rstar));
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst_tri < 1e-6 && worst_cache < 1e-6 && checked > 0 && worst_gt < 1e-9 &&
                  elapsed < 5.0;
  return {ok, fmt::format("trigram |sum-1| {:.1e}, cache {:.1e}, GT max error {:.1e} over {} counts, "
                          "{:.2f} s",
                          worst_tri, worst_cache, worst_gt, checked, elapsed)};
}

std::pair<bool, std::string> cache_hand_case() {
  std::ostringstream arpa;
  arpa << "\\data\\\nngram 1=13\n\n\\1-grams:\n-99\t<s>\n-1\t</s>\n-1\t<unk>\n";
  for (int i = 0; i < 10; ++i) arpa << "-1\tw" << i << '\n';
  arpa << "\n\\end\\\n";
  std::istringstream in(arpa.str());
  const auto lm = NgramModel::read_arpa(in);
  const std::vector<std::string> h{"w1", "w2"};
  CacheState cache(100);
  cache.push("w3");
  cache.push("w3");
  const double p = interpolated_probability(lm, cache, "w3", h, 0.05);
  return {lm.probability("w3", h) == 0.1 && p == 0.096,
          fmt::format("P_trigram {:.17g}, P {:.17g}", lm.probability("w3", h), p)};
}

std::pair<bool, std::string> regression_correctness() {
  Rng rng(31);
  // gradient against central differences
  const int n = 300;
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j < 4; ++j) x(i, j) = standard_normal(rng);
    y[i] = uniform_real(rng) < sigmoid(0.5 * x(i, 1) - x(i, 2)) ? 1.0 : 0.0;
  }
  double worst_grad = 0;
  for (int point = 0; point < 20; ++point) {
    Eigen::VectorXd beta(4);
    for (int j = 0; j < 4; ++j) beta[j] = 2.0 * standard_normal(rng);
    const Eigen::VectorXd g = logistic::gradient(x, y, beta);
    Eigen::VectorXd fd(4);
    for (int j = 0; j < 4; ++j) {
      Eigen::VectorXd up = beta, down = beta;
      up[j] += 1e-5;
      down[j] -= 1e-5;
      fd[j] = (logistic::log_likelihood(x, y, up) - logistic::log_likelihood(x, y, down)) / 2e-5;
    }
    worst_grad = std::max(worst_grad, (g - fd).norm() / std::max(1.0, g.norm()));
  }

  // recovery of known weights
  PairSet p;
  p.feature_names = {"x1", "x2"};
  for (int i = 0; i < 50000; ++i) {
    PairInstance inst;
    inst.family_id = "f" + std::to_string(i);
    inst.delta = {standard_normal(rng), standard_normal(rng)};
    inst.label = uniform_real(rng) < sigmoid(0.8 * inst.delta[0] - 0.5 * inst.delta[1]) ? 1 : 0;
    p.instances.push_back(inst);
  }
  const auto m = fit(p);
  const double e1 = std::abs(m.weight("x1") - 0.8), e2 = std::abs(m.weight("x2") + 0.5);

  // VIF against R^2 from an independent least-squares solve
  Eigen::MatrixXd v(4000, 3);
  for (int i = 0; i < 4000; ++i) {
    v(i, 0) = standard_normal(rng);
    v(i, 1) = 0.9 * v(i, 0) + 0.3 * standard_normal(rng);
    v(i, 2) = standard_normal(rng) - 0.4 * v(i, 1);
  }
  const auto vifs = vif(v);
  double worst_vif = 0;
  for (Eigen::Index j = 0; j < 3; ++j) {
    Eigen::MatrixXd d(v.rows(), 3);
    d.col(0).setOnes();
    for (Eigen::Index k = 0, c = 1; k < 3; ++k) {
      if (k != j) d.col(c++) = v.col(k);
    }
    const Eigen::VectorXd target = v.col(j);
    const Eigen::VectorXd b = d.householderQr().solve(target);
    const double ss_res = (target - d * b).squaredNorm();
    const double ss_tot = (target.array() - target.mean()).matrix().squaredNorm();
    const double r2 = 1.0 - ss_res / ss_tot;
    worst_vif = std::max(worst_vif, std::abs(vifs[std::size_t(j)] - 1.0 / (1.0 - r2)));
  }
  const bool ok = worst_grad < 1e-6 && e1 <= 0.05 && e2 <= 0.05 && worst_vif < 1e-9;
  return {ok, fmt::format("gradient rel err {:.1e}; weights {:.3f} {:.3f}; VIF err {:.1e}", worst_grad,
                          m.weight("x1"), m.weight("x2"), worst_vif)};
}

std::pair<bool, std::string> stats_oracles() {
  const auto mc = mcnemar_exact(1, 9);
  const double mc_err = std::abs(mc.p - 22.0 / 1024.0);

  Rng rng(37);
  PairSet p;
  p.feature_names = {"x1", "x2"};
  for (int i = 0; i < 2000; ++i) {
    PairInstance inst;
    inst.family_id = "f" + std::to_string(i);
    inst.delta = {standard_normal(rng), standard_normal(rng)};
    inst.label = uniform_real(rng) < sigmoid(inst.delta[0]) ? 1 : 0;
    p.instances.push_back(inst);
  }
  const auto m = fit(p);
  const auto lrt = likelihood_ratio_test(m, m);

  Eigen::MatrixXd x(1000, 2);
  for (int i = 0; i < 1000; ++i) {
    x(i, 0) = standard_normal(rng);
    x(i, 1) = x(i, 0);
  }
  const auto r = pearson_matrix(x, {"a", "a_again"});
  const bool ok = mc_err < 1e-12 && lrt.chi2 == 0.0 && std::abs(r.r(0, 1) - 1.0) < 1e-12 &&
                  std::abs(r.r(0, 0) - 1.0) < 1e-12;
  return {ok, fmt::format("McNemar p {:.15f}, LRT chi2 {}, r {:.15f}", mc.p, lrt.chi2, r.r(0, 1))};
}

struct SynthRun {
  SynthFiles files;
  PipelineResult result;
  double seconds = 0;
};

SynthRun run_synthetic(const fs::path& dir) {
  SynthRun run;
  const auto start = Clock::now();
  SynthOptions o;
  o.families = 200;
  o.constituents = 5;
  run.files = write_synthetic_study(make_synthetic_corpus(o), dir / "study", o);
  auto config = RunConfig::load(run.files.config);
  config.output_dir = dir / "runs";
  run.result = run_pipeline(config);
  run.seconds = seconds_since(start);
  return run;
}

std::pair<bool, std::string> end_to_end(const SynthRun& run) {
  const auto* tri = find_subset(run.result.report, "e");
  const auto* noise = find_subset(run.result.report, "noise");
  if (!tri || !noise) return {false, "report lacks the trigram or noise model"};
  const double t = tri->full.percent(), z = noise->full.percent();
  const bool ok = run.result.references == 200 && t >= 90.0 && std::abs(z - 50.0) <= 3.0 &&
                  run.seconds < 60.0;
  return {ok, fmt::format("{} families, {} pairs; trigram {:.2f}%, noise {:.2f}%, {:.1f} s",
                          run.result.references, run.result.report.pairs, t, z, run.seconds)};
}

std::pair<bool, std::string> determinism(const SynthRun& first, const fs::path& dir) {
  auto config = RunConfig::load(first.files.config);
  config.output_dir = dir / "again";
  const auto second = run_pipeline(config);
  std::vector<std::string> differing;
  for (const char* name : {"manifest.json", "features.csv", "report.json"}) {
    const auto a = slurp(first.result.run_dir / name);
    const auto b = slurp(second.run_dir / name);
    if (a.empty() || a != b) differing.push_back(name);
  }
  std::string detail = "manifest.json, features.csv, report.json identical";
  if (!differing.empty()) {
    detail = "differs:";
    for (const auto& d : differing) detail += " " + d;
  }
  return {differing.empty(), detail};
}

// A verb with n preverbal constituents r1..rn, one word each.
DependencyTree flat_tree(const std::string& id, int n) {
  std::ostringstream conll;
  conll << "# sent_id = " << id << '\n';
  for (int i = 1; i <= n; ++i) {
    conll << i << "\tw" << i << "\tw" << i << "\tNN\tNN\t_\t" << n + 1 << "\tr" << i << '\n';
  }
  conll << n + 1 << "\tverb\tverb\tVM\tVM\t_\t0\tmain\n\n";
  std::istringstream in(conll.str());
  return parse_treebank(in).trees.at(0);
}

std::pair<bool, std::string> variant_properties() {
  std::vector<std::string> problems;

  // soundness and reference presence on the synthetic treebank
  SynthOptions o;
  o.families = 100;
  const auto corpus = make_synthetic_corpus(o);
  const auto attested = collect_attested_bigrams(corpus.trees);
  std::size_t records = 0, families = 0;
  for (const auto& tree : corpus.trees) {
    VariantOptions vo;
    vo.seed = mix_seed(3, tree.sentence_id());
    const auto family = generate_variants(tree, attested, vo);
    ++families;
    if (family.empty() || !family.front().is_reference || family.front().ordering != tree.surface_order()) {
      problems.push_back("reference missing in " + tree.sentence_id());
    }
    for (const auto& r : family) {
      ++records;
      const auto& seq = r.relation_sequence;
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        if (!attested.contains(seq[i], seq[i + 1])) {
          problems.push_back("unattested bigram in " + r.sentence_id);
          break;
        }
      }
    }
  }

  // cap: 6 constituents with every bigram attested give 720 survivors
  AttestedBigramSet all;
  for (int a = 1; a <= 6; ++a) {
    for (int b = 1; b <= 6; ++b) {
      if (a != b) all.add("r" + std::to_string(a), "r" + std::to_string(b));
    }
  }
  const auto six = generate_variants(flat_tree("six", 6), all, VariantOptions{});
  if (six.size() != 100) problems.push_back(fmt::format("cap gave {} records", six.size()));
  std::set<std::string> texts;
  for (const auto& r : six) texts.insert(r.text);
  if (texts.size() != six.size()) problems.push_back("duplicate variants under the cap");
  if (six.empty() || !six.front().is_reference) problems.push_back("capped family lost its reference");

  // five constituents: at most 120 candidates before filtering
  VariantOptions wide;
  wide.cap = 1000;
  const auto five = generate_variants(flat_tree("five", 5), all, wide);
  if (candidate_count(5) != 120) problems.push_back("candidate_count(5) != 120");
  if (five.size() > 120) problems.push_back(fmt::format("5 constituents gave {}", five.size()));

  std::string detail = fmt::format("{} records over {} families sound; cap family {}; 5-constituent family {}",
                                   records, families, six.size(), five.size());
  if (!problems.empty()) detail = problems.front() + fmt::format(" (+{} more)", problems.size() - 1);
  return {problems.empty(), detail};
}

void corpus_shape(const fs::path& dir) {
  const char* name = "corpus shape (1996 references, ~72833 variants, DO 1663, IO 1353)";
  const char* path = std::getenv("WORDORDER_CORPUS_CONFIG");
  if (!path || !*path) {
    report(name, "SKIP", "set WORDORDER_CORPUS_CONFIG to a run config over the licensed treebank");
    return;
  }
  criterion(name, [&]() -> std::pair<bool, std::string> {
    auto config = RunConfig::load(path);
    config.output_dir = dir / "corpus";
    const auto r = run_pipeline(config);
    const double rel = std::abs(double(r.variants) - 72833.0) / 72833.0;
    const bool ok = r.references == 1996 && rel <= 0.02 && r.report.do_pairs == 1663 &&
                    r.report.io_pairs == 1353;
    return {ok, fmt::format("{} references, {} variants ({:+.2f}%), DO {}, IO {}", r.references,
                            r.variants, 100.0 * (double(r.variants) - 72833.0) / 72833.0,
                            r.report.do_pairs, r.report.io_pairs)};
  });
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const auto root = scratch("");

  criterion("Joachims transform on the worked example", joachims_example);
  criterion("LM normalization and Good-Turing counts", lm_normalization);
  criterion("cache interpolation hand case = 0.096", cache_hand_case);
  criterion("regression: gradient, weight recovery, VIF identity", regression_correctness);
  criterion("statistics oracles: McNemar, LRT, Pearson", stats_oracles);

  SynthRun synth;
  bool have_synth = false;
  criterion("end-to-end synthetic study", [&] {
    synth = run_synthetic(root / "e2e");
    have_synth = true;
    return end_to_end(synth);
  });
  if (have_synth) {
    criterion("determinism of pipeline outputs", [&] { return determinism(synth, root / "e2e"); });
  } else {
    report("determinism of pipeline outputs", "FAIL", "synthetic run did not complete");
  }
  criterion("variant generation properties", variant_properties);
  corpus_shape(root);

  fs::remove_all(root.parent_path());
  std::cout << (failures ? fmt::format("{} criteria failed", failures) : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
