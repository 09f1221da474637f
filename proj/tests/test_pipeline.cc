#include <cstdlib>
#include <fstream>

#include <sys/wait.h>

#include "doctest.h"
#include "test_util.h"
#include "wordorder/pipeline.h"
#include "wordorder/synth.h"

using namespace wordorder;
namespace fs = std::filesystem;

namespace {

SynthFiles small_study(const fs::path& dir) {
  SynthOptions o;
  o.families = 60;
  o.constituents = 4;
  o.lm_sentences = 1500;
  o.seed = 5;
  return write_synthetic_study(make_synthetic_corpus(o), dir, o);
}

RunConfig config_for(const SynthFiles& files, const fs::path& out) {
  auto c = RunConfig::load(files.config);
  c.output_dir = out;
  return c;
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(WORDORDER_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// One CoNLL token line.
std::string tok(int index, const std::string& form, int head, const std::string& rel) {
  return std::to_string(index) + "\t" + form + "\t" + form + "\tNN\tNN\t_\t" + std::to_string(head) +
         "\t" + rel + "\n";
}

}  // namespace

TEST_CASE("a small synthetic run writes every artifact") {
  const auto dir = testutil::temp_dir("pipeline_artifacts");
  const auto files = small_study(dir / "study");
  const auto config = config_for(files, dir / "runs");
  const auto result = run_pipeline(config);
  CHECK(result.run_id == "run-" + config.hash());
  CHECK(result.references + result.dropped_families == 60);
  CHECK(result.variants > result.references);
  for (const char* name : {"summary.json", "variants.tsv", "lm.arpa", "features.csv", "surprisal.tsv",
                           "pairs.csv", "models.json", "report.json", "report.txt", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(result.run_dir / name), name);
  }
  const auto manifest = nlohmann::json::parse(testutil::slurp(result.run_dir / "manifest.json"));
  CHECK(manifest["config_hash"] == config.hash());
  CHECK(manifest["counts"]["references"] == result.references);
  CHECK(manifest["seed"] == 5);

  const auto report = nlohmann::json::parse(testutil::slurp(result.run_dir / "report.json"));
  CHECK(report["models"].size() == 5);
  CHECK(render_report(report).find("noise") != std::string::npos);

  // a second run into the same directory is refused
  try {
    run_pipeline(config);
    FAIL("overwrote an existing run");
  } catch (const StageError& e) {
    CHECK(e.stage() == "setup");
  }
}

TEST_CASE("identical configs give byte-identical outputs") {
  const auto dir = testutil::temp_dir("pipeline_determinism");
  const auto files = small_study(dir / "study");
  const auto a = run_pipeline(config_for(files, dir / "one"));
  const auto b = run_pipeline(config_for(files, dir / "two"));
  CHECK(a.run_id == b.run_id);
  for (const char* name : {"manifest.json", "features.csv", "report.json", "variants.tsv", "pairs.csv"}) {
    CHECK_MESSAGE(testutil::slurp(a.run_dir / name) == testutil::slurp(b.run_dir / name), name);
  }
}

TEST_CASE("thread count does not change results") {
  const auto dir = testutil::temp_dir("pipeline_threads");
  const auto files = small_study(dir / "study");
  auto one = config_for(files, dir / "runs");
  auto four = one;
  four.threads = 4;
  const auto a = run_pipeline(one);
  const auto b = run_pipeline(four);
  CHECK(a.run_dir != b.run_dir);
  CHECK(testutil::slurp(a.run_dir / "features.csv") == testutil::slurp(b.run_dir / "features.csv"));
  CHECK(testutil::slurp(a.run_dir / "report.json") == testutil::slurp(b.run_dir / "report.json"));
}

TEST_CASE("config and ingest failures name their stage") {
  const auto dir = testutil::temp_dir("pipeline_failures");
  const auto files = small_study(dir / "study");
  auto c = config_for(files, dir / "runs");
  c.seed.reset();
  try {
    run_pipeline(c);
    FAIL("ran without a seed");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
  }
  testutil::spit(dir / "bad.conll", tok(1, "a", 2, "k1") + tok(2, "b", 1, "main") + "\n");
  c = config_for(files, dir / "runs");
  c.treebank = dir / "bad.conll";
  try {
    run_pipeline(c);
    FAIL("accepted a rootless tree");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
  }
}

TEST_CASE("command line") {
  const auto dir = testutil::temp_dir("pipeline_cli");
  const auto err = dir / "stderr.txt";

  testutil::spit(dir / "cycle.conll",
                 "# sent_id = s1\n" + tok(1, "a", 2, "k1") + tok(2, "b", 0, "main") + "\n" +
                     "# sent_id = broken7\n" + tok(1, "a", 3, "k1") + tok(2, "b", 1, "k2") +
                     tok(3, "c", 2, "main") + "\n");
  CHECK(run_cli("ingest --treebank " + (dir / "cycle.conll").string(), err) == 2);
  const auto message = testutil::slurp(err);
  CHECK(message.find("invalid treebank") != std::string::npos);
  CHECK(message.find("broken7") != std::string::npos);

  testutil::spit(dir / "ok.conll",
                 tok(1, "a", 2, "k1") + tok(2, "b", 0, "main") + "\n" + tok(1, "c", 2, "k2") +
                     tok(2, "d", 0, "main") + "\n" + tok(1, "e", 3, "k1") + tok(2, "f", 3, "k2") +
                     tok(3, "g", 0, "main") + "\n");
  CHECK(run_cli("ingest --treebank " + (dir / "ok.conll").string() + " -o " +
                    (dir / "summary.json").string(),
                err) == 0);
  const auto summary = nlohmann::json::parse(testutil::slurp(dir / "summary.json"));
  CHECK(summary["sentences"] == 3);
  CHECK(summary["tokens"] == 7);
  CHECK(summary["relations"]["k1"] == 2);

  CHECK(run_cli("pipeline --set treebank=" + (dir / "ok.conll").string(), err) == 2);
  CHECK(testutil::slurp(err).find("config") != std::string::npos);

  CHECK(run_cli("synth " + (dir / "study").string() + " --families 30 --lm-sentences 800", err) == 0);
  CHECK(run_cli("-q pipeline -c " + (dir / "study" / "study.cfg").string() + " --output-dir " +
                    (dir / "runs").string() + " --run-id first",
                err) == 0);
  CHECK(fs::exists(dir / "runs" / "first" / "report.json"));
  CHECK(run_cli("report " + (dir / "runs" / "first").string(), err) == 0);
  // the same run id again is refused
  CHECK(run_cli("-q pipeline -c " + (dir / "study" / "study.cfg").string() + " --output-dir " +
                    (dir / "runs").string() + " --run-id first",
                err) == 1);
}
