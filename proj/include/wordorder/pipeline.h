#ifndef WORDORDER_PIPELINE_H_
#define WORDORDER_PIPELINE_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "wordorder/config.h"
#include "wordorder/stats.h"
#include "wordorder/treebank.h"

namespace wordorder {

// A failure inside one pipeline stage; what() starts with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& detail);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct TreebankSummary {
  std::size_t sentences = 0;
  std::size_t documents = 0;
  std::size_t tokens = 0;
  std::map<std::string, std::size_t> relations;  // deprel -> token count
  std::size_t skipped = 0;                       // invalid blocks skipped

  nlohmann::json to_json() const;
};

TreebankSummary summarize_treebank(const ParseResult& parsed);

struct PipelineResult {
  std::string run_id;
  std::filesystem::path run_dir;
  std::size_t references = 0;
  std::size_t variants = 0;
  std::size_t dropped_families = 0;  // references with no admissible variant
  EvalReport report;
};

// Runs every stage and writes into <output_dir>/<run_id>. The run id
// defaults to "run-" plus the config hash. Refuses to touch an existing run
// directory. Artifacts: summary.json, variants.tsv, lm.arpa, features.csv,
// surprisal.tsv, pairs.csv, models.json, report.json, report.txt,
// manifest.json.
PipelineResult run_pipeline(const RunConfig& config);

// Plain-text rendering of a report.json document.
std::string render_report(const nlohmann::json& report);

}  // namespace wordorder

#endif  // WORDORDER_PIPELINE_H_
