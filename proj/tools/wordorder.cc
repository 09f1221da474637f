#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "wordorder/config.h"
#include "wordorder/judgments.h"
#include "wordorder/pipeline.h"
#include "wordorder/serve.h"
#include "wordorder/synth.h"
#include "wordorder/treebank.h"

namespace wo = wordorder;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;

// Config file first, then --set overrides, then dedicated flags.
wo::RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  wo::RunConfig config = path.empty() ? wo::RunConfig{} : wo::RunConfig::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw wo::ConfigError("--set expects key=value, got " + kv);
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    config.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path);
}

void on_signal(int) { wo::stop_server(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Word-order preference toolkit"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Only warnings and errors");

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key = value config file");
    sub->add_option("--set", overrides, "Override a config key (key=value); repeatable");
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a treebank and summarise it");
  add_config(ingest);
  std::string treebank_flag;
  std::string summary_out;
  bool skip_invalid = false;
  ingest->add_option("--treebank", treebank_flag, "Treebank file (overrides config)");
  ingest->add_option("-o,--output", summary_out, "Write the JSON summary here (default stdout)");
  ingest->add_flag("--skip-invalid", skip_invalid, "Skip invalid sentences instead of failing");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run variants, LM, features, ranking and evaluation");
  add_config(pipeline);
  std::string seed_flag, output_flag, run_id_flag, threads_flag;
  pipeline->add_option("--seed", seed_flag, "Random seed (overrides config)");
  pipeline->add_option("--output-dir", output_flag, "Output directory (overrides config)");
  pipeline->add_option("--run-id", run_id_flag, "Run directory name (default: run-<config hash>)");
  pipeline->add_option("--threads", threads_flag, "Worker threads (overrides config)");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the forced-choice judgment study");
  std::string stimuli_path, log_path = "judgments.jsonl", predictions_path, assets;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t serve_seed = 0;
  serve->add_option("--stimuli", stimuli_path, "Stimuli JSON lines")->required()->check(CLI::ExistingFile);
  serve->add_option("--seed", serve_seed, "Seed for presentation order")->required();
  serve->add_option("--log", log_path, "Append-only judgment log")->capture_default_str();
  serve->add_option("--predictions", predictions_path, "Model predictions JSON lines")
      ->check(CLI::ExistingFile);
  serve->add_option("--assets", assets, "Directory of static UI files")->check(CLI::ExistingDirectory);
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 = any free port)")->capture_default_str();

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Aggregate human judgments into an agreement table");
  std::string judgments_path, agg_json;
  aggregate->add_option("--stimuli", stimuli_path, "Stimuli JSON lines")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--judgments", judgments_path, "Judgment log")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--predictions", predictions_path, "Model predictions JSON lines")
      ->check(CLI::ExistingFile);
  aggregate->add_option("--json", agg_json, "Also write the table as JSON here");

  // report
  auto* report = app.add_subcommand("report", "Print the tables of a finished run");
  std::string report_path;
  report->add_option("run", report_path, "Run directory or report.json")->required()->check(CLI::ExistingPath);

  // synth
  auto* synth = app.add_subcommand("synth", "Write the synthetic mini study (treebank, LM corpus, noise column, config)");
  std::string synth_dir;
  wo::SynthOptions synth_opts;
  synth->add_option("dir", synth_dir, "Output directory")->required();
  synth->add_option("--families", synth_opts.families, "Reference sentences")->capture_default_str();
  synth->add_option("--constituents", synth_opts.constituents, "Preverbal constituents per sentence")->capture_default_str();
  synth->add_option("--lm-sentences", synth_opts.lm_sentences, "LM training sentences")->capture_default_str();
  synth->add_option("--seed", synth_opts.seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("wordorder"));
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*ingest) {
      wo::RunConfig config = load_config(config_path, overrides);
      if (!treebank_flag.empty()) config.treebank = treebank_flag;
      if (skip_invalid) config.skip_invalid = true;
      if (config.treebank.empty()) throw wo::ConfigError("no treebank given");
      wo::ParseOptions po;
      po.source_name = config.treebank.stem().string();
      po.skip_invalid = config.skip_invalid;
      wo::ParseResult parsed;
      try {
        parsed = wo::parse_treebank_file(config.treebank.string(), po);
      } catch (const wo::TreebankError& e) {
        std::cerr << "invalid treebank: " << e.what() << '\n';
        return kExitInvalid;
      }
      const auto summary = wo::summarize_treebank(parsed);
      write_text(summary_out, summary.to_json().dump(2) + "\n");
      return 0;
    }
    if (*pipeline) {
      wo::RunConfig config = load_config(config_path, overrides);
      if (!seed_flag.empty()) config.set("seed", seed_flag);
      if (!output_flag.empty()) config.set("output_dir", output_flag);
      if (!run_id_flag.empty()) config.set("run_id", run_id_flag);
      if (!threads_flag.empty()) config.set("threads", threads_flag);
      try {
        const auto result = wo::run_pipeline(config);
        std::cout << result.report.to_text();
        std::cout << "\nrun written to " << result.run_dir.string() << '\n';
      } catch (const wo::StageError& e) {
        std::cerr << "pipeline failed in stage " << e.what() << '\n';
        return e.stage() == "ingest" || e.stage() == "config" ? kExitInvalid : kExitError;
      }
      return 0;
    }
    if (*serve) {
      std::vector<wo::Stimulus> stimuli;
      std::map<std::string, wo::ModelPrediction> predictions;
      try {
        stimuli = wo::read_stimuli_file(stimuli_path);
        if (!predictions_path.empty()) predictions = wo::read_predictions_file(predictions_path);
      } catch (const wo::JudgmentFormatError& e) {
        std::cerr << "refusing to start: " << e.what() << '\n';
        return kExitInvalid;
      }
      wo::JudgmentService service(std::move(stimuli), serve_seed, log_path, std::move(predictions));
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      wo::ServeOptions so;
      so.host = host;
      so.port = port;
      so.assets = assets;
      wo::run_server(service, so);
      spdlog::info("stopped; {} judgments on record", service.judgment_count());
      return 0;
    }
    if (*aggregate) {
      const auto stimuli = wo::read_stimuli_file(stimuli_path);
      const auto judgments = wo::read_judgments_file(judgments_path);
      std::map<std::string, wo::ModelPrediction> predictions;
      if (!predictions_path.empty()) predictions = wo::read_predictions_file(predictions_path);
      const auto table = wo::aggregate_judgments(stimuli, judgments, predictions);
      std::cout << table.to_text();
      if (!agg_json.empty()) write_text(agg_json, table.to_json().dump(2) + "\n");
      return 0;
    }
    if (*report) {
      std::filesystem::path p = report_path;
      if (std::filesystem::is_directory(p)) p /= "report.json";
      std::ifstream in(p);
      if (!in) throw std::runtime_error("cannot open " + p.string());
      std::cout << wo::render_report(nlohmann::json::parse(in));
      return 0;
    }
    if (*synth) {
      const auto corpus = wo::make_synthetic_corpus(synth_opts);
      const auto files = wo::write_synthetic_study(corpus, synth_dir, synth_opts);
      std::cout << "wrote " << files.config.string() << '\n';
      return 0;
    }
  } catch (const wo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const wo::JudgmentFormatError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
