#ifndef WORDORDER_CONFIG_H_
#define WORDORDER_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wordorder/stats.h"

namespace wordorder {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "key = value" configuration. '#' starts a comment line.
//
//   treebank, lm_corpus, output_dir, run_id     paths / names
//   external.<name> = path                      external score column
//   cap, mu, cache_size, adapt_k, folds, seed   parameters
//   gt_max, min_count, threads, skip_invalid
//   verbal_complex = lwg_*,rsym
//   subsets = a,b,base1,base1+g                 models to evaluate
//   subset.<name> = feat+feat                   custom model definitions
//   compare = base1:base1+g,base2:base2+g       McNemar pairs
struct RunConfig {
  std::filesystem::path treebank;
  std::filesystem::path lm_corpus;
  std::filesystem::path output_dir = "runs";
  std::string run_id;
  std::vector<std::pair<std::string, std::filesystem::path>> external;

  std::size_t cap = 100;
  double mu = 0.05;
  std::size_t cache_size = 100;
  std::size_t adapt_k = 1;
  std::size_t folds = 10;
  std::optional<std::uint64_t> seed;
  int gt_max = 7;
  int min_count = 1;
  std::size_t threads = 1;
  bool skip_invalid = false;
  std::vector<std::string> verbal_complex = {"lwg_*", "rsym"};

  std::vector<std::string> subsets;
  std::map<std::string, std::string> custom_subsets;
  std::vector<std::pair<std::string, std::string>> comparisons;

  // Relative paths resolve against `base_dir`.
  static RunConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  // Applies one "key = value" setting (also used for command-line overrides).
  void set(const std::string& key, const std::string& value,
           const std::filesystem::path& base_dir = {});

  // Seed present and every input path exists; throws ConfigError otherwise.
  void validate() const;

  // Sorted key = value lines covering every setting except output_dir and
  // run_id. Enough to re-run the pipeline.
  std::string canonical() const;
  std::string hash() const;  // 16 hex digits over canonical()
};

// Expands a model name: a custom subset, a standard model letter (a..g, base1,
// base2), a feature name, or a '+'-joined combination of those.
std::vector<std::string> resolve_subset(const std::string& name,
                                        const std::map<std::string, std::string>& custom);

// The model list to evaluate. Explicit `subsets` are resolved strictly; the
// default list is the standard models whose features are all available, then
// one single-feature model per external column not already covered.
std::vector<FeatureSubset> select_subsets(const RunConfig& config,
                                          const std::vector<std::string>& available);

}  // namespace wordorder

#endif  // WORDORDER_CONFIG_H_
