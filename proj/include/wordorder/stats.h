#ifndef WORDORDER_STATS_H_
#define WORDORDER_STATS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "wordorder/pairrank.h"
#include "wordorder/regression.h"
#include "wordorder/treebank.h"

namespace wordorder {

// Families are the unit of assignment so a reference never appears on both
// sides of a split.
struct FoldPlan {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> assignment;

  std::size_t fold_of(const std::string& family_id) const;
};

// Shuffles the sorted unique ids with `seed` and deals them round-robin.
FoldPlan make_fold_plan(std::span<const std::string> family_ids, std::size_t k,
                        std::uint64_t seed);
FoldPlan make_fold_plan(const PairSet& pairs, std::size_t k, std::uint64_t seed);

struct ConstructionTag {
  bool do_fronted = false;  // a k2 constituent precedes the k1 constituent
  bool io_fronted = false;  // a k4 constituent precedes the k1 constituent
  bool canonical() const { return !do_fronted && !io_fronted; }
};

ConstructionTag construction_tag(const DependencyTree& reference);

struct FeatureSubset {
  std::string name;
  std::vector<std::string> features;
};

struct McNemarResult {
  long b = 0;  // a correct, b wrong
  long c = 0;  // a wrong, b correct
  double p = 1.0;
  bool degenerate = false;
};

McNemarResult mcnemar_exact(long b, long c);
McNemarResult mcnemar_exact(std::span<const char> a_correct, std::span<const char> b_correct);

struct LrtResult {
  double chi2 = 0.0;
  int df = 0;
  double p = 1.0;
};

// Both models fitted on the same instances; `reduced` features must be a
// subset of `full` features.
LrtResult likelihood_ratio_test(const RankerModel& full, const RankerModel& reduced);

// Variance inflation factor per column; +inf for a column that is an exact
// linear combination of the others, NaN for a constant column.
std::vector<double> vif(const Eigen::MatrixXd& x);

struct CorrelationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd r;
  std::vector<std::string> zero_variance;  // rows/columns set to NaN
};

CorrelationMatrix pearson_matrix(const Eigen::MatrixXd& x, const std::vector<std::string>& names);

// OLS of the 0/1 label on the chosen delta columns.
OlsResult ols_report(const PairSet& pairs, std::span<const std::string> subset);

// Delta columns of `pairs` as a matrix (rows = instances).
Eigen::MatrixXd delta_matrix(const PairSet& pairs);

struct SliceAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double percent() const;
};

struct SubsetResult {
  FeatureSubset subset;
  SliceAccuracy full;
  SliceAccuracy do_fronted;
  SliceAccuracy io_fronted;
  std::vector<double> fold_accuracy;  // percent per fold
  std::vector<char> correct;          // per pair instance
  RankerModel model;                  // fitted on all instances
  OlsResult ols;                      // fitted on all instances
};

struct EvalOptions {
  FitOptions fit;
  // McNemar comparisons by subset name; empty = each subset vs the previous.
  std::vector<std::pair<std::string, std::string>> comparisons;
  std::size_t threads = 1;
};

struct EvalReport {
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
  std::size_t families = 0;
  std::size_t do_pairs = 0;
  std::size_t io_pairs = 0;
  std::vector<SubsetResult> subsets;
  struct Comparison {
    std::string a;
    std::string b;
    McNemarResult result;
  };
  std::vector<Comparison> mcnemar;
  struct NestedTest {
    std::string reduced;
    std::string full;
    LrtResult result;
  };
  std::vector<NestedTest> lrt;
  std::vector<std::string> vif_names;
  std::vector<double> vif_values;
  CorrelationMatrix correlations;

  nlohmann::json to_json() const;
  // Plain-text tables: accuracy, comparisons, regression coefficients.
  std::string to_text() const;
};

// Cross-validated prefers-reference accuracy for each subset plus the
// full-data regression and diagnostics. Throws before any training if a
// subset names a feature missing from `pairs`.
EvalReport cross_validate(const PairSet& pairs, const FoldPlan& plan,
                          std::span<const FeatureSubset> subsets,
                          const std::map<std::string, ConstructionTag>& tags,
                          const EvalOptions& options = {});

}  // namespace wordorder

#endif  // WORDORDER_STATS_H_
