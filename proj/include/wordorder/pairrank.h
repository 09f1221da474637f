#ifndef WORDORDER_PAIRRANK_H_
#define WORDORDER_PAIRRANK_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "wordorder/features.h"

namespace wordorder {

struct PairInstance {
  std::string family_id;
  int label = 0;  // 1: delta = ref - var, 0: delta = var - ref
  std::vector<double> delta;  // aligned with PairSet::feature_names
  std::string left_id;   // minuend
  std::string right_id;  // subtrahend

  bool operator==(const PairInstance&) const = default;
};

struct PairSet {
  std::vector<std::string> feature_names;
  std::vector<PairInstance> instances;

  std::size_t feature_index(const std::string& name) const;
  // Keeps only the named columns, in the given order.
  PairSet select(std::span<const std::string> features) const;
};

struct TransformOptions {
  std::uint64_t seed = 0;
  // Orientation of the first pair; later pairs alternate.
  bool reference_first = true;
};

// One instance per (reference, variant) pair. Families are visited in a
// seeded shuffle of their sorted ids; within a family, variants keep their
// input order. Orientation alternates over the global enumeration.
PairSet joachims_transform(const FeatureTable& table, const TransformOptions& options = {});

void write_pair_csv(std::ostream& out, const PairSet& pairs);

struct FitOptions {
  bool standardize = true;
  int max_iter = 100;
  double tol = 1e-8;
};

struct FitMeta {
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  bool separated = false;
  std::vector<std::string> dropped;  // zero-variance or collinear features
  std::size_t n = 0;
};

struct RankerModel {
  std::vector<std::string> feature_names;  // retained features
  // Raw units.
  std::vector<double> weights;
  std::vector<double> std_errors;
  std::vector<double> t_values;
  double intercept = 0.0;
  double intercept_std_error = 0.0;
  // Standardised units.
  std::vector<double> standardized_weights;
  double standardized_intercept = 0.0;
  // Scaler: z = (x - mean) / sd.
  std::vector<double> means;
  std::vector<double> sds;
  FitMeta meta;

  double weight(const std::string& name) const;
  nlohmann::json to_json() const;
  static RankerModel from_json(const nlohmann::json& j);
};

// Maximum-likelihood logistic regression of label on delta (with intercept).
RankerModel fit(const PairSet& pairs, const FitOptions& options = {});

struct Choice {
  bool prefers_reference = false;
  bool tie = false;
  double score = 0.0;
  double probability = 0.5;
};

// score = w . (phi(ref) - phi(var)); the intercept is not part of the
// comparison so swapping the arguments negates the score.
Choice predict_choice(const RankerModel& model, const FeatureVector& reference,
                      const FeatureVector& variant);

// Classifies transformed instances: b + w . delta > 0 predicts label 1. The
// model's features must be columns of `pairs`.
class PairScorer {
 public:
  PairScorer(const RankerModel& model, const PairSet& pairs);
  double score(const PairInstance& instance) const;
  int predicted_label(const PairInstance& instance) const { return score(instance) > 0.0 ? 1 : 0; }
  // Whether the predicted label matches, i.e. the reference was identified.
  bool prefers_reference(const PairInstance& instance) const {
    return predicted_label(instance) == instance.label;
  }

 private:
  double intercept_ = 0.0;
  std::vector<double> weights_;
  std::vector<std::size_t> columns_;
};

}  // namespace wordorder

#endif  // WORDORDER_PAIRRANK_H_
