#include "wordorder/pairrank.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "wordorder/random.h"
#include "wordorder/regression.h"

namespace wordorder {

std::size_t PairSet::feature_index(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw std::out_of_range("no pair feature named " + name);
  return static_cast<std::size_t>(it - feature_names.begin());
}

PairSet PairSet::select(std::span<const std::string> features) const {
  std::vector<std::size_t> columns;
  for (const auto& f : features) columns.push_back(feature_index(f));
  PairSet out;
  out.feature_names.assign(features.begin(), features.end());
  out.instances.reserve(instances.size());
  for (const PairInstance& inst : instances) {
    PairInstance copy{inst.family_id, inst.label, {}, inst.left_id, inst.right_id};
    copy.delta.reserve(columns.size());
    for (std::size_t c : columns) copy.delta.push_back(inst.delta[c]);
    out.instances.push_back(std::move(copy));
  }
  return out;
}

PairSet joachims_transform(const FeatureTable& table, const TransformOptions& options) {
  struct Family {
    const FeatureVector* reference = nullptr;
    std::vector<const FeatureVector*> variants;
  };
  std::map<std::string, Family> families;
  for (const FeatureVector& fv : table.rows) {
    Family& f = families[fv.family_id];
    if (fv.is_reference) {
      if (f.reference) throw std::invalid_argument("family has two references: " + fv.family_id);
      f.reference = &fv;
    } else {
      f.variants.push_back(&fv);
    }
  }
  std::vector<std::string> order;
  for (const auto& [id, f] : families) {
    if (!f.reference) throw std::invalid_argument("family has no reference: " + id);
    if (f.variants.empty()) throw std::invalid_argument("family has no variants: " + id);
    order.push_back(id);
  }
  Rng rng(options.seed);
  seeded_shuffle(order, rng);

  PairSet pairs;
  pairs.feature_names = table.names;
  std::size_t position = 0;
  for (const auto& id : order) {
    const Family& f = families.at(id);
    for (const FeatureVector* variant : f.variants) {
      const bool reference_minus_variant = (position % 2 == 0) == options.reference_first;
      const FeatureVector& left = reference_minus_variant ? *f.reference : *variant;
      const FeatureVector& right = reference_minus_variant ? *variant : *f.reference;
      PairInstance inst;
      inst.family_id = id;
      inst.label = reference_minus_variant ? 1 : 0;
      inst.left_id = left.sentence_id;
      inst.right_id = right.sentence_id;
      for (const auto& name : table.names) inst.delta.push_back(left.at(name) - right.at(name));
      pairs.instances.push_back(std::move(inst));
      ++position;
    }
  }
  return pairs;
}

void write_pair_csv(std::ostream& out, const PairSet& pairs) {
  out << "family_id,left_id,right_id,label";
  for (const auto& name : pairs.feature_names) out << ',' << name;
  out << '\n';
  for (const PairInstance& inst : pairs.instances) {
    out << inst.family_id << ',' << inst.left_id << ',' << inst.right_id << ',' << inst.label;
    for (double d : inst.delta) out << ',' << fmt::format("{}", d);
    out << '\n';
  }
}

double RankerModel::weight(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw std::out_of_range("model has no feature " + name);
  return weights[static_cast<std::size_t>(it - feature_names.begin())];
}

RankerModel fit(const PairSet& pairs, const FitOptions& options) {
  const std::size_t n = pairs.instances.size();
  const std::size_t p = pairs.feature_names.size();
  if (n < 2) throw std::invalid_argument("fit needs at least two instances");
  std::size_t positives = 0;
  for (const auto& inst : pairs.instances) positives += inst.label == 1;
  if (positives == 0 || positives == n) {
    throw std::invalid_argument("fit needs both labels among the instances");
  }

  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& inst = pairs.instances[i];
    if (inst.delta.size() != p) throw std::invalid_argument("ragged pair instance");
    for (std::size_t j = 0; j < p; ++j) {
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inst.delta[j];
    }
    y[static_cast<Eigen::Index>(i)] = inst.label;
  }

  RankerModel model;
  model.meta.n = n;
  std::vector<std::size_t> candidates;
  std::vector<double> means;
  std::vector<double> sds;
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = raw.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) {
      spdlog::warn("dropping zero-variance feature '{}'", pairs.feature_names[j]);
      model.meta.dropped.push_back(pairs.feature_names[j]);
      continue;
    }
    candidates.push_back(j);
    means.push_back(options.standardize ? mean : 0.0);
    sds.push_back(options.standardize ? sd : 1.0);
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(candidates.size() + 1));
  design.col(0).setOnes();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    design.col(static_cast<Eigen::Index>(k + 1)) =
        (raw.col(static_cast<Eigen::Index>(candidates[k])).array() - means[k]) / sds[k];
  }
  const auto independent = independent_columns(design, 1);
  std::vector<std::size_t> kept;  // positions in `candidates`
  {
    std::vector<bool> keep(candidates.size() + 1, false);
    for (std::size_t c : independent) keep[c] = true;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (keep[k + 1]) {
        kept.push_back(k);
      } else {
        const auto& name = pairs.feature_names[candidates[k]];
        spdlog::warn("dropping collinear feature '{}'", name);
        model.meta.dropped.push_back(name);
      }
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kept.size() + 1));
  x.col(0).setOnes();
  for (std::size_t k = 0; k < kept.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k + 1)) = design.col(static_cast<Eigen::Index>(kept[k] + 1));
  }

  const auto result = logistic::irls(x, y, options.max_iter, options.tol);
  model.meta.iterations = result.iterations;
  model.meta.log_likelihood = result.log_likelihood;
  model.meta.converged = result.converged;
  model.meta.separated = result.separated;
  if (result.separated) {
    spdlog::debug("data are (quasi-)separable; estimates are finite only because iteration stopped");
  } else if (!result.converged) {
    spdlog::warn("logistic fit did not converge in {} iterations", result.iterations);
  }

  // raw = T * standardized, with T mapping (b0, b) to (b0 - sum b m / s, b / s).
  const auto q = static_cast<Eigen::Index>(kept.size() + 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(q, q);
  t(0, 0) = 1.0;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k + 1);
    t(0, c) = -means[kept[k]] / sds[kept[k]];
    t(c, c) = 1.0 / sds[kept[k]];
  }
  const Eigen::VectorXd raw_beta = t * result.beta;
  const Eigen::MatrixXd raw_cov = t * result.covariance * t.transpose();

  model.standardized_intercept = result.beta[0];
  model.intercept = raw_beta[0];
  model.intercept_std_error = std::sqrt(raw_cov(0, 0));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k + 1);
    model.feature_names.push_back(pairs.feature_names[candidates[kept[k]]]);
    model.standardized_weights.push_back(result.beta[c]);
    model.weights.push_back(raw_beta[c]);
    model.std_errors.push_back(std::sqrt(raw_cov(c, c)));
    model.t_values.push_back(raw_beta[c] / model.std_errors.back());
    model.means.push_back(means[kept[k]]);
    model.sds.push_back(sds[kept[k]]);
  }
  return model;
}

nlohmann::json RankerModel::to_json() const {
  nlohmann::json j;
  j["features"] = feature_names;
  j["weights"] = weights;
  j["std_errors"] = std_errors;
  j["t_values"] = t_values;
  j["intercept"] = intercept;
  j["intercept_std_error"] = intercept_std_error;
  j["standardized_weights"] = standardized_weights;
  j["standardized_intercept"] = standardized_intercept;
  j["scaler"] = {{"means", means}, {"sds", sds}};
  j["fit_meta"] = {{"iterations", meta.iterations},
                   {"log_likelihood", meta.log_likelihood},
                   {"converged", meta.converged},
                   {"separated", meta.separated},
                   {"dropped", meta.dropped},
                   {"n", meta.n}};
  return j;
}

RankerModel RankerModel::from_json(const nlohmann::json& j) {
  RankerModel m;
  j.at("features").get_to(m.feature_names);
  j.at("weights").get_to(m.weights);
  j.at("std_errors").get_to(m.std_errors);
  j.at("t_values").get_to(m.t_values);
  j.at("intercept").get_to(m.intercept);
  j.at("intercept_std_error").get_to(m.intercept_std_error);
  j.at("standardized_weights").get_to(m.standardized_weights);
  j.at("standardized_intercept").get_to(m.standardized_intercept);
  j.at("scaler").at("means").get_to(m.means);
  j.at("scaler").at("sds").get_to(m.sds);
  const auto& meta = j.at("fit_meta");
  meta.at("iterations").get_to(m.meta.iterations);
  meta.at("log_likelihood").get_to(m.meta.log_likelihood);
  meta.at("converged").get_to(m.meta.converged);
  meta.at("separated").get_to(m.meta.separated);
  meta.at("dropped").get_to(m.meta.dropped);
  meta.at("n").get_to(m.meta.n);
  if (m.weights.size() != m.feature_names.size()) {
    throw std::runtime_error("model file: weights and features differ in length");
  }
  return m;
}

Choice predict_choice(const RankerModel& model, const FeatureVector& reference,
                      const FeatureVector& variant) {
  Choice c;
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    const auto& name = model.feature_names[j];
    const auto r = reference.values.find(name);
    const auto v = variant.values.find(name);
    if (r == reference.values.end() || v == variant.values.end()) {
      throw std::invalid_argument("feature vector lacks model feature " + name);
    }
    c.score += model.weights[j] * (r->second - v->second);
  }
  c.tie = c.score == 0.0;
  c.prefers_reference = c.score > 0.0;
  c.probability = sigmoid(c.score);
  return c;
}

PairScorer::PairScorer(const RankerModel& model, const PairSet& pairs)
    : intercept_(model.intercept), weights_(model.weights) {
  for (const auto& name : model.feature_names) columns_.push_back(pairs.feature_index(name));
}

double PairScorer::score(const PairInstance& instance) const {
  double s = intercept_;
  for (std::size_t k = 0; k < columns_.size(); ++k) s += weights_[k] * instance.delta[columns_[k]];
  return s;
}

}  // namespace wordorder
