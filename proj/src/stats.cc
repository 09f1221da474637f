#include "wordorder/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wordorder/random.h"

namespace wordorder {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json number(double v) {
  // JSON has no NaN/inf; keep them distinguishable as strings.
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json numbers(const std::vector<double>& values) {
  auto arr = nlohmann::json::array();
  for (double v : values) arr.push_back(number(v));
  return arr;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.{}f}", v, digits);
}

bool is_subset(const std::vector<std::string>& small, const std::vector<std::string>& big) {
  const std::set<std::string> b(big.begin(), big.end());
  return std::all_of(small.begin(), small.end(), [&](const auto& s) { return b.count(s) > 0; });
}

}  // namespace

std::size_t FoldPlan::fold_of(const std::string& family_id) const {
  const auto it = assignment.find(family_id);
  if (it == assignment.end()) throw std::out_of_range("family not in fold plan: " + family_id);
  return it->second;
}

FoldPlan make_fold_plan(std::span<const std::string> family_ids, std::size_t k,
                        std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least two folds");
  std::vector<std::string> ids(family_ids.begin(), family_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < k) {
    throw std::invalid_argument(fmt::format("{} families cannot fill {} folds", ids.size(), k));
  }
  Rng rng(seed);
  seeded_shuffle(ids, rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) plan.assignment[ids[i]] = i % k;
  return plan;
}

FoldPlan make_fold_plan(const PairSet& pairs, std::size_t k, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& inst : pairs.instances) ids.push_back(inst.family_id);
  return make_fold_plan(ids, k, seed);
}

ConstructionTag construction_tag(const DependencyTree& reference) {
  ConstructionTag tag;
  int subject = 0;
  for (const Constituent& c : root_dependents(reference)) {
    if (c.relation == "k1") {
      subject = c.token_indices.front();
      break;
    }
  }
  if (subject == 0) return tag;
  for (const Constituent& c : root_dependents(reference)) {
    if (c.token_indices.front() >= subject) continue;
    if (c.relation == "k2") tag.do_fronted = true;
    if (c.relation == "k4") tag.io_fronted = true;
  }
  return tag;
}

McNemarResult mcnemar_exact(long b, long c) {
  McNemarResult r;
  r.b = b;
  r.c = c;
  const long n = b + c;
  if (n == 0) {
    r.p = 1.0;
    r.degenerate = true;
    return r;
  }
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  const double tail = boost::math::cdf(dist, static_cast<double>(std::min(b, c)));
  r.p = std::min(1.0, 2.0 * tail);
  return r;
}

McNemarResult mcnemar_exact(std::span<const char> a_correct, std::span<const char> b_correct) {
  if (a_correct.size() != b_correct.size()) {
    throw std::invalid_argument("McNemar needs prediction vectors of equal length");
  }
  long b = 0;
  long c = 0;
  for (std::size_t i = 0; i < a_correct.size(); ++i) {
    if (a_correct[i] && !b_correct[i]) ++b;
    if (!a_correct[i] && b_correct[i]) ++c;
  }
  return mcnemar_exact(b, c);
}

LrtResult likelihood_ratio_test(const RankerModel& full, const RankerModel& reduced) {
  if (full.meta.n != reduced.meta.n) {
    throw std::invalid_argument("likelihood-ratio test needs fits on the same instances");
  }
  if (!is_subset(reduced.feature_names, full.feature_names)) {
    throw std::invalid_argument("likelihood-ratio test needs nested models");
  }
  LrtResult r;
  r.df = static_cast<int>(full.feature_names.size() - reduced.feature_names.size());
  r.chi2 = std::max(0.0, 2.0 * (full.meta.log_likelihood - reduced.meta.log_likelihood));
  if (r.df == 0) {
    r.p = 1.0;
  } else {
    const boost::math::chi_squared_distribution<double> dist(r.df);
    r.p = boost::math::cdf(boost::math::complement(dist, r.chi2));
  }
  return r;
}

std::vector<double> vif(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (p < 2) throw std::invalid_argument("VIF needs at least two features");
  if (n <= p) throw std::invalid_argument("VIF needs more rows than features");

  std::vector<double> out(static_cast<std::size_t>(p), kNaN);
  Eigen::MatrixXd z = x.rowwise() - x.colwise().mean();
  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = z.col(j).norm();
    if (norm > 0) {
      z.col(j) /= norm;
      live.push_back(j);
    }
  }
  const auto m = static_cast<Eigen::Index>(live.size());
  Eigen::MatrixXd zl(n, m);
  for (Eigen::Index k = 0; k < m; ++k) zl.col(k) = z.col(live[static_cast<std::size_t>(k)]);

  // Correlation matrix; its inverse's diagonal holds the VIFs when it is
  // non-singular.
  const Eigen::MatrixXd corr = zl.transpose() * zl;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(corr);
  lu.setThreshold(1e-10);
  if (lu.rank() == m) {
    const Eigen::MatrixXd inv = lu.inverse();
    for (Eigen::Index k = 0; k < m; ++k) out[static_cast<std::size_t>(live[static_cast<std::size_t>(k)])] = inv(k, k);
    return out;
  }
  const auto rank_of = [](const Eigen::MatrixXd& a) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    return qr.rank();
  };
  const Eigen::Index full_rank = rank_of(zl);
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::MatrixXd others(n, m - 1);
    for (Eigen::Index i = 0, c = 0; i < m; ++i) {
      if (i != k) others.col(c++) = zl.col(i);
    }
    const auto slot = static_cast<std::size_t>(live[static_cast<std::size_t>(k)]);
    if (rank_of(others) == full_rank) {
      out[slot] = std::numeric_limits<double>::infinity();
      continue;
    }
    // Centred unit-norm columns: R^2 = 1 - |residual|^2.
    const Eigen::VectorXd coef = others.colPivHouseholderQr().solve(zl.col(k));
    const double r2 = 1.0 - (zl.col(k) - others * coef).squaredNorm();
    out[slot] = 1.0 / (1.0 - r2);
  }
  return out;
}

CorrelationMatrix pearson_matrix(const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(x.cols()) != names.size()) {
    throw std::invalid_argument("pearson_matrix: one name per column required");
  }
  CorrelationMatrix out;
  out.names = names;
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd z = x.rowwise() - x.colwise().mean();
  std::vector<bool> valid(static_cast<std::size_t>(p), true);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = z.col(j).norm();
    if (norm > 0) {
      z.col(j) /= norm;
    } else {
      valid[static_cast<std::size_t>(j)] = false;
      out.zero_variance.push_back(names[static_cast<std::size_t>(j)]);
    }
  }
  out.r = z.transpose() * z;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!valid[static_cast<std::size_t>(i)] || !valid[static_cast<std::size_t>(j)]) {
        out.r(i, j) = kNaN;
      } else if (i == j) {
        out.r(i, j) = 1.0;
      } else {
        out.r(i, j) = std::clamp(out.r(i, j), -1.0, 1.0);
      }
    }
  }
  return out;
}

Eigen::MatrixXd delta_matrix(const PairSet& pairs) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(pairs.instances.size()),
                    static_cast<Eigen::Index>(pairs.feature_names.size()));
  for (std::size_t i = 0; i < pairs.instances.size(); ++i) {
    for (std::size_t j = 0; j < pairs.feature_names.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pairs.instances[i].delta[j];
    }
  }
  return x;
}

OlsResult ols_report(const PairSet& pairs, std::span<const std::string> subset) {
  const PairSet selected = pairs.select(subset);
  Eigen::VectorXd y(static_cast<Eigen::Index>(selected.instances.size()));
  for (std::size_t i = 0; i < selected.instances.size(); ++i) {
    y[static_cast<Eigen::Index>(i)] = selected.instances[i].label;
  }
  auto result = ols(delta_matrix(selected), y, selected.feature_names);
  for (const auto& name : result.dropped) {
    spdlog::warn("OLS report: dropping collinear feature '{}'", name);
  }
  return result;
}

double SliceAccuracy::percent() const {
  return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : kNaN;
}

EvalReport cross_validate(const PairSet& pairs, const FoldPlan& plan,
                          std::span<const FeatureSubset> subsets,
                          const std::map<std::string, ConstructionTag>& tags,
                          const EvalOptions& options) {
  for (const auto& subset : subsets) {
    if (subset.features.empty()) throw std::invalid_argument("subset '" + subset.name + "' is empty");
    for (const auto& f : subset.features) {
      if (std::find(pairs.feature_names.begin(), pairs.feature_names.end(), f) ==
          pairs.feature_names.end()) {
        throw std::invalid_argument(
            fmt::format("subset '{}' uses unknown feature '{}'", subset.name, f));
      }
    }
  }

  EvalReport report;
  report.folds = plan.k;
  report.seed = plan.seed;
  report.pairs = pairs.instances.size();
  report.families = plan.assignment.size();

  const std::size_t n = pairs.instances.size();
  std::vector<std::size_t> fold(n);
  std::vector<ConstructionTag> tag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = pairs.instances[i].family_id;
    fold[i] = plan.fold_of(id);
    if (const auto it = tags.find(id); it != tags.end()) tag[i] = it->second;
    report.do_pairs += tag[i].do_fronted;
    report.io_pairs += tag[i].io_fronted;
  }

  report.subsets.resize(subsets.size());
  auto evaluate = [&](std::size_t s) {
    SubsetResult& out = report.subsets[s];
    out.subset = subsets[s];
    const PairSet selected = pairs.select(subsets[s].features);
    out.correct.assign(n, 0);
    for (std::size_t f = 0; f < plan.k; ++f) {
      PairSet train;
      train.feature_names = selected.feature_names;
      std::vector<std::size_t> test;
      for (std::size_t i = 0; i < n; ++i) {
        if (fold[i] == f) {
          test.push_back(i);
        } else {
          train.instances.push_back(selected.instances[i]);
        }
      }
      const RankerModel model = fit(train, options.fit);
      const PairScorer scorer(model, selected);
      SliceAccuracy fold_acc;
      for (std::size_t i : test) {
        const bool ok = scorer.prefers_reference(selected.instances[i]);
        out.correct[i] = ok;
        fold_acc.total++;
        fold_acc.correct += ok;
      }
      out.fold_accuracy.push_back(fold_acc.percent());
    }
    for (std::size_t i = 0; i < n; ++i) {
      const bool ok = out.correct[i] != 0;
      out.full.total++;
      out.full.correct += ok;
      if (tag[i].do_fronted) {
        out.do_fronted.total++;
        out.do_fronted.correct += ok;
      }
      if (tag[i].io_fronted) {
        out.io_fronted.total++;
        out.io_fronted.correct += ok;
      }
    }
    out.model = fit(selected, options.fit);
    out.ols = ols_report(pairs, subsets[s].features);
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, subsets.size()));
  if (threads == 1) {
    for (std::size_t s = 0; s < subsets.size(); ++s) evaluate(s);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> workers;
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          try {
            for (std::size_t s = t; s < subsets.size(); s += threads) evaluate(s);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (const auto& r : report.subsets) {
    if (r.model.meta.separated) {
      spdlog::warn("model '{}': data are (quasi-)separable, coefficients and errors are not "
                   "meaningful", r.subset.name);
    }
  }

  auto index_of = [&](const std::string& name) {
    for (std::size_t s = 0; s < report.subsets.size(); ++s) {
      if (report.subsets[s].subset.name == name) return s;
    }
    throw std::invalid_argument("comparison names unknown subset " + name);
  };
  std::vector<std::pair<std::string, std::string>> comparisons = options.comparisons;
  if (comparisons.empty()) {
    for (std::size_t s = 1; s < subsets.size(); ++s) {
      comparisons.emplace_back(subsets[s - 1].name, subsets[s].name);
    }
  }
  for (const auto& [a, b] : comparisons) {
    report.mcnemar.push_back({a, b,
                              mcnemar_exact(report.subsets[index_of(a)].correct,
                                            report.subsets[index_of(b)].correct)});
  }

  // Likelihood-ratio tests for every single-feature addition among the subsets.
  for (const auto& reduced : report.subsets) {
    for (const auto& full : report.subsets) {
      if (full.subset.features.size() != reduced.subset.features.size() + 1) continue;
      if (!is_subset(reduced.subset.features, full.subset.features)) continue;
      if (!is_subset(reduced.model.feature_names, full.model.feature_names)) continue;
      report.lrt.push_back({reduced.subset.name, full.subset.name,
                            likelihood_ratio_test(full.model, reduced.model)});
    }
  }

  // Diagnostics over every feature any subset uses, in pair-column order.
  std::set<std::string> used;
  for (const auto& s : subsets) used.insert(s.features.begin(), s.features.end());
  std::vector<std::string> diag_names;
  for (const auto& name : pairs.feature_names) {
    if (used.count(name)) diag_names.push_back(name);
  }
  const Eigen::MatrixXd diag = delta_matrix(pairs.select(diag_names));
  if (diag_names.size() >= 2 && static_cast<std::size_t>(diag.rows()) > diag_names.size()) {
    report.vif_names = diag_names;
    report.vif_values = vif(diag);
  }
  report.correlations = pearson_matrix(diag, diag_names);
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["folds"] = folds;
  j["seed"] = seed;
  j["pairs"] = pairs;
  j["families"] = families;
  j["do_fronted_pairs"] = do_pairs;
  j["io_fronted_pairs"] = io_pairs;
  auto models = nlohmann::json::array();
  for (const auto& s : subsets) {
    nlohmann::json m;
    m["name"] = s.subset.name;
    m["features"] = s.subset.features;
    m["accuracy"] = {{"full", number(s.full.percent())},
                     {"do_fronted", number(s.do_fronted.percent())},
                     {"io_fronted", number(s.io_fronted.percent())}};
    m["counts"] = {{"full", s.full.total},
                   {"do_fronted", s.do_fronted.total},
                   {"io_fronted", s.io_fronted.total}};
    m["fold_accuracy"] = numbers(s.fold_accuracy);
    m["logistic"] = s.model.to_json();
    m["ols"] = {{"names", s.ols.names},
                {"beta", numbers(s.ols.beta)},
                {"std_error", numbers(s.ols.std_error)},
                {"t", numbers(s.ols.t_value)},
                {"r_squared", number(s.ols.r_squared)},
                {"adj_r_squared", number(s.ols.adj_r_squared)},
                {"residual_se", number(s.ols.residual_se)},
                {"dropped", s.ols.dropped}};
    models.push_back(std::move(m));
  }
  j["models"] = std::move(models);
  auto mc = nlohmann::json::array();
  for (const auto& c : mcnemar) {
    mc.push_back({{"model_a", c.a}, {"model_b", c.b}, {"b", c.result.b}, {"c", c.result.c},
                  {"p", number(c.result.p)}, {"degenerate", c.result.degenerate}});
  }
  j["mcnemar"] = std::move(mc);
  auto lr = nlohmann::json::array();
  for (const auto& t : lrt) {
    lr.push_back({{"reduced", t.reduced}, {"full", t.full}, {"chi2", number(t.result.chi2)},
                  {"df", t.result.df}, {"p", number(t.result.p)}});
  }
  j["lrt"] = std::move(lr);
  nlohmann::json v = nlohmann::json::object();
  for (std::size_t i = 0; i < vif_names.size(); ++i) v[vif_names[i]] = number(vif_values[i]);
  j["vif"] = std::move(v);
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < correlations.r.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < correlations.r.cols(); ++k) row.push_back(number(correlations.r(i, k)));
    rows.push_back(std::move(row));
  }
  j["correlations"] = {{"names", correlations.names},
                       {"r", std::move(rows)},
                       {"zero_variance", correlations.zero_variance}};
  return j;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << fmt::format("Prediction accuracy ({}-fold CV; {} pairs, {} families; DO {} / IO {} pairs)\n",
                     folds, pairs, families, do_pairs, io_pairs);
  out << fmt::format("{:<24} {:>8} {:>8} {:>8}\n", "model", "full %", "DO %", "IO %");
  for (const auto& s : subsets) {
    out << fmt::format("{:<24} {:>8} {:>8} {:>8}\n", s.subset.name, fixed(s.full.percent(), 2),
                       fixed(s.do_fronted.percent(), 2), fixed(s.io_fronted.percent(), 2));
  }
  if (!mcnemar.empty()) {
    out << "\nMcNemar exact two-tailed tests\n";
    for (const auto& c : mcnemar) {
      out << fmt::format("{} vs {}: b = {}, c = {}, p = {}\n", c.a, c.b, c.result.b, c.result.c,
                         fixed(c.result.p, 4));
    }
  }
  if (!lrt.empty()) {
    out << "\nLikelihood-ratio tests\n";
    for (const auto& t : lrt) {
      out << fmt::format("{} -> {}: chi2 = {}, df = {}, p = {}\n", t.reduced, t.full,
                         fixed(t.result.chi2, 2), t.result.df, fixed(t.result.p, 4));
    }
  }
  for (const auto& s : subsets) {
    out << fmt::format("\nRegression ({}; N = {}{})\n", s.subset.name, s.model.meta.n,
                       s.model.meta.separated ? "; separable, estimates not meaningful" : "");
    out << fmt::format("{:<24} {:>10} {:>10} {:>10}\n", "predictor", "beta", "sigma", "t");
    out << fmt::format("{:<24} {:>10} {:>10} {:>10}\n", "intercept", fixed(s.model.intercept, 3),
                       fixed(s.model.intercept_std_error, 3),
                       fixed(s.model.intercept / s.model.intercept_std_error, 2));
    for (std::size_t j = 0; j < s.model.feature_names.size(); ++j) {
      out << fmt::format("{:<24} {:>10} {:>10} {:>10}\n", s.model.feature_names[j],
                         fixed(s.model.weights[j], 3), fixed(s.model.std_errors[j], 3),
                         fixed(s.model.t_values[j], 2));
    }
    out << fmt::format("OLS: R^2 = {}, adj. R^2 = {}, residual SE = {}\n",
                       fixed(s.ols.r_squared, 3), fixed(s.ols.adj_r_squared, 3),
                       fixed(s.ols.residual_se, 3));
  }
  if (!vif_names.empty()) {
    out << "\nVariance inflation factors\n";
    for (std::size_t i = 0; i < vif_names.size(); ++i) {
      out << fmt::format("{:<24} {:>10}\n", vif_names[i], fixed(vif_values[i], 2));
    }
  }
  return out.str();
}

}  // namespace wordorder
