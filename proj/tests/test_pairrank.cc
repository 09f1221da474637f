#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "wordorder/pairrank.h"
#include "wordorder/random.h"
#include "wordorder/regression.h"

using namespace wordorder;

namespace {

FeatureVector fv(const std::string& id, const std::string& fam, bool ref,
                 std::map<std::string, double> values) {
  return {id, fam, ref, std::move(values)};
}

// Dependency length, trigram and PCFG surprisal of the worked example.
FeatureTable worked_example() {
  FeatureTable t;
  t.names = {"dep_length", "trigram_surp", "pcfg_surp"};
  t.rows.push_back(fv("ref", "ex", true, {{"dep_length", 18}, {"trigram_surp", 24.69}, {"pcfg_surp", 61.13}}));
  t.rows.push_back(fv("v1", "ex", false, {{"dep_length", 20}, {"trigram_surp", 23.80}, {"pcfg_surp", 60.67}}));
  t.rows.push_back(fv("v2", "ex", false, {{"dep_length", 18}, {"trigram_surp", 23.02}, {"pcfg_surp", 60.02}}));
  return t;
}

FeatureTable random_table(std::size_t families, std::size_t variants, Rng& rng) {
  FeatureTable t;
  t.names = {"a", "b"};
  for (std::size_t f = 0; f < families; ++f) {
    const std::string fam = "f" + std::to_string(f);
    t.rows.push_back(fv(fam, fam, true, {{"a", standard_normal(rng)}, {"b", standard_normal(rng)}}));
    for (std::size_t v = 0; v < variants; ++v) {
      t.rows.push_back(fv(fam + "#v" + std::to_string(v + 1), fam, false,
                          {{"a", standard_normal(rng)}, {"b", standard_normal(rng)}}));
    }
  }
  return t;
}

// Instances drawn from a logistic model with the given weights.
PairSet simulated(std::size_t n, double w1, double w2, Rng& rng) {
  PairSet p;
  p.feature_names = {"x1", "x2"};
  for (std::size_t i = 0; i < n; ++i) {
    PairInstance inst;
    inst.family_id = "f" + std::to_string(i);
    inst.delta = {standard_normal(rng), standard_normal(rng)};
    inst.label = uniform_real(rng) < sigmoid(w1 * inst.delta[0] + w2 * inst.delta[1]) ? 1 : 0;
    p.instances.push_back(inst);
  }
  return p;
}

RankerModel unit_model() {
  RankerModel m;
  m.feature_names = {"f"};
  m.weights = {1.0};
  return m;
}

}  // namespace

TEST_CASE("worked example transform") {
  TransformOptions opts;
  opts.reference_first = false;
  const auto pairs = joachims_transform(worked_example(), opts);
  REQUIRE(pairs.instances.size() == 2);
  const auto& first = pairs.instances[0];
  CHECK(first.label == 0);
  CHECK(first.left_id == "v1");
  CHECK(first.right_id == "ref");
  CHECK(std::abs(first.delta[0] - 2.0) < 1e-9);
  CHECK(std::abs(first.delta[1] - -0.89) < 1e-9);
  CHECK(std::abs(first.delta[2] - -0.46) < 1e-9);
  const auto& second = pairs.instances[1];
  CHECK(second.label == 1);
  CHECK(second.left_id == "ref");
  CHECK(std::abs(second.delta[0] - 0.0) < 1e-9);
  CHECK(std::abs(second.delta[1] - 1.67) < 1e-9);
  CHECK(std::abs(second.delta[2] - 1.11) < 1e-9);
}

TEST_CASE("default orientation starts with the reference") {
  const auto pairs = joachims_transform(worked_example());
  CHECK(pairs.instances[0].label == 1);
  CHECK(pairs.instances[0].delta[0] == -2.0);
  CHECK(pairs.instances[1].label == 0);
}

TEST_CASE("identical features give a zero delta") {
  FeatureTable t;
  t.names = {"a"};
  t.rows.push_back(fv("r", "f", true, {{"a", 3.5}}));
  t.rows.push_back(fv("v", "f", false, {{"a", 3.5}}));
  const auto pairs = joachims_transform(t);
  CHECK(pairs.instances[0].delta == std::vector<double>{0.0});
}

TEST_CASE("labels are balanced and families stay together") {
  Rng rng(3);
  const auto table = random_table(57, 7, rng);
  TransformOptions opts;
  opts.seed = 11;
  const auto pairs = joachims_transform(table, opts);
  REQUIRE(pairs.instances.size() == 57 * 7);
  std::size_t ones = 0;
  std::set<std::string> closed;
  std::string current;
  for (std::size_t i = 0; i < pairs.instances.size(); ++i) {
    const auto& inst = pairs.instances[i];
    CHECK(inst.label == (i % 2 == 0 ? 1 : 0));
    ones += inst.label;
    if (inst.family_id != current) {
      CHECK(closed.insert(inst.family_id).second);
      current = inst.family_id;
    }
  }
  CHECK(ones == (57 * 7 + 1) / 2);
  CHECK(joachims_transform(table, opts).instances == pairs.instances);
  opts.seed = 12;
  CHECK(joachims_transform(table, opts).instances != pairs.instances);
}

TEST_CASE("malformed families") {
  FeatureTable t;
  t.names = {"a"};
  t.rows.push_back(fv("v", "f", false, {{"a", 1}}));
  CHECK_THROWS(joachims_transform(t));
  t.rows.push_back(fv("r", "f", true, {{"a", 1}}));
  t.rows.push_back(fv("r2", "f", true, {{"a", 1}}));
  CHECK_THROWS(joachims_transform(t));
}

TEST_CASE("perfectly separable feature") {
  PairSet p;
  p.feature_names = {"x"};
  for (int i = 0; i < 40; ++i) {
    const double d = (i % 2 == 0 ? 1.0 : -1.0) * (1 + i % 5);
    p.instances.push_back({"f" + std::to_string(i), d > 0 ? 1 : 0, {d}, "", ""});
  }
  const auto m = fit(p);
  CHECK(m.weight("x") > 0);
  CHECK(m.meta.separated);
}

TEST_CASE("known weights are recovered") {
  Rng rng(50000);
  const auto p = simulated(50000, 0.8, -0.5, rng);
  const auto m = fit(p);
  CHECK(m.meta.converged);
  CHECK(std::abs(m.weight("x1") - 0.8) < 0.05);
  CHECK(std::abs(m.weight("x2") - -0.5) < 0.05);
  CHECK(std::abs(m.intercept) < 0.05);
}

TEST_CASE("rescaling a feature is absorbed by its weight") {
  Rng rng(8);
  const auto p = simulated(3000, 0.8, -0.5, rng);
  PairSet scaled = p;
  for (auto& inst : scaled.instances) inst.delta[0] *= 100.0;
  const auto a = fit(p);
  const auto b = fit(scaled);
  CHECK(b.weight("x1") * 100.0 == doctest::Approx(a.weight("x1")).epsilon(1e-6));
  CHECK(b.standardized_weights[0] == doctest::Approx(a.standardized_weights[0]).epsilon(1e-6));
  CHECK(b.meta.log_likelihood == doctest::Approx(a.meta.log_likelihood).epsilon(1e-9));
  const PairScorer sa(a, p), sb(b, scaled);
  for (std::size_t i = 0; i < p.instances.size(); ++i) {
    CHECK(sa.predicted_label(p.instances[i]) == sb.predicted_label(scaled.instances[i]));
  }
}

TEST_CASE("constant and duplicated features are dropped") {
  Rng rng(9);
  auto p = simulated(500, 1.0, 0.0, rng);
  p.feature_names = {"x1", "x2", "zero", "copy"};
  for (auto& inst : p.instances) {
    inst.delta.push_back(0.0);
    inst.delta.push_back(inst.delta[0]);
  }
  const auto m = fit(p);
  CHECK(m.feature_names == std::vector<std::string>{"x1", "x2"});
  CHECK(m.meta.dropped == std::vector<std::string>{"zero", "copy"});
}

TEST_CASE("fit needs both labels") {
  PairSet p;
  p.feature_names = {"x"};
  p.instances.push_back({"a", 1, {1.0}, "", ""});
  p.instances.push_back({"b", 1, {2.0}, "", ""});
  CHECK_THROWS_AS(fit(p), std::invalid_argument);
}

TEST_CASE("model json round trip") {
  Rng rng(10);
  const auto m = fit(simulated(400, 0.5, 0.5, rng));
  const auto back = RankerModel::from_json(m.to_json());
  CHECK(back.feature_names == m.feature_names);
  CHECK(back.weights == m.weights);
  CHECK(back.intercept == m.intercept);
  CHECK(back.to_json() == m.to_json());
}

TEST_CASE("choices") {
  const auto m = unit_model();
  const auto ref = fv("r", "f", true, {{"f", 2.0}});
  const auto var = fv("v", "f", false, {{"f", 1.0}});
  const auto c = predict_choice(m, ref, var);
  CHECK(c.prefers_reference);
  CHECK(c.probability == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK(predict_choice(m, var, ref).score == -c.score);

  const auto tie = predict_choice(m, ref, ref);
  CHECK(tie.tie);
  CHECK_FALSE(tie.prefers_reference);
  CHECK(tie.probability == 0.5);

  CHECK_THROWS(predict_choice(m, ref, fv("x", "f", false, {{"g", 1.0}})));
}

TEST_CASE("scorer uses the intercept") {
  auto m = unit_model();
  m.intercept = 0.5;
  PairSet p;
  p.feature_names = {"other", "f"};
  const PairInstance zero{"fam", 0, {9.0, 0.0}, "", ""};
  const PairInstance neg{"fam", 1, {9.0, -1.0}, "", ""};
  const PairScorer s(m, p);
  CHECK(s.score(zero) == 0.5);
  CHECK(s.predicted_label(zero) == 1);
  CHECK_FALSE(s.prefers_reference(zero));
  CHECK(s.score(neg) == -0.5);
  CHECK_FALSE(s.prefers_reference(neg));
}

TEST_CASE("pair csv") {
  TransformOptions opts;
  opts.reference_first = false;
  const auto pairs = joachims_transform(worked_example(), opts);
  std::ostringstream out;
  write_pair_csv(out, pairs);
  const auto text = out.str();
  CHECK(text.find("dep_length") != std::string::npos);
  CHECK(text.find("v1") != std::string::npos);
}
