#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "wordorder/judgments.h"

using namespace wordorder;

namespace {

std::vector<Stimulus> ten_items() {
  std::vector<Stimulus> out;
  for (int i = 0; i < 10; ++i) {
    const char* tag = i < 4 ? "io_fronted" : i < 7 ? "do_fronted" : "canonical";
    out.push_back({"item" + std::to_string(i), "context " + std::to_string(i),
                   "reference " + std::to_string(i), "variant " + std::to_string(i), tag});
  }
  return out;
}

// Votes for the reference out of 12 per item.
const int kYes[10] = {12, 11, 9, 7, 6, 5, 3, 12, 0, 6};

std::vector<Judgment> scripted_votes() {
  std::vector<Judgment> out;
  for (int i = 0; i < 10; ++i) {
    for (int p = 0; p < 12; ++p) {
      Judgment j;
      j.item_id = "item" + std::to_string(i);
      j.participant_id = "p" + std::to_string(p);
      j.chose_reference = p < kYes[i];
      j.presented_reference_first = (p + i) % 2 == 0;
      out.push_back(j);
    }
  }
  return out;
}

double hand_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    sab += a[i] * b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

const AgreementRow& row(const AgreementTable& t, const std::string& name) {
  for (const auto& r : t.rows) {
    if (r.construction == name) return r;
  }
  FAIL("no row " << name);
  return t.rows.front();
}

}  // namespace

TEST_CASE("stimuli round trip") {
  const auto items = ten_items();
  std::stringstream buf;
  write_stimuli(buf, items);
  const auto back = read_stimuli(buf);
  REQUIRE(back.size() == 10);
  CHECK(back[3].item_id == "item3");
  CHECK(back[3].construction_tag == "io_fronted");
  CHECK(back[9].variant_text == "variant 9");
}

TEST_CASE("corrupt stimuli") {
  const auto expect_error = [](const std::string& text, const std::string& fragment) {
    std::istringstream in(text);
    try {
      read_stimuli(in);
      FAIL("accepted: " << text);
    } catch (const JudgmentFormatError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  const std::string good =
      R"({"item_id":"a","context_text":"","reference_text":"r","variant_text":"v","construction_tag":"c"})";
  expect_error("", "no items");
  expect_error(good + "\n{oops\n", "line 2");
  expect_error(good + "\n" + good + "\n", "duplicate");
  expect_error(R"({"item_id":"a","context_text":"","reference_text":"r","construction_tag":"c"})",
               "variant_text");
  expect_error(R"({"item_id":"","context_text":"","reference_text":"r","variant_text":"v","construction_tag":"c"})",
               "item_id");
  expect_error("[1,2]\n", "not an object");
  std::istringstream ok(good + "\n\n");
  CHECK(read_stimuli(ok).size() == 1);
}

TEST_CASE("judgment log lines") {
  Judgment j{"i1", "p1", true, false, "2026-01-01T00:00:00.000Z"};
  std::stringstream buf;
  buf << j.to_json().dump() << '\n';
  const auto back = read_judgments(buf);
  REQUIRE(back.size() == 1);
  CHECK(back[0].item_id == "i1");
  CHECK(back[0].chose_reference);
  CHECK_FALSE(back[0].presented_reference_first);
  CHECK(back[0].timestamp == j.timestamp);
  std::istringstream bad(R"({"item_id":"i","participant_id":"p","chose_reference":"yes","presented_reference_first":true})");
  CHECK_THROWS_AS(read_judgments(bad), JudgmentFormatError);
}

TEST_CASE("predictions") {
  std::istringstream in("{\"item_id\":\"a\",\"prefers_reference\":true}\n{\"item_id\":\"b\",\"prefers_reference\":false}\n");
  const auto p = read_predictions(in);
  CHECK(p.at("a").prefers_reference);
  CHECK_FALSE(p.at("b").prefers_reference);
  std::istringstream dup("{\"item_id\":\"a\",\"prefers_reference\":true}\n{\"item_id\":\"a\",\"prefers_reference\":true}\n");
  CHECK_THROWS_AS(read_predictions(dup), JudgmentFormatError);
}

TEST_CASE("presentation order is a pure function of seed, participant and item") {
  int first = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string item = "item" + std::to_string(i);
    const bool a = presents_reference_first(7, "alice", item);
    CHECK(a == presents_reference_first(7, "alice", item));
    first += a;
  }
  CHECK(first > 430);
  CHECK(first < 570);
  const auto order = presentation_order(7, "alice", 50);
  std::set<std::size_t> distinct(order.begin(), order.end());
  CHECK(distinct.size() == 50);
  CHECK(*distinct.rbegin() == 49);
  CHECK(order == presentation_order(7, "alice", 50));
  CHECK(order != presentation_order(7, "bob", 50));
  CHECK(order != presentation_order(8, "alice", 50));
}

TEST_CASE("scripted twelve-participant study") {
  auto stimuli = ten_items();
  stimuli.push_back({"unjudged", "", "r", "v", "canonical"});
  auto judgments = scripted_votes();
  // repeated submission and an unknown item change nothing
  judgments.push_back({"item4", "p11", true, true, ""});
  judgments.push_back({"ghost", "p0", true, true, ""});
  std::map<std::string, ModelPrediction> predictions;
  const std::set<int> model_yes{0, 1, 4, 7, 8};
  for (int i = 0; i < 10; ++i) {
    const std::string id = "item" + std::to_string(i);
    predictions[id] = {id, model_yes.count(i) > 0};
  }

  const auto t = aggregate_judgments(stimuli, judgments, predictions);
  CHECK(t.excluded == std::vector<std::string>{"unjudged"});
  // 6 of 12 is not a majority
  CHECK(t.human_label.at("item4") == 0);
  CHECK(t.human_label.at("item9") == 0);
  CHECK(t.human_label.at("item5") == 0);
  CHECK(t.human_label.at("item3") == 1);

  const auto& all = row(t, "all");
  CHECK(t.rows.back().construction == "all");
  CHECK(all.items == 10);
  CHECK(all.judgments == 120);
  CHECK(all.agreement == 50.0);
  CHECK(*all.model_corpus == 50.0);
  CHECK(*all.model_human == 60.0);
  CHECK(row(t, "io_fronted").agreement == 100.0);
  CHECK(row(t, "do_fronted").agreement == 0.0);
  CHECK(row(t, "canonical").agreement == doctest::Approx(100.0 / 3.0));
  CHECK(*row(t, "do_fronted").model_human == doctest::Approx(200.0 / 3.0));

  std::vector<double> model, human;
  for (int i = 0; i < 10; ++i) {
    model.push_back(model_yes.count(i) ? 1.0 : 0.0);
    human.push_back(t.human_label.at("item" + std::to_string(i)));
  }
  REQUIRE(t.pearson_model_human.has_value());
  CHECK(*t.pearson_model_human == doctest::Approx(hand_pearson(model, human)).epsilon(1e-12));
  // corpus labels are all 1, so there is no correlation to report
  CHECK_FALSE(t.pearson_model_corpus.has_value());

  const auto j = t.to_json();
  CHECK(j["rows"].size() == 4);
  CHECK(j["pearson_model_corpus"].is_null());
  CHECK(t.to_text().find("all") != std::string::npos);
}

TEST_CASE("unanimous item") {
  const std::vector<Stimulus> one{{"x", "", "r", "v", "canonical"}};
  std::vector<Judgment> js;
  for (int p = 0; p < 12; ++p) js.push_back({"x", "p" + std::to_string(p), true, p % 2 == 0, ""});
  const auto t = aggregate_judgments(one, js);
  CHECK(row(t, "all").agreement == 100.0);
  CHECK(row(t, "canonical").agreement == 100.0);
  CHECK_FALSE(row(t, "all").model_corpus.has_value());
}

TEST_CASE("a 167-item study with 12 participants has 2004 judgments") {
  std::vector<Stimulus> items;
  std::vector<Judgment> js;
  for (int i = 0; i < 167; ++i) {
    items.push_back({"i" + std::to_string(i), "", "r", "v", "canonical"});
    for (int p = 0; p < 12; ++p) {
      js.push_back({"i" + std::to_string(i), "p" + std::to_string(p), (i + p) % 4 != 0, true, ""});
    }
  }
  const auto t = aggregate_judgments(items, js);
  CHECK(row(t, "all").judgments == 2004);
  CHECK(row(t, "all").items == 167);
}
