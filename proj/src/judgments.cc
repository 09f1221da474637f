#include "wordorder/judgments.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wordorder/random.h"

namespace wordorder {
namespace {

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw JudgmentFormatError(fmt::format("line {}: invalid JSON: {}", number, e.what()));
    }
    if (!j.is_object()) throw JudgmentFormatError(fmt::format("line {}: not an object", number));
    try {
      fn(j, number);
    } catch (const nlohmann::json::exception& e) {
      throw JudgmentFormatError(fmt::format("line {}: {}", number, e.what()));
    }
  }
}

std::string required_string(const nlohmann::json& j, const char* key, std::size_t line,
                            bool allow_empty = false) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw JudgmentFormatError(fmt::format("line {}: '{}' must be a string", line, key));
  }
  auto s = j[key].get<std::string>();
  if (s.empty() && !allow_empty) {
    throw JudgmentFormatError(fmt::format("line {}: '{}' is empty", line, key));
  }
  return s;
}

bool required_bool(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_boolean()) {
    throw JudgmentFormatError(fmt::format("'{}' must be a boolean", key));
  }
  return j[key].get<bool>();
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw JudgmentFormatError("cannot open " + path.string());
  return in;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

nlohmann::json opt(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::string pct(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", *v) : std::string("NA");
}

}  // namespace

std::vector<Stimulus> read_stimuli(std::istream& in) {
  std::vector<Stimulus> out;
  std::set<std::string> seen;
  for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line) {
    Stimulus s;
    s.item_id = required_string(j, "item_id", line);
    s.context_text = required_string(j, "context_text", line, true);
    s.reference_text = required_string(j, "reference_text", line);
    s.variant_text = required_string(j, "variant_text", line);
    s.construction_tag = required_string(j, "construction_tag", line);
    if (!seen.insert(s.item_id).second) {
      throw JudgmentFormatError(fmt::format("line {}: duplicate item_id '{}'", line, s.item_id));
    }
    out.push_back(std::move(s));
  });
  if (out.empty()) throw JudgmentFormatError("stimuli file holds no items");
  return out;
}

std::vector<Stimulus> read_stimuli_file(const std::filesystem::path& path) {
  auto in = open(path);
  return read_stimuli(in);
}

void write_stimuli(std::ostream& out, const std::vector<Stimulus>& stimuli) {
  for (const auto& s : stimuli) {
    nlohmann::json j = {{"item_id", s.item_id},
                        {"context_text", s.context_text},
                        {"reference_text", s.reference_text},
                        {"variant_text", s.variant_text},
                        {"construction_tag", s.construction_tag}};
    out << j.dump() << '\n';
  }
}

nlohmann::json Judgment::to_json() const {
  return {{"item_id", item_id},
          {"participant_id", participant_id},
          {"chose_reference", chose_reference},
          {"presented_reference_first", presented_reference_first},
          {"timestamp", timestamp}};
}

Judgment Judgment::from_json(const nlohmann::json& j) {
  Judgment out;
  out.item_id = required_string(j, "item_id", 0);
  out.participant_id = required_string(j, "participant_id", 0);
  out.chose_reference = required_bool(j, "chose_reference");
  out.presented_reference_first = required_bool(j, "presented_reference_first");
  if (j.contains("timestamp") && j["timestamp"].is_string()) out.timestamp = j["timestamp"];
  return out;
}

std::vector<Judgment> read_judgments(std::istream& in) {
  std::vector<Judgment> out;
  for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line) {
    try {
      out.push_back(Judgment::from_json(j));
    } catch (const JudgmentFormatError& e) {
      throw JudgmentFormatError(fmt::format("line {}: {}", line, e.what()));
    }
  });
  return out;
}

std::vector<Judgment> read_judgments_file(const std::filesystem::path& path) {
  auto in = open(path);
  return read_judgments(in);
}

std::map<std::string, ModelPrediction> read_predictions(std::istream& in) {
  std::map<std::string, ModelPrediction> out;
  for_each_json_line(in, [&](const nlohmann::json& j, std::size_t line) {
    ModelPrediction p;
    p.item_id = required_string(j, "item_id", line);
    p.prefers_reference = required_bool(j, "prefers_reference");
    if (!out.emplace(p.item_id, p).second) {
      throw JudgmentFormatError(fmt::format("line {}: duplicate prediction for '{}'", line,
                                            p.item_id));
    }
  });
  return out;
}

std::map<std::string, ModelPrediction> read_predictions_file(const std::filesystem::path& path) {
  auto in = open(path);
  return read_predictions(in);
}

bool presents_reference_first(std::uint64_t seed, const std::string& participant_id,
                              const std::string& item_id) {
  return (mix_seed(seed, participant_id + '\x1f' + item_id) & 1U) == 0;
}

std::vector<std::size_t> presentation_order(std::uint64_t seed, const std::string& participant_id,
                                            std::size_t item_count) {
  std::vector<std::size_t> order(item_count);
  for (std::size_t i = 0; i < item_count; ++i) order[i] = i;
  Rng rng(mix_seed(seed, "order\x1f" + participant_id));
  seeded_shuffle(order, rng);
  return order;
}

AgreementTable aggregate_judgments(const std::vector<Stimulus>& stimuli,
                                   const std::vector<Judgment>& judgments,
                                   const std::map<std::string, ModelPrediction>& predictions) {
  std::map<std::string, const Stimulus*> by_id;
  for (const auto& s : stimuli) by_id[s.item_id] = &s;

  struct Votes {
    std::size_t yes = 0;
    std::size_t total = 0;
  };
  std::map<std::string, Votes> votes;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& j : judgments) {
    if (!by_id.count(j.item_id)) {
      spdlog::warn("judgment for unknown item '{}' ignored", j.item_id);
      continue;
    }
    if (!seen.emplace(j.participant_id, j.item_id).second) continue;
    auto& v = votes[j.item_id];
    ++v.total;
    v.yes += j.chose_reference ? 1 : 0;
  }

  AgreementTable table;
  struct Acc {
    std::size_t items = 0, judgments = 0, human = 0, model_items = 0, model_ref = 0,
                model_match = 0;
  };
  std::map<std::string, Acc> groups;
  Acc all;
  std::vector<double> model_v, human_v, corpus_v;
  for (const auto& s : stimuli) {
    const auto it = votes.find(s.item_id);
    if (it == votes.end() || it->second.total == 0) {
      spdlog::warn("item '{}' has no judgments and is excluded", s.item_id);
      table.excluded.push_back(s.item_id);
      continue;
    }
    const int human = 2 * it->second.yes > it->second.total ? 1 : 0;
    table.human_label[s.item_id] = human;
    for (Acc* a : {&groups[s.construction_tag], &all}) {
      ++a->items;
      a->judgments += it->second.total;
      a->human += static_cast<std::size_t>(human);
    }
    const auto p = predictions.find(s.item_id);
    if (p != predictions.end()) {
      const int model = p->second.prefers_reference ? 1 : 0;
      for (Acc* a : {&groups[s.construction_tag], &all}) {
        ++a->model_items;
        a->model_ref += static_cast<std::size_t>(model);
        a->model_match += model == human ? 1 : 0;
      }
      model_v.push_back(model);
      human_v.push_back(human);
      corpus_v.push_back(1.0);
    }
  }
  auto row = [](const std::string& name, const Acc& a) {
    AgreementRow r;
    r.construction = name;
    r.items = a.items;
    r.judgments = a.judgments;
    r.agreement = 100.0 * static_cast<double>(a.human) / static_cast<double>(a.items);
    if (a.model_items) {
      r.model_corpus = 100.0 * static_cast<double>(a.model_ref) / static_cast<double>(a.model_items);
      r.model_human =
          100.0 * static_cast<double>(a.model_match) / static_cast<double>(a.model_items);
    }
    return r;
  };
  for (const auto& [name, acc] : groups) table.rows.push_back(row(name, acc));
  if (all.items) table.rows.push_back(row("all", all));
  table.pearson_model_human = pearson(model_v, human_v);
  table.pearson_model_corpus = pearson(model_v, corpus_v);
  return table;
}

nlohmann::json AgreementTable::to_json() const {
  auto rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"construction", r.construction},
                         {"items", r.items},
                         {"judgments", r.judgments},
                         {"agreement", r.agreement},
                         {"model_corpus", opt(r.model_corpus)},
                         {"model_human", opt(r.model_human)}});
  }
  return {{"rows", rows_json},
          {"excluded", excluded},
          {"pearson_model_human", opt(pearson_model_human)},
          {"pearson_model_corpus", opt(pearson_model_corpus)},
          {"human_label", human_label}};
}

std::string AgreementTable::to_text() const {
  std::ostringstream out;
  out << fmt::format("{:<28} {:>6} {:>10} {:>11} {:>14} {:>13}\n", "construction", "items",
                     "judgments", "agreement %", "model-corpus %", "model-human %");
  for (const auto& r : rows) {
    out << fmt::format("{:<28} {:>6} {:>10} {:>11.2f} {:>14} {:>13}\n", r.construction, r.items,
                       r.judgments, r.agreement, pct(r.model_corpus), pct(r.model_human));
  }
  auto r = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.4f}", *v) : std::string("undefined");
  };
  out << fmt::format("Pearson r (model, human) = {}; (model, corpus) = {}\n",
                     r(pearson_model_human), r(pearson_model_corpus));
  if (!excluded.empty()) out << fmt::format("{} items without judgments excluded\n", excluded.size());
  return out.str();
}

}  // namespace wordorder
