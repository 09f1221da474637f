#include "wordorder/features.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

namespace wordorder {

namespace {

std::vector<std::string> forms(const DependencyTree& tree, const Ordering& ordering) {
  std::vector<std::string> out;
  out.reserve(ordering.size());
  for (int idx : ordering) out.push_back(tree.token(idx).form);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

double FeatureVector::at(const std::string& name) const {
  const auto it = values.find(name);
  if (it == values.end()) {
    throw std::out_of_range(fmt::format("sentence '{}' has no feature '{}'", sentence_id, name));
  }
  return it->second;
}

ExternalScoreColumn ExternalScoreColumn::read(const std::string& name, std::istream& in) {
  ExternalScoreColumn column{name, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(
          fmt::format("score column '{}' line {}: expected two tab-separated fields", name,
                      line_no));
    }
    const std::string id = line.substr(0, tab);
    const std::string value = line.substr(tab + 1);
    if (line_no == 1 && id == "sentence_id") continue;
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw std::runtime_error(
          fmt::format("score column '{}' line {}: '{}' is not a number", name, line_no, value));
    }
    if (!std::isfinite(score)) {
      throw std::runtime_error(
          fmt::format("score column '{}' line {}: non-finite score", name, line_no));
    }
    if (!column.scores.emplace(id, score).second) {
      throw std::runtime_error(
          fmt::format("score column '{}': duplicate sentence id '{}'", name, id));
    }
  }
  return column;
}

ExternalScoreColumn ExternalScoreColumn::read_file(const std::string& name,
                                                   const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score file: " + path);
  return read(name, in);
}

const char* to_string(InfoStatus status) {
  switch (status) {
    case InfoStatus::kGiven: return "Given";
    case InfoStatus::kNew: return "New";
    case InfoStatus::kAbsent: return "Absent";
  }
  return "?";
}

IsAnnotation annotate_information_status(const DependencyTree& tree, const Ordering& ordering,
                                         const DependencyTree* preceding,
                                         const IsConfig& config) {
  const auto position = positions_of(ordering, tree.size());
  const auto first_position = [&](const Constituent& c) {
    int best = static_cast<int>(tree.size());
    for (int idx : c.token_indices) best = std::min(best, position[static_cast<std::size_t>(idx)]);
    return best;
  };

  const Constituent* subject = nullptr;
  const Constituent* object = nullptr;
  const auto dependents = root_dependents(tree);
  for (const Constituent& c : dependents) {
    if (config.subject_relations.count(c.relation)) {
      if (!subject || first_position(c) < first_position(*subject)) subject = &c;
    } else if (config.object_relations.count(c.relation)) {
      if (!object || first_position(c) < first_position(*object)) object = &c;
    }
  }

  std::unordered_set<std::string> context_words;
  if (preceding) {
    for (const Token& t : preceding->tokens()) {
      if (config.content_pos.count(t.pos)) {
        context_words.insert(config.match_lemma ? t.lemma : t.form);
      }
    }
  }
  const auto status_of = [&](const Constituent* c) {
    if (!c) return InfoStatus::kAbsent;
    if (config.pronoun_pos.count(tree.token(c->head_index).pos)) return InfoStatus::kGiven;
    for (int idx : c->token_indices) {
      const Token& t = tree.token(idx);
      if (config.content_pos.count(t.pos) &&
          context_words.count(config.match_lemma ? t.lemma : t.form)) {
        return InfoStatus::kGiven;
      }
    }
    return InfoStatus::kNew;
  };

  IsAnnotation a;
  a.subject_status = status_of(subject);
  a.object_status = status_of(object);
  if (subject && object) {
    a.subject_first = first_position(*subject) < first_position(*object);
    const InfoStatus first = a.subject_first ? a.subject_status : a.object_status;
    const InfoStatus second = a.subject_first ? a.object_status : a.subject_status;
    if (first == InfoStatus::kGiven && second == InfoStatus::kNew) a.score = 1;
    if (first == InfoStatus::kNew && second == InfoStatus::kGiven) a.score = -1;
  }
  return a;
}

DocumentIndex::DocumentIndex(std::span<const DependencyTree> trees) : trees_(trees) {
  for (std::size_t i = 0; i < trees.size(); ++i) {
    if (!position_.emplace(trees[i].sentence_id(), i).second) {
      throw std::runtime_error("duplicate sentence id in treebank: " + trees[i].sentence_id());
    }
  }
}

const DependencyTree* DocumentIndex::find(const std::string& sentence_id) const {
  const auto it = position_.find(sentence_id);
  return it == position_.end() ? nullptr : &trees_[it->second];
}

std::vector<const DependencyTree*> DocumentIndex::preceding(const std::string& sentence_id,
                                                            std::size_t k) const {
  std::vector<const DependencyTree*> out;
  const auto it = position_.find(sentence_id);
  if (it == position_.end()) return out;
  const std::string& doc = trees_[it->second].doc_id();
  for (std::size_t i = it->second; i > 0 && out.size() < k; --i) {
    const DependencyTree& prev = trees_[i - 1];
    if (prev.doc_id() != doc) break;
    out.push_back(&prev);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

FeatureTable featurize(std::span<const SentenceRecord> records, const DocumentIndex& docs,
                       const NgramModel& lm, std::span<const ExternalScoreColumn> external,
                       const FeaturizeOptions& options) {
  FeatureTable table;
  table.names = {feature::kDepLength, feature::kTrigramSurprisal, feature::kLexReptSurprisal,
                 feature::kIsScore};
  for (const auto& column : external) {
    if (std::find(table.names.begin(), table.names.end(), column.name) != table.names.end()) {
      throw std::invalid_argument("external column name collides with a feature: " + column.name);
    }
    table.names.push_back(column.name);
  }

  struct Context {
    const DependencyTree* tree = nullptr;
    const DependencyTree* previous = nullptr;
    CacheState cache;
  };
  std::unordered_map<std::string, Context> contexts;
  const CacheState empty(options.cache_size, options.cache_denominator);

  table.rows.reserve(records.size());
  for (const SentenceRecord& record : records) {
    auto it = contexts.find(record.family_id);
    if (it == contexts.end()) {
      const DependencyTree* tree = docs.find(record.family_id);
      if (!tree) throw std::runtime_error("no tree for family " + record.family_id);
      const auto before = docs.preceding(record.family_id, std::max<std::size_t>(options.adapt_k, 1));
      std::vector<std::vector<std::string>> context_forms;
      for (const DependencyTree* t : before) context_forms.push_back(forms(*t, t->surface_order()));
      Context ctx{tree, before.empty() ? nullptr : before.back(),
                  adapt_cache(empty, context_forms, options.adapt_k)};
      it = contexts.emplace(record.family_id, std::move(ctx)).first;
    }
    const Context& ctx = it->second;
    const auto words = forms(*ctx.tree, record.ordering);

    FeatureVector fv;
    fv.sentence_id = record.sentence_id;
    fv.family_id = record.family_id;
    fv.is_reference = record.is_reference;
    fv.values[feature::kDepLength] =
        static_cast<double>(dependency_length(*ctx.tree, record.ordering));
    fv.values[feature::kTrigramSurprisal] = surprisal(lm, words).sentence_total;
    fv.values[feature::kLexReptSurprisal] =
        cache_surprisal(lm, ctx.cache, words, options.mu).sentence_total;
    fv.values[feature::kIsScore] =
        is_score(*ctx.tree, record.ordering, ctx.previous, options.is);
    for (const auto& column : external) {
      const auto score = column.scores.find(record.sentence_id);
      if (score == column.scores.end()) {
        throw std::runtime_error(fmt::format("score column '{}' has no score for sentence '{}'",
                                             column.name, record.sentence_id));
      }
      fv.values[column.name] = score->second;
    }
    table.rows.push_back(std::move(fv));
  }
  return table;
}

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
  out << "sentence_id,family_id,is_reference";
  for (const auto& name : table.names) out << ',' << csv_field(name);
  out << '\n';
  for (const FeatureVector& fv : table.rows) {
    if (fv.values.size() != table.names.size()) {
      throw std::logic_error("ragged feature row for sentence " + fv.sentence_id);
    }
    out << csv_field(fv.sentence_id) << ',' << csv_field(fv.family_id) << ','
        << (fv.is_reference ? 1 : 0);
    for (const auto& name : table.names) out << ',' << fmt::format("{}", fv.at(name));
    out << '\n';
  }
}

FeatureTable read_feature_csv(std::istream& in) {
  FeatureTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("feature CSV is empty");
  auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "sentence_id" || header[1] != "family_id" ||
      header[2] != "is_reference") {
    throw std::runtime_error("feature CSV header must start with sentence_id,family_id,is_reference");
  }
  table.names.assign(header.begin() + 3, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error(fmt::format("feature CSV line {}: expected {} fields, found {}",
                                           line_no, header.size(), fields.size()));
    }
    FeatureVector fv;
    fv.sentence_id = fields[0];
    fv.family_id = fields[1];
    fv.is_reference = fields[2] == "1";
    for (std::size_t j = 0; j < table.names.size(); ++j) {
      fv.values[table.names[j]] = std::stod(fields[j + 3]);
    }
    table.rows.push_back(std::move(fv));
  }
  return table;
}

}  // namespace wordorder
