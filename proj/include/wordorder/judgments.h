#ifndef WORDORDER_JUDGMENTS_H_
#define WORDORDER_JUDGMENTS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace wordorder {

class JudgmentFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Stimulus {
  std::string item_id;
  std::string context_text;
  std::string reference_text;
  std::string variant_text;
  std::string construction_tag;
};

// JSON lines; every field required and non-empty (context may be empty),
// item ids unique. Throws JudgmentFormatError with the line number.
std::vector<Stimulus> read_stimuli(std::istream& in);
std::vector<Stimulus> read_stimuli_file(const std::filesystem::path& path);
void write_stimuli(std::ostream& out, const std::vector<Stimulus>& stimuli);

struct Judgment {
  std::string item_id;
  std::string participant_id;
  bool chose_reference = false;
  bool presented_reference_first = false;
  std::string timestamp;

  nlohmann::json to_json() const;
  static Judgment from_json(const nlohmann::json& j);
};

std::vector<Judgment> read_judgments(std::istream& in);
std::vector<Judgment> read_judgments_file(const std::filesystem::path& path);

// Model output per item: whether the classifier picks the reference.
struct ModelPrediction {
  std::string item_id;
  bool prefers_reference = false;
};

// JSON lines {item_id, prefers_reference}.
std::map<std::string, ModelPrediction> read_predictions(std::istream& in);
std::map<std::string, ModelPrediction> read_predictions_file(const std::filesystem::path& path);

// Presentation order is a pure function of (seed, participant, item).
bool presents_reference_first(std::uint64_t seed, const std::string& participant_id,
                              const std::string& item_id);
// Per-participant seeded shuffle of the stimulus order.
std::vector<std::size_t> presentation_order(std::uint64_t seed, const std::string& participant_id,
                                            std::size_t item_count);

struct AgreementRow {
  std::string construction;  // "all" for the total row
  std::size_t items = 0;
  std::size_t judgments = 0;
  double agreement = 0.0;                // % items whose human label is 1 (corpus label)
  std::optional<double> model_corpus;    // % items where the model picks the reference
  std::optional<double> model_human;     // % items where model and human label agree
};

struct AgreementTable {
  std::vector<AgreementRow> rows;  // per construction (sorted), then "all"
  std::vector<std::string> excluded;  // stimuli with no judgment
  // Pearson r of model predictions (0/1) with each label set; empty when
  // either side is constant or no predictions were given.
  std::optional<double> pearson_model_human;
  std::optional<double> pearson_model_corpus;
  std::map<std::string, int> human_label;  // per item

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Human label of an item is 1 when strictly more than half of its judgments
// chose the reference. The corpus label is always 1 (the reference is the
// attested sentence). Duplicate (participant, item) records count once.
AgreementTable aggregate_judgments(const std::vector<Stimulus>& stimuli,
                                   const std::vector<Judgment>& judgments,
                                   const std::map<std::string, ModelPrediction>& predictions = {});

}  // namespace wordorder

#endif  // WORDORDER_JUDGMENTS_H_
