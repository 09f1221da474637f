#ifndef WORDORDER_SERVE_H_
#define WORDORDER_SERVE_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "wordorder/judgments.h"

namespace wordorder {

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// State behind the judgment API. Judgments go to an append-only JSON-lines
// log through a single writer; an existing log is replayed on startup so a
// restarted service resumes where it stopped.
class JudgmentService {
 public:
  JudgmentService(std::vector<Stimulus> stimuli, std::uint64_t seed,
                  std::filesystem::path log_path,
                  std::map<std::string, ModelPrediction> predictions = {});

  // GET /api/stimuli/next?participant=P
  ApiResponse next(const std::string& participant_id) const;
  // POST /api/judgments {item_id, participant_id, selected: "A" | "B"}
  ApiResponse submit(const std::string& body);
  // GET /api/results
  ApiResponse results() const;

  std::size_t judgment_count() const;
  void flush();

 private:
  std::vector<Stimulus> stimuli_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t seed_;
  std::map<std::string, ModelPrediction> predictions_;

  mutable std::mutex mutex_;
  std::filesystem::path log_path_;
  std::ofstream log_;
  std::vector<Judgment> judgments_;
  std::set<std::pair<std::string, std::string>> answered_;  // (participant, item)
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path assets;  // static files; empty = built-in page
};

// Blocks until stop_server() is called (or a signal handler calls it).
// `on_ready` receives the bound port. Throws if the port cannot be bound.
void run_server(JudgmentService& service, const ServeOptions& options,
                const std::function<void(int)>& on_ready = {});
void stop_server();

}  // namespace wordorder

#endif  // WORDORDER_SERVE_H_
