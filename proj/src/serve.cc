#include "wordorder/serve.h"

#include <chrono>
#include <ctime>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"

namespace wordorder {
namespace {

std::atomic<httplib::Server*> g_server{nullptr};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  return fmt::format("{}.{:03d}Z", buf, ms);
}

ApiResponse error(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

const char* kPage = R"html(<!doctype html>
<html><head><meta charset="utf-8"><title>Sentence judgments</title>
<style>body{font-family:sans-serif;max-width:46em;margin:2em auto}
button{display:block;width:100%;margin:.5em 0;padding:1em;font-size:1.1em;text-align:left}
#ctx{color:#555}</style></head>
<body>
<div id="login"><input id="pid" placeholder="participant id"> <button onclick="start()">Start</button></div>
<div id="task" hidden>
<p id="progress"></p><p id="ctx"></p>
<button id="a" onclick="choose('A')"></button><button id="b" onclick="choose('B')"></button>
</div>
<script>
let pid = null, item = null;
async function start() { pid = document.getElementById('pid').value.trim(); if (pid) next(); }
async function next() {
  const r = await fetch('/api/stimuli/next?participant=' + encodeURIComponent(pid));
  const s = await r.json();
  document.getElementById('login').hidden = true;
  document.getElementById('task').hidden = false;
  if (s.done) { document.getElementById('task').innerHTML = '<p>Thank you, all items are done.</p>'; return; }
  item = s.item_id;
  document.getElementById('progress').textContent = (s.answered + 1) + ' / ' + s.total;
  document.getElementById('ctx').textContent = s.context_text;
  document.getElementById('a').textContent = 'A: ' + s.option_a_text;
  document.getElementById('b').textContent = 'B: ' + s.option_b_text;
}
async function choose(sel) {
  await fetch('/api/judgments', {method: 'POST', headers: {'Content-Type': 'application/json'},
    body: JSON.stringify({item_id: item, participant_id: pid, selected: sel})});
  next();
}
document.addEventListener('keydown', e => {
  if (!item) return;
  if (e.key === 'ArrowLeft') choose('A');
  if (e.key === 'ArrowRight') choose('B');
});
</script></body></html>
)html";

}  // namespace

JudgmentService::JudgmentService(std::vector<Stimulus> stimuli, std::uint64_t seed,
                                 std::filesystem::path log_path,
                                 std::map<std::string, ModelPrediction> predictions)
    : stimuli_(std::move(stimuli)),
      seed_(seed),
      predictions_(std::move(predictions)),
      log_path_(std::move(log_path)) {
  if (stimuli_.empty()) throw std::invalid_argument("no stimuli");
  for (std::size_t i = 0; i < stimuli_.size(); ++i) {
    if (!index_.emplace(stimuli_[i].item_id, i).second) {
      throw std::invalid_argument("duplicate item_id " + stimuli_[i].item_id);
    }
  }
  if (std::filesystem::exists(log_path_)) {
    for (auto& j : read_judgments_file(log_path_)) {
      if (!index_.count(j.item_id)) {
        spdlog::warn("log entry for unknown item '{}' ignored", j.item_id);
        continue;
      }
      if (answered_.emplace(j.participant_id, j.item_id).second) judgments_.push_back(std::move(j));
    }
    spdlog::info("resumed {} judgments from {}", judgments_.size(), log_path_.string());
  }
  log_.open(log_path_, std::ios::app);
  if (!log_) throw std::runtime_error("cannot open judgment log " + log_path_.string());
}

ApiResponse JudgmentService::next(const std::string& participant_id) const {
  if (participant_id.empty()) return error(400, "participant is required");
  const auto order = presentation_order(seed_, participant_id, stimuli_.size());
  std::lock_guard lock(mutex_);
  std::size_t answered = 0;
  const Stimulus* pending = nullptr;
  for (std::size_t i : order) {
    const Stimulus& s = stimuli_[i];
    if (answered_.count({participant_id, s.item_id})) {
      ++answered;
    } else if (!pending) {
      pending = &s;
    }
  }
  nlohmann::json body = {{"answered", answered}, {"total", stimuli_.size()}};
  if (!pending) {
    body["done"] = true;
    return {200, body};
  }
  const bool ref_first = presents_reference_first(seed_, participant_id, pending->item_id);
  body["done"] = false;
  body["item_id"] = pending->item_id;
  body["context_text"] = pending->context_text;
  body["option_a_text"] = ref_first ? pending->reference_text : pending->variant_text;
  body["option_b_text"] = ref_first ? pending->variant_text : pending->reference_text;
  return {200, body};
}

ApiResponse JudgmentService::submit(const std::string& raw) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    return error(400, "body is not JSON");
  }
  if (!j.is_object()) return error(400, "body must be an object");
  auto text = [&](const char* key) -> std::string {
    return j.contains(key) && j[key].is_string() ? j[key].get<std::string>() : std::string();
  };
  const std::string item = text("item_id");
  const std::string participant = text("participant_id");
  const std::string selected = text("selected");
  if (item.empty() || participant.empty()) return error(400, "item_id and participant_id are required");
  if (selected != "A" && selected != "B") return error(400, "selected must be \"A\" or \"B\"");
  if (!index_.count(item)) return error(404, "unknown item_id");

  Judgment rec;
  rec.item_id = item;
  rec.participant_id = participant;
  rec.presented_reference_first = presents_reference_first(seed_, participant, item);
  rec.chose_reference = (selected == "A") == rec.presented_reference_first;
  rec.timestamp = utc_timestamp();

  std::lock_guard lock(mutex_);
  if (!answered_.emplace(participant, item).second) {
    return error(409, "this participant already judged this item");
  }
  log_ << rec.to_json().dump() << '\n';
  log_.flush();
  if (!log_) {
    answered_.erase({participant, item});
    return error(500, "cannot append to judgment log");
  }
  judgments_.push_back(std::move(rec));
  return {201, {{"status", "recorded"}}};
}

ApiResponse JudgmentService::results() const {
  std::lock_guard lock(mutex_);
  if (judgments_.empty()) return {200, {{"judgments", 0}, {"rows", nlohmann::json::array()}}};
  auto body = aggregate_judgments(stimuli_, judgments_, predictions_).to_json();
  body["judgments"] = judgments_.size();
  return {200, body};
}

std::size_t JudgmentService::judgment_count() const {
  std::lock_guard lock(mutex_);
  return judgments_.size();
}

void JudgmentService::flush() {
  std::lock_guard lock(mutex_);
  log_.flush();
}

void run_server(JudgmentService& service, const ServeOptions& options,
                const std::function<void(int)>& on_ready) {
  httplib::Server server;
  // the library default adds SO_REUSEPORT, which lets a second server share a busy port
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/api/stimuli/next", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.next(req.get_param_value("participant")));
  });
  server.Post("/api/judgments", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.submit(req.body));
  });
  server.Get("/api/results", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, service.results());
  });
  if (!options.assets.empty()) {
    if (!server.set_mount_point("/", options.assets.string())) {
      throw std::runtime_error("assets directory not found: " + options.assets.string());
    }
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPage, "text/html; charset=utf-8");
    });
  }

  int port = options.port;
  if (port == 0) {
    port = server.bind_to_any_port(options.host);
    if (port < 0) throw std::runtime_error("cannot bind " + options.host);
  } else if (!server.bind_to_port(options.host, port)) {
    throw std::runtime_error(fmt::format("cannot bind {}:{} (port busy?)", options.host, port));
  }
  g_server.store(&server);
  spdlog::info("serving on http://{}:{}/", options.host, port);
  if (on_ready) on_ready(port);
  server.listen_after_bind();
  g_server.store(nullptr);
  service.flush();
}

void stop_server() {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace wordorder
