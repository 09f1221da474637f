#include "wordorder/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wordorder/features.h"
#include "wordorder/random.h"

namespace wordorder {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, value));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, value));
  }
  return d;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(fmt::format("config key '{}': expected true/false, got '{}'", key, value));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

const std::map<std::string, std::vector<std::string>>& standard_models() {
  static const std::map<std::string, std::vector<std::string>> rows = {
      {"a", {feature::kIsScore}},
      {"b", {feature::kDepLength}},
      {"c", {feature::kPcfgSurprisal}},
      {"d", {feature::kLexReptSurprisal}},
      {"e", {feature::kTrigramSurprisal}},
      {"f", {feature::kLstmSurprisal}},
      {"g", {feature::kAdaptiveLstmSurprisal}},
      {"base1",
       {feature::kIsScore, feature::kDepLength, feature::kPcfgSurprisal, feature::kLexReptSurprisal,
        feature::kTrigramSurprisal, feature::kLstmSurprisal}},
      {"base2",
       {feature::kIsScore, feature::kDepLength, feature::kPcfgSurprisal, feature::kTrigramSurprisal,
        feature::kLstmSurprisal}},
  };
  return rows;
}

const std::vector<std::string>& standard_order() {
  static const std::vector<std::string> order = {"a", "b", "c", "d", "e", "f", "g",
                                                 "base1", "base1+g", "base2", "base2+g"};
  return order;
}

void expand(const std::string& name, const std::map<std::string, std::string>& custom,
            std::vector<std::string>& out, int depth) {
  if (depth > 16) throw ConfigError("subset definitions are circular at '" + name + "'");
  auto add = [&](const std::string& f) {
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  };
  if (const auto it = custom.find(name); it != custom.end()) {
    for (const auto& part : split(it->second, '+')) expand(part, custom, out, depth + 1);
    return;
  }
  if (const auto it = standard_models().find(name); it != standard_models().end()) {
    for (const auto& f : it->second) add(f);
    return;
  }
  if (name.find('+') != std::string::npos) {
    for (const auto& part : split(name, '+')) expand(part, custom, out, depth + 1);
    return;
  }
  add(name);
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("config line {}: expected key = value", number));
    }
    config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)), base_dir);
  }
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in, path.parent_path());
}

void RunConfig::set(const std::string& key, const std::string& value,
                    const std::filesystem::path& base_dir) {
  if (key == "treebank") {
    treebank = resolve(base_dir, value);
  } else if (key == "lm_corpus") {
    lm_corpus = resolve(base_dir, value);
  } else if (key == "output_dir") {
    output_dir = resolve(base_dir, value);
  } else if (key == "run_id") {
    if (value.find('/') != std::string::npos || value == "." || value == "..") {
      throw ConfigError("run_id must be a plain name");
    }
    run_id = value;
  } else if (key.rfind("external.", 0) == 0) {
    const std::string name = key.substr(9);
    if (name.empty()) throw ConfigError("external column needs a name");
    const auto path = resolve(base_dir, value);
    auto it = std::find_if(external.begin(), external.end(),
                           [&](const auto& e) { return e.first == name; });
    if (it != external.end()) {
      it->second = path;
    } else {
      external.emplace_back(name, path);
    }
  } else if (key == "cap") {
    cap = parse_number<std::size_t>(key, value);
  } else if (key == "mu") {
    mu = parse_double(key, value);
  } else if (key == "cache_size" || key == "H") {
    cache_size = parse_number<std::size_t>(key, value);
  } else if (key == "adapt_k") {
    adapt_k = parse_number<std::size_t>(key, value);
  } else if (key == "folds") {
    folds = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "gt_max") {
    gt_max = parse_number<int>(key, value);
  } else if (key == "min_count") {
    min_count = parse_number<int>(key, value);
  } else if (key == "threads") {
    threads = parse_number<std::size_t>(key, value);
  } else if (key == "skip_invalid") {
    skip_invalid = parse_bool(key, value);
  } else if (key == "verbal_complex") {
    verbal_complex = split(value, ',');
  } else if (key == "subsets") {
    subsets = split(value, ',');
  } else if (key.rfind("subset.", 0) == 0) {
    const std::string name = key.substr(7);
    if (name.empty()) throw ConfigError("subset definition needs a name");
    custom_subsets[name] = value;
  } else if (key == "compare") {
    comparisons.clear();
    for (const auto& item : split(value, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        throw ConfigError("compare entries look like name_a:name_b, got '" + item + "'");
      }
      comparisons.emplace_back(trim(item.substr(0, colon)), trim(item.substr(colon + 1)));
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (!seed) throw ConfigError("config: seed is required");
  auto must_exist = [](const char* what, const std::filesystem::path& p) {
    if (p.empty()) throw ConfigError(fmt::format("config: {} is not set", what));
    if (!std::filesystem::exists(p)) {
      throw ConfigError(fmt::format("config: {} does not exist: {}", what, p.string()));
    }
  };
  must_exist("treebank", treebank);
  must_exist("lm_corpus", lm_corpus);
  for (const auto& [name, path] : external) must_exist(("external." + name).c_str(), path);
  if (cap < 2) throw ConfigError("config: cap must be at least 2");
  if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("config: mu must lie in [0, 1]");
  if (cache_size == 0) throw ConfigError("config: cache_size must be positive");
  if (folds < 2) throw ConfigError("config: folds must be at least 2");
  if (threads == 0) throw ConfigError("config: threads must be positive");
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["treebank"] = treebank.string();
  kv["lm_corpus"] = lm_corpus.string();
  for (const auto& [name, path] : external) kv["external." + name] = path.string();
  kv["cap"] = std::to_string(cap);
  kv["mu"] = fmt::format("{}", mu);
  kv["cache_size"] = std::to_string(cache_size);
  kv["adapt_k"] = std::to_string(adapt_k);
  kv["folds"] = std::to_string(folds);
  kv["seed"] = seed ? std::to_string(*seed) : "";
  kv["gt_max"] = std::to_string(gt_max);
  kv["min_count"] = std::to_string(min_count);
  kv["threads"] = std::to_string(threads);
  kv["skip_invalid"] = skip_invalid ? "true" : "false";
  kv["verbal_complex"] = join(verbal_complex, ",");
  kv["subsets"] = join(subsets, ",");
  for (const auto& [name, def] : custom_subsets) kv["subset." + name] = def;
  std::vector<std::string> cmp;
  for (const auto& [a, b] : comparisons) cmp.push_back(a + ":" + b);
  kv["compare"] = join(cmp, ",");
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::hash() const { return fmt::format("{:016x}", stable_hash(canonical())); }

std::vector<std::string> resolve_subset(const std::string& name,
                                        const std::map<std::string, std::string>& custom) {
  std::vector<std::string> out;
  expand(name, custom, out, 0);
  return out;
}

std::vector<FeatureSubset> select_subsets(const RunConfig& config,
                                          const std::vector<std::string>& available) {
  auto has = [&](const std::string& f) {
    return std::find(available.begin(), available.end(), f) != available.end();
  };
  std::vector<FeatureSubset> out;
  if (!config.subsets.empty()) {
    for (const auto& name : config.subsets) {
      FeatureSubset s{name, resolve_subset(name, config.custom_subsets)};
      for (const auto& f : s.features) {
        if (!has(f)) {
          throw ConfigError(fmt::format("subset '{}' needs feature '{}' which is not available",
                                        name, f));
        }
      }
      out.push_back(std::move(s));
    }
    return out;
  }
  std::set<std::string> covered;
  for (const auto& name : standard_order()) {
    FeatureSubset s{name, resolve_subset(name, config.custom_subsets)};
    if (!std::all_of(s.features.begin(), s.features.end(), has)) {
      spdlog::info("skipping model '{}': not all of its features are available", name);
      continue;
    }
    covered.insert(s.features.begin(), s.features.end());
    out.push_back(std::move(s));
  }
  for (const auto& [name, def] : config.custom_subsets) {
    FeatureSubset s{name, resolve_subset(name, config.custom_subsets)};
    if (!std::all_of(s.features.begin(), s.features.end(), has)) {
      spdlog::warn("skipping model '{}': not all of its features are available", name);
      continue;
    }
    covered.insert(s.features.begin(), s.features.end());
    out.push_back(std::move(s));
  }
  for (const auto& f : available) {
    if (!covered.count(f)) out.push_back({f, {f}});
  }
  return out;
}

}  // namespace wordorder
