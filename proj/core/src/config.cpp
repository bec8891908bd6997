#include "facetset/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "facetset/errors.hpp"

namespace facetset {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    s = s.substr(1, s.size() - 2);
  return std::string(s);
}

template <typename T>
T parse_int(std::string_view key, std::string_view v, T lo, T hi) {
  const auto s = unquote(v);
  T out{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError(std::string(key) + ": expected an integer, got '" + s + "'");
  if (out < lo || out > hi)
    throw ConfigError(std::string(key) + ": " + s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  const auto s = unquote(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out))
    throw ConfigError(std::string(key) + ": expected a real number, got '" + s + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  const auto s = unquote(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + s + "'");
}

void require(bool ok, std::string_view key, const std::string& what) {
  if (!ok) throw ConfigError(std::string(key) + ": " + what);
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "window",        "min_frequency",      "stop_words",      "max_skipgrams",   "include_stop_only",
      "metric",        "preference",         "damping",         "max_iter",        "stable_iters",
      "random_seed",   "ridge_scale",        "centered",        "threshold",       "raw_threshold",
      "softmax_base",  "scorer",             "sidecar",         "sidecar_timeout_ms", "scorer_fallback",
      "top_k",         "top_n",              "candidate_scope", "frequency_weighted", "cutoffs",
      "threads"};
  return k;
}

void RunConfig::set(std::string_view key_in, std::string_view value) {
  const auto key = trim(key_in);
  if (key == "window") {
    window = parse_int<std::size_t>(key, value, 1, 64);
  } else if (key == "min_frequency") {
    min_frequency = parse_int<std::uint64_t>(key, value, 1, UINT64_MAX);
  } else if (key == "stop_words") {
    stop_words_path = unquote(value);
  } else if (key == "max_skipgrams") {
    max_skipgrams = parse_int<std::size_t>(key, value, 1, 100000);
  } else if (key == "include_stop_only") {
    include_stop_only = parse_bool(key, value);
  } else if (key == "metric") {
    metric = parse_metric(unquote(value));
  } else if (key == "preference") {
    const auto s = unquote(value);
    preference = s == "median" ? std::nullopt : std::optional<double>(parse_real(key, s));
  } else if (key == "damping") {
    damping = parse_real(key, value);
    require(damping >= 0.5 && damping < 1.0, key, "must lie in [0.5, 1)");
  } else if (key == "max_iter") {
    max_iter = parse_int<int>(key, value, 1, 1000000);
  } else if (key == "stable_iters") {
    stable_iters = parse_int<int>(key, value, 1, 1000000);
  } else if (key == "random_seed") {
    random_seed = parse_int<std::uint64_t>(key, value, 0, UINT64_MAX);
  } else if (key == "ridge_scale") {
    ridge_scale = parse_real(key, value);
    require(ridge_scale > 0.0, key, "must be positive");
  } else if (key == "centered") {
    centered = parse_bool(key, value);
  } else if (key == "threshold") {
    threshold = parse_real(key, value);
    require(threshold >= 0.0, key, "must be non-negative");
  } else if (key == "raw_threshold") {
    raw_threshold = parse_real(key, value);
    require(raw_threshold >= 0.0 && raw_threshold <= 1.0, key, "must lie in [0, 1]");
  } else if (key == "softmax_base") {
    const auto s = unquote(value);
    softmax_base = s == "e" ? 2.718281828459045 : parse_real(key, s);
    require(softmax_base > 1.0, key, "must exceed 1");
  } else if (key == "scorer") {
    scorer = unquote(value);
    require(scorer == "corpus" || scorer == "mlm", key, "must be 'corpus' or 'mlm'");
  } else if (key == "sidecar") {
    sidecar = unquote(value);
    if (!sidecar.empty()) SidecarEndpoint::parse(sidecar);
  } else if (key == "sidecar_timeout_ms") {
    sidecar_timeout_ms = parse_int<int>(key, value, 1, 3600000);
  } else if (key == "scorer_fallback") {
    scorer_fallback = parse_bool(key, value);
  } else if (key == "top_k") {
    top_k = parse_int<std::size_t>(key, value, 1, 100000);
  } else if (key == "top_n") {
    top_n = parse_int<std::size_t>(key, value, 1, 100000);
  } else if (key == "candidate_scope") {
    const auto s = unquote(value);
    require(s == "index" || s == "scorer", key, "must be 'index' or 'scorer'");
    candidate_scope = s == "index" ? CandidateScope::index : CandidateScope::scorer;
  } else if (key == "frequency_weighted") {
    frequency_weighted = parse_bool(key, value);
  } else if (key == "cutoffs") {
    auto s = unquote(value);
    std::erase_if(s, [](char c) { return c == '[' || c == ']'; });
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      auto comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      const auto item = trim(std::string_view(s).substr(pos, comma - pos));
      if (!item.empty()) out.push_back(parse_int<std::size_t>(key, item, 1, 100000));
      pos = comma + 1;
    }
    require(!out.empty(), key, "needs at least one cutoff");
    cutoffs = std::move(out);
  } else if (key == "threads") {
    threads = parse_int<std::size_t>(key, value, 1, 4096);
  } else {
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  }
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config file");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    // '#' starts a comment unless it sits inside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == '"') quoted = !quoted;
      if (v[i] == '#' && !quoted) {
        v = v.substr(0, i);
        break;
      }
    }
    v = trim(v);
    if (v.empty() || v.front() == '[') continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(v.substr(0, eq), v.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

IndexConfig RunConfig::index_config() const {
  IndexConfig c;
  c.window = window;
  c.min_frequency = min_frequency;
  if (!stop_words_path.empty()) c.stop_words = load_stop_words(stop_words_path);
  c.threads = threads;
  return c;
}

QueryConfig RunConfig::query_config() const {
  QueryConfig q;
  q.clustering.metric = metric;
  q.clustering.preference = preference;
  q.clustering.affinity.damping = damping;
  q.clustering.affinity.max_iter = max_iter;
  q.clustering.affinity.stable_iters = stable_iters;
  q.clustering.affinity.noise_seed = random_seed;
  q.clustering.max_skipgrams = max_skipgrams;
  q.clustering.include_stop_only = include_stop_only;
  q.fusion.correlation.ridge_scale = ridge_scale;
  q.fusion.correlation.centered = centered;
  q.fusion.relevance.threshold = threshold;
  q.fusion.relevance.raw_threshold = raw_threshold;
  q.fusion.relevance.softmax_base = softmax_base;
  q.fusion.threads = threads;
  q.expansion.top_n = top_n;
  q.expansion.top_k = top_k;
  q.expansion.scope = candidate_scope;
  q.expansion.frequency_weighted = frequency_weighted;
  q.threads = threads;
  return q;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["window"] = window;
  j["min_frequency"] = min_frequency;
  j["stop_words"] = stop_words_path;
  j["max_skipgrams"] = max_skipgrams;
  j["include_stop_only"] = include_stop_only;
  j["metric"] = to_string(metric);
  j["preference"] = preference ? nlohmann::json(*preference) : nlohmann::json("median");
  j["damping"] = damping;
  j["max_iter"] = max_iter;
  j["stable_iters"] = stable_iters;
  j["random_seed"] = random_seed;
  j["ridge_scale"] = ridge_scale;
  j["centered"] = centered;
  j["threshold"] = threshold;
  j["raw_threshold"] = raw_threshold;
  j["softmax_base"] = softmax_base;
  j["scorer"] = scorer;
  j["sidecar"] = sidecar;
  j["sidecar_timeout_ms"] = sidecar_timeout_ms;
  j["scorer_fallback"] = scorer_fallback;
  j["top_k"] = top_k;
  j["top_n"] = top_n;
  j["candidate_scope"] = candidate_scope == CandidateScope::index ? "index" : "scorer";
  j["frequency_weighted"] = frequency_weighted;
  j["cutoffs"] = cutoffs;
  return j;
}

}  // namespace facetset
