#include "pnreg_tools/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pnreg::tools {

namespace {

std::string normalize(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw UsageError("invalid number for " + key + ": '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  long x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw UsageError("invalid integer for " + key + ": '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw UsageError("invalid boolean for " + key + ": '" + v + "'");
}

}  // namespace

std::vector<std::string> config_keys() {
  return {"seed",   "p",          "eps",        "method",      "form",        "sampled",
          "line_search", "max_outer", "C_h",    "mwu_C",       "mwu_C_alpha", "spectral_c",
          "m_knob", "rebuild_period", "A",      "b",           "C",           "v",
          "t",      "out",        "trace",      "only"};
}

void RunConfig::set(const std::string& raw_key, const std::string& value) {
  std::string key = normalize(raw_key);
  if (key == "seed") {
    std::uint64_t s = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s);
    if (ec != std::errc() || ptr != value.data() + value.size())
      throw UsageError("invalid seed: '" + value + "'");
    seed = s;
  } else if (key == "p") {
    p = to_double(key, value);
  } else if (key == "eps") {
    eps = to_double(key, value);
  } else if (key == "method") {
    try {
      method = parse_method(value);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  } else if (key == "form") {
    try {
      form = parse_form(value);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  } else if (key == "sampled") {
    sampled = to_bool(key, value);
  } else if (key == "line_search") {
    line_search = to_bool(key, value);
  } else if (key == "max_outer") {
    max_outer = static_cast<int>(to_long(key, value));
  } else if (key == "C_h") {
    C_h = to_double(key, value);
  } else if (key == "mwu_C") {
    mwu_C = to_double(key, value);
  } else if (key == "mwu_C_alpha") {
    mwu_C_alpha = to_double(key, value);
  } else if (key == "spectral_c") {
    spectral_c = to_double(key, value);
  } else if (key == "m_knob") {
    m_knob = to_double(key, value);
  } else if (key == "rebuild_period") {
    rebuild_period = to_long(key, value);
  } else if (key == "A") {
    A_path = value;
  } else if (key == "b") {
    b_path = value;
  } else if (key == "C") {
    C_path = value;
  } else if (key == "v") {
    v_path = value;
  } else if (key == "t") {
    t_path = value;
  } else if (key == "out") {
    out_path = value;
  } else if (key == "trace") {
    trace_path = value;
  } else if (key == "only") {
    only.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!trim(item).empty()) only.push_back(trim(item));
  } else {
    throw UsageError("unknown config key '" + raw_key + "'");
  }
}

void RunConfig::validate() const {
  auto positive = [](const char* name, double x) {
    if (!(x > 0.0)) throw UsageError(std::string(name) + " must be positive");
  };
  if (!(p > 1.0)) throw UsageError("p must be > 1");
  positive("eps", eps);
  positive("C_h", C_h);
  positive("mwu_C", mwu_C);
  positive("mwu_C_alpha", mwu_C_alpha);
  positive("spectral_c", spectral_c);
  positive("m_knob", m_knob);
  if (rebuild_period < 0) throw UsageError("rebuild_period must be >= 0");
  if (max_outer <= 0) throw UsageError("max_outer must be positive");
  if (method == Method::Homotopy && form != ProblemForm::P1)
    throw UsageError("method homotopy needs form p1");
  if (sampled && form == ProblemForm::P1 && p > 2.0)
    throw UsageError("sampled route needs p <= 2 for form p1");
}

SolverConfig RunConfig::solver_config() const {
  SolverConfig sc;
  sc.method = method;
  sc.eps = eps;
  sc.seed = seed;
  sc.sampled = sampled;
  sc.line_search = line_search;
  sc.max_outer = max_outer;
  sc.gamma.C_h = C_h;
  sc.spectral.c = spectral_c;
  sc.zsearch.mwu.C = mwu_C;
  sc.zsearch.mwu.C_alpha = mwu_C_alpha;
  sc.zsearch.mwu.m_knob = m_knob;
  sc.zsearch.mwu.rebuild_period = rebuild_period;
  return sc;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    out[normalize(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig resolve_config(const std::map<std::string, std::string>& flags) {
  RunConfig cfg;
  auto it = flags.find("config");
  if (it != flags.end()) {
    for (const auto& [k, v] : read_config_file(it->second)) cfg.set(k, v);
  }
  for (const auto& [k, v] : flags)
    if (k != "config") cfg.set(k, v);
  return cfg;
}

}  // namespace pnreg::tools
