#include "krf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "krf/error.hpp"
#include "krf/hash.hpp"

namespace krf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x)) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

struct Field {
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::map<std::string, Field> fields() {
  std::map<std::string, Field> f;
  auto dbl = [&](const std::string& key, double ExperimentConfig::*m) {
    f[key] = {[m](const ExperimentConfig& c) { return num(c.*m); },
              [m, key](ExperimentConfig& c, const std::string& v) { c.*m = to_double(key, v); }};
  };
  auto lst = [&](const std::string& key, std::vector<double> ExperimentConfig::*m) {
    f[key] = {[m](const ExperimentConfig& c) { return list(c.*m); },
              [m, key](ExperimentConfig& c, const std::string& v) { c.*m = to_list(key, v); }};
  };
  auto cnt = [&](const std::string& key, std::size_t ExperimentConfig::*m) {
    f[key] = {[m](const ExperimentConfig& c) { return std::to_string(c.*m); },
              [m, key](ExperimentConfig& c, const std::string& v) {
                c.*m = static_cast<std::size_t>(to_uint(key, v));
              }};
  };
  auto tol = [&](const std::string& key, double Tolerances::*m) {
    f["tol_" + key] = {[m](const ExperimentConfig& c) { return num(c.tol.*m); },
                       [m, key](ExperimentConfig& c, const std::string& v) {
                         c.tol.*m = to_double("tol_" + key, v);
                       }};
  };
  cnt("N", &ExperimentConfig::n_nodes);
  f["profile"] = {[](const ExperimentConfig& c) { return c.profile; },
                  [](ExperimentConfig& c, const std::string& v) { c.profile = v; }};
  dbl("amplitude", &ExperimentConfig::amplitude);
  f["profile_file"] = {[](const ExperimentConfig& c) { return c.profile_file.string(); },
                       [](ExperimentConfig& c, const std::string& v) { c.profile_file = v; }};
  dbl("step", &ExperimentConfig::step);
  dbl("t_max_fraction", &ExperimentConfig::t_max_fraction);
  lst("schedule", &ExperimentConfig::schedule);
  lst("uniqueness_schedule", &ExperimentConfig::uniqueness_schedule);
  f["base"] = {[](const ExperimentConfig& c) { return c.base_theta == 0.0 ? "north" : "south"; },
               [](ExperimentConfig& c, const std::string& v) {
                 if (v == "north") c.base_theta = 0.0;
                 else if (v == "south") c.base_theta = std::numbers::pi;
                 else throw ConfigError("config key 'base': expected north or south, got '" + v + "'");
               }};
  dbl("eps_factor", &ExperimentConfig::eps_factor);
  f["terminal"] = {[](const ExperimentConfig& c) { return c.terminal; },
                   [](ExperimentConfig& c, const std::string& v) { c.terminal = v; }};
  cnt("export_stride", &ExperimentConfig::export_stride);
  lst("lgeo_t_i", &ExperimentConfig::lgeo_t_i);
  lst("lgeo_times", &ExperimentConfig::lgeo_times);
  cnt("n_q", &ExperimentConfig::n_q);
  cnt("n_bases", &ExperimentConfig::n_bases);
  cnt("intervals", &ExperimentConfig::intervals);
  cnt("lattice_theta", &ExperimentConfig::lattice_theta);
  f["out_dir"] = {[](const ExperimentConfig& c) { return c.out_dir.string(); },
                  [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }};
  f["seed"] = {[](const ExperimentConfig& c) { return std::to_string(c.seed); },
               [](ExperimentConfig& c, const std::string& v) { c.seed = to_uint("seed", v); }};
  tol("mass", &Tolerances::mass);
  tol("exact", &Tolerances::exact);
  tol("soliton", &Tolerances::soliton);
  tol("W", &Tolerances::W_mono);
  tol("v", &Tolerances::v);
  tol("dW_rel", &Tolerances::dW_rel);
  tol("admiss", &Tolerances::admiss);
  tol("harnack", &Tolerances::harnack);
  tol("rho", &Tolerances::rho);
  tol("rho_final", &Tolerances::rho_final);
  tol("L_oracle", &Tolerances::L_oracle);
  tol("pole", &Tolerances::pole);
  tol("lattice", &Tolerances::lattice);
  tol("tilde_mono", &Tolerances::tilde_mono);
  tol("fl", &Tolerances::fl);
  tol("ineq", &Tolerances::ineq);
  tol("ineq_share", &Tolerances::ineq_share);
  return f;
}

void check_fractions(const std::string& key, const std::vector<double>& v, bool allow_zero) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool in_range = (allow_zero ? v[i] >= 0.0 : v[i] > 0.0) && v[i] < 1.0;
    if (!in_range || (i > 0 && !(v[i] > v[i - 1]))) {
      throw ConfigError("config key '" + key + "': fractions must increase strictly inside " +
                        (allow_zero ? "[0, 1)" : "(0, 1)"));
    }
  }
}

void validate(const ExperimentConfig& c) {
  if (c.n_nodes < 64) throw ConfigError("config key 'N': must be at least 64");
  if (c.profile != "round" && c.profile != "cos" && c.profile != "file") {
    throw ConfigError("config key 'profile': expected round, cos or file, got '" + c.profile + "'");
  }
  if (c.profile == "file" && c.profile_file.empty()) {
    throw ConfigError("config key 'profile_file': required when profile = file");
  }
  if (!(c.step > 0.0)) throw ConfigError("config key 'step': must be positive");
  if (!(c.t_max_fraction > 0.0 && c.t_max_fraction < 1.0)) {
    throw ConfigError("config key 't_max_fraction': must lie in (0, 1)");
  }
  check_fractions("schedule", c.schedule, false);
  check_fractions("uniqueness_schedule", c.uniqueness_schedule, false);
  check_fractions("lgeo_t_i", c.lgeo_t_i, false);
  check_fractions("lgeo_times", c.lgeo_times, true);
  if (c.schedule.size() < 3) throw ConfigError("config key 'schedule': needs at least 3 entries");
  if (c.uniqueness_schedule.size() < 3) {
    throw ConfigError("config key 'uniqueness_schedule': needs at least 3 entries");
  }
  if (!(c.eps_factor > 0.0)) throw ConfigError("config key 'eps_factor': must be positive");
  if (c.terminal != "delta" && c.terminal != "uniform") {
    throw ConfigError("config key 'terminal': expected delta or uniform, got '" + c.terminal + "'");
  }
  if (c.export_stride < 1) throw ConfigError("config key 'export_stride': must be at least 1");
  if (c.n_q < 3) throw ConfigError("config key 'n_q': must be at least 3");
  if (c.n_bases < 1) throw ConfigError("config key 'n_bases': must be at least 1");
  if (c.intervals < 2) throw ConfigError("config key 'intervals': must be at least 2");
  if (c.lattice_theta < 2) throw ConfigError("config key 'lattice_theta': must be at least 2");
  for (const auto& [key, field] : fields()) {
    if (key.rfind("tol_", 0) == 0 && field.get(c).front() == '-') {
      throw ConfigError("config key '" + key + "': must not be negative");
    }
  }
}

}  // namespace

std::string ExperimentConfig::canonical() const {
  std::string out;
  // The output location does not change any result, so it stays out of the hash.
  for (const auto& [key, field] : fields()) {
    const std::string v = field.get(*this);
    if (key != "out_dir" && !v.empty()) out += key + "=" + v + "\n";
  }
  return out;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical()); }

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  const auto f = fields();
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = f.find(key);
    if (it == f.end()) throw ConfigError("config key '" + key + "': unknown key");
    if (value.empty()) throw ConfigError("config key '" + key + "': empty value");
    try {
      it->second.set(c, value);
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind("config key ''", 0) == 0) {
        throw ConfigError("config key '" + key + "'" + msg.substr(std::string("config key ''").size()));
      }
      throw;
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<double> required_checkpoints(const ExperimentConfig& cfg) {
  std::vector<double> c{0.5, 0.75, 0.9, 0.95};
  for (const auto* v : {&cfg.schedule, &cfg.uniqueness_schedule, &cfg.lgeo_t_i, &cfg.lgeo_times}) {
    c.insert(c.end(), v->begin(), v->end());
  }
  std::erase_if(c, [&](double x) { return !(x > 0.0) || x > cfg.t_max_fraction; });
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

}  // namespace krf
