#include "krf/io.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "krf/error.hpp"
#include "krf/hash.hpp"

namespace krf {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& config_hash,
                     const Meta& meta, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), width_(columns.size()) {
  if (!out_) throw MissingInputError("cannot write " + path.string());
  out_ << "# config_hash=" << config_hash << '\n';
  for (const auto& [k, v] : meta) out_ << "# " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != width_) throw DimensionError("CSV row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt17(values[i]);
  out_ << '\n';
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("input file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_hash(const std::filesystem::path& path) { return fnv1a_hex(read_text(path)); }

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingInputError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

namespace {

nlohmann::json parse_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MissingInputError("unreadable JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const FlowTrajectory& traj) {
  write_json(path, traj.to_json());
}

FlowTrajectory read_snapshot(const std::filesystem::path& path) {
  const auto j = parse_json(path);
  try {
    return FlowTrajectory::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw MissingInputError("malformed snapshot " + path.string() + ": " + e.what());
  }
}

MetricProfile read_profile(const std::filesystem::path& path) {
  const auto j = parse_json(path);
  try {
    return MetricProfile::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw MissingInputError("malformed profile " + path.string() + ": " + e.what());
  }
}

void write_flow_csv(const std::filesystem::path& path, const FlowTrajectory& traj,
                    const std::string& config_hash) {
  CsvWriter csv(path, config_hash,
                {{"T_exact", fmt17(traj.extinction_time())}, {"trajectory", traj.content_hash()}},
                {"t", "Vol", "K_min", "K_max", "w_min", "w_max"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& m = traj.profile(k);
    const auto& w = m.w();
    const auto [wlo, whi] = std::minmax_element(w.begin(), w.end());
    csv.row({traj.time(k), volume(m), traj.curvature(k).min(), traj.curvature(k).max(), *wlo,
             *whi});
  }
}

void write_solution_csv(const std::filesystem::path& path, const ConjugateSolution& sol,
                        const std::string& config_hash, std::size_t stride) {
  CsvWriter csv(path, config_hash,
                {{"t_i", fmt17(sol.terminal_time())},
                 {"theta_p", fmt17(sol.base_theta)},
                 {"eps", fmt17(sol.epsilon)},
                 {"trajectory", sol.trajectory_hash},
                 {"T_exact", fmt17(sol.extinction_time())}},
                {"t", "theta", "u", "f", "mass"});
  if (stride < 1) stride = 1;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    if (k % stride != 0 && k + 1 != sol.size()) continue;
    const auto u = sol.u(k);
    const double mass = sol.mass(k);
    const ScalarField f = f_of(sol, k);
    const Grid& g = sol.metric(k).grid();
    for (std::size_t j = 0; j < u.size(); ++j) csv.row({sol.time(k), g.theta(j), u[j], f[j], mass});
  }
}

namespace {

std::vector<double> split_numbers(const std::string& line, const std::filesystem::path& path) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw MissingInputError("malformed number '" + item + "' in " + path.string());
    }
  }
  return out;
}

}  // namespace

ConjugateSolution read_solution_csv(const std::filesystem::path& path,
                                    const FlowTrajectory& traj) {
  std::stringstream ss(read_text(path));
  std::string line;
  std::map<std::string, std::string> meta;
  bool header = false;
  std::vector<double> times;
  std::vector<std::vector<double>> u;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!header) {
      if (line != "t,theta,u,f,mass") throw MissingInputError("not a solution CSV: " + path.string());
      header = true;
      continue;
    }
    const auto v = split_numbers(line, path);
    if (v.size() != 5) throw MissingInputError("solution row needs 5 columns in " + path.string());
    if (times.empty() || v[0] != times.back()) {
      times.push_back(v[0]);
      u.emplace_back();
    }
    u.back().push_back(v[2]);
  }
  if (times.empty()) throw MissingInputError("solution has no rows: " + path.string());
  if (!meta.count("t_i")) throw MissingInputError("solution lacks t_i metadata: " + path.string());
  if (meta.count("trajectory") && meta["trajectory"] != traj.content_hash()) {
    throw MissingInputError("solution was computed on a different trajectory");
  }
  std::vector<MetricProfile> metrics;
  for (double t : times) metrics.push_back(traj.profile_at(t));
  ConjugateSolution sol(times, std::move(metrics), std::move(u), traj.extinction_time(),
                        std::stod(meta["t_i"]));
  if (meta.count("theta_p")) sol.base_theta = std::stod(meta["theta_p"]);
  if (meta.count("eps")) sol.epsilon = std::stod(meta["eps"]);
  sol.trajectory_hash = traj.content_hash();
  return sol;
}

void write_entropy_csv(const std::filesystem::path& path, const std::vector<EntropyRecord>& rows,
                       const std::string& config_hash, const Meta& meta) {
  CsvWriter csv(path, config_hash, meta,
                {"t", "W", "dWdt_formula", "dWdt_fd", "v_max", "M", "m", "ratio", "r1", "r2"});
  for (const auto& r : rows) {
    csv.row({r.t, r.W, r.dWdt_formula, r.dWdt_fd, r.v_max, r.M, r.m, r.ratio, r.r1, r.r2});
  }
}

void write_field_csv(const std::filesystem::path& path, const ReducedDistanceField& field,
                     const InequalityResiduals& residuals, const std::string& config_hash,
                     const Meta& meta) {
  CsvWriter csv(path, config_hash, meta,
                {"theta_q", "t", "t_i", "L_tilde", "l_tilde", "res_ineq1", "res_ineq2",
                 "argmin_base"});
  for (std::size_t it = 0; it < field.n_t(); ++it) {
    for (std::size_t iq = 0; iq < field.n_q(); ++iq) {
      const std::size_t c = field.at(it, iq);
      csv.row({field.thetas[iq], field.times[it], field.t_i, field.L_tilde[c], field.l_tilde[c],
               residuals.r1.at(c), residuals.r2.at(c), field.base_thetas[field.argmin[c]]});
    }
  }
}

}  // namespace krf
