#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "krf/conjheat.hpp"
#include "krf/error.hpp"
#include "krf/io.hpp"
#include "krf/lgeo.hpp"
#include "krf/perelman.hpp"
#include "krf/recipes.hpp"

namespace krf {

namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Shared state of one suite run.
struct Suite {
  const ExperimentConfig& cfg;
  fs::path dir;
  std::string hash;
  FlowTrajectory round;
  FlowTrajectory pert;
  std::vector<CheckResult> checks;
  std::optional<ConjugateSolution> cand;

  std::vector<ReducedDistanceField> fields_round, fields_pert;

  const std::vector<ReducedDistanceField>& fields(bool perturbed) {
    auto& f = perturbed ? fields_pert : fields_round;
    const auto& traj = perturbed ? pert : round;
    if (f.empty()) {
      for (double frac : cfg.lgeo_t_i) {
        f.push_back(build_field(traj, frac * traj.extinction_time(), field_options(cfg)));
      }
    }
    return f;
  }

  // Extrapolated admissible candidate on the perturbed run.
  const ConjugateSolution& candidate() {
    if (!cand) {
      const auto c = admissible_candidate(pert, cfg.schedule, 0.0, cfg.eps_factor);
      cand = extrapolated_candidate(c);
    }
    return *cand;
  }

  // Runs one criterion; numerical or range failures become a failed check.
  void check(int id, const std::string& name, const std::function<CheckResult()>& body) {
    CheckResult r;
    try {
      r = body();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
      r.measured = std::numeric_limits<double>::quiet_NaN();
    }
    r.id = id;
    r.name = name;
    checks.push_back(std::move(r));
  }

  ConjugateSolution pole_solve(const FlowTrajectory& traj, double frac, double theta_p) const {
    const double T = traj.extinction_time();
    const double t_i = frac * T;
    auto sol = solve_backward(traj, t_i,
                              delta_terminal(traj.profile_at(t_i), theta_p, cfg.eps_factor * (T - t_i)));
    sol.base_theta = theta_p;
    sol.epsilon = cfg.eps_factor * (T - t_i);
    return sol;
  }
};

CheckResult verdict(bool pass, double measured, double threshold, std::string detail) {
  CheckResult r;
  r.pass = pass;
  r.measured = measured;
  r.threshold = threshold;
  r.detail = std::move(detail);
  return r;
}

CheckResult round_exactness(Suite& s) {
  const auto& traj = s.round;
  const double T = traj.extinction_time();
  double werr = 0.0, kerr = 0.0;
  for (std::size_t k = 0; k < traj.size() && traj.time(k) <= 0.9 * T; ++k) {
    const double t = traj.time(k);
    const double exact = 0.5 * std::log((T - t) / T);
    for (double w : traj.profile(k).w()) werr = std::max(werr, std::abs(w - exact));
    for (double K : traj.curvature(k).values()) kerr = std::max(kerr, std::abs(K * (T - t) - 1.0));
  }
  const double worst = std::max(werr, kerr);
  const double tol = s.cfg.tol.exact;
  return verdict(worst <= tol, worst, tol,
                 fmt("max|w - ln(1-t)/2| = %.3e, max|K(T-t) - 1| = %.3e (tol %.1e)", werr, kerr, tol));
}

CheckResult area_law(Suite& s) {
  const auto& traj = s.pert;
  const double T = traj.extinction_time();
  const double v0 = volume(traj.profile(0));
  double err = 0.0;
  for (std::size_t k = 0; k < traj.size() && traj.time(k) <= 0.9 * T; ++k) {
    err = std::max(err, std::abs(volume(traj.profile(k)) - v0 + 4.0 * pi * traj.time(k)));
  }
  const double tol = s.cfg.tol.exact;
  return verdict(err <= tol, err, tol, fmt("max|Vol(t) - Vol(0) + 4 pi t| = %.3e (tol %.1e)", err, tol));
}

CheckResult conjugate_mass(Suite& s) {
  const double tol = s.cfg.tol.mass;
  CsvWriter mass(s.dir / "mass.csv", s.hash, {}, {"run", "t", "mass_error", "min_u"});
  CsvWriter dual(s.dir / "duality.csv", s.hash, {}, {"run", "seed", "drift"});
  double merr = 0.0, drift = 0.0, umin = std::numeric_limits<double>::infinity();
  int run = 0;
  for (const FlowTrajectory* traj : {&s.round, &s.pert}) {
    const auto sol = s.pole_solve(*traj, 0.99, 0.0);
    for (std::size_t k = 0; k < sol.size(); ++k) {
      const auto u = sol.u(k);
      const double lo = *std::min_element(u.begin(), u.end());
      const double e = std::abs(sol.mass(k) - 1.0);
      merr = std::max(merr, e);
      umin = std::min(umin, lo);
      mass.row({double(run), sol.time(k), e, lo});
    }
    for (std::uint64_t i = 0; i < 5; ++i) {
      std::mt19937_64 rng(s.cfg.seed + i);
      std::uniform_real_distribution<double> coeff(-1.0, 1.0);
      double a[5];
      for (double& c : a) c = coeff(rng);
      std::vector<double> phi(traj->grid().size());
      for (std::size_t j = 0; j < phi.size(); ++j) {
        const double th = traj->grid().theta(j);
        for (int l = 0; l < 5; ++l) phi[j] += a[l] * std::cos(l * th);
      }
      const auto rep = duality_check(*traj, ScalarField(traj->grid_ptr(), phi), sol);
      drift = std::max(drift, rep.drift);
      dual.row({double(run), double(s.cfg.seed + i), rep.drift});
    }
    ++run;
  }
  const double worst = std::max(merr, drift);
  return verdict(worst <= tol && umin > 0.0, worst, tol,
                 fmt("max|mass - 1| = %.3e, min u = %.3e, max duality drift = %.3e (tol %.1e)", merr,
                     umin, drift, tol));
}

CheckResult soliton_oracle(Suite& s) {
  const auto& traj = s.round;
  const double T = traj.extinction_time();
  const double t_i = s.cfg.schedule.back() * T;
  const MetricProfile mt = traj.profile_at(t_i);
  const auto sol = solve_backward(traj, t_i, ScalarField(mt.grid_ptr(), 1.0 / volume(mt)));
  auto rows = entropy_report(sol, T);
  fill_soliton_residuals(rows, sol, T);
  write_entropy_csv(s.dir / "entropy_round.csv", rows, s.hash, {{"t_i", fmt17(t_i)}});
  double vabs = 0.0, wabs = 0.0, dabs = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (double v : v_field(sol, k, T).values()) vabs = std::max(vabs, std::abs(v));
    wabs = std::max(wabs, std::abs(rows[k].W));
    dabs = std::max(dabs, std::abs(rows[k].dWdt_formula));
  }
  const double t_b = 0.9 * T;
  const auto res = soliton_residual(rescale_solution(sol, t_b, 0.0, 0.5), 0.0, 0.5);
  const double r = res.r1 + res.r2;
  const double tol = s.cfg.tol.soliton;
  const double worst = std::max({vabs, wabs, dabs, std::abs(r)});
  return verdict(worst <= tol, worst, tol,
                 fmt("max|v| = %.3e, max|W| = %.3e, max|dW/dt| = %.3e, r1 + r2 = %.3e (tol %.1e)",
                     vabs, wabs, dabs, r, tol));
}

CheckResult w_monotonicity(Suite& s) {
  const double T = s.pert.extinction_time();
  const auto& sol = s.candidate();
  auto rows = entropy_report(sol, T);
  fill_soliton_residuals(rows, sol, T);
  write_entropy_csv(s.dir / "entropy_candidate.csv", rows, s.hash,
                    {{"t_end", fmt17(sol.times().back())}});
  if (rows.size() < 12) throw RangeError("candidate has too few slices");
  double drop = -std::numeric_limits<double>::infinity(), vmax = drop, rel = 0.0;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) drop = std::max(drop, rows[k].W - rows[k + 1].W);
  for (const auto& r : rows) vmax = std::max(vmax, r.v_max);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& r = rows[1 + (rows.size() - 3) * i / 9];
    rel = std::max(rel, std::abs(r.dWdt_formula - r.dWdt_fd) / std::abs(r.dWdt_formula));
  }
  const auto& t = s.cfg.tol;
  const bool pass = drop <= t.W_mono && vmax <= t.v && rel <= t.dW_rel;
  return verdict(pass, drop, t.W_mono,
                 fmt("max W decrease = %.3e (tol %.1e), max v = %.3e (tol %.1e), dW/dt rel err = %.3e "
                     "(tol %.1e) on [0, %.4g T]",
                     drop, t.W_mono, vmax, t.v, rel, t.dW_rel, sol.times().back() / T));
}

CheckResult admissibility(Suite& s) {
  const double T = s.pert.extinction_time();
  const auto& sol = s.candidate();
  const auto scan = admissibility_scan(sol, sol.time(0), sol.times().back(), T);
  CsvWriter csv(s.dir / "admissibility.csv", s.hash, {}, {"theta_start", "speed", "residual"});
  for (std::size_t c = 0; c < scan.curves.size(); ++c) {
    csv.row({scan.curves[c].theta_start, scan.curves[c].speed, scan.residuals[c]});
  }
  const double tol = s.cfg.tol.admiss;
  const auto& w = scan.curves[scan.worst_curve];
  return verdict(scan.min_residual >= -tol, scan.min_residual, -tol,
                 fmt("min residual = %.3e of 1/2 max R over %zu curves (worst speed %.3g), bound -%.1e",
                     scan.min_residual, scan.curves.size(), w.speed, tol));
}

CheckResult harnack(Suite& s) {
  const double T = s.pert.extinction_time();
  const auto& sol = s.candidate();
  CsvWriter csv(s.dir / "harnack.csv", s.hash, {}, {"t", "ratio"});
  bool finite = true;
  std::vector<double> ratio(sol.size());
  for (std::size_t k = 0; k < sol.size(); ++k) {
    ratio[k] = harnack_ratio(sol, k);
    finite = finite && std::isfinite(ratio[k]);
    csv.row({sol.time(k), ratio[k]});
  }
  const double r05 = ratio[sol.index_of(0.5 * T)];
  double late = 0.0;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    if (sol.time(k) >= 0.75 * T) late = std::max(late, ratio[k]);
  }
  const double r95 = ratio[sol.index_of(0.95 * T)];
  const double tol = s.cfg.tol.harnack;
  const bool pass = finite && late <= r05 && std::abs(r95 - 1.0) <= tol;
  return verdict(pass, std::abs(r95 - 1.0), tol,
                 fmt("M/m(0.5T) = %.6f, max M/m on [0.75T, %.4gT] = %.6f, M/m(0.95T) = %.6f (|.-1| tol %.2g)",
                     r05, sol.times().back() / T, late, r95, tol));
}

CheckResult uniqueness(Suite& s) {
  const double T = s.pert.extinction_time();
  const auto& sched = s.cfg.uniqueness_schedule;
  const auto a = admissible_candidate(s.pert, sched, 0.0, s.cfg.eps_factor);
  const auto b = admissible_candidate(s.pert, sched, pi, s.cfg.eps_factor);
  const auto rep = uniqueness_experiment(a, b, 0.5 * T);
  CsvWriter csv(s.dir / "uniqueness.csv", s.hash, {}, {"t_i", "t", "rho_max"});
  double dec = -std::numeric_limits<double>::infinity();
  bool decreasing = true;
  std::string probes;
  for (std::size_t i = 0; i < rep.series.size(); ++i) {
    const auto& ser = rep.series[i];
    dec = std::max(dec, ser.max_decrease);
    if (i > 0 && !(ser.rho_at_probe < rep.series[i - 1].rho_at_probe)) decreasing = false;
    probes += (i ? ", " : "") + fmt("%.6f", ser.rho_at_probe);
    for (std::size_t k = 0; k < ser.times.size(); ++k) csv.row({ser.terminal_time, ser.times[k], ser.rho_max[k]});
  }
  const double last = rep.series.back().rho_at_probe;
  const auto& t = s.cfg.tol;
  const bool pass = dec <= t.rho && decreasing && last <= t.rho_final;
  return verdict(pass, last, t.rho_final,
                 fmt("max rho_max decrease = %.3e (tol %.1e); rho_max(0.5T) across t_i: %s (final <= %.3g)",
                     dec, t.rho, probes.c_str(), t.rho_final));
}

CheckResult l_geodesics(Suite& s) {
  const auto& t = s.cfg.tol;
  std::string detail;
  bool pass = true;

  // Constant curve at the pole against the closed form.
  double cerr = 0.0;
  const double Tr = s.round.extinction_time();
  for (double fi : {0.9, 0.99}) {
    for (double ft : {0.0, 0.5}) {
      const std::vector<double> pole(65, 0.0);
      const double L = L_functional(s.round, pole, {0.0, fi * Tr}, ft * Tr);
      cerr = std::max(cerr, std::abs(L - round_constant_curve_L(Tr, fi * Tr, ft * Tr)));
    }
  }
  pass = pass && cerr <= t.L_oracle;
  detail += fmt("constant-curve |L - oracle| = %.2e (tol %.0e)", cerr, t.L_oracle);

  // l(pole) as t_i -> T on the round run.
  const auto& sc = s.cfg.schedule;
  const std::vector<double> last3(sc.end() - 3, sc.end());
  const auto pl = pole_limit(s.round, last3, 0.0);
  CsvWriter pcsv(s.dir / "pole_limit.csv", s.hash, {{"extrapolated", fmt17(pl.extrapolated)}},
                 {"t_i", "l_pole"});
  for (std::size_t i = 0; i < pl.l.size(); ++i) pcsv.row({pl.t_i[i], pl.l[i]});
  const double perr = std::abs(pl.extrapolated - 1.0);
  pass = pass && perr <= t.pole;
  detail += fmt("; |l(pole) - 1| extrapolated = %.2e (tol %.0e)", perr, t.pole);

  // Transcription against the brute-force lattice on seeded triples.
  const double Tp = s.pert.extinction_time();
  const double t_i = s.cfg.lgeo_t_i.front() * Tp;
  std::mt19937_64 rng(s.cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LOptions fine;
  fine.intervals = 64;
  fine.lattice_theta = 64;
  CsvWriter lcsv(s.dir / "lattice_oracle.csv", s.hash, {{"t_i", fmt17(t_i)}},
                 {"base", "q", "t", "L_transcription", "L_lattice", "rel_diff"});
  double lerr = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double base = pi * unit(rng);
    const double q = pi * unit(rng);
    const double tt = 0.8 * t_i * unit(rng);
    const auto r = minimize_L(s.pert, {base, t_i}, q, tt, fine);
    const double lat = lattice_oracle_L(s.pert, {base, t_i}, q, tt);
    const double rel = std::abs(lat - r.L_value) / r.L_value;
    lerr = std::max(lerr, rel);
    lcsv.row({base, q, tt, r.L_value, lat, rel});
  }
  pass = pass && lerr <= t.lattice;
  detail += fmt("; lattice rel diff = %.2e (tol %.0e)", lerr, t.lattice);

  // L~ monotone in t_i, the sqrt bound and f <= l on both runs.
  double mono = std::numeric_limits<double>::infinity();
  double excess = -std::numeric_limits<double>::infinity();
  double slack = std::numeric_limits<double>::infinity();
  for (bool perturbed : {false, true}) {
    const auto& traj = perturbed ? s.pert : s.round;
    const auto& f = s.fields(perturbed);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i > 0) mono = std::min(mono, tilde_monotonicity_check(f[i - 1], f[i]));
      excess = std::max(excess, tilde_bound_check(f[i], traj).max_excess);
      const auto sol = s.pole_solve(traj, s.cfg.lgeo_t_i[i], 0.0);
      slack = std::min(slack, f_le_l_check(sol, f[i]).min_slack);
    }
  }
  pass = pass && mono >= -t.tilde_mono && excess <= 0.0 && slack >= -t.fl;
  detail += fmt("; min L~ increase = %.2e (tol %.0e); max L~ - C sqrt = %.2e; min l - f = %.2e (tol %.0e)",
                mono, t.tilde_mono, excess, slack, t.fl);
  return verdict(pass, lerr, t.lattice, detail);
}

CheckResult l_inequalities(Suite& s) {
  const auto& t = s.cfg.tol;
  const auto& f = s.fields(false).front();
  std::size_t assessed = 0, ok = 0;
  double w1 = std::numeric_limits<double>::infinity(), w2 = -w1;
  for (std::size_t b = 0; b < f.base_thetas.size(); ++b) {
    const auto res = perelman_l_inequalities(f, f.l_base(b), s.round, t.ineq);
    assessed += res.assessed;
    ok += res.ok_both;
    w1 = std::min(w1, res.worst1);
    w2 = std::max(w2, res.worst2);
  }
  const double share = assessed ? static_cast<double>(ok) / static_cast<double>(assessed) : 0.0;
  std::string detail = fmt("round per-base signs hold on %.4f of %zu nodes (need %.2f; worst scaled r1 %.2e, r2 %.2e)",
                           share, assessed, t.ineq_share, w1, w2);
  for (bool perturbed : {false, true}) {
    const auto& traj = perturbed ? s.pert : s.round;
    const std::string tag = perturbed ? "perturbed" : "round";
    const auto& fields = s.fields(perturbed);
    CsvWriter q(s.dir / ("question_" + tag + ".csv"), s.hash, {},
                {"t_i", "t", "V_tilde", "violation_ineq1", "violation_ineq2", "worst_r1", "worst_r2"});
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto rep = question_experiment(fields[i], traj, t.ineq);
      write_field_csv(s.dir / ("field_" + tag + "_" + std::to_string(i) + ".csv"), fields[i],
                      rep.residuals, s.hash, {{"t_i", fmt17(fields[i].t_i)}});
      for (std::size_t it = 0; it < fields[i].n_t(); ++it) {
        q.row({fields[i].t_i, fields[i].times[it], rep.reduced_volume[it], rep.violation_fraction1,
               rep.violation_fraction2, rep.residuals.worst1, rep.residuals.worst2});
      }
      if (i == 0) {
        detail += fmt("; question %s: violations %.3f / %.3f", tag.c_str(), rep.violation_fraction1,
                      rep.violation_fraction2);
      }
    }
  }
  return verdict(share >= t.ineq_share, share, t.ineq_share, detail);
}

}  // namespace

std::vector<CheckResult> run_acceptance_suite(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  ExperimentConfig rc = cfg;
  rc.profile = "round";
  ExperimentConfig pc = cfg;
  pc.profile = "cos";
  Suite s{cfg, dir, cfg.hash(), run_flow(rc, round_profile(cfg.n_nodes)),
          run_flow(pc, cosine_profile(cfg.n_nodes, cfg.amplitude)), {}, {}, {}, {}};
  write_flow_csv(dir / "flow_round.csv", s.round, s.hash);
  write_flow_csv(dir / "flow_perturbed.csv", s.pert, s.hash);
  s.check(1, "round-sphere exactness", [&] { return round_exactness(s); });
  s.check(2, "area law", [&] { return area_law(s); });
  s.check(3, "conjugate mass, positivity, duality", [&] { return conjugate_mass(s); });
  s.check(4, "soliton oracle", [&] { return soliton_oracle(s); });
  s.check(5, "W monotonicity", [&] { return w_monotonicity(s); });
  s.check(6, "admissibility residual", [&] { return admissibility(s); });
  s.check(7, "elliptic Harnack", [&] { return harnack(s); });
  s.check(8, "uniqueness trend", [&] { return uniqueness(s); });
  s.check(9, "L-geodesic oracles", [&] { return l_geodesics(s); });
  s.check(10, "l-inequality residuals", [&] { return l_inequalities(s); });
  CsvWriter csv(dir / "acceptance.csv", s.hash, {}, {"id", "pass", "measured", "threshold"});
  for (const auto& c : s.checks) csv.row({double(c.id), c.pass ? 1.0 : 0.0, c.measured, c.threshold});
  return s.checks;
}

RunManifest cmd_acceptance(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.out_dir);
  RunManifest m;
  m.verb = "acceptance";
  m.config_hash = cfg.hash();
  const fs::path d1 = cfg.out_dir / "run1";
  const fs::path d2 = cfg.out_dir / "run2";
  m.checks = run_acceptance_suite(cfg, d1);
  run_acceptance_suite(cfg, d2);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(d1)) {
    if (e.path().extension() == ".csv") files.push_back(e.path().filename());
  }
  std::sort(files.begin(), files.end());
  std::size_t differing = 0;
  for (const auto& f : files) {
    m.artifacts.push_back((d1 / f).string());
    if (!fs::exists(d2 / f) || read_text(d1 / f) != read_text(d2 / f)) ++differing;
  }
  CheckResult det;
  det.id = 11;
  det.name = "determinism";
  det.pass = differing == 0 && !files.empty();
  det.measured = static_cast<double>(differing);
  det.threshold = 0.0;
  det.detail = fmt("%zu of %zu CSVs differ between two runs", differing, files.size());
  m.checks.push_back(det);
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(cfg, m);
  return m;
}

}  // namespace krf
