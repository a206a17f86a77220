#include "krf/perelman.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "krf/error.hpp"

namespace krf {

using std::numbers::pi;

namespace {

// Three-point derivative on a non-uniform stencil (one-sided at the ends).
double slope3(std::span<const double> t, std::span<const double> y, std::size_t k) {
  const std::size_t n = t.size();
  if (n < 2) return 0.0;
  if (k == 0) return (y[1] - y[0]) / (t[1] - t[0]);
  if (k + 1 == n) return (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
  const double h1 = t[k] - t[k - 1];
  const double h2 = t[k + 1] - t[k];
  return -h2 / (h1 * (h1 + h2)) * y[k - 1] + (h2 - h1) / (h1 * h2) * y[k] +
         h1 / (h2 * (h1 + h2)) * y[k + 1];
}

// d fold_colatitude(a) / da
double fold_sign(double a) {
  const double s = a < 0.0 ? -1.0 : 1.0;
  const double r = std::fmod(std::abs(a), 2.0 * pi);
  return r > pi ? -s : s;
}

}  // namespace

EntropyTerms entropy_terms(const ConjugateSolution& sol, std::size_t k, double t_ref) {
  const MetricProfile& m = sol.metric(k);
  const Grid& g = m.grid();
  const std::size_t n = g.size();
  EntropyTerms e;
  e.tau = t_ref - sol.time(k);
  if (!(e.tau > 0.0)) throw RangeError("entropy needs t < T_ref");
  const ScalarField f = f_of(sol, k, t_ref);
  e.f.assign(f.values().begin(), f.values().end());
  const ScalarField lap = laplacian(m, f);
  const ScalarField grad = grad_norm_sq(m, f);
  const ScalarField R = gauss_curvature(m);
  e.lap_f.assign(lap.values().begin(), lap.values().end());
  e.grad_f_sq.assign(grad.values().begin(), grad.values().end());
  e.R.assign(R.values().begin(), R.values().end());

  const auto f_t = theta_derivative(g, e.f);
  const auto f_tt = theta_second_derivative(g, e.f);
  const auto w_t = theta_derivative(g, m.w());
  const auto psi = m.conformal_factor();
  e.trace_residual.resize(n);
  e.tracefree_energy.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    e.trace_residual[j] = e.R[j] + e.lap_f[j] - 1.0 / e.tau;
    const double cot = std::cos(g.theta(j)) / std::sin(g.theta(j));
    const double split = (f_tt[j] - 2.0 * w_t[j] * f_t[j] - cot * f_t[j]) / psi[j];
    e.tracefree_energy[j] = 0.25 * split * split;
  }
  return e;
}

ScalarField v_field(const ConjugateSolution& sol, std::size_t k) {
  return v_field(sol, k, sol.extinction_time());
}

ScalarField v_field(const ConjugateSolution& sol, std::size_t k, double t_ref) {
  const auto e = entropy_terms(sol, k, t_ref);
  const auto u = sol.u(k);
  std::vector<double> v(u.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    v[j] = (e.tau * (2.0 * e.lap_f[j] - e.grad_f_sq[j] + e.R[j]) + e.f[j] - kEntropyShift) * u[j];
  }
  return ScalarField(sol.metric(k).grid_ptr(), std::move(v));
}

double entropy_W(const ConjugateSolution& sol, std::size_t k) {
  return entropy_W(sol, k, sol.extinction_time());
}

double entropy_W(const ConjugateSolution& sol, std::size_t k, double t_ref) {
  return integrate(sol.metric(k), v_field(sol, k, t_ref).values());
}

namespace {

double w_formula(const ConjugateSolution& sol, std::size_t k, double t_ref) {
  const auto e = entropy_terms(sol, k, t_ref);
  const auto u = sol.u(k);
  std::vector<double> integrand(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double a = e.trace_residual[j];
    integrand[j] = (a * a + e.tracefree_energy[j]) * u[j];
  }
  return e.tau * integrate(sol.metric(k), integrand);
}

}  // namespace

WDerivative w_derivative(const ConjugateSolution& sol, std::size_t k) {
  return w_derivative(sol, k, sol.extinction_time());
}

WDerivative w_derivative(const ConjugateSolution& sol, std::size_t k, double t_ref) {
  if (sol.size() < 2) throw RangeError("W derivative needs two slices");
  const std::size_t lo = k == 0 ? 0 : k - 1;
  const std::size_t hi = std::min(k + 1, sol.size() - 1);
  std::vector<double> t, w;
  for (std::size_t i = lo; i <= hi; ++i) {
    t.push_back(sol.time(i));
    w.push_back(entropy_W(sol, i, t_ref));
  }
  return {w_formula(sol, k, t_ref), slope3(t, w, k - lo)};
}

double harnack_ratio(const ConjugateSolution& sol, std::size_t k) {
  const auto u = sol.u(k);
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  return *hi / *lo;
}

double admissibility_residual(const ConjugateSolution& sol, const MeridianCurve& curve,
                              double t_ref) {
  double worst = std::numeric_limits<double>::infinity();
  const Grid& g = sol.metric(0).grid();
  for (std::size_t k = 1; k + 1 < sol.size(); ++k) {
    const double t = sol.time(k);
    if (t < curve.t_start || t > curve.t_end || !(t < t_ref)) continue;
    const double tau = t_ref - t;
    const double raw = curve.theta_start + curve.speed * (t - curve.t_start);
    const double theta = fold_colatitude(raw);
    const double theta_dot = fold_sign(raw) * curve.speed;

    const ScalarField fm = f_of(sol, k - 1, t_ref);
    const ScalarField f0 = f_of(sol, k, t_ref);
    const ScalarField fp = f_of(sol, k + 1, t_ref);
    const double ts[3] = {sol.time(k - 1), t, sol.time(k + 1)};
    const double fs[3] = {sample(g, fm.values(), theta), sample(g, f0.values(), theta),
                          sample(g, fp.values(), theta)};
    const double f_dt = slope3(ts, fs, 1);
    const auto f_theta = theta_derivative(g, f0.values());
    const double grad_along = sample(g, f_theta, theta) * theta_dot;

    const ScalarField R = gauss_curvature(sol.metric(k));
    const double r = sample(g, R.values(), theta);
    const double psi = sample(g, sol.metric(k).conformal_factor(), theta);
    const double speed_sq = 2.0 * psi * theta_dot * theta_dot;
    const double residual = 0.5 * (r + speed_sq) - fs[1] / (2.0 * tau) + f_dt + grad_along;
    worst = std::min(worst, residual / (0.5 * R.max()));
  }
  return worst;
}

AdmissibilityScan admissibility_scan(const ConjugateSolution& sol, double t_start, double t_end,
                                     double t_ref, std::size_t speeds) {
  if (!(t_end > t_start) || speeds < 2) throw RangeError("empty admissibility window");
  AdmissibilityScan scan{std::numeric_limits<double>::infinity(), 0, {}, {}};
  const double margin = 0.05;
  const double max_speed = (pi - 2.0 * margin) / (t_end - t_start);
  for (std::size_t i = 0; i < speeds; ++i) {
    const double s = max_speed * static_cast<double>(i) / static_cast<double>(speeds - 1);
    scan.curves.push_back({margin, t_start, t_end, s});
    scan.curves.push_back({pi - margin, t_start, t_end, -s});
  }
  for (std::size_t c = 0; c < scan.curves.size(); ++c) {
    const double r = admissibility_residual(sol, scan.curves[c], t_ref);
    scan.residuals.push_back(r);
    if (r < scan.min_residual) {
      scan.min_residual = r;
      scan.worst_curve = c;
    }
  }
  return scan;
}

MinMaxChain f_min_max_chain(const ConjugateSolution& sol, double t2) {
  const double T = sol.extinction_time();
  const double t1 = 2.0 * t2 - T;
  if (!(t1 >= sol.time(0))) throw RangeError("t1 = 2 t2 - T precedes the solution");
  const ScalarField f1 = f_of(sol, sol.index_of(t1));
  const ScalarField f2 = f_of(sol, sol.index_of(t2));
  MinMaxChain c{t1, t2, f1.max(), f2.min(), 0.0};
  c.c_required = c.lhs - c.min_f_t2 / std::sqrt(2.0);
  return c;
}

SolitonResidual soliton_residual(const ConjugateSolution& rescaled, double s_lo, double s_hi) {
  const double t_ref = rescaled.extinction_time();
  std::vector<double> s, a, b;
  for (std::size_t k = 0; k < rescaled.size(); ++k) {
    const double t = rescaled.time(k);
    if (t < s_lo - 1e-12 || t > s_hi + 1e-12) continue;
    const auto e = entropy_terms(rescaled, k, t_ref);
    const auto u = rescaled.u(k);
    std::vector<double> ia(u.size()), ib(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      ia[j] = e.trace_residual[j] * e.trace_residual[j] * u[j];
      ib[j] = e.tracefree_energy[j] * u[j];
    }
    s.push_back(t);
    a.push_back(e.tau * integrate(rescaled.metric(k), ia));
    b.push_back(e.tau * integrate(rescaled.metric(k), ib));
  }
  if (s.size() < 2) throw RangeError("soliton window holds fewer than two slices");
  SolitonResidual r{0.0, 0.0};
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const double ds = s[k + 1] - s[k];
    r.r1 += 0.5 * ds * (a[k] + a[k + 1]);
    r.r2 += 0.5 * ds * (b[k] + b[k + 1]);
  }
  return r;
}

UniquenessReport uniqueness_experiment(const CandidateResult& a, const CandidateResult& b,
                                       double probe_time) {
  if (a.members.size() != b.members.size()) {
    throw DimensionError("candidates were built on different schedules");
  }
  UniquenessReport rep{probe_time, {}};
  for (std::size_t i = 0; i < a.members.size(); ++i) {
    const auto& ua = a.members[i];
    const auto& ub = b.members[i];
    if (ua.size() != ub.size()) throw DimensionError("candidate slices differ");
    UniquenessSeries s{ua.terminal_time(), {}, {}, -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::quiet_NaN()};
    for (std::size_t k = 0; k < ua.size(); ++k) {
      double mx = 0.0;
      for (std::size_t j = 0; j < ua.u(k).size(); ++j) mx = std::max(mx, ua.u(k)[j] / ub.u(k)[j]);
      s.times.push_back(ua.time(k));
      s.rho_max.push_back(mx);
      if (k > 0) s.max_decrease = std::max(s.max_decrease, s.rho_max[k - 1] - s.rho_max[k]);
    }
    s.rho_at_probe = s.rho_max[ua.index_of(probe_time)];
    rep.series.push_back(std::move(s));
  }
  return rep;
}

std::vector<EntropyRecord> entropy_report(const ConjugateSolution& sol, double t_ref) {
  std::vector<double> W(sol.size());
  std::size_t last = 0;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    if (!(sol.time(k) < sol.terminal_time()) || !(sol.time(k) < t_ref)) break;
    W[k] = entropy_W(sol, k, t_ref);
    last = k + 1;
  }
  std::vector<EntropyRecord> out;
  for (std::size_t k = 0; k < last; ++k) {
    EntropyRecord r{};
    r.t = sol.time(k);
    r.W = W[k];
    r.dWdt_formula = w_formula(sol, k, t_ref);
    r.dWdt_fd = slope3(std::span(sol.times()).first(last), std::span<const double>(W).first(last), k);
    r.v_max = v_field(sol, k, t_ref).max();
    const auto u = sol.u(k);
    const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
    r.M = *hi;
    r.m = *lo;
    r.ratio = r.M / r.m;
    r.r1 = std::numeric_limits<double>::quiet_NaN();
    r.r2 = std::numeric_limits<double>::quiet_NaN();
    out.push_back(r);
  }
  return out;
}

void fill_soliton_residuals(std::vector<EntropyRecord>& records, const ConjugateSolution& sol,
                            double t_ref) {
  // Cumulative trapezoid of both integrands over the slices before t_ref.
  std::vector<double> t, ca{0.0}, cb{0.0};
  double pa = 0.0, pb = 0.0;
  for (std::size_t k = 0; k < sol.size() && sol.time(k) < t_ref; ++k) {
    const auto e = entropy_terms(sol, k, t_ref);
    const auto u = sol.u(k);
    std::vector<double> ia(u.size()), ib(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      ia[j] = e.trace_residual[j] * e.trace_residual[j] * u[j];
      ib[j] = e.tracefree_energy[j] * u[j];
    }
    const double a = e.tau * integrate(sol.metric(k), ia);
    const double b = e.tau * integrate(sol.metric(k), ib);
    if (!t.empty()) {
      const double dt = sol.time(k) - t.back();
      ca.push_back(ca.back() + 0.5 * dt * (pa + a));
      cb.push_back(cb.back() + 0.5 * dt * (pb + b));
    }
    t.push_back(sol.time(k));
    pa = a;
    pb = b;
  }
  auto cumulative = [&](const std::vector<double>& c, double x) {
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    if (i + 1 >= t.size()) return c.back();
    const double w = (x - t[i]) / (t[i + 1] - t[i]);
    return (1.0 - w) * c[i] + w * c[i + 1];
  };
  for (auto& r : records) {
    const double end = r.t + 0.5 * (t_ref - r.t);
    if (t.empty() || r.t < t.front() || end > t.back()) {
      r.r1 = r.r2 = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    r.r1 = cumulative(ca, end) - cumulative(ca, r.t);
    r.r2 = cumulative(cb, end) - cumulative(cb, r.t);
  }
}

}  // namespace krf
