#include "krf/conjheat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "krf/error.hpp"
#include "krf/simd/kernels.hpp"

namespace krf {

using std::numbers::pi;

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

bool same_time(double a, double b, double scale) { return std::abs(a - b) <= 1e-12 * scale; }

// out = 1/2 Delta_round(x / psi)
void half_laplacian_of_ratio(const Grid& grid, std::span<const double> x,
                             std::span<const double> psi, std::span<double> scratch,
                             std::span<double> out) {
  const auto& kern = simd::kernels();
  kern.divide(x, psi, scratch);
  round_laplacian(grid, scratch, out);
  for (double& v : out) v *= 0.5;
}

// out = 1/2 Delta_round(x) / psi
void half_laplacian_over_psi(const Grid& grid, std::span<const double> x,
                             std::span<const double> psi, std::span<double> out) {
  round_laplacian(grid, x, out);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * out[j] / psi[j];
}

}  // namespace

ConjugateSolution::ConjugateSolution(std::vector<double> times, std::vector<MetricProfile> metrics,
                                     std::vector<std::vector<double>> u, double extinction_time,
                                     double terminal_time)
    : times_(std::move(times)),
      metrics_(std::move(metrics)),
      u_(std::move(u)),
      t_exact_(extinction_time),
      t_terminal_(terminal_time) {
  if (times_.empty() || times_.size() != metrics_.size() || times_.size() != u_.size()) {
    throw DimensionError("conjugate solution needs one metric and one u per time");
  }
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (k > 0 && !(times_[k] > times_[k - 1])) throw RangeError("solution times must increase");
    if (u_[k].size() != metrics_[k].size()) throw DimensionError("u/metric size mismatch");
    for (double v : u_[k]) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw IntegratorError("conjugate solution lost positivity at t=" + fmt(times_[k]));
      }
    }
  }
}

ScalarField ConjugateSolution::u_field(std::size_t k) const {
  return ScalarField(metrics_[k].grid_ptr(), u_[k]);
}

double ConjugateSolution::mass(std::size_t k) const { return integrate(metrics_[k], u_[k]); }

std::size_t ConjugateSolution::index_of(double t) const {
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (same_time(times_[k], t, std::max(1.0, t_exact_))) return k;
  }
  throw RangeError("no stored conjugate slice at t=" + fmt(t));
}

std::size_t ConjugateSolution::floor_index(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t + 1e-12 * std::max(1.0, t_exact_));
  if (it == times_.begin()) throw RangeError("t=" + fmt(t) + " precedes the solution");
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

ConjugateSolution solve_backward(const FlowTrajectory& traj, double t_i, const ScalarField& terminal,
                                 const ConjHeatOptions& options) {
  const double T = traj.extinction_time();
  if (t_i > traj.last_time() + 1e-12 * T || t_i <= traj.first_time()) {
    throw RangeError("terminal time t_i=" + fmt(t_i) + " outside stored trajectory");
  }
  const Grid& grid = traj.grid();
  if (!(terminal.grid() == grid)) throw DimensionError("terminal data on a different grid");
  const std::size_t n = grid.size();
  const double h2 = grid.spacing() * grid.spacing();

  // Metric at t_i: the stored slice when t_i is one, otherwise interpolated.
  std::size_t k_end = traj.size();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (same_time(traj.time(k), t_i, T)) k_end = k;
  }
  const MetricProfile m_term = k_end < traj.size() ? traj.profile(k_end) : traj.profile_at(t_i);
  for (double v : terminal.values()) {
    if (!(v > 0.0)) throw NormalizationError("terminal data must be positive");
  }
  const double mass0 = integrate(m_term, terminal.values());
  if (std::abs(mass0 - 1.0) > 1e-9) {
    throw NormalizationError("terminal mass is " + fmt(mass0) + ", expected 1");
  }

  const auto& kern = simd::kernels();
  std::vector<double> rho(n), k1(n), k2(n), k3(n), k4(n), stage(n), scratch(n);
  for (std::size_t j = 0; j < n; ++j) rho[j] = m_term.conformal_factor()[j] * terminal[j];

  std::vector<double> times{t_i};
  std::vector<MetricProfile> metrics{m_term};
  std::vector<std::vector<double>> us{{terminal.values().begin(), terminal.values().end()}};

  double cur = t_i;
  std::vector<double> psi_cur(m_term.conformal_factor().begin(), m_term.conformal_factor().end());
  for (std::size_t kk = traj.size(); kk-- > 0;) {
    const double target = traj.time(kk);
    if (target >= t_i - 1e-12 * T) continue;
    while (cur > target) {
      const double psi_min = *std::min_element(psi_cur.begin(), psi_cur.end());
      double dt = options.cfl * psi_min * h2;
      bool land = false;
      if (cur - dt <= target || (cur - dt) - target < 1e-3 * dt) {
        dt = cur - target;
        land = true;
      }
      const auto psi_half = traj.conformal_factor_at(cur - 0.5 * dt);
      const auto psi_next = land ? std::vector<double>(traj.profile(kk).conformal_factor().begin(),
                                                       traj.profile(kk).conformal_factor().end())
                                 : traj.conformal_factor_at(cur - dt);
      half_laplacian_of_ratio(grid, rho, psi_cur, scratch, k1);
      kern.axpy(rho, 0.5 * dt, k1, stage);
      half_laplacian_of_ratio(grid, stage, psi_half, scratch, k2);
      kern.axpy(rho, 0.5 * dt, k2, stage);
      half_laplacian_of_ratio(grid, stage, psi_half, scratch, k3);
      kern.axpy(rho, dt, k3, stage);
      half_laplacian_of_ratio(grid, stage, psi_next, scratch, k4);
      kern.rk4_combine(rho, dt / 6.0, k1, k2, k3, k4, rho);
      cur = land ? target : cur - dt;
      psi_cur = psi_next;
      for (double v : rho) {
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw IntegratorError("backward step produced non-positive density at t=" + fmt(cur));
        }
      }
    }
    std::vector<double> u(n);
    kern.divide(rho, psi_cur, u);
    times.push_back(target);
    metrics.push_back(traj.profile(kk));
    us.push_back(std::move(u));
  }
  std::reverse(times.begin(), times.end());
  std::reverse(metrics.begin(), metrics.end());
  std::reverse(us.begin(), us.end());
  ConjugateSolution sol(std::move(times), std::move(metrics), std::move(us), T, t_i);
  sol.trajectory_hash = traj.content_hash();
  return sol;
}

std::vector<double> pole_distance(const MetricProfile& m, bool south_pole) {
  const Grid& g = m.grid();
  const std::size_t n = g.size();
  std::vector<double> w(m.w().begin(), m.w().end());
  if (south_pole) std::reverse(w.begin(), w.end());
  const double h = g.spacing();
  auto piece = [](double len, double wa, double wb) {
    const double dw = wb - wa;
    if (std::abs(dw) < 1e-12) return len * std::exp(0.5 * (wa + wb));
    return len * (std::exp(wb) - std::exp(wa)) / dw;
  };
  std::vector<double> d(n);
  // w is flat between the pole and the first centre (even reflection).
  d[0] = 0.5 * h * std::exp(w[0]);
  for (std::size_t j = 1; j < n; ++j) d[j] = d[j - 1] + piece(h, w[j - 1], w[j]);
  if (south_pole) std::reverse(d.begin(), d.end());
  return d;
}

ScalarField delta_terminal(const MetricProfile& m, double theta_p, double eps) {
  if (!(eps > 0.0)) throw ResolutionError("bump width eps must be positive");
  bool south;
  if (theta_p == 0.0) {
    south = false;
  } else if (std::abs(theta_p - pi) < 1e-12) {
    south = true;
  } else {
    throw RangeError("rotationally symmetric delta data must sit at a pole (theta_p = 0 or pi)");
  }
  const Grid& g = m.grid();
  const std::size_t pole = south ? g.size() - 1 : 0;
  const double cell = std::exp(m.w()[pole]) * g.spacing();
  if (std::sqrt(2.0 * eps) < 2.0 * cell) {
    throw ResolutionError("bump width sqrt(2 eps)=" + fmt(std::sqrt(2.0 * eps)) +
                          " below two pole cells (" + fmt(cell) + ")");
  }
  const auto d = pole_distance(m, south);
  std::vector<double> u(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) u[j] = std::exp(-d[j] * d[j] / (4.0 * eps));
  const double z = integrate(m, u);
  if (!(z > 0.0)) throw ResolutionError("bump underflows on this grid");
  for (double& v : u) v /= z;
  return ScalarField(m.grid_ptr(), std::move(u));
}

ScalarField f_of(const ConjugateSolution& sol, std::size_t k) {
  return f_of(sol, k, sol.extinction_time());
}

ScalarField f_of(const ConjugateSolution& sol, std::size_t k, double t_ref) {
  const double tau = t_ref - sol.time(k);
  if (!(tau > 0.0)) throw RangeError("f needs t < T_ref");
  const double shift = std::log(4.0 * pi * tau);
  const auto u = sol.u(k);
  std::vector<double> f(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) f[j] = -std::log(u[j]) - shift;
  return ScalarField(sol.metric(k).grid_ptr(), std::move(f));
}

CandidateResult admissible_candidate(const FlowTrajectory& traj,
                                     const std::vector<double>& schedule_fractions, double theta_p,
                                     double eps_factor, const ConjHeatOptions& options) {
  if (schedule_fractions.size() < 3) throw RangeError("candidate schedule needs at least 3 times");
  for (std::size_t i = 0; i < schedule_fractions.size(); ++i) {
    const double f = schedule_fractions[i];
    if (!(f > 0.0 && f < 1.0) || (i > 0 && !(f > schedule_fractions[i - 1]))) {
      throw RangeError("schedule fractions must increase strictly inside (0, 1)");
    }
  }
  const double T = traj.extinction_time();
  CandidateResult out;
  for (double frac : schedule_fractions) {
    const double t_i = frac * T;
    const MetricProfile m = traj.profile_at(t_i);
    const double eps = eps_factor * (T - t_i);
    auto sol = solve_backward(traj, t_i, delta_terminal(m, theta_p, eps), options);
    sol.base_theta = theta_p;
    sol.epsilon = eps;
    out.terminal_times.push_back(t_i);
    out.members.push_back(std::move(sol));
  }
  const double t1 = out.terminal_times.front();
  for (std::size_t i = 0; i + 1 < out.members.size(); ++i) {
    const auto& a = out.members[i];
    const auto& b = out.members[i + 1];
    double sup = 0.0;
    for (std::size_t k = 0; k < a.size() && a.time(k) <= t1; ++k) {
      if (!same_time(a.time(k), b.time(k), T)) break;
      for (std::size_t j = 0; j < a.u(k).size(); ++j) {
        sup = std::max(sup, std::abs(a.u(k)[j] - b.u(k)[j]));
      }
    }
    out.increments.push_back(sup);
  }
  for (std::size_t i = 1; i < out.increments.size(); ++i) {
    if (!(out.increments[i] < out.increments[i - 1])) out.converging = false;
  }
  if (!out.converging) out.warning = "Cauchy increments are not decreasing";
  return out;
}

ConjugateSolution extrapolated_candidate(const CandidateResult& cand) {
  const std::size_t n = cand.members.size();
  if (n < 2) throw RangeError("extrapolation needs two members");
  const auto& a = cand.members[n - 2];
  const auto& b = cand.members[n - 1];
  const double T = b.extinction_time();
  const double ta = a.terminal_time();
  const double tb = b.terminal_time();
  const double wgt = (T - tb) / (tb - ta);
  std::vector<double> times;
  std::vector<MetricProfile> metrics;
  std::vector<std::vector<double>> u;
  const double t1 = cand.terminal_times.front();
  for (std::size_t k = 0; k < a.size() && a.time(k) <= t1 * (1.0 + 1e-12); ++k) {
    if (!same_time(a.time(k), b.time(k), T)) throw DimensionError("members disagree on slices");
    std::vector<double> v(a.u(k).size());
    bool positive = true;
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = b.u(k)[j] + wgt * (b.u(k)[j] - a.u(k)[j]);
      positive = positive && v[j] > 0.0;
    }
    if (!positive) break;
    times.push_back(a.time(k));
    metrics.push_back(a.metric(k));
    u.push_back(std::move(v));
  }
  if (times.size() < 2) throw NumericalError("extrapolated candidate is empty");
  ConjugateSolution out(std::move(times), std::move(metrics), std::move(u), T, ta);
  out.base_theta = b.base_theta;
  out.epsilon = 0.0;
  out.trajectory_hash = b.trajectory_hash;
  return out;
}

DualityReport duality_check(const FlowTrajectory& traj, const ScalarField& phi0,
                            const ConjugateSolution& sol, const ConjHeatOptions& options) {
  const Grid& grid = traj.grid();
  if (!(phi0.grid() == grid)) throw DimensionError("test field on a different grid");
  const std::size_t n = grid.size();
  const double h2 = grid.spacing() * grid.spacing();
  const auto& kern = simd::kernels();
  std::vector<double> phi(phi0.values().begin(), phi0.values().end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n);

  DualityReport rep{{}, 0.0};
  rep.pairing.push_back(integrate(sol.metric(0), std::vector<double>([&] {
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = phi[j] * sol.u(0)[j];
    return p;
  }())));
  double cur = sol.time(0);
  std::vector<double> psi_cur = traj.conformal_factor_at(cur);
  for (std::size_t k = 1; k < sol.size(); ++k) {
    const double target = sol.time(k);
    while (cur < target) {
      const double psi_min = *std::min_element(psi_cur.begin(), psi_cur.end());
      double dt = options.cfl * psi_min * h2;
      bool land = false;
      if (cur + dt >= target || target - (cur + dt) < 1e-3 * dt) {
        dt = target - cur;
        land = true;
      }
      const auto psi_half = traj.conformal_factor_at(cur + 0.5 * dt);
      const auto psi_next = land ? std::vector<double>(sol.metric(k).conformal_factor().begin(),
                                                       sol.metric(k).conformal_factor().end())
                                 : traj.conformal_factor_at(cur + dt);
      half_laplacian_over_psi(grid, phi, psi_cur, k1);
      kern.axpy(phi, 0.5 * dt, k1, stage);
      half_laplacian_over_psi(grid, stage, psi_half, k2);
      kern.axpy(phi, 0.5 * dt, k2, stage);
      half_laplacian_over_psi(grid, stage, psi_half, k3);
      kern.axpy(phi, dt, k3, stage);
      half_laplacian_over_psi(grid, stage, psi_next, k4);
      kern.rk4_combine(phi, dt / 6.0, k1, k2, k3, k4, phi);
      cur = land ? target : cur + dt;
      psi_cur = psi_next;
    }
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = phi[j] * sol.u(k)[j];
    rep.pairing.push_back(integrate(sol.metric(k), p));
    rep.drift = std::max(rep.drift, std::abs(rep.pairing.back() - rep.pairing.front()));
  }
  return rep;
}

ConjugateSolution rescale_solution(const ConjugateSolution& sol, double t_i, double s_lo,
                                   double s_hi) {
  const double T = sol.extinction_time();
  const double scale = T - t_i;
  if (!(scale > 0.0)) throw RangeError("blow-up time must precede extinction");
  std::vector<double> times;
  std::vector<MetricProfile> metrics;
  std::vector<std::vector<double>> us;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    const double s = (sol.time(k) - t_i) / scale;
    if (s < s_lo - 1e-12 || s > s_hi + 1e-12) continue;
    times.push_back(s);
    metrics.push_back(sol.metric(k).scaled(1.0 / scale));
    std::vector<double> u(sol.u(k).begin(), sol.u(k).end());
    for (double& v : u) v *= scale;
    us.push_back(std::move(u));
  }
  if (times.empty()) throw RangeError("no solution slices inside the blow-up window");
  ConjugateSolution out(std::move(times), std::move(metrics), std::move(us), 1.0,
                        (sol.terminal_time() - t_i) / scale);
  out.base_theta = sol.base_theta;
  out.epsilon = sol.epsilon / scale;
  out.trajectory_hash = sol.trajectory_hash;
  return out;
}

}  // namespace krf
