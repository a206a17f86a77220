#include "krf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>

#include "krf/error.hpp"
#include "krf/hash.hpp"
#include "krf/simd/kernels.hpp"

namespace krf {

using std::numbers::pi;

namespace {

std::string fmt_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", t);
  return buf;
}

// d/dt psi = Delta_round(w) - 1 with w = log(psi)/2.
void flow_rhs(const Grid& grid, std::span<const double> psi, std::span<double> w_scratch,
              std::span<double> out) {
  for (std::size_t j = 0; j < psi.size(); ++j) w_scratch[j] = 0.5 * std::log(psi[j]);
  round_laplacian(grid, w_scratch, out);
  for (double& x : out) x -= 1.0;
}

}  // namespace

FlowTrajectory::FlowTrajectory(std::vector<double> times, std::vector<MetricProfile> profiles,
                               double t_exact, double step_size)
    : times_(std::move(times)), profiles_(std::move(profiles)), t_exact_(t_exact), step_(step_size) {
  if (times_.empty() || times_.size() != profiles_.size()) {
    throw DimensionError("trajectory needs one profile per time and at least one slice");
  }
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw RangeError("trajectory times must be strictly increasing");
    }
    if (!(times_[k] < t_exact_)) {
      throw RangeError("trajectory slice at t=" + fmt_time(times_[k]) +
                       " is not before the extinction time");
    }
    if (!(profiles_[k].grid() == profiles_.front().grid())) {
      throw DimensionError("trajectory slices live on different grids");
    }
  }
  curvature_.reserve(times_.size());
  for (std::size_t k = 0; k < times_.size(); ++k) {
    curvature_.push_back(gauss_curvature(profiles_[k]));
    const auto& K = curvature_.back();
    const double scaled = std::max(std::abs(K.max()), std::abs(K.min())) * (t_exact_ - times_[k]);
    type1_sup_ = std::max(type1_sup_, scaled);
  }
}

void FlowTrajectory::check_time(double t) const {
  const double slack = 1e-12 * std::max(1.0, t_exact_);
  if (t < times_.front() - slack || t > times_.back() + slack) {
    throw RangeError("time " + fmt_time(t) + " outside stored trajectory [" +
                     fmt_time(times_.front()) + ", " + fmt_time(times_.back()) + "]");
  }
}

std::size_t FlowTrajectory::bracket(double t) const {
  if (times_.size() == 1) return 0;
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t k = it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  return std::min(k, times_.size() - 2);
}

std::vector<double> FlowTrajectory::conformal_factor_at(double t) const {
  check_time(t);
  if (times_.size() == 1) {
    const auto psi = profiles_[0].conformal_factor();
    return {psi.begin(), psi.end()};
  }
  const std::size_t k = bracket(t);
  const double t0 = times_[k], t1 = times_[k + 1];
  const double tau0 = t_exact_ - t0, tau1 = t_exact_ - t1, tau = t_exact_ - t;
  const double dt = t1 - t0;
  const double x = (t - t0) / dt;
  const double h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
  const double h10 = x * (1.0 - x) * (1.0 - x);
  const double h01 = x * x * (3.0 - 2.0 * x);
  const double h11 = x * x * (x - 1.0);
  const auto p0 = profiles_[k].conformal_factor();
  const auto p1 = profiles_[k + 1].conformal_factor();
  const auto K0 = curvature_[k].values();
  const auto K1 = curvature_[k + 1].values();
  std::vector<double> out(p0.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double y0 = p0[j] / tau0, y1 = p1[j] / tau1;
    const double d0 = y0 * (1.0 / tau0 - K0[j]);
    const double d1 = y1 * (1.0 / tau1 - K1[j]);
    out[j] = tau * (h00 * y0 + h10 * dt * d0 + h01 * y1 + h11 * dt * d1);
  }
  return out;
}

std::vector<double> FlowTrajectory::curvature_at(double t) const {
  check_time(t);
  if (times_.size() == 1) {
    const auto K = curvature_[0].values();
    return {K.begin(), K.end()};
  }
  const std::size_t k = bracket(t);
  const double t0 = times_[k], t1 = times_[k + 1];
  const double tau0 = t_exact_ - t0, tau1 = t_exact_ - t1, tau = t_exact_ - t;
  const double x = (t - t0) / (t1 - t0);
  const auto K0 = curvature_[k].values();
  const auto K1 = curvature_[k + 1].values();
  std::vector<double> out(K0.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = ((1.0 - x) * K0[j] * tau0 + x * K1[j] * tau1) / tau;
  }
  return out;
}

MetricProfile FlowTrajectory::profile_at(double t) const {
  const auto psi = conformal_factor_at(t);
  return MetricProfile::from_conformal_factor(grid_ptr(), psi);
}

nlohmann::json FlowTrajectory::to_json() const {
  nlohmann::json profiles = nlohmann::json::array();
  for (const auto& p : profiles_) profiles.push_back(std::vector<double>(p.w().begin(), p.w().end()));
  return nlohmann::json{
      {"step", step_}, {"T_exact", t_exact_}, {"times", times_}, {"profiles", std::move(profiles)}};
}

FlowTrajectory FlowTrajectory::from_json(const nlohmann::json& j) {
  auto times = j.at("times").get<std::vector<double>>();
  const auto& raw = j.at("profiles");
  if (raw.size() != times.size()) throw DimensionError("snapshot: profiles/times length mismatch");
  std::vector<MetricProfile> profiles;
  profiles.reserve(raw.size());
  GridPtr grid;
  for (const auto& p : raw) {
    auto w = p.get<std::vector<double>>();
    if (!grid) grid = Grid::make(w.size());
    profiles.emplace_back(grid, std::move(w));
  }
  return FlowTrajectory(std::move(times), std::move(profiles), j.at("T_exact").get<double>(),
                        j.at("step").get<double>());
}

std::string FlowTrajectory::content_hash() const {
  if (hash_.empty()) hash_ = fnv1a_hex(to_json().dump());
  return hash_;
}

double extinction_time(const MetricProfile& m0) { return volume(m0) / (4.0 * pi); }

FlowTrajectory evolve(const MetricProfile& m0, double t_max_fraction, double step,
                      const FlowOptions& options) {
  if (!(t_max_fraction > 0.0 && t_max_fraction < 1.0)) {
    throw RangeError("t_max_fraction must lie in (0, 1)");
  }
  if (!(step > 0.0) || !(options.cfl > 0.0) || options.stride == 0) {
    throw IntegratorError("step, cfl and stride must be positive");
  }
  const Grid& grid = m0.grid();
  const std::size_t n = grid.size();
  const double h2 = grid.spacing() * grid.spacing();
  const double T = extinction_time(m0);
  const double t_end = t_max_fraction * T;
  const auto& kern = simd::kernels();

  std::vector<double> psi(m0.conformal_factor().begin(), m0.conformal_factor().end());
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n), scratch(n);

  std::vector<double> times{0.0};
  std::vector<MetricProfile> profiles{m0};
  std::vector<double> marks;
  for (double f : options.checkpoints) {
    if (f > 0.0 && f * T < t_end) marks.push_back(f * T);
  }
  marks.push_back(t_end);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
  std::size_t next_mark = 0;

  double t = 0.0;
  std::size_t accepted = 0;
  while (t < t_end) {
    const double psi_min = *std::min_element(psi.begin(), psi.end());
    double dt = std::min(step, options.cfl * psi_min * h2);
    const double mark = marks[next_mark];
    bool last = false;
    if (t + dt >= mark || mark - (t + dt) < 1e-3 * dt) {
      dt = mark - t;
      last = true;
      ++next_mark;
    }
    flow_rhs(grid, psi, scratch, k1);
    kern.axpy(psi, 0.5 * dt, k1, stage);
    for (double x : stage) {
      if (!(x > 0.0)) throw IntegratorError("flow step unstable at t=" + fmt_time(t));
    }
    flow_rhs(grid, stage, scratch, k2);
    kern.axpy(psi, 0.5 * dt, k2, stage);
    for (double x : stage) {
      if (!(x > 0.0)) throw IntegratorError("flow step unstable at t=" + fmt_time(t));
    }
    flow_rhs(grid, stage, scratch, k3);
    kern.axpy(psi, dt, k3, stage);
    for (double x : stage) {
      if (!(x > 0.0)) throw IntegratorError("flow step unstable at t=" + fmt_time(t));
    }
    flow_rhs(grid, stage, scratch, k4);
    kern.rk4_combine(psi, dt / 6.0, k1, k2, k3, k4, psi);
    t = last ? mark : t + dt;
    ++accepted;
    for (double x : psi) {
      if (!std::isfinite(x)) throw IntegratorError("flow produced non-finite metric at t=" + fmt_time(t));
      if (x < MetricProfile::kCollapseThreshold) {
        throw DegenerateMetricError("metric collapse at t=" + fmt_time(t));
      }
    }
    // Curvature CFL check: an unstable step shows up as a sawtooth in K.
    flow_rhs(grid, psi, scratch, k1);
    double kmax = 0.0;
    for (std::size_t j = 0; j < n; ++j) kmax = std::max(kmax, std::abs(k1[j] / psi[j]));
    if (kmax * (T - t) > 1e6) {
      throw IntegratorError("curvature CFL violated: |K|(T-t) exploded at t=" + fmt_time(t));
    }
    if (last || accepted % options.stride == 0) {
      times.push_back(t);
      profiles.push_back(MetricProfile::from_conformal_factor(m0.grid_ptr(), psi));
    }
  }
  return FlowTrajectory(std::move(times), std::move(profiles), T, step);
}

double type1_constant(const FlowTrajectory& traj) { return traj.type1_sup(); }

double normalized_time(double t, double t_exact) { return -t_exact * std::log1p(-t / t_exact); }

NormalizedView normalized_view(const FlowTrajectory& traj) {
  const double T = traj.extinction_time();
  NormalizedView view{{}, {}, T};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.time(k);
    view.s.push_back(normalized_time(t, T));
    view.profiles.push_back(traj.profile(k).scaled(T / (T - t)));
  }
  return view;
}

FlowTrajectory blowup_sequence(const FlowTrajectory& traj, double t_i, double s_lo, double s_hi) {
  const double T = traj.extinction_time();
  if (!(t_i < traj.last_time()) || !(t_i >= traj.first_time())) {
    throw RangeError("blow-up time t_i=" + fmt_time(t_i) + " outside stored trajectory");
  }
  if (!(s_lo <= 0.0 && s_hi >= 0.0 && s_hi < 1.0)) {
    throw RangeError("blow-up window must contain 0 and end before 1");
  }
  const double scale = T - t_i;
  const double t_lo = t_i + s_lo * scale;
  const double t_hi = t_i + s_hi * scale;
  const double slack = 1e-12 * T;
  if (t_lo < traj.first_time() - slack || t_hi > traj.last_time() + slack) {
    throw RangeError("blow-up window [" + fmt_time(t_lo) + ", " + fmt_time(t_hi) +
                     "] exceeds stored data");
  }
  std::vector<double> times;
  std::vector<MetricProfile> profiles;
  auto push = [&](double t, const MetricProfile& p) {
    times.push_back((t - t_i) / scale);
    profiles.push_back(p.scaled(1.0 / scale));
  };
  bool have_zero = false;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.time(k);
    if (t < t_lo - slack || t > t_hi + slack) continue;
    if (!have_zero && t > t_i) {
      push(t_i, traj.profile_at(t_i));
      have_zero = true;
    }
    if (std::abs(t - t_i) <= slack) {
      if (have_zero) continue;
      have_zero = true;
      push(t_i, traj.profile(k));
      times.back() = 0.0;
      continue;
    }
    push(t, traj.profile(k));
  }
  if (!have_zero) push(t_i, traj.profile_at(t_i));
  return FlowTrajectory(std::move(times), std::move(profiles), 1.0, traj.step_size() / scale);
}

MetricComparison metric_comparison_check(const FlowTrajectory& traj, double t, double s) {
  if (!(t <= s)) throw RangeError("metric comparison expects t <= s");
  const double T = traj.extinction_time();
  const auto psi_t = traj.conformal_factor_at(t);
  const auto psi_s = traj.conformal_factor_at(s);
  double ratio = 0.0;
  for (std::size_t j = 0; j < psi_t.size(); ++j) ratio = std::max(ratio, psi_s[j] / psi_t[j]);
  ratio *= (T - s) / (T - t);

  double lower = std::numeric_limits<double>::infinity();
  auto visit = [&](double time, std::span<const double> K) {
    for (double k : K) lower = std::min(lower, k * (T - time));
  };
  visit(t, traj.curvature_at(t));
  visit(s, traj.curvature_at(s));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.time(k) > t && traj.time(k) < s) visit(traj.time(k), traj.curvature(k).values());
  }
  return {ratio, lower, lower >= -1.0};
}

FlowBounds flow_bounds(const FlowTrajectory& traj) {
  const double T = traj.extinction_time();
  FlowBounds b;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double tau = T - traj.time(k);
    b.times.push_back(traj.time(k));
    b.scalar_scaled.push_back(traj.curvature(k).max() * tau);
    b.diameter_scaled.push_back(meridian_distance(traj.profile(k), 0.0, pi) / std::sqrt(tau));
  }
  return b;
}

MetricProfile round_profile(std::size_t n_nodes, double w_const) {
  auto grid = Grid::make(n_nodes);
  return MetricProfile(grid, std::vector<double>(n_nodes, w_const));
}

MetricProfile cosine_profile(std::size_t n_nodes, double amplitude) {
  auto grid = Grid::make(n_nodes);
  std::vector<double> w(n_nodes);
  for (std::size_t j = 0; j < n_nodes; ++j) w[j] = amplitude * std::cos(grid->theta(j));
  return MetricProfile(grid, std::move(w));
}

}  // namespace krf
