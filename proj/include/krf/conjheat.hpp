#pragma once
// Conjugate heat equation d/dt u = -Delta u + R u along a stored flow, solved
// backward from terminal data at t_i.
//
// With rho = psi * u (density against the round area form) the equation is
//   d/dt rho = -1/2 Delta_round(rho / psi),
// so the discrete mass 2 pi sum_j q_j rho_j is a linear invariant of each RK4
// step and is conserved to rounding.

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "krf/flow.hpp"
#include "krf/geom2d.hpp"

namespace krf {

struct ConjHeatOptions {
  double cfl = 0.5;
};

/// u(theta, t) on the stored slices of a flow up to the terminal time.
/// Each slice carries its own metric so the solution is self-contained
/// (it may be rescaled independently of the trajectory it came from).
class ConjugateSolution {
 public:
  ConjugateSolution(std::vector<double> times, std::vector<MetricProfile> metrics,
                    std::vector<std::vector<double>> u, double extinction_time,
                    double terminal_time);

  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  double time(std::size_t k) const { return times_[k]; }
  const MetricProfile& metric(std::size_t k) const { return metrics_[k]; }
  std::span<const double> u(std::size_t k) const { return u_[k]; }
  ScalarField u_field(std::size_t k) const;
  double mass(std::size_t k) const;
  /// Index of the slice at time t (exact match within 1e-12 relative); throws RangeError.
  std::size_t index_of(double t) const;
  /// Index of the last slice with time <= t.
  std::size_t floor_index(double t) const;

  double extinction_time() const { return t_exact_; }
  double terminal_time() const { return t_terminal_; }

  // Provenance for exports.
  double base_theta = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  std::string trajectory_hash;

 private:
  std::vector<double> times_;
  std::vector<MetricProfile> metrics_;
  std::vector<std::vector<double>> u_;
  double t_exact_;
  double t_terminal_;
};

/// Integrate backward from `terminal` at t_i over every stored slice <= t_i.
/// Terminal data must be positive with unit mass against the metric at t_i.
ConjugateSolution solve_backward(const FlowTrajectory& traj, double t_i, const ScalarField& terminal,
                                 const ConjHeatOptions& options = {});

/// Geodesic distance from the north (south_pole=false) or south pole to every node.
std::vector<double> pole_distance(const MetricProfile& m, bool south_pole);

/// Normalised geodesic Gaussian exp(-d^2 / (4 eps)) / Z centred at a pole
/// (theta_p must be 0 or pi: rotational symmetry admits no other centre).
ScalarField delta_terminal(const MetricProfile& m, double theta_p, double eps);

/// f = -ln u - ln(4 pi (T_ref - t)); T_ref defaults to the flow's extinction time.
ScalarField f_of(const ConjugateSolution& sol, std::size_t k);
ScalarField f_of(const ConjugateSolution& sol, std::size_t k, double t_ref);

struct CandidateResult {
  std::vector<double> terminal_times;
  std::vector<ConjugateSolution> members;  ///< one backward solve per terminal time
  std::vector<double> increments;          ///< sup over [0, t_1] of |u^(i+1) - u^(i)|
  bool converging = true;
  std::string warning;
  const ConjugateSolution& candidate() const { return members.back(); }
};

/// Numerical analogue of the diagonal delta-limit: solve backward from
/// normalised bumps at each schedule time (fractions of T, increasing, >= 3
/// entries) with width eps = eps_factor * (T - t_i).
CandidateResult admissible_candidate(const FlowTrajectory& traj,
                                     const std::vector<double>& schedule_fractions, double theta_p,
                                     double eps_factor = 0.1, const ConjHeatOptions& options = {});

/// First-order Richardson extrapolation of the last two members in (T - t_i),
/// the observed error order of the schedule. Defined on the window [0, t_1]
/// where the increments are measured, cut at the first slice where the
/// combination stops being positive. Mass stays exact (weights sum to one).
ConjugateSolution extrapolated_candidate(const CandidateResult& cand);

/// Forward heat flow d/dt phi = Delta phi from the first slice of `sol`;
/// returns max_t |<phi, u>(t) - <phi, u>(t0)| over the solution's slices.
struct DualityReport {
  std::vector<double> pairing;
  double drift;
};
DualityReport duality_check(const FlowTrajectory& traj, const ScalarField& phi0,
                            const ConjugateSolution& sol, const ConjHeatOptions& options = {});

/// Rescale a solution onto the blow-up window at t_i:
/// u_i(s) = (T - t_i) u(t_i + s (T - t_i)), metrics scaled by 1/(T - t_i).
ConjugateSolution rescale_solution(const ConjugateSolution& sol, double t_i, double s_lo,
                                   double s_hi);

}  // namespace krf
