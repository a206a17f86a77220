#pragma once
// Perelman's L-functional along meridian curves, minimising L-geodesics,
// reduced distance, the inf-over-base-points construction L~ and the residuals
// of Perelman's two differential inequalities for l.
//
// Curves are parametrised by sigma = sqrt(t_i - s), which removes the
// sqrt(t_i - s) degeneracy at the base point:
//   L = int_t^{t_i} sqrt(t_i - s) (R + |gamma'|^2) ds
//     = int_0^{sigma_m} [2 sigma^2 R + psi theta_sigma^2] dsigma,   sigma_m = sqrt(t_i - t),
// with |gamma'|^2 = 2 psi theta'^2 (see perelman.hpp for the norm convention).
// The curve coordinate runs along a full great circle through the poles; values
// outside [0, pi] are folded back.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "krf/conjheat.hpp"
#include "krf/flow.hpp"

namespace krf {

struct BasePoint {
  double theta;
  double t_i;
};

struct LOptions {
  std::size_t intervals = 32;      ///< sigma intervals of the transcription
  std::size_t lattice_theta = 64;  ///< colatitude nodes of the initialising lattice
  double tol_stat = 1e-7;          ///< max |dL/dtheta_k| accepted as stationary
  std::size_t max_iter = 60;
};

struct LGeodesicResult {
  BasePoint base;
  double theta_q;
  double t;
  std::vector<double> sigma;  ///< uniform nodes, 0 at the base
  std::vector<double> theta;  ///< curve coordinate at each node
  double L_value;
  double l_value;
  double stationarity;  ///< max |dL/dtheta_k| over interior nodes
  bool converged;
  double lattice_value;  ///< L of the lattice initialiser
  std::vector<double> times() const;
};

/// L of the piecewise-linear curve with nodes `theta` at uniform sigma spacing;
/// theta.front() must be the base colatitude.
double L_functional(const FlowTrajectory& traj, std::span<const double> theta,
                    const BasePoint& base, double t);

/// Closed form for the round flow, constant curve, R = 1/(T - s).
double round_constant_curve_L(double T, double t_i, double t);

/// Lattice shortest path over (sigma, theta) followed by damped Newton on the
/// transcription. Ties on the lattice go to the smallest colatitude index.
LGeodesicResult minimize_L(const FlowTrajectory& traj, const BasePoint& base, double theta_q,
                           double t, const LOptions& options = {});

/// Brute-force reference for minimize_L: shortest path over n_theta equispaced
/// colatitudes times `layers` uniform sigma layers, with straight edges that may
/// span up to max_skip layers so slow curves are not forced onto staircases.
/// Flow data enter by linear interpolation and two-point Gauss quadrature.
double lattice_oracle_L(const FlowTrajectory& traj, const BasePoint& base, double theta_q,
                        double t, std::size_t n_theta = 64, std::size_t layers = 64,
                        std::size_t max_skip = 8);

/// l = L / (2 sqrt(t_i - t)); rejects t = t_i.
double reduced_distance(const LGeodesicResult& r);
double reduced_distance(double L, double t_i, double t);

struct TildeValue {
  double L;
  std::size_t argmin;  ///< index into the base samples
};
TildeValue tilde_L(const FlowTrajectory& traj, double theta_q, double t, double t_i,
                   std::span<const double> base_thetas, const LOptions& options = {});

/// Equispaced colatitudes including both poles.
std::vector<double> colatitude_grid(std::size_t n);

struct LFieldOptions {
  std::vector<double> t_fractions{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3,
                                  0.35, 0.4, 0.45, 0.5, 0.55, 0.6};
  std::size_t n_q = 33;
  std::vector<double> base_thetas = colatitude_grid(33);
  LOptions geo{};
};

/// Row-major fields over (t, theta_q): index it * n_q + iq.
struct ReducedDistanceField {
  double t_i = 0.0;
  double extinction_time = 0.0;
  std::vector<double> thetas;
  std::vector<double> times;
  std::vector<double> base_thetas;
  std::vector<std::vector<double>> L_base;  ///< one field per base sample
  std::vector<double> L_tilde;
  std::vector<double> l_tilde;
  std::vector<std::size_t> argmin;
  std::size_t unconverged = 0;

  std::size_t n_t() const { return times.size(); }
  std::size_t n_q() const { return thetas.size(); }
  std::size_t at(std::size_t it, std::size_t iq) const { return it * thetas.size() + iq; }
  /// l of one base sample.
  std::vector<double> l_base(std::size_t b) const;
};

/// Times are t_fractions * T; all must lie in [0, t_i).
ReducedDistanceField build_field(const FlowTrajectory& traj, double t_i,
                                 const LFieldOptions& options = {});

/// min over the common domain of L~_j - L~_i for fields with t_i <= t_j.
double tilde_monotonicity_check(const ReducedDistanceField& earlier,
                                const ReducedDistanceField& later);

/// L~ <= C sqrt(t_i - t) with C = 2 sup (R (T - t)) over the stored run.
struct LBoundCheck {
  double C;
  double max_excess;   ///< max of L~ - C sqrt(t_i - t)
  double sup_l_tilde;  ///< sup of l~ over the field
};
LBoundCheck tilde_bound_check(const ReducedDistanceField& field, const FlowTrajectory& traj);

/// Residuals of
///   r1 = -l_t - Delta l + |grad l|^2 - R + 1/(t_i - t)     (>= 0)
///   r2 = 2 Delta l - |grad l|^2 + R + (l - 2)/(t_i - t)    (<= 0)
/// by three-point differences on the field grid. Edge nodes are NaN and
/// nodes flagged non-smooth are excluded from the counts.
struct InequalityResiduals {
  std::vector<double> r1, r2;
  std::vector<char> flagged;
  std::size_t assessed = 0;
  std::size_t ok1 = 0, ok2 = 0, ok_both = 0;
  double worst1 = 0.0, worst2 = 0.0;  ///< most negative r1, most positive r2 (scaled)
  double fraction_ok() const;         ///< share of assessed nodes where both hold
};
/// Tolerance is tol * scale with scale = 1/(t_i - t) at the node. `branch`
/// (optional, same layout as l) holds the argmin base index of each value; a
/// stencil where it jumps by more than two samples is flagged as non-smooth.
InequalityResiduals perelman_l_inequalities(const ReducedDistanceField& field,
                                            std::span<const double> l,
                                            const FlowTrajectory& traj, double tol,
                                            std::span<const std::size_t> branch = {});

/// Residuals on l~ with argmin changes flagged; exploratory, no verdict.
struct QuestionReport {
  InequalityResiduals residuals;
  double violation_fraction1 = 0.0;
  double violation_fraction2 = 0.0;
  std::vector<double> reduced_volume;  ///< V~ at each field time
  bool volume_nondecreasing = false;   ///< in t (nonincreasing in t_i - t); reported only
};
QuestionReport question_experiment(const ReducedDistanceField& field, const FlowTrajectory& traj,
                                   double tol);

/// V~(t) = (T - t)^{-1} int e^{-l~} dV, l~ interpolated from the field row.
double reduced_volume(const ReducedDistanceField& field, const FlowTrajectory& traj,
                      std::size_t it);

/// Fit a + b h + c h^2 in h = sqrt(T - t_i) through the last three samples and
/// return a.
double richardson_sqrt(std::span<const double> t_i, std::span<const double> values, double T);

/// l(pole) at q = base = north pole and time t for each t_i, with the
/// extrapolated limit t_i -> T.
struct PoleLimit {
  std::vector<double> t_i;
  std::vector<double> l;
  double extrapolated;
};
PoleLimit pole_limit(const FlowTrajectory& traj, std::span<const double> t_i_fractions,
                     double t, const LOptions& options = {});

/// min over the field grid of l^x - f with x the conjugate solution's base pole
/// and f = -ln u - ln(4 pi (t_i - t)).
struct FLCheck {
  double min_slack;
  double theta_at;
  double t_at;
};
FLCheck f_le_l_check(const ConjugateSolution& sol, const ReducedDistanceField& field);

}  // namespace krf
