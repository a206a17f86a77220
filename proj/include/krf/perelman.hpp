#pragma once
// Perelman's v-quantity, W-entropy and its monotonicity formula, the
// differential-Harnack admissibility residual, the elliptic Harnack ratio,
// blow-up soliton residuals and the two-candidate uniqueness experiment.
//
// Normalisation (fixed so that the shrinking round sphere with u = 1/Vol is an
// exact equality case of every identity below; n = 1):
//   tau = T_ref - t,  u = (4 pi tau)^{-1} e^{-f},
//   v   = [tau (2 Delta f - |grad f|^2 + R) + f - kEntropyShift] u,   W = int v dV,
//   dW/dt = tau int [A^2 + B] u dV >= 0,
//   A = R + Delta f - 1/tau              (trace part of Ric + Hess f - g/tau),
//   B = (lambda_1 - lambda_2)^2 / 4      (trace-free Hessian energy),
// where lambda_{1,2} are the principal Riemannian Hessian eigenvalues of f.

#include <cstddef>
#include <limits>
#include <vector>

#include "krf/conjheat.hpp"
#include "krf/flow.hpp"
#include "krf/geom2d.hpp"

namespace krf {

/// Replaces 2n in v; the only value for which v vanishes on the round soliton.
inline constexpr double kEntropyShift = 1.0;

/// Pointwise ingredients of the entropy at one slice.
struct EntropyTerms {
  std::vector<double> f, lap_f, grad_f_sq, R, trace_residual, tracefree_energy;
  double tau;
};
EntropyTerms entropy_terms(const ConjugateSolution& sol, std::size_t k, double t_ref);

ScalarField v_field(const ConjugateSolution& sol, std::size_t k);
ScalarField v_field(const ConjugateSolution& sol, std::size_t k, double t_ref);
double entropy_W(const ConjugateSolution& sol, std::size_t k);
double entropy_W(const ConjugateSolution& sol, std::size_t k, double t_ref);

struct WDerivative {
  double formula;
  double finite_difference;
};
/// Formula value at slice k and a three-point (non-uniform) difference of W
/// over the neighbouring slices; one-sided at the ends.
WDerivative w_derivative(const ConjugateSolution& sol, std::size_t k);
WDerivative w_derivative(const ConjugateSolution& sol, std::size_t k, double t_ref);

/// max u / min u on the grid.
double harnack_ratio(const ConjugateSolution& sol, std::size_t k);

/// Straight meridian curve theta(t) = theta_start + speed (t - t_start).
struct MeridianCurve {
  double theta_start;
  double t_start;
  double t_end;
  double speed;
};

/// min over samples of
///   [1/2 (R + |gamma'|^2) - f / (2 tau) + d/dt f(gamma(t), t)] / (1/2 max R),
/// sampled at the interior solution slices inside the curve's time range.
/// |gamma'|^2 = 2 psi theta'^2 (vector norm dual to |grad f|^2 = 1/2 |df|^2_riem).
double admissibility_residual(const ConjugateSolution& sol, const MeridianCurve& curve,
                              double t_ref);

struct AdmissibilityScan {
  double min_residual;  ///< normalised by 1/2 max R at the sample time
  std::size_t worst_curve;
  std::vector<MeridianCurve> curves;
  std::vector<double> residuals;  ///< one per curve
};
/// 50 speeds x 2 directions across [t_start, t_end].
AdmissibilityScan admissibility_scan(const ConjugateSolution& sol, double t_start, double t_end,
                                     double t_ref, std::size_t speeds = 50);

/// max f(., t1) <= 2^{-1/2} min f(., t2) + C with t2 - t1 = T - t2.
struct MinMaxChain {
  double t1, t2;
  double lhs;         ///< max f(., t1)
  double min_f_t2;    ///< min f(., t2)
  double c_required;  ///< smallest C making the inequality hold
};
MinMaxChain f_min_max_chain(const ConjugateSolution& sol, double t2);

/// Trace and trace-free soliton residuals over the rescaled window
/// (time-integrated, weighted by the rescaled tau = 1 - s):
///   r1 = int tau int A^2 u dV ds,  r2 = int tau int B u dV ds.
/// Their sum is W(s_hi) - W(s_lo) by the monotonicity formula.
struct SolitonResidual {
  double r1;
  double r2;
};
SolitonResidual soliton_residual(const ConjugateSolution& rescaled, double s_lo = 0.0,
                                 double s_hi = 0.5);

struct UniquenessSeries {
  double terminal_time;
  std::vector<double> times;
  std::vector<double> rho_max;   ///< max_theta u_A / u_B
  double max_decrease;           ///< max_k rho(t_k) - rho(t_{k+1}); <= tol expected
  double rho_at_probe;
};
struct UniquenessReport {
  double probe_time;
  std::vector<UniquenessSeries> series;
};
/// Candidates A (north) and B (south) must share terminal times and slices.
UniquenessReport uniqueness_experiment(const CandidateResult& a, const CandidateResult& b,
                                       double probe_time);

struct EntropyRecord {
  double t, W, dWdt_formula, dWdt_fd, v_max, M, m, ratio;
  double r1 = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
};
/// One record per slice strictly before the terminal time.
std::vector<EntropyRecord> entropy_report(const ConjugateSolution& sol, double t_ref);

/// Sets r1, r2 of each record to the integrals of tau int A^2 u dV and
/// tau int B u dV over [t, t + (t_ref - t)/2]. By scale invariance these are
/// the soliton residuals of the blow-up at t; NaN where the window leaves the
/// solution.
void fill_soliton_residuals(std::vector<EntropyRecord>& records, const ConjugateSolution& sol,
                            double t_ref);

}  // namespace krf
