#include "krf/lgeo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "krf/error.hpp"

namespace krf {

using std::numbers::pi;

namespace {

// Gauss-Legendre, 4 points on [0, 1].
constexpr std::size_t kGauss = 4;
constexpr double kXi[kGauss] = {0.5 - 0.5 * 0.8611363115940526, 0.5 - 0.5 * 0.3399810435848563,
                                0.5 + 0.5 * 0.3399810435848563, 0.5 + 0.5 * 0.8611363115940526};
constexpr double kWt[kGauss] = {0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461,
                                0.5 * 0.6521451548625461, 0.5 * 0.3478548451374538};

struct Jet {
  double v, d1, d2;
};

// Catmull-Rom through the cell centres, even across both poles. The argument
// is a great-circle coordinate; folding flips the sign of odd derivatives.
Jet interp(const Grid& g, std::span<const double> f, double alpha) {
  const double theta = fold_colatitude(alpha);
  const double r = std::fmod(std::abs(alpha), 2.0 * pi);
  const double sgn = ((r > pi) != (alpha < 0.0)) ? -1.0 : 1.0;
  const auto n = static_cast<std::ptrdiff_t>(g.size());
  const double h = g.spacing();
  const double x = theta / h - 0.5;
  auto j = static_cast<std::ptrdiff_t>(std::floor(x));
  j = std::clamp<std::ptrdiff_t>(j, -1, n - 1);
  const double u = x - static_cast<double>(j);
  auto at = [&](std::ptrdiff_t i) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
    return f[static_cast<std::size_t>(i)];
  };
  const double p0 = at(j - 1), p1 = at(j), p2 = at(j + 1), p3 = at(j + 2);
  const double c1 = -p0 + p2;
  const double c2 = 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3;
  const double c3 = -p0 + 3.0 * p1 - 3.0 * p2 + p3;
  Jet out;
  out.v = 0.5 * (2.0 * p1 + u * (c1 + u * (c2 + u * c3)));
  out.d1 = sgn * 0.5 * (c1 + u * (2.0 * c2 + 3.0 * u * c3)) / h;
  out.d2 = 0.5 * (2.0 * c2 + 6.0 * c3 * u) / (h * h);
  return out;
}

// Flow data at the quadrature points of one (t_i, t) window.
struct Window {
  const Grid* grid;
  std::size_t M;
  double t_i, t, sigma_m, ds;
  std::vector<std::vector<double>> psi, pot;  // pot = 2 sigma^2 R, index k * kGauss + g

  Window(const FlowTrajectory& traj, double t_i_, double t_, std::size_t M_)
      : grid(&traj.grid()), M(M_), t_i(t_i_), t(t_) {
    if (t_i > traj.last_time() * (1.0 + 1e-12)) throw RangeError("base time beyond the stored flow");
    if (t < traj.first_time() || !(t <= t_i)) throw RangeError("L needs first_time <= t <= t_i");
    if (M < 1) throw RangeError("L transcription needs at least one interval");
    sigma_m = std::sqrt(t_i - t);
    ds = sigma_m / static_cast<double>(M);
    psi.reserve(M * kGauss);
    pot.reserve(M * kGauss);
    for (std::size_t k = 0; k < M; ++k) {
      for (std::size_t g = 0; g < kGauss; ++g) {
        const double sig = (static_cast<double>(k) + kXi[g]) * ds;
        const double s = std::max(t, t_i - sig * sig);
        psi.push_back(traj.conformal_factor_at(s));
        auto r = traj.curvature_at(s);
        for (double& v : r) v *= 2.0 * sig * sig;
        pot.push_back(std::move(r));
      }
    }
  }

  double value(std::size_t k, double a, double b) const {
    if (ds == 0.0) return 0.0;
    const double v = (b - a) / ds;
    double acc = 0.0;
    for (std::size_t g = 0; g < kGauss; ++g) {
      const double th = a + kXi[g] * (b - a);
      acc += kWt[g] * (interp(*grid, psi[k * kGauss + g], th).v * v * v +
                       interp(*grid, pot[k * kGauss + g], th).v);
    }
    return ds * acc;
  }

  // Value, gradient and Hessian of the interval term in (a, b).
  struct Local {
    double F, Fa, Fb, Faa, Fbb, Fab;
  };
  Local local(std::size_t k, double a, double b) const {
    Local o{0, 0, 0, 0, 0, 0};
    if (ds == 0.0) return o;
    const double v = (b - a) / ds;
    for (std::size_t g = 0; g < kGauss; ++g) {
      const double xi = kXi[g];
      const double th = a + xi * (b - a);
      const Jet P = interp(*grid, psi[k * kGauss + g], th);
      const Jet Q = interp(*grid, pot[k * kGauss + g], th);
      const double w = kWt[g] * ds;
      const double s1 = P.d1 * v * v + Q.d1;
      const double s2 = P.d2 * v * v + Q.d2;
      o.F += w * (P.v * v * v + Q.v);
      o.Fa += w * (s1 * (1.0 - xi) - 2.0 * P.v * v / ds);
      o.Fb += w * (s1 * xi + 2.0 * P.v * v / ds);
      o.Faa += w * (s2 * (1.0 - xi) * (1.0 - xi) - 4.0 * P.d1 * v * (1.0 - xi) / ds +
                    2.0 * P.v / (ds * ds));
      o.Fbb += w * (s2 * xi * xi + 4.0 * P.d1 * v * xi / ds + 2.0 * P.v / (ds * ds));
      o.Fab += w * (s2 * xi * (1.0 - xi) + 2.0 * P.d1 * v * (1.0 - 2.0 * xi) / ds -
                    2.0 * P.v / (ds * ds));
    }
    return o;
  }

  double total(std::span<const double> th) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < M; ++k) acc += value(k, th[k], th[k + 1]);
    return acc;
  }
};

}  // namespace

namespace {

// Exhaustive shortest path from the base over the colatitude lattice; one run
// serves every endpoint q of the window. Interior transitions do not depend on
// the base, so they are tabulated once per window.
struct LatticeTable {
  std::vector<double> nodes;
  std::vector<double> edge;  // [(k - 1) * n + i] * n + j for interior layers k = 1 .. M-2

  LatticeTable(const Window& w, std::size_t n_theta) : nodes(colatitude_grid(n_theta)) {
    const std::size_t n = nodes.size();
    if (w.M < 3) return;
    edge.resize((w.M - 2) * n * n);
    for (std::size_t k = 1; k + 1 < w.M; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          edge[((k - 1) * n + i) * n + j] = w.value(k, nodes[i], nodes[j]);
        }
      }
    }
  }
};

struct Lattice {
  const LatticeTable* table = nullptr;
  std::vector<double> last;                       // best L to each node of layer M-1
  std::vector<std::vector<std::size_t>> parent;   // parent[k][j] for layers 2..M-1
};

Lattice run_lattice(const Window& w, const LatticeTable& table, double base) {
  Lattice lat;
  lat.table = &table;
  const std::size_t M = w.M;
  if (M < 2) return lat;
  const auto& nodes = table.nodes;
  const std::size_t n = nodes.size();
  std::vector<double> cur(n), next(n);
  for (std::size_t j = 0; j < n; ++j) cur[j] = w.value(0, base, nodes[j]);
  lat.parent.assign(M, {});
  for (std::size_t k = 1; k + 1 < M; ++k) {
    auto& par = lat.parent[k + 1];
    par.assign(n, 0);
    std::fill(next.begin(), next.end(), std::numeric_limits<double>::infinity());
    const double* e = table.edge.data() + (k - 1) * n * n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double c = cur[i] + e[i * n + j];
        if (c < next[j]) {
          next[j] = c;
          par[j] = i;
        }
      }
    }
    cur.swap(next);
  }
  lat.last = std::move(cur);
  return lat;
}

// Lattice path to q: nodes theta_0 .. theta_M. Returns its L.
double lattice_path(const Window& w, const Lattice& lat, double base, double q,
                    std::vector<double>& path) {
  const std::size_t M = w.M;
  path.assign(M + 1, base);
  path[M] = q;
  if (M < 2) return w.total(path);
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  const auto& nodes = lat.table->nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double c = lat.last[i] + w.value(M - 1, nodes[i], q);
    if (c < best) {
      best = c;
      arg = i;
    }
  }
  for (std::size_t k = M - 1; k >= 1; --k) {
    path[k] = nodes[arg];
    if (k >= 2) arg = lat.parent[k][arg];
  }
  return best;
}

struct Refined {
  double L;
  double stat;
  bool converged;
};

// Damped Newton on the interior nodes with the exact tridiagonal Hessian of the
// transcription; Levenberg shift when the Hessian is not positive definite.
Refined refine(const Window& w, std::vector<double>& th, const LOptions& opt) {
  const std::size_t M = w.M;
  const std::size_t m = M - 1;  // unknowns th[1..M-1]
  double L = w.total(th);
  if (m == 0) return {L, 0.0, true};
  std::vector<double> g(m), d(m), e(m), p(m), trial(th.size()), dd(m), rhs(m);
  std::vector<Window::Local> loc(M);
  double stat = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    for (std::size_t k = 0; k < M; ++k) loc[k] = w.local(k, th[k], th[k + 1]);
    stat = 0.0;
    double dmax = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      g[i] = loc[i].Fb + loc[i + 1].Fa;
      d[i] = loc[i].Fbb + loc[i + 1].Faa;
      e[i] = loc[i + 1].Fab;  // couples unknown i with i+1
      stat = std::max(stat, std::abs(g[i]));
      dmax = std::max(dmax, std::abs(d[i]));
    }
    if (stat <= opt.tol_stat) return {L, stat, true};
    double mu = 0.0;
    bool solved = false;
    for (int attempt = 0; attempt < 60 && !solved; ++attempt) {
      solved = true;
      for (std::size_t i = 0; i < m; ++i) {
        dd[i] = d[i] + mu;
        rhs[i] = -g[i];
        if (i > 0) {
          const double c = e[i - 1] / dd[i - 1];
          dd[i] -= c * e[i - 1];
          rhs[i] -= c * rhs[i - 1];
        }
        if (!(dd[i] > 0.0)) {
          solved = false;
          mu = mu == 0.0 ? 1e-10 * (dmax + 1.0) : 4.0 * mu;
          break;
        }
      }
    }
    if (!solved) break;
    for (std::size_t i = m; i-- > 0;) {
      p[i] = (rhs[i] - (i + 1 < m ? e[i] * p[i + 1] : 0.0)) / dd[i];
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < m; ++i) slope += g[i] * p[i];
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      trial = th;
      for (std::size_t i = 0; i < m; ++i) trial[i + 1] += alpha * p[i];
      const double Lt = w.total(trial);
      if (Lt <= L + 1e-4 * alpha * slope) {
        th.swap(trial);
        L = Lt;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Near the optimum the decrease drops below the rounding of L; accept
      // the full step when it still shrinks the gradient.
      trial = th;
      for (std::size_t i = 0; i < m; ++i) trial[i + 1] += p[i];
      double next_stat = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto lo = w.local(i, trial[i], trial[i + 1]);
        const auto hi = w.local(i + 1, trial[i + 1], trial[i + 2]);
        next_stat = std::max(next_stat, std::abs(lo.Fb + hi.Fa));
      }
      if (!(next_stat < stat)) break;
      th.swap(trial);
      L = w.total(th);
    }
  }
  for (std::size_t k = 0; k < M; ++k) loc[k] = w.local(k, th[k], th[k + 1]);
  stat = 0.0;
  for (std::size_t i = 0; i < m; ++i) stat = std::max(stat, std::abs(loc[i].Fb + loc[i + 1].Fa));
  return {L, stat, stat <= opt.tol_stat};
}

// Lattice initialiser plus the straight transcription; keeps the better refinement.
LGeodesicResult solve(const Window& w, const Lattice& lat, const BasePoint& base, double q,
                      const LOptions& opt) {
  LGeodesicResult r;
  r.base = base;
  r.theta_q = q;
  r.t = w.t;
  const std::size_t M = w.M;
  r.sigma.resize(M + 1);
  for (std::size_t k = 0; k <= M; ++k) r.sigma[k] = w.ds * static_cast<double>(k);

  std::vector<double> a;
  r.lattice_value = lattice_path(w, lat, base.theta, q, a);
  const Refined ra = refine(w, a, opt);

  std::vector<double> b(M + 1);
  for (std::size_t k = 0; k <= M; ++k) {
    b[k] = base.theta + (q - base.theta) * static_cast<double>(k) / static_cast<double>(M);
  }
  const Refined rb = refine(w, b, opt);

  const bool take_a = ra.L <= rb.L;
  r.theta = take_a ? std::move(a) : std::move(b);
  const Refined& best = take_a ? ra : rb;
  r.L_value = best.L;
  r.stationarity = best.stat;
  r.converged = best.converged;
  r.l_value = r.t < base.t_i ? reduced_distance(r.L_value, base.t_i, r.t) : 0.0;
  return r;
}

void check_colatitude(double theta, const char* what) {
  if (!(theta >= 0.0 && theta <= pi)) throw RangeError(std::string(what) + " must lie in [0, pi]");
}

}  // namespace

std::vector<double> LGeodesicResult::times() const {
  std::vector<double> s(sigma.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = base.t_i - sigma[k] * sigma[k];
  return s;
}

double L_functional(const FlowTrajectory& traj, std::span<const double> theta,
                    const BasePoint& base, double t) {
  if (theta.size() < 2) throw DimensionError("curve needs at least two nodes");
  if (std::abs(theta.front() - base.theta) > 1e-12) {
    throw RangeError("curve must start at the base point");
  }
  if (t == base.t_i) return 0.0;
  const Window w(traj, base.t_i, t, theta.size() - 1);
  return w.total(theta);
}

double round_constant_curve_L(double T, double t_i, double t) {
  const double a = T - t_i;
  const double sm = std::sqrt(t_i - t);
  if (a == 0.0) return 2.0 * sm;
  return 2.0 * sm - 2.0 * std::sqrt(a) * std::atan(sm / std::sqrt(a));
}

LGeodesicResult minimize_L(const FlowTrajectory& traj, const BasePoint& base, double theta_q,
                           double t, const LOptions& options) {
  check_colatitude(base.theta, "base colatitude");
  check_colatitude(theta_q, "endpoint colatitude");
  const Window w(traj, base.t_i, t, options.intervals);
  const LatticeTable table(w, options.lattice_theta);
  const Lattice lat = run_lattice(w, table, base.theta);
  return solve(w, lat, base, theta_q, options);
}

double lattice_oracle_L(const FlowTrajectory& traj, const BasePoint& base, double theta_q,
                        double t, std::size_t n_theta, std::size_t layers, std::size_t max_skip) {
  check_colatitude(base.theta, "base colatitude");
  check_colatitude(theta_q, "endpoint colatitude");
  if (layers < 1 || max_skip < 1 || n_theta < 2) throw RangeError("degenerate oracle lattice");
  if (!(t < base.t_i)) return 0.0;
  const Grid& g = traj.grid();
  const double sm = std::sqrt(base.t_i - t);
  const double ds = sm / static_cast<double>(layers);
  const double xi[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  std::vector<std::vector<double>> psi, pot;
  for (std::size_t m = 0; m < layers; ++m) {
    for (double x : xi) {
      const double sig = (static_cast<double>(m) + x) * ds;
      const double s = std::max(t, base.t_i - sig * sig);
      psi.push_back(traj.conformal_factor_at(s));
      auto r = traj.curvature_at(s);
      for (double& v : r) v *= 2.0 * sig * sig;
      pot.push_back(std::move(r));
    }
  }
  auto edge = [&](std::size_t k0, double a, std::size_t k1, double b) {
    const double span = static_cast<double>(k1 - k0);
    const double v = (b - a) / (span * ds);
    double acc = 0.0;
    for (std::size_t m = k0; m < k1; ++m) {
      for (std::size_t q = 0; q < 2; ++q) {
        const double th = a + (b - a) * (static_cast<double>(m - k0) + xi[q]) / span;
        acc += sample(g, psi[2 * m + q], th) * v * v + sample(g, pot[2 * m + q], th);
      }
    }
    return 0.5 * ds * acc;
  };
  const auto nodes = colatitude_grid(n_theta);
  const std::size_t n = nodes.size();
  const double inf = std::numeric_limits<double>::infinity();
  // best[k][i]: cheapest path from the base to node i on layer k (1 <= k < layers).
  std::vector<std::vector<double>> best(layers, std::vector<double>(n, inf));
  for (std::size_t k = 1; k < layers; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      double c = k <= max_skip ? edge(0, base.theta, k, nodes[j]) : inf;
      for (std::size_t s = 1; s <= max_skip && s < k; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
          c = std::min(c, best[k - s][i] + edge(k - s, nodes[i], k, nodes[j]));
        }
      }
      best[k][j] = c;
    }
  }
  double out = layers <= max_skip ? edge(0, base.theta, layers, theta_q) : inf;
  for (std::size_t s = 1; s <= max_skip && s < layers; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      out = std::min(out, best[layers - s][i] + edge(layers - s, nodes[i], layers, theta_q));
    }
  }
  return out;
}

double reduced_distance(double L, double t_i, double t) {
  if (!(t < t_i)) throw RangeError("reduced distance is undefined at t = t_i");
  return L / (2.0 * std::sqrt(t_i - t));
}

double reduced_distance(const LGeodesicResult& r) {
  return reduced_distance(r.L_value, r.base.t_i, r.t);
}

std::vector<double> colatitude_grid(std::size_t n) {
  if (n < 2) return {0.0};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = pi * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

TildeValue tilde_L(const FlowTrajectory& traj, double theta_q, double t, double t_i,
                   std::span<const double> base_thetas, const LOptions& options) {
  if (base_thetas.empty()) throw DimensionError("no base samples");
  check_colatitude(theta_q, "endpoint colatitude");
  const Window w(traj, t_i, t, options.intervals);
  const LatticeTable table(w, options.lattice_theta);
  TildeValue best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t b = 0; b < base_thetas.size(); ++b) {
    check_colatitude(base_thetas[b], "base colatitude");
    const Lattice lat = run_lattice(w, table, base_thetas[b]);
    const auto r = solve(w, lat, {base_thetas[b], t_i}, theta_q, options);
    if (r.L_value < best.L) best = {r.L_value, b};
  }
  return best;
}

std::vector<double> ReducedDistanceField::l_base(std::size_t b) const {
  std::vector<double> l(L_base.at(b).size());
  for (std::size_t it = 0; it < n_t(); ++it) {
    for (std::size_t iq = 0; iq < n_q(); ++iq) {
      l[at(it, iq)] = reduced_distance(L_base[b][at(it, iq)], t_i, times[it]);
    }
  }
  return l;
}

ReducedDistanceField build_field(const FlowTrajectory& traj, double t_i,
                                 const LFieldOptions& options) {
  if (options.base_thetas.empty()) throw DimensionError("no base samples");
  if (options.t_fractions.empty()) throw DimensionError("no field times");
  ReducedDistanceField f;
  f.t_i = t_i;
  f.extinction_time = traj.extinction_time();
  f.thetas = colatitude_grid(options.n_q);
  f.base_thetas = options.base_thetas;
  for (double b : f.base_thetas) check_colatitude(b, "base colatitude");
  for (std::size_t i = 0; i < options.t_fractions.size(); ++i) {
    const double t = options.t_fractions[i] * f.extinction_time;
    if (!(t < t_i) || (i > 0 && !(t > f.times.back()))) {
      throw RangeError("field times must increase and precede t_i");
    }
    f.times.push_back(t);
  }
  const std::size_t cells = f.n_t() * f.n_q();
  f.L_base.assign(f.base_thetas.size(), std::vector<double>(cells));
  for (std::size_t it = 0; it < f.n_t(); ++it) {
    const Window w(traj, t_i, f.times[it], options.geo.intervals);
    const LatticeTable table(w, options.geo.lattice_theta);
    for (std::size_t b = 0; b < f.base_thetas.size(); ++b) {
      const BasePoint base{f.base_thetas[b], t_i};
      const Lattice lat = run_lattice(w, table, base.theta);
      for (std::size_t iq = 0; iq < f.n_q(); ++iq) {
        const auto r = solve(w, lat, base, f.thetas[iq], options.geo);
        if (!r.converged) ++f.unconverged;
        f.L_base[b][f.at(it, iq)] = r.L_value;
      }
    }
  }
  f.L_tilde.assign(cells, std::numeric_limits<double>::infinity());
  f.argmin.assign(cells, 0);
  f.l_tilde.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t b = 0; b < f.base_thetas.size(); ++b) {
      if (f.L_base[b][c] < f.L_tilde[c]) {
        f.L_tilde[c] = f.L_base[b][c];
        f.argmin[c] = b;
      }
    }
    f.l_tilde[c] = reduced_distance(f.L_tilde[c], t_i, f.times[c / f.n_q()]);
  }
  return f;
}

double tilde_monotonicity_check(const ReducedDistanceField& earlier,
                                const ReducedDistanceField& later) {
  if (earlier.thetas != later.thetas || earlier.times != later.times) {
    throw DimensionError("fields live on different (theta, t) grids");
  }
  if (earlier.t_i > later.t_i) throw RangeError("fields are out of order in t_i");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < earlier.L_tilde.size(); ++c) {
    worst = std::min(worst, later.L_tilde[c] - earlier.L_tilde[c]);
  }
  return worst;
}

LBoundCheck tilde_bound_check(const ReducedDistanceField& field, const FlowTrajectory& traj) {
  LBoundCheck c{2.0 * traj.type1_sup(), -std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  for (std::size_t it = 0; it < field.n_t(); ++it) {
    const double root = std::sqrt(field.t_i - field.times[it]);
    for (std::size_t iq = 0; iq < field.n_q(); ++iq) {
      const std::size_t k = field.at(it, iq);
      c.max_excess = std::max(c.max_excess, field.L_tilde[k] - c.C * root);
      c.sup_l_tilde = std::max(c.sup_l_tilde, field.l_tilde[k]);
    }
  }
  return c;
}

double InequalityResiduals::fraction_ok() const {
  if (assessed == 0) return 0.0;
  return static_cast<double>(ok_both) / static_cast<double>(assessed);
}

namespace {
// A minimiser that moves by more than this many base samples between
// neighbouring nodes marks a switch of branch (a kink of l~).
constexpr std::size_t kBranchJump = 2;
}  // namespace

InequalityResiduals perelman_l_inequalities(const ReducedDistanceField& field,
                                            std::span<const double> l,
                                            const FlowTrajectory& traj, double tol,
                                            std::span<const std::size_t> branch) {
  const std::size_t nt = field.n_t();
  const std::size_t nq = field.n_q();
  if (l.size() != nt * nq) throw DimensionError("l field does not match the grid");
  if (!branch.empty() && branch.size() != l.size()) throw DimensionError("branch map mismatch");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  InequalityResiduals res;
  res.r1.assign(l.size(), nan);
  res.r2.assign(l.size(), nan);
  res.flagged.assign(l.size(), 0);
  res.worst1 = std::numeric_limits<double>::infinity();
  res.worst2 = -std::numeric_limits<double>::infinity();
  if (nt < 3 || nq < 3) return res;
  const Grid& g = traj.grid();
  const double h = field.thetas[1] - field.thetas[0];
  for (std::size_t it = 1; it + 1 < nt; ++it) {
    const double t = field.times[it];
    const double tau = field.t_i - t;
    const auto psi = traj.conformal_factor_at(t);
    const auto R = traj.curvature_at(t);
    const double h1 = t - field.times[it - 1];
    const double h2 = field.times[it + 1] - t;
    for (std::size_t iq = 1; iq + 1 < nq; ++iq) {
      const std::size_t c = field.at(it, iq);
      const std::size_t stencil[] = {c, c - 1, c + 1, field.at(it - 1, iq), field.at(it + 1, iq)};
      if (!branch.empty()) {
        for (std::size_t s : stencil) {
          const auto jump = branch[s] > branch[c] ? branch[s] - branch[c] : branch[c] - branch[s];
          res.flagged[c] |= jump > kBranchJump;
        }
      }
      const double l_t = -h2 / (h1 * (h1 + h2)) * l[stencil[3]] + (h2 - h1) / (h1 * h2) * l[c] +
                         h1 / (h2 * (h1 + h2)) * l[stencil[4]];
      const double l_q = (l[c + 1] - l[c - 1]) / (2.0 * h);
      const double l_qq = (l[c + 1] - 2.0 * l[c] + l[c - 1]) / (h * h);
      const double theta = field.thetas[iq];
      const double ps = sample(g, psi, theta);
      const double r = sample(g, R, theta);
      const double lap = 0.5 * (l_qq + std::cos(theta) / std::sin(theta) * l_q) / ps;
      const double grad = 0.5 * l_q * l_q / ps;
      res.r1[c] = -l_t - lap + grad - r + 1.0 / tau;
      res.r2[c] = 2.0 * lap - grad + r + (l[c] - 2.0) / tau;
      if (res.flagged[c]) continue;
      ++res.assessed;
      const double s1 = res.r1[c] * tau;
      const double s2 = res.r2[c] * tau;
      const bool ok1 = s1 >= -tol;
      const bool ok2 = s2 <= tol;
      res.ok1 += ok1;
      res.ok2 += ok2;
      res.ok_both += ok1 && ok2;
      res.worst1 = std::min(res.worst1, s1);
      res.worst2 = std::max(res.worst2, s2);
    }
  }
  return res;
}

double reduced_volume(const ReducedDistanceField& field, const FlowTrajectory& traj,
                      std::size_t it) {
  const double t = field.times.at(it);
  const MetricProfile m = traj.profile_at(t);
  const Grid& g = m.grid();
  const double dq = field.thetas[1] - field.thetas[0];
  std::vector<double> e(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.theta(j) / dq;
    const std::size_t i = std::min(static_cast<std::size_t>(x), field.n_q() - 2);
    const double u = x - static_cast<double>(i);
    const double lv = (1.0 - u) * field.l_tilde[field.at(it, i)] +
                      u * field.l_tilde[field.at(it, i + 1)];
    e[j] = std::exp(-lv);
  }
  return integrate(m, e) / (field.extinction_time - t);
}

QuestionReport question_experiment(const ReducedDistanceField& field, const FlowTrajectory& traj,
                                   double tol) {
  QuestionReport q;
  q.residuals = perelman_l_inequalities(field, field.l_tilde, traj, tol, field.argmin);
  const auto& r = q.residuals;
  if (r.assessed > 0) {
    const double n = static_cast<double>(r.assessed);
    q.violation_fraction1 = static_cast<double>(r.assessed - r.ok1) / n;
    q.violation_fraction2 = static_cast<double>(r.assessed - r.ok2) / n;
  }
  q.volume_nondecreasing = true;
  for (std::size_t it = 0; it < field.n_t(); ++it) {
    q.reduced_volume.push_back(reduced_volume(field, traj, it));
    if (it > 0 && q.reduced_volume[it] < q.reduced_volume[it - 1]) q.volume_nondecreasing = false;
  }
  return q;
}

double richardson_sqrt(std::span<const double> t_i, std::span<const double> values, double T) {
  if (t_i.size() != values.size() || t_i.size() < 3) {
    throw DimensionError("Richardson needs three (t_i, value) samples");
  }
  const std::size_t o = t_i.size() - 3;
  double h[3];
  for (std::size_t i = 0; i < 3; ++i) h[i] = std::sqrt(T - t_i[o + i]);
  double a = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double w = 1.0;
    for (std::size_t j = 0; j < 3; ++j) {
      if (j != i) w *= h[j] / (h[j] - h[i]);
    }
    a += w * values[o + i];
  }
  return a;
}

PoleLimit pole_limit(const FlowTrajectory& traj, std::span<const double> t_i_fractions, double t,
                     const LOptions& options) {
  PoleLimit p;
  const double T = traj.extinction_time();
  for (double frac : t_i_fractions) {
    const auto r = minimize_L(traj, {0.0, frac * T}, 0.0, t, options);
    p.t_i.push_back(frac * T);
    p.l.push_back(reduced_distance(r));
  }
  p.extrapolated = richardson_sqrt(p.t_i, p.l, T);
  return p;
}

FLCheck f_le_l_check(const ConjugateSolution& sol, const ReducedDistanceField& field) {
  std::size_t b = field.base_thetas.size();
  for (std::size_t i = 0; i < field.base_thetas.size(); ++i) {
    if (std::abs(field.base_thetas[i] - sol.base_theta) < 1e-12) b = i;
  }
  if (b == field.base_thetas.size()) throw RangeError("solution base is not a field base");
  if (std::abs(sol.terminal_time() - field.t_i) > 1e-9 * field.t_i) {
    throw RangeError("solution and field have different t_i");
  }
  const auto l = field.l_base(b);
  FLCheck c{std::numeric_limits<double>::infinity(), 0.0, 0.0};
  for (std::size_t it = 0; it < field.n_t(); ++it) {
    const std::size_t k = sol.index_of(field.times[it]);
    const ScalarField f = f_of(sol, k, field.t_i);
    for (std::size_t iq = 0; iq < field.n_q(); ++iq) {
      const double slack = l[field.at(it, iq)] - sample(f.grid(), f.values(), field.thetas[iq]);
      if (slack < c.min_slack) c = {slack, field.thetas[iq], field.times[it]};
    }
  }
  return c;
}

}  // namespace krf
