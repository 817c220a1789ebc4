#include "sbmai/replica.hpp"

#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <limits>

#include "sbmai/error.hpp"
#include "sbmai/model.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/quadrature.hpp"

namespace sbmai {
namespace {

constexpr double kHalfWindow = 10.0;  // standard deviations covered by panels

double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

void check_quad(const PsiQuadrature& quad) {
  if (quad.order < 3) fail(ErrorKind::kParameter, "quadrature order must be >= 3");
}

// E f(alpha Z + beta), Z standard normal, alpha >= 0.
template <class F>
double gauss_expect(F f, double alpha, double beta, const PsiQuadrature& quad) {
  if (alpha == 0.0) return f(beta);
  if (quad.rule == PsiRule::kHermite) {
    const GaussRule& gh = gauss_hermite(quad.order);
    double s = 0.0;
    for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
      s += gh.weights[k] * f(alpha * gh.nodes[k] + beta);
    }
    return s;
  }
  const GaussRule& gl = gauss_legendre((quad.order + 5) / 6);
  const double h = std::min(1.0, M_PI / alpha);
  const double z0 = -beta / alpha;
  const double k0 = std::floor((-kHalfWindow - z0) / h);
  const double k1 = std::ceil((kHalfWindow - z0) / h);
  double s = 0.0;
  for (double k = k0; k < k1; k += 1.0) {
    const double lo = z0 + k * h;
    double panel = 0.0;
    for (std::size_t j = 0; j < gl.nodes.size(); ++j) {
      const double z = lo + 0.5 * h * (gl.nodes[j] + 1.0);
      panel += gl.weights[j] * f(alpha * z + beta) * normal_pdf(z);
    }
    s += 0.5 * h * panel;
  }
  return s;
}

// ln sum_x P(x) exp(sqrt(q) z x + q X x - q x^2/2)
//   = lin + sqrt(q) z x2 + softplus(alpha z + beta)
struct ChannelTerms {
  double alpha, beta, lin;
};

ChannelTerms channel_terms(double q, const Alphabet& a, double X) {
  const double dx = a.x1 - a.x2;
  ChannelTerms c;
  c.alpha = std::sqrt(q) * dx;
  c.beta = q * X * dx - 0.5 * q * (a.x1 * a.x1 - a.x2 * a.x2) +
           std::log(a.r / (1.0 - a.r));
  c.lin = std::log(1.0 - a.r) + q * X * a.x2 - 0.5 * q * a.x2 * a.x2;
  return c;
}

void check_args(double q, double lambda) {
  if (!(q >= 0.0)) fail(ErrorKind::kDomain, "psi requires q >= 0");
  if (!(lambda > 0.0)) fail(ErrorKind::kParameter, "lambda must be > 0");
}

double golden_section(double a, double b, double tol, double lambda, double r,
                      const PsiQuadrature& quad, double& fmin) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = psi(c, lambda, r, quad), fd = psi(d, lambda, r, quad);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = psi(c, lambda, r, quad);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = psi(d, lambda, r, quad);
    }
  }
  if (fc <= fd) {
    fmin = fc;
    return c;
  }
  fmin = fd;
  return d;
}

}  // namespace

double tricritical_r() { return 0.5 * (1.0 - 1.0 / std::sqrt(3.0)); }

const char* to_string(TransitionOrder order) {
  switch (order) {
    case TransitionOrder::kNone: return "none";
    case TransitionOrder::kContinuous: return "continuous";
    case TransitionOrder::kDiscontinuous: return "discontinuous";
  }
  return "none";
}

double psi(double q, double lambda, double r, const PsiQuadrature& quad) {
  check_args(q, lambda);
  check_quad(quad);
  const Alphabet a = Alphabet::for_prior(r);
  if (q == 0.0) return lambda / 4.0;
  double e = 0.0;
  for (int cls = 0; cls < 2; ++cls) {
    const ChannelTerms c = channel_terms(q, a, a.value(cls));
    e += a.weight(cls) * (c.lin + gauss_expect(softplus, c.alpha, c.beta, quad));
  }
  return lambda / 4.0 + q * q / (4.0 * lambda) - e;
}

double channel_overlap(double q, double r, const PsiQuadrature& quad) {
  if (!(q >= 0.0)) fail(ErrorKind::kDomain, "channel SNR q must be >= 0");
  check_quad(quad);
  if (q == 0.0) return 0.0;
  const Alphabet a = Alphabet::for_prior(r);
  double m = 0.0;
  for (int cls = 0; cls < 2; ++cls) {
    const double X = a.value(cls);
    const ChannelTerms c = channel_terms(q, a, X);
    const double p1 = gauss_expect(logistic, c.alpha, c.beta, quad);
    m += a.weight(cls) * X * (a.x2 + (a.x1 - a.x2) * p1);
  }
  return m;
}

double psi_prime(double q, double lambda, double r, const PsiQuadrature& quad) {
  check_args(q, lambda);
  const double h = std::max(1e-5, 1e-5 * q);
  auto f = [&](double x) { return psi(x, lambda, r, quad); };
  if (q < 2.0 * h) {
    return (-25.0 * f(q) + 48.0 * f(q + h) - 36.0 * f(q + 2 * h) +
            16.0 * f(q + 3 * h) - 3.0 * f(q + 4 * h)) / (12.0 * h);
  }
  return (f(q - 2 * h) - 8.0 * f(q - h) + 8.0 * f(q + h) - f(q + 2 * h)) / (12.0 * h);
}

double psi_prime_analytic(double q, double lambda, double r,
                          const PsiQuadrature& quad) {
  check_args(q, lambda);
  return q / (2.0 * lambda) - 0.5 * channel_overlap(q, r, quad);
}

ReplicaSolution minimize_psi(double lambda, double r, double tol,
                             const PsiQuadrature& quad, int grid) {
  if (!(tol > 0.0)) fail(ErrorKind::kParameter, "tol must be > 0");
  if (grid < 3) fail(ErrorKind::kParameter, "grid must have >= 3 points");
  check_args(0.0, lambda);
  ReplicaSolution sol;
  sol.lambda = lambda;
  sol.r = r;
  sol.quad = quad;

  std::vector<double> qs(grid), vals(grid);
  for (int k = 0; k < grid; ++k) {
    qs[k] = lambda * k / (grid - 1);
    vals[k] = psi(qs[k], lambda, r, quad);
  }

  // Grid-level local minima; a run of equal values counts once.
  std::vector<int> idx;
  for (int k = 0; k < grid; ++k) {
    const bool left = k == 0 || vals[k] < vals[k - 1];
    const bool right = k == grid - 1 || vals[k] <= vals[k + 1];
    if (left && right) idx.push_back(k);
  }
  // Merge neighbours not separated by a real barrier.
  std::vector<int> kept;
  for (int k : idx) {
    if (!kept.empty()) {
      const int prev = kept.back();
      double barrier = vals[prev];
      for (int j = prev; j <= k; ++j) barrier = std::max(barrier, vals[j]);
      const double floor = std::max(vals[prev], vals[k]);
      if (barrier - floor <= 1e-13 * std::max(1.0, std::abs(floor))) {
        if (vals[k] < vals[prev]) kept.back() = k;
        continue;
      }
    }
    kept.push_back(k);
  }

  for (int k : kept) {
    const double a = qs[std::max(0, k - 1)];
    const double b = qs[std::min(grid - 1, k + 1)];
    double fmin = 0.0;
    double qm = golden_section(a, b, tol, lambda, r, quad, fmin);
    auto d = [&](double x) { return psi_prime_analytic(x, lambda, r, quad); };
    double lo = a;
    if (k == 0) {
      // psi'(0) = 0; the sign just above zero separates q = 0 from an
      // interior minimum
      lo = std::min(1e-9 * std::max(1.0, lambda), 0.5 * b);
      if (vals[0] <= fmin || d(lo) >= 0.0) {
        qm = 0.0;
        fmin = vals[0];
      }
    }
    if (k == grid - 1 && vals[grid - 1] <= fmin) {
      qm = lambda;
      fmin = vals[grid - 1];
    }
    // psi is flat at its minimum; the stationarity condition pins q further
    if (qm > 0.0 && qm < lambda) {
      const double da = d(lo), db = d(b);
      if (da < 0.0 && db > 0.0) {
        std::uintmax_t iters = 200;
        const auto root = boost::math::tools::toms748_solve(
            d, lo, b, da, db, boost::math::tools::eps_tolerance<double>(50), iters);
        const double qr = 0.5 * (root.first + root.second);
        const double fr = psi(qr, lambda, r, quad);
        if (fr <= fmin + 1e-14 * std::max(1.0, std::abs(fmin))) {
          qm = qr;
          fmin = std::min(fr, fmin);
        }
      }
    }
    sol.local_minima.push_back({qm, fmin});
  }

  const LocalMinimum* best = &sol.local_minima.front();
  for (const auto& m : sol.local_minima) {
    if (m.psi < best->psi) best = &m;
  }
  // tie-break: smaller psi, then smaller q (minima are in ascending q)
  for (const auto& m : sol.local_minima) {
    if (&m != best && std::abs(m.psi - best->psi) <= tol) sol.coexistence = true;
  }
  sol.q_star = best->q;
  sol.psi_star = best->psi;
  return sol;
}

StateEvolution state_evolution(double lambda, double r, double q0,
                               double damping, int max_iter, double tol,
                               const PsiQuadrature& quad) {
  check_args(0.0, lambda);
  if (!(q0 >= 0.0 && q0 <= lambda)) {
    fail(ErrorKind::kParameter, "q0 must lie in [0, lambda]");
  }
  if (!(damping > 0.0 && damping <= 1.0)) {
    fail(ErrorKind::kParameter, "damping must lie in (0, 1]");
  }
  StateEvolution se;
  double q = q0;
  se.iterates.push_back(q);
  for (int it = 0; it < max_iter; ++it) {
    const double next =
        (1.0 - damping) * q + damping * lambda * channel_overlap(q, r, quad);
    se.iterates.push_back(next);
    const double step = std::abs(next - q);
    q = next;
    if (step < tol) {
      se.converged = true;
      break;
    }
  }
  se.q_fixed = q;
  return se;
}

PhaseDiagram phase_diagram(const std::vector<double>& lambda_grid,
                           const std::vector<double>& r_grid,
                           const PhaseOptions& options) {
  if (lambda_grid.empty() || r_grid.empty()) {
    fail(ErrorKind::kParameter, "phase diagram grids must be non-empty");
  }
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()) ||
      !std::is_sorted(r_grid.begin(), r_grid.end())) {
    fail(ErrorKind::kParameter, "phase diagram grids must be sorted ascending");
  }
  const std::size_t nl = lambda_grid.size(), nr = r_grid.size();
  std::vector<ReplicaSolution> cells(nl * nr);
  parallel_for(nl * nr, [&](std::size_t c) {
    const std::size_t ir = c / nl, il = c % nl;
    cells[c] = minimize_psi(lambda_grid[il], r_grid[ir], options.tol,
                            options.quad, options.grid);
  });

  PhaseDiagram pd;
  pd.lambdas = lambda_grid;
  pd.rows.resize(nr);
  parallel_for(nr, [&](std::size_t ir) {
    PhaseRow& row = pd.rows[ir];
    row.r = r_grid[ir];
    row.sweep.assign(cells.begin() + ir * nl, cells.begin() + (ir + 1) * nl);
    bool onset = false;
    std::size_t first_rise = 0;
    for (std::size_t il = 0; il < nl; ++il) {
      const ReplicaSolution& s = row.sweep[il];
      if (!onset && s.q_star > options.onset) {
        onset = true;
        row.lambda_c = s.lambda;
      }
      if (il > 0) {
        const double jump = s.q_star - row.sweep[il - 1].q_star;
        if (jump > row.max_jump) {
          row.max_jump = jump;
          row.jump_lambda = s.lambda;
        }
        if (first_rise == 0 && row.sweep[il - 1].q_star == 0.0 && s.q_star > 0.0) {
          first_rise = il;
        }
      }
      if (s.local_minima.size() >= 2) row.metastable = true;
    }
    if (!onset) {
      row.order = TransitionOrder::kNone;
      return;
    }
    std::vector<std::size_t> steps;
    for (std::size_t il = 1; il < nl; ++il) {
      const bool crosses = row.sweep[il].lambda == row.lambda_c;
      if (il == first_rise || crosses || row.sweep[il].lambda == row.jump_lambda) {
        steps.push_back(il);
      }
    }
    for (std::size_t il : steps) {
      double a = lambda_grid[il - 1], b = lambda_grid[il];
      double qa = row.sweep[il - 1].q_star, qb = row.sweep[il].q_star;
      for (int k = 0; k < options.refine_steps; ++k) {
        const double m = 0.5 * (a + b);
        const ReplicaSolution s =
            minimize_psi(m, row.r, options.tol, options.quad, options.grid);
        if (s.local_minima.size() >= 2) row.metastable = true;
        if (std::abs(s.q_star - qa) >= std::abs(qb - s.q_star)) {
          b = m;
          qb = s.q_star;
        } else {
          a = m;
          qa = s.q_star;
        }
      }
      if (std::abs(qb - qa) > row.refined_jump) {
        row.refined_jump = std::abs(qb - qa);
        row.transition_lambda = 0.5 * (a + b);
      }
    }
    const bool jumps = row.refined_jump >= options.jump_tol * row.transition_lambda;
    row.order = (row.metastable || jumps) ? TransitionOrder::kDiscontinuous
                                          : TransitionOrder::kContinuous;
  });

  pd.r_star = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t ir = 0; ir + 1 < nr; ++ir) {
    if (pd.rows[ir].order != TransitionOrder::kDiscontinuous) continue;
    bool rest_continuous = true;
    for (std::size_t j = ir + 1; j < nr; ++j) {
      rest_continuous &= pd.rows[j].order == TransitionOrder::kContinuous;
    }
    if (rest_continuous) {
      pd.r_star = 0.5 * (pd.rows[ir].r + pd.rows[ir + 1].r);
      pd.r_star_found = true;
      break;
    }
  }
  return pd;
}

}  // namespace sbmai
