#include "sbmai/ibp.hpp"

#include <algorithm>
#include <cmath>

#include "sbmai/concentration.hpp"
#include "sbmai/error.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/local_fields.hpp"
#include "sbmai/quadrature.hpp"
#include "sbmai/rng.hpp"

namespace sbmai {
namespace {

// g(0), g'(0), and the remainders rho1(u) = g(u) - g(0) - g'(0) u and
// rho2(u) = g'(u) - g'(0), written without cancellation near u = 0.
struct Taylor {
  double g0 = 0.0;
  double d0 = 0.0;
  double rho1 = 0.0;
  double rho2 = 0.0;
};

Taylor expand(TestFunction g, double u) {
  switch (g) {
    case TestFunction::kCos: {
      const double s = std::sin(0.5 * u);
      return {1.0, 0.0, -2.0 * s * s, -std::sin(u)};
    }
    case TestFunction::kSin: {
      const double s = std::sin(0.5 * u);
      return {0.0, 1.0, std::sin(u) - u, -2.0 * s * s};
    }
    case TestFunction::kTanh: {
      const double th = std::tanh(u);
      return {0.0, 1.0, th - u, -th * th};
    }
    case TestFunction::kLogistic: {
      const double th = std::tanh(0.5 * u);
      return {0.5, 0.25, 0.5 * th - 0.25 * u, -0.25 * th * th};
    }
    case TestFunction::kBump: {
      const double e = std::exp(-0.5 * u * u);
      return {1.0, 0.0, std::expm1(-0.5 * u * u), -u * e};
    }
    case TestFunction::kLinear:
      return {1.0, 2.0, 0.0, 0.0};
  }
  return {};
}

// E f(U) for the law.
template <class F>
double expect(const ULaw& law, F f) {
  switch (law.kind) {
    case LawKind::kBernoulli:
      return (1.0 - law.p) * f(0.0) + law.p * f(1.0);
    case LawKind::kShiftedBernoulli:
      return (1.0 - law.p) * f(law.shift) + law.p * f(1.0 + law.shift);
    case LawKind::kGaussian: {
      const GaussRule& gh = gauss_hermite(61);
      double s = 0.0;
      for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
        s += gh.weights[k] * f(law.shift + law.sigma * gh.nodes[k]);
      }
      return s;
    }
  }
  return 0.0;
}

void check_law(const ULaw& law) {
  if (law.kind != LawKind::kGaussian && !(law.p >= 0.0 && law.p <= 1.0)) {
    fail(ErrorKind::kParameter, "Bernoulli parameter must lie in [0, 1]");
  }
  if (law.kind == LawKind::kGaussian && !(law.sigma >= 0.0)) {
    fail(ErrorKind::kParameter, "Gaussian sigma must be >= 0");
  }
  if (!std::isfinite(law.shift)) fail(ErrorKind::kParameter, "shift must be finite");
}

}  // namespace

const char* to_string(TestFunction g) {
  switch (g) {
    case TestFunction::kCos: return "cos";
    case TestFunction::kSin: return "sin";
    case TestFunction::kTanh: return "tanh";
    case TestFunction::kLogistic: return "logistic";
    case TestFunction::kBump: return "bump";
    case TestFunction::kLinear: return "linear";
  }
  return "cos";
}

TestFunction parse_test_function(const std::string& name) {
  for (TestFunction g : {TestFunction::kCos, TestFunction::kSin, TestFunction::kTanh,
                         TestFunction::kLogistic, TestFunction::kBump, TestFunction::kLinear}) {
    if (name == to_string(g)) return g;
  }
  fail(ErrorKind::kParameter, "unknown test function '" + name + "'");
}

const char* to_string(LawKind kind) {
  switch (kind) {
    case LawKind::kBernoulli: return "bernoulli";
    case LawKind::kShiftedBernoulli: return "shifted-bernoulli";
    case LawKind::kGaussian: return "gaussian";
  }
  return "bernoulli";
}

DerivativeBounds derivative_bounds(TestFunction g) {
  DerivativeBounds b;
  // tanh^(k) as polynomials in v = tanh: 1 - v^2, -2v(1 - v^2),
  // -2 + 8v^2 - 6v^4, 16v - 40v^3 + 24v^5
  const double v2 = (120.0 - std::sqrt(6720.0)) / 240.0;
  const double v = std::sqrt(v2);
  const double tanh4 = 16.0 * v - 40.0 * v * v2 + 24.0 * v * v2 * v2;
  const double tanh2 = 4.0 / (3.0 * std::sqrt(3.0));
  switch (g) {
    case TestFunction::kCos:
    case TestFunction::kSin:
      b.c[1] = b.c[2] = b.c[3] = b.c[4] = 1.0;
      break;
    case TestFunction::kTanh:
      b.c[1] = 1.0;
      b.c[2] = tanh2;
      b.c[3] = 2.0;
      b.c[4] = tanh4;
      break;
    case TestFunction::kLogistic:
      // logistic(u) = (1 + tanh(u / 2)) / 2
      b.c[1] = 0.25;
      b.c[2] = tanh2 / 8.0;
      b.c[3] = 2.0 / 16.0;
      b.c[4] = tanh4 / 32.0;
      break;
    case TestFunction::kBump: {
      // Hermite polynomials times exp(-u^2 / 2); the third has two extremal pairs
      auto he3 = [](double u2) {
        const double u = std::sqrt(u2);
        return std::abs(u * u2 - 3.0 * u) * std::exp(-0.5 * u2);
      };
      b.c[1] = std::exp(-0.5);
      b.c[2] = 1.0;
      b.c[3] = std::max(he3(3.0 - std::sqrt(6.0)), he3(3.0 + std::sqrt(6.0)));
      b.c[4] = 3.0;
      break;
    }
    case TestFunction::kLinear:
      b.c[1] = 2.0;
      break;
  }
  return b;
}

IbpCheck approx_ibp_check(TestFunction g, const ULaw& law) {
  check_law(law);
  const double m1 = expect(law, [](double u) { return u; });
  const double m2 = expect(law, [](double u) { return u * u; });
  const double m3 = expect(law, [](double u) { return u * u * u; });
  const double m4 = expect(law, [](double u) { return u * u * u * u; });
  const double u_rho1 = expect(law, [&](double u) { return u * expand(g, u).rho1; });
  const double rho2 = expect(law, [&](double u) { return expand(g, u).rho2; });

  IbpCheck c;
  c.g = g;
  c.law = law;
  c.residual = std::abs(u_rho1 - rho2 * m2);
  const DerivativeBounds b = derivative_bounds(g);
  c.bound = b.c[2] * (0.5 * std::abs(m3) + m2 * std::abs(m1)) +
            b.c[3] * (m4 / 24.0 + 0.5 * m2 * m2) + b.c[4] * std::abs(m3) * m2 / 6.0;
  c.pass = c.residual <= c.bound + 1e-12;
  return c;
}

std::vector<IbpCheck> builtin_ibp_checks() {
  const ULaw laws[3] = {
      {LawKind::kBernoulli, 0.3, 0.0, 0.0},
      {LawKind::kShiftedBernoulli, 0.2, -0.4, 0.0},
      {LawKind::kGaussian, 0.0, 0.15, 0.4},
  };
  std::vector<IbpCheck> out;
  for (TestFunction g : {TestFunction::kCos, TestFunction::kTanh, TestFunction::kLogistic,
                         TestFunction::kBump}) {
    for (const ULaw& law : laws) out.push_back(approx_ibp_check(g, law));
  }
  return out;
}

EdgeIbp gibbs_edge_ibp_residual(const PlantedInstance& inst, const ModelParams& params,
                                double t, int i, int j, double fd_step) {
  const int n = inst.n();
  if (i == j || i < 0 || j < 0 || i >= n || j >= n) {
    fail(ErrorKind::kParameter, "pair indices must be distinct and in range");
  }
  if (i > j) std::swap(i, j);
  if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::kParameter, "t must lie in [0, 1]");
  if (!(fd_step > 0.0)) fail(ErrorKind::kParameter, "finite-difference step must be > 0");

  PlantedInstance off = inst;
  off.edges.set(i, j, false);
  const GibbsReport g0 = gibbs_report(off, params, t, inst.R, true);
  const Alphabet a = params.alphabet();
  double P[2][2];
  class_pair_marginals(g0, a, i, j, P);
  const PairTable table = build_pair_table(params, t);

  // ln Z(g) - ln Z(0) with G_ij relaxed to g
  auto phi = [&](double g) {
    double s = 0.0, norm = 0.0;
    for (int ca = 0; ca < 2; ++ca) {
      for (int cb = 0; cb < 2; ++cb) {
        const double d = table.J[1][ca][cb] - table.J[0][ca][cb];
        const double w = std::max(P[ca][cb], 0.0);
        s += w * std::exp(g * d);
        norm += w;
      }
    }
    return std::log(s) - std::log(norm);
  };
  auto dphi = [&](double g) { return (phi(g + fd_step) - phi(g - fd_step)) / (2.0 * fd_step); };

  const double pi = params.edge_prob(inst.classes[i], inst.classes[j], t);
  const double F0 = g0.F;
  const double F1 = F0 - phi(1.0) / n;
  const double dF = -(pi * dphi(1.0) + (1.0 - pi) * dphi(0.0)) / n;

  EdgeIbp e;
  e.lhs = pi * F1;
  e.rhs = dF * pi + F0 * pi;
  // same difference without the common F0 term
  e.error = pi * std::abs(-phi(1.0) / n - dF);
  e.scale = std::sqrt(1.0 - t) * params.lambda_n /
            (static_cast<double>(n) * n * (1.0 - params.p_bar));
  return e;
}

EdgeIbpSweep edge_ibp_delta_sweep(int n, double r, double p_bar, double delta0,
                                  int halvings, double t, int instances,
                                  std::uint64_t seed) {
  if (halvings < 1 || instances < 1) {
    fail(ErrorKind::kParameter, "sweep needs halvings >= 1 and instances >= 1");
  }
  EdgeIbpSweep sw;
  double delta = delta0;
  for (int h = 0; h <= halvings; ++h, delta *= 0.5) {
    const ModelParams params = params_from_delta(n, r, p_bar, delta);
    double sum = 0.0, worst = 0.0;
    int count = 0;
    for (int m = 0; m < instances; ++m) {
      const PlantedInstance inst =
          sample_instance(params, t, 0.0, derive_key(seed, Stream::kInstance, m));
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const EdgeIbp e = gibbs_edge_ibp_residual(inst, params, t, i, j);
          sum += e.error;
          worst = std::max(worst, e.scale > 0.0 ? e.error / e.scale : 0.0);
          ++count;
        }
      }
    }
    sw.deltas.push_back(delta);
    sw.mean_error.push_back(sum / count);
    sw.max_ratio.push_back(worst);
  }
  sw.slope = log_log_slope(sw.deltas, sw.mean_error);
  return sw;
}

}  // namespace sbmai
