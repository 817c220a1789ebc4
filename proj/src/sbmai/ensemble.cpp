#include "sbmai/ensemble.hpp"

#include <cmath>

#include "sbmai/error.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/quadrature.hpp"

namespace sbmai {
namespace {

void add_into(EnsembleAverages& a, const EnsembleAverages& b) {
  a.mass += b.mass;
  for (std::size_t i = 0; i < a.truth_bracket.size(); ++i) {
    a.truth_bracket[i] += b.truth_bracket[i];
    a.bracket_sq[i] += b.bracket_sq[i];
  }
  for (std::size_t i = 0; i < a.pair_truth_bracket.size(); ++i) {
    a.pair_truth_bracket[i] += b.pair_truth_bracket[i];
    a.pair_bracket_sq[i] += b.pair_bracket_sq[i];
  }
  a.Q += b.Q;
  a.Q2 += b.Q2;
  a.Q_sq += b.Q_sq;
  a.L += b.L;
  a.L2 += b.L2;
  a.log_Z += b.log_Z;
  a.dH_dec += b.dH_dec;
  a.dH_sbm += b.dH_sbm;
}

EnsembleAverages zeroed(int n) {
  EnsembleAverages e;
  e.n = n;
  e.truth_bracket.assign(n, 0.0);
  e.bracket_sq.assign(n, 0.0);
  e.pair_truth_bracket.assign(static_cast<std::size_t>(n) * n, 0.0);
  e.pair_bracket_sq.assign(static_cast<std::size_t>(n) * n, 0.0);
  return e;
}

}  // namespace

EnsembleAverages enumerate_ensemble(const ModelParams& params, double t,
                                    double R, int gh_order) {
  const int n = params.n;
  if (n < 1 || n > 5 || (R > 0.0 && n > 4)) {
    fail(ErrorKind::kSize,
         "ensemble enumeration needs n <= 5 (n <= 4 with a side channel)");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorKind::kParameter, "interpolation time t must lie in [0, 1]");
  }
  if (!(R >= 0.0)) fail(ErrorKind::kParameter, "side-channel SNR R must be >= 0");

  const Alphabet a = params.alphabet();
  const double x[2] = {a.x1, a.x2};
  const double dx = a.x2 - a.x1;
  const double xs = a.x1 + a.x2, xp = a.x1 * a.x2;  // x^2 = xs x - xp
  const double sr = std::sqrt(R);
  const double s = std::sqrt(1.0 - t);
  const int m = n * (n - 1) / 2;
  const int configs = 1 << n;
  const std::size_t graphs = std::size_t{1} << m;

  const GaussRule* rule = R > 0.0 ? &gauss_hermite(gh_order) : nullptr;
  const int K = R > 0.0 ? gh_order : 1;
  std::size_t grid = 1;
  for (int i = 0; i < n; ++i) grid *= static_cast<std::size_t>(K);

  // d H_SBM;t / dt per pair, indexed [g][a][b]; zero at t = 1
  double dh[2][2][2] = {};
  if (t < 1.0) {
    for (int ca = 0; ca < 2; ++ca) {
      for (int cb = 0; cb < 2; ++cb) {
        const double du = params.delta * x[ca] * x[cb];
        dh[1][ca][cb] = du / (2.0 * s) / (params.p_bar + s * du);
        dh[0][ca][cb] = -du / (2.0 * s) / (1.0 - params.p_bar - s * du);
      }
    }
  }

  std::vector<double> prior(configs);
  for (int c = 0; c < configs; ++c) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= a.weight((c >> i) & 1);
    prior[c] = p;
  }

  std::vector<EnsembleAverages> parts(graphs);
  parallel_for(graphs, [&](std::size_t g) {
    EnsembleAverages acc = zeroed(n);
    PlantedInstance inst;
    inst.classes.assign(n, 0);
    inst.labels.assign(n, a.x1);
    inst.edges = EdgeSet(n);
    {
      int k = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++k) {
          if ((g >> k) & 1U) inst.edges.set(i, j, true);
        }
      }
    }
    if (R > 0.0) inst.y.assign(n, 0.0);
    inst.t = t;
    inst.R = R;

    // P_t(G | X) for every label configuration
    std::vector<double> lik(configs);
    for (int c = 0; c < configs; ++c) {
      double p = 1.0;
      int k = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++k) {
          const double q = params.edge_prob((c >> i) & 1, (c >> j) & 1, t);
          p *= ((g >> k) & 1U) ? q : 1.0 - q;
        }
      }
      lik[c] = p;
    }

    std::vector<double> p1(n), pij(static_cast<std::size_t>(n) * n);
    std::vector<double> X(n), beta(n), wk(n);
    for (std::size_t point = 0; point < grid; ++point) {
      double node_weight = 1.0;
      if (R > 0.0) {
        std::size_t rest = point;
        for (int i = 0; i < n; ++i) {
          const int k = static_cast<int>(rest % K);
          rest /= K;
          inst.y[i] = rule->nodes[k];
          wk[i] = rule->weights[k];
          node_weight *= wk[i];
        }
      }
      const GibbsReport rep = gibbs_report(inst, params, t, R, true);
      for (int i = 0; i < n; ++i) p1[i] = (rep.mean_x[i] - a.x1) / dx;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const std::size_t ij = static_cast<std::size_t>(i) * n + j;
          pij[ij] = i == j ? p1[i]
                           : (rep.pair_xx[ij] - a.x1 * a.x1 -
                              a.x1 * dx * (p1[i] + p1[j])) / (dx * dx);
        }
      }

      double sbm = 0.0;
      {
        int k = 0;
        for (int i = 0; i < n; ++i) {
          for (int j = i + 1; j < n; ++j, ++k) {
            const int gij = static_cast<int>((g >> k) & 1U);
            const double pr11 = pij[static_cast<std::size_t>(i) * n + j];
            const double pr10 = p1[i] - pr11;
            const double pr01 = p1[j] - pr11;
            const double pr00 = 1.0 - p1[i] - p1[j] + pr11;
            sbm += pr00 * dh[gij][0][0] + pr01 * dh[gij][0][1] +
                   pr10 * dh[gij][1][0] + pr11 * dh[gij][1][1];
          }
        }
      }
      double dec = 0.0;
      if (R > 0.0) {
        for (int i = 0; i < n; ++i) {
          const double x2m = rep.pair_xx[static_cast<std::size_t>(i) * n + i];
          dec += inst.y[i] * rep.mean_x[i] / (2.0 * sr) - 0.5 * x2m;
        }
      }

      for (int c = 0; c < configs; ++c) {
        double w = prior[c] * lik[c] * node_weight;
        if (w == 0.0) continue;
        for (int i = 0; i < n; ++i) {
          X[i] = x[(c >> i) & 1];
          if (R > 0.0) w *= std::exp(sr * X[i] * inst.y[i] - 0.5 * R * X[i] * X[i]);
        }
        acc.mass += w;
        double q = 0.0, q2 = 0.0, l = 0.0, l2 = 0.0;
        for (int i = 0; i < n; ++i) {
          const double mi = rep.mean_x[i];
          acc.truth_bracket[i] += w * X[i] * mi;
          acc.bracket_sq[i] += w * mi * mi;
          q += X[i] * mi;
          beta[i] = 0.5 * xs - X[i];
          if (R > 0.0) beta[i] -= (inst.y[i] - sr * X[i]) / (2.0 * sr);
          l += beta[i] * mi - 0.5 * xp;
        }
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i) * n + j;
            const double v = rep.pair_xx[ij];
            acc.pair_truth_bracket[ij] += w * X[i] * X[j] * v;
            acc.pair_bracket_sq[ij] += w * v * v;
            q2 += X[i] * X[j] * v;
            l2 += beta[i] * beta[j] * v - 0.5 * xp * beta[i] * rep.mean_x[i] -
                  0.5 * xp * beta[j] * rep.mean_x[j] + 0.25 * xp * xp;
          }
        }
        q /= n;
        l /= n;
        q2 /= static_cast<double>(n) * n;
        l2 /= static_cast<double>(n) * n;
        acc.Q += w * q;
        acc.Q2 += w * q2;
        acc.Q_sq += w * q * q;
        acc.L += w * l;
        acc.L2 += w * l2;
        acc.log_Z += w * rep.log_Z;
        acc.dH_dec += w * dec / n;
        acc.dH_sbm += w * sbm / n;
      }
    }
    parts[g] = std::move(acc);
  });

  EnsembleAverages out = zeroed(n);
  for (const auto& p : parts) add_into(out, p);
  const double inv = 1.0 / out.mass;
  for (auto& v : out.truth_bracket) v *= inv;
  for (auto& v : out.bracket_sq) v *= inv;
  for (auto& v : out.pair_truth_bracket) v *= inv;
  for (auto& v : out.pair_bracket_sq) v *= inv;
  out.Q *= inv;
  out.Q2 *= inv;
  out.Q_sq *= inv;
  out.L *= inv;
  out.L2 *= inv;
  out.log_Z *= inv;
  out.dH_dec *= inv;
  out.dH_sbm *= inv;
  out.t = t;
  out.R = R;
  return out;
}

}  // namespace sbmai
