#include "sbmai/ti.hpp"

#include <algorithm>
#include <cmath>

#include "sbmai/error.hpp"
#include "sbmai/local_fields.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/quadrature.hpp"
#include "sbmai/replica.hpp"
#include "sbmai/rng.hpp"

namespace sbmai {
namespace {

Estimate mean_and_stderr(const std::vector<double>& v) {
  const double m = pairwise_sum(v) / v.size();
  if (v.size() < 2) return {m, 0.0};
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return {m, std::sqrt(pairwise_sum(sq) / (v.size() - 1) / v.size())};
}

void check_grid(const std::vector<double>& t) {
  if (t.size() < 2 || t.front() != 0.0 || t.back() != 1.0) {
    fail(ErrorKind::kParameter, "t grid must run from 0 to 1 with both endpoints");
  }
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) fail(ErrorKind::kParameter, "t grid must be strictly increasing");
  }
}

}  // namespace

const char* to_string(TiIntegrand integrand) {
  return integrand == TiIntegrand::kEdge ? "edge" : "overlap";
}

std::vector<double> make_t_grid(int intervals, TiGridKind kind, double ratio) {
  if (intervals < 1) fail(ErrorKind::kParameter, "t grid needs at least one interval");
  std::vector<double> t(intervals + 1);
  if (kind == TiGridKind::kUniform || ratio == 1.0) {
    for (int k = 0; k <= intervals; ++k) t[k] = static_cast<double>(k) / intervals;
  } else {
    if (!(ratio > 0.0)) fail(ErrorKind::kParameter, "geometric ratio must be > 0");
    const double total = std::pow(ratio, intervals) - 1.0;
    for (int k = 0; k <= intervals; ++k) t[k] = (std::pow(ratio, k) - 1.0) / total;
  }
  t.front() = 0.0;
  t.back() = 1.0;
  return t;
}

double edge_slope(const PlantedInstance& inst, const ModelParams& params,
                  double t, const GibbsReport& brackets) {
  const int n = inst.n();
  if (brackets.pair_xx.size() != static_cast<std::size_t>(n) * n) {
    fail(ErrorKind::kParameter, "edge slope needs pair brackets");
  }
  if (t >= 1.0) return 0.0;
  const PairTable table = build_pair_table(params, t);
  const Alphabet a = params.alphabet();
  std::vector<double> per_node(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = i + 1; j < n; ++j) {
      double P[2][2];
      class_pair_marginals(brackets, a, i, j, P);
      const int g = inst.edges.has(i, j);
      double with = 0.0, without = 0.0;
      for (int ca = 0; ca < 2; ++ca) {
        for (int cb = 0; cb < 2; ++cb) {
          const double p = std::max(P[ca][cb], 0.0);
          with += p * std::exp(table.J[1][ca][cb] - table.J[g][ca][cb]);
          without += p * std::exp(table.J[0][ca][cb] - table.J[g][ca][cb]);
        }
      }
      // ln Z(G_ij = 1) - ln Z(G_ij = 0)
      s += inst.labels[i] * inst.labels[j] * (std::log(with) - std::log(without));
    }
    per_node[i] = s;
  }
  return params.delta / (2.0 * std::sqrt(1.0 - t)) * pairwise_sum(per_node) / n;
}

TiEstimate ti_mutual_information(const ModelParams& params,
                                 const std::vector<double>& t_grid,
                                 const TiConfig& config) {
  check_grid(t_grid);
  if (config.instances < 1) fail(ErrorKind::kParameter, "TI needs at least one instance");
  if (!config.exact_brackets) config.mcmc.validate();
  if (config.exact_brackets && params.n > kDefaultEnumerationCap) {
    fail(ErrorKind::kSize, "exact brackets need n <= enumeration cap");
  }
  const bool edge = config.integrand == TiIntegrand::kEdge;
  const std::size_t nodes = t_grid.size();
  const std::size_t m = config.instances;
  std::vector<double> q2(nodes * m), slope(nodes * m);
  std::vector<char> flagged(nodes * m, 0);

  parallel_for(nodes * m, [&](std::size_t job) {
    const std::size_t k = job / m, j = job % m;
    const double t = t_grid[k];
    const std::uint64_t node_key = derive_key(config.mcmc.seed, Stream::kInstance, k);
    const std::uint64_t key = derive_key(node_key, Stream::kInstance, j);
    const PlantedInstance inst = sample_instance(params, t, 0.0, key);
    GibbsReport g;
    if (config.exact_brackets) {
      g = gibbs_report(inst, params, t, 0.0, edge);
    } else {
      McmcConfig mc = config.mcmc;
      mc.seed = derive_key(key, Stream::kChain, 0);
      const McmcReport rep = mcmc_brackets(inst, params, t, 0.0, mc, edge);
      // the integrands are flip invariant; Q itself is not consulted
      flagged[job] = !(std::max(rep.r_hat_overlap_sq, rep.r_hat_energy) <= kRhatThreshold);
      g = rep.brackets;
    }
    q2[job] = g.Q2_mean;
    slope[job] = edge ? edge_slope(inst, params, t, g) : params.lambda_n / 4.0 * g.Q2_mean;
  });

  TiEstimate est;
  est.t_grid = t_grid;
  est.lambda_n = params.lambda_n;
  est.integrand = config.integrand;
  est.start = edge ? mi_closed_form_first_term(params) : params.lambda_n / 4.0;
  std::vector<double> means(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::vector<double> qk(q2.begin() + k * m, q2.begin() + (k + 1) * m);
    const std::vector<double> sk(slope.begin() + k * m, slope.begin() + (k + 1) * m);
    est.q2_at_t.push_back(mean_and_stderr(qk));
    est.slope_at_t.push_back(mean_and_stderr(sk));
    means[k] = est.slope_at_t.back().mean;
    if (std::any_of(flagged.begin() + k * m, flagged.begin() + (k + 1) * m,
                    [](char f) { return f != 0; })) {
      est.flagged_nodes.push_back(k);
    }
  }
  // trapezoid weights; nodes are independent so variances add
  double var = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double left = k > 0 ? t_grid[k] - t_grid[k - 1] : 0.0;
    const double right = k + 1 < nodes ? t_grid[k + 1] - t_grid[k] : 0.0;
    const double w = 0.5 * (left + right);
    var += w * w * est.slope_at_t[k].stderr_ * est.slope_at_t[k].stderr_;
  }
  est.mi_per_node = {est.start - trapezoid(t_grid, means), std::sqrt(var)};
  est.unreliable = !est.flagged_nodes.empty();
  if (params.r < tricritical_r() && params.lambda_n > 0.0) {
    est.branch_ambiguity = minimize_psi(params.lambda_n, params.r, 1e-9, {}, 512)
                               .local_minima.size() >= 2;
  }
  return est;
}

}  // namespace sbmai
