#include "sbmai/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "sbmai/error.hpp"
#include "sbmai/local_fields.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/quadrature.hpp"
#include "sbmai/replica.hpp"
#include "sbmai/rng.hpp"
#include "sbmai/ti.hpp"

namespace sbmai {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Estimate mean_and_stderr(const std::vector<double>& v) {
  const double m = pairwise_sum(v) / v.size();
  if (v.size() < 2) return {m, 0.0};
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  return {m, std::sqrt(pairwise_sum(sq) / (v.size() - 1) / v.size())};
}

// (1/n) <d H / d t> for one instance; the side-channel part moves R at rate q.
double dH_dt(const PlantedInstance& inst, const ModelParams& params, double t,
             double R, double q, const GibbsReport& g) {
  const int n = inst.n();
  const Alphabet a = params.alphabet();
  double dec = 0.0;
  if (q != 0.0) {
    if (!(R > 0.0)) return kNaN;
    const double inv = 1.0 / (2.0 * std::sqrt(R));
    for (int i = 0; i < n; ++i) {
      const double xx = g.pair_xx[static_cast<std::size_t>(i) * n + i];
      dec -= q * (inst.y[i] * g.mean_x[i] * inv - 0.5 * xx);
    }
  }
  if (t >= 1.0) return kNaN;
  const double s = std::sqrt(1.0 - t);
  const double d = params.delta, p = params.p_bar;
  double graph = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double P[2][2];
      class_pair_marginals(g, a, i, j, P);
      const bool edge = inst.edges.has(i, j);
      for (int ca = 0; ca < 2; ++ca) {
        for (int cb = 0; cb < 2; ++cb) {
          const double u = a.value(ca) * a.value(cb);
          const double k = edge ? 1.0 / (p + s * d * u) : -1.0 / (1.0 - p - s * d * u);
          graph += P[ca][cb] * d * u / (2.0 * s) * k;
        }
      }
    }
  }
  return (dec + graph) / n;
}

// Instance averages at (t, R). Instance j uses key derive_key(node_key, j).
NodeStats node_stats(const ModelParams& params, double t, double R, double q,
                     std::uint64_t node_key, const PathConfig& config) {
  const std::size_t m = config.instances;
  std::vector<double> ov(m), ov2(m), d1(m, kNaN), d3(m, kNaN);
  const bool pairs = config.diagnostics;
  parallel_for(m, [&](std::size_t j) {
    const std::uint64_t key = derive_key(node_key, Stream::kInstance, j);
    const PlantedInstance inst = sample_instance_with_noise(params, t, R, key);
    GibbsReport g;
    if (config.estimator == DriftEstimator::kExact) {
      g = gibbs_report(inst, params, t, R, pairs);
    } else {
      McmcConfig mc = config.mcmc;
      mc.seed = derive_key(key, Stream::kChain, 0);
      g = mcmc_brackets(inst, params, t, R, mc, pairs).brackets;
    }
    ov[j] = g.Q_mean;
    ov2[j] = g.Q2_mean;
    if (pairs) {
      d1[j] = edge_slope(inst, params, t, g);
      d3[j] = dH_dt(inst, params, t, R, q, g);
    }
  });
  NodeStats s;
  s.overlap = mean_and_stderr(ov);
  s.overlap_sq = mean_and_stderr(ov2);
  // delta method for E<Q^2> - (E<Q>)^2
  std::vector<double> lin(m);
  for (std::size_t j = 0; j < m; ++j) lin[j] = ov2[j] - 2.0 * s.overlap.mean * ov[j];
  s.fluctuation = {s.overlap_sq.mean - s.overlap.mean * s.overlap.mean,
                   mean_and_stderr(lin).stderr_};
  s.d1 = pairs ? mean_and_stderr(d1) : Estimate{kNaN, kNaN};
  s.d3 = pairs && !std::isnan(d3[0]) ? mean_and_stderr(d3) : Estimate{kNaN, kNaN};
  return s;
}

void check_path_config(const ModelParams& params, double epsilon, const PathConfig& c) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorKind::kParameter, "epsilon must be finite and >= 0");
  }
  if (c.steps < 1) fail(ErrorKind::kParameter, "path needs at least one Euler step");
  if (c.instances < 2) fail(ErrorKind::kParameter, "path needs at least 2 instances per node");
  if (c.estimator == DriftEstimator::kExact && params.n > kDefaultEnumerationCap) {
    fail(ErrorKind::kSize, "exact drift needs n <= enumeration cap; use the mcmc estimator");
  }
  if (c.estimator == DriftEstimator::kMcmc) c.mcmc.validate();
}

// Key root of the independent batch used for the cancellation check.
std::uint64_t check_root(std::uint64_t seed) { return derive_key(seed, Stream::kChain, 1); }

}  // namespace

const char* to_string(DriftEstimator estimator) {
  return estimator == DriftEstimator::kMcmc ? "mcmc" : "exact";
}

DriftEstimator parse_drift_estimator(const std::string& name) {
  if (name == "exact") return DriftEstimator::kExact;
  if (name == "mcmc") return DriftEstimator::kMcmc;
  fail(ErrorKind::kParameter, "unknown estimator '" + name + "'");
}

const char* to_string(QPathKind kind) {
  switch (kind) {
    case QPathKind::kZero: return "zero";
    case QPathKind::kSolved: return "solved";
    case QPathKind::kConstant: return "constant";
  }
  return "solved";
}

QPathKind parse_q_path(const std::string& name) {
  if (name == "zero") return QPathKind::kZero;
  if (name == "solved") return QPathKind::kSolved;
  if (name == "constant") return QPathKind::kConstant;
  fail(ErrorKind::kParameter, "unknown q path '" + name + "'");
}

InterpolationPath follow_path(const ModelParams& params, double epsilon,
                              QPathKind kind, double q_const,
                              const PathConfig& config, double t_end) {
  check_path_config(params, epsilon, config);
  if (!(t_end > 0.0 && t_end <= 1.0)) fail(ErrorKind::kParameter, "t_end must lie in (0, 1]");
  if (kind == QPathKind::kConstant && !(q_const >= 0.0)) {
    fail(ErrorKind::kDomain, "constant q must be >= 0");
  }
  const int K = config.steps;
  const int steps = std::max(1, static_cast<int>(std::lround(t_end * K)));
  const double dt = 1.0 / K;

  InterpolationPath path;
  path.params = params;
  path.epsilon = epsilon;
  path.kind = kind;
  path.estimator = config.estimator;
  auto key_of = [&](int k) {
    return derive_key(config.seed, Stream::kInstance, config.freeze_disorder ? 0 : k);
  };
  double drift = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k == K ? 1.0 : k * dt;
    const double R = epsilon + drift;
    double q = kind == QPathKind::kConstant ? q_const : 0.0;
    NodeStats st;
    if (kind == QPathKind::kSolved) {
      // the rate depends on this node's overlap; dH/dt needs the rate, so a
      // diagnostics run makes a second pass with it known
      PathConfig plain = config;
      plain.diagnostics = false;
      const std::uint64_t node_key = key_of(k);
      st = node_stats(params, t, R, 0.0, node_key, config.diagnostics ? plain : config);
      const double raw = params.lambda_n * st.overlap.mean;
      if (st.overlap.mean < -3.0 * st.overlap.stderr_) path.noise_warning = true;
      if (raw < 0.0) ++path.clamped;
      q = std::max(raw, 0.0);
      if (config.diagnostics) st = node_stats(params, t, R, q, node_key, config);
    } else {
      st = node_stats(params, t, R, q, key_of(k), config);
    }
    path.t_grid.push_back(t);
    path.R_values.push_back(R);
    path.drift.push_back(drift);
    path.q_values.push_back(q);
    path.nodes.push_back(st);
    if (k < steps) drift += dt * q;
  }
  return path;
}

InterpolationPath solve_R_star(const ModelParams& params, double epsilon,
                               const PathConfig& config) {
  return follow_path(params, epsilon, QPathKind::kSolved, 0.0, config);
}

LiouvilleReport liouville_monotonicity(const ModelParams& params, double epsilon,
                                       double d_eps, const PathConfig& config) {
  if (!(d_eps > 0.0)) d_eps = epsilon / 10.0;
  if (!(d_eps > 0.0)) fail(ErrorKind::kParameter, "d_eps must be > 0 (epsilon = 0 needs it explicit)");
  PathConfig plain = config;
  plain.diagnostics = false;
  const InterpolationPath lo = solve_R_star(params, epsilon, plain);
  const InterpolationPath hi = solve_R_star(params, epsilon + d_eps, plain);
  LiouvilleReport rep;
  rep.d_eps = d_eps;
  rep.t_grid = lo.t_grid;
  for (std::size_t k = 0; k < lo.t_grid.size(); ++k) {
    rep.slope.push_back(1.0 + (hi.drift[k] - lo.drift[k]) / d_eps);
  }
  rep.min_slope = *std::min_element(rep.slope.begin(), rep.slope.end());
  return rep;
}

FreeEnergyShift free_energy_shift(const ModelParams& params, double epsilon,
                                  std::size_t instances, std::uint64_t seed,
                                  int order) {
  if (!(epsilon >= 0.0)) fail(ErrorKind::kParameter, "epsilon must be >= 0");
  if (instances < 2) fail(ErrorKind::kParameter, "need at least 2 instances");
  if (params.n > kDefaultEnumerationCap) {
    fail(ErrorKind::kSize, "free-energy shift needs n <= enumeration cap");
  }
  const GaussRule& gl = gauss_legendre(order);
  std::vector<double> direct(instances), via(instances), diff(instances);
  parallel_for(instances, [&](std::size_t j) {
    PlantedInstance inst =
        sample_instance_with_noise(params, 0.0, 0.0, derive_key(seed, Stream::kInstance, j));
    const int n = inst.n();
    const double f0 = -log_partition(inst, params, 0.0, 0.0) / n;
    double fe = f0, integral = 0.0;
    if (epsilon > 0.0) {
      set_side_snr(inst, epsilon);
      fe = -log_partition(inst, params, 0.0, epsilon) / n;
      for (std::size_t m = 0; m < gl.nodes.size(); ++m) {
        const double e = 0.5 * epsilon * (gl.nodes[m] + 1.0);
        set_side_snr(inst, e);
        integral += gl.weights[m] * gibbs_report(inst, params, 0.0, e).Q_mean;
      }
      // weights sum to 2 on [-1, 1]: (eps / 2) * sum, then the factor 1/2
      integral *= 0.25 * epsilon;
    }
    direct[j] = f0 - fe;
    via[j] = integral;
    diff[j] = direct[j] - via[j];
  });
  return {mean_and_stderr(direct), mean_and_stderr(via), mean_and_stderr(diff)};
}

SumRuleReport sum_rule_audit(const ModelParams& params, double epsilon,
                             const SumRuleConfig& config) {
  if (!(params.lambda_n > 0.0)) {
    fail(ErrorKind::kParameter, "sum-rule audit needs lambda_n > 0");
  }
  PathConfig pc = config.path;
  pc.diagnostics = true;
  const InterpolationPath path = follow_path(params, epsilon, config.kind, config.q_const, pc);
  const double lam = params.lambda_n;
  const int K = pc.steps;
  const double dt = 1.0 / K;

  SumRuleReport rep;
  rep.params = params;
  rep.epsilon = epsilon;
  rep.kind = config.kind;
  rep.t_grid = path.t_grid;
  rep.q_values = path.q_values;
  rep.R_values = path.R_values;
  rep.R_end = path.R_values.back();
  rep.psi_term = psi(rep.R_end, lam, params.r);

  double int_q = 0.0, int_q2 = 0.0;
  for (int k = 0; k < K; ++k) {
    int_q += dt * path.q_values[k];
    int_q2 += dt * path.q_values[k] * path.q_values[k];
  }
  rep.r1 = std::max(0.0, int_q2 - int_q * int_q) / (4.0 * lam);

  // each interval carries its own rate q_k; trapezoid between its end nodes
  auto r2 = [&](std::size_t node, double q) {
    const NodeStats& s = path.nodes[node];
    return lam * lam * s.overlap_sq.mean - 2.0 * lam * q * s.overlap.mean + q * q;
  };
  auto r2_se = [&](std::size_t node, double q) {
    const NodeStats& s = path.nodes[node];
    return lam * lam * s.overlap_sq.stderr_ + 2.0 * lam * q * s.overlap.stderr_;
  };
  double int_r2 = 0.0, var_r2 = 0.0;
  double int_d = 0.0, var_d = 0.0;
  for (int k = 0; k < K; ++k) {
    const double q = path.q_values[k];
    int_r2 += 0.5 * dt * (r2(k, q) + r2(k + 1, q));
    // neighbouring intervals share a node; add the stderrs linearly there
    var_r2 += std::pow(0.5 * dt * r2_se(k, q), 2) + std::pow(0.5 * dt * r2_se(k + 1, q), 2);
    for (int e = 0; e < 2; ++e) {
      const NodeStats& s = path.nodes[k + e];
      int_d += 0.5 * dt * (s.d1.mean - 0.5 * q * s.overlap.mean);
      var_d += std::pow(0.5 * dt * (s.d1.stderr_ + 0.5 * q * s.overlap.stderr_), 2);
    }
  }
  for (std::size_t k = 0; k < path.nodes.size(); ++k) {
    const double q = path.q_values[k];
    const NodeStats& s = path.nodes[k];
    rep.r2_at_nodes.push_back(r2(k, q));
    rep.d1_at_nodes.push_back(s.d1.mean);
    rep.d1_leading_at_nodes.push_back(0.25 * lam * s.overlap_sq.mean);
    rep.d2_at_nodes.push_back(-0.5 * q * s.overlap.mean);
    rep.d3_at_nodes.push_back(s.d3.mean);
    rep.d3_stderr.push_back(s.d3.stderr_);
  }
  rep.r2_integral = int_r2 / (4.0 * lam);

  const std::uint64_t shift_seed = derive_key(pc.seed, Stream::kChain, 2);
  rep.shift = free_energy_shift(params, epsilon, pc.instances, shift_seed, config.epsilon_order);
  rep.r3_overlap_integral = rep.shift.via_overlap.mean;
  rep.r3 = epsilon / (4.0 * lam) * (epsilon + 2.0 * int_q) - rep.r3_overlap_integral;

  rep.lhs_mi_per_node =
      mi_via_free_energy(params, config.lhs_samples, derive_key(pc.seed, Stream::kChain, 3));
  rep.rhs_total = rep.psi_term + rep.r1 - rep.r2_integral - rep.r3;
  rep.residual = rep.lhs_mi_per_node.mean - rep.rhs_total;
  rep.rhs_stderr = std::hypot(std::sqrt(var_r2) / (4.0 * lam), rep.shift.via_overlap.stderr_);
  rep.residual_stderr = std::hypot(rep.lhs_mi_per_node.stderr_, rep.rhs_stderr);

  // exact balance: MI = first term + f_1 - int (d1 + d2) dt + (f_00 - f_0eps)
  const double f_end = rep.psi_term - lam / 4.0 - rep.R_end * rep.R_end / (4.0 * lam);
  const double closure_rhs =
      mi_closed_form_first_term(params) + f_end - int_d + rep.shift.direct.mean;
  rep.closure_residual = rep.lhs_mi_per_node.mean - closure_rhs;
  rep.closure_stderr = std::sqrt(rep.lhs_mi_per_node.stderr_ * rep.lhs_mi_per_node.stderr_ +
                                 var_d + rep.shift.direct.stderr_ * rep.shift.direct.stderr_);

  // first decomposition term from an independent instance batch
  const std::size_t nodes = path.nodes.size();
  boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 1.0 - 0.005 / nodes);
  PathConfig check = pc;
  check.diagnostics = false;
  const std::uint64_t root = check_root(pc.seed);
  for (std::size_t k = 0; k < nodes; ++k) {
    const NodeStats s = node_stats(params, path.t_grid[k], path.R_values[k], 0.0,
                                   derive_key(root, Stream::kInstance, k), check);
    const double gap = std::abs(lam * s.overlap.mean - path.q_values[k]);
    const double se = lam * std::hypot(s.overlap.stderr_, path.nodes[k].overlap.stderr_);
    const double budget = z * se + 1e-12;
    rep.cancellation.push_back(gap);
    rep.cancellation_budget.push_back(budget);
    if (config.kind == QPathKind::kSolved && gap > budget) rep.cancellation_ok = false;
  }
  return rep;
}

}  // namespace sbmai
