#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sbmai/exact.hpp"
#include "sbmai/mcmc.hpp"
#include "sbmai/model.hpp"

namespace sbmai {

// How the Gibbs overlap is estimated at a path node.
enum class DriftEstimator { kExact, kMcmc };

const char* to_string(DriftEstimator estimator);
DriftEstimator parse_drift_estimator(const std::string& name);

// Rule for the side-channel SNR rate q(t) along a path.
//   kZero:     q = 0, R stays at epsilon.
//   kConstant: q = q_const.
//   kSolved:   q = lambda_n * E<Q>_{t, R(t)}, the adaptive choice.
enum class QPathKind { kZero, kSolved, kConstant };

const char* to_string(QPathKind kind);
QPathKind parse_q_path(const std::string& name);

struct PathConfig {
  int steps = 100;               // Euler steps K on [0, 1]
  std::size_t instances = 200;   // fresh planted instances per node
  DriftEstimator estimator = DriftEstimator::kExact;
  McmcConfig mcmc;               // kMcmc only; the seed below overrides mcmc.seed
  std::uint64_t seed = 1;
  // Also collect the graph-term slope and the dH/dt brackets per node (needs
  // pair marginals).
  bool diagnostics = false;
  // Reuse one instance set at every node (graphs still follow t through
  // common uniforms). Makes the drift a deterministic function of (t, R),
  // as needed for step-size studies; the default draws fresh instances.
  bool freeze_disorder = false;
};

// Instance averages at one node.
struct NodeStats {
  Estimate overlap;      // E<Q>
  Estimate overlap_sq;   // E<Q^2>
  Estimate fluctuation;  // E<(Q - E<Q>)^2>
  // Exact graph part of d f / dt from pair marginals; NaN without diagnostics.
  Estimate d1;
  // (1/n) E<d H / d t>; NaN without diagnostics, at t = 1 and where R = 0
  // with q > 0.
  Estimate d3;
};

// q is piecewise constant, q(t) = q_values[k] on [t_k, t_k+1), and R is the
// matching piecewise-linear path through the nodes. Node k's instances are
// drawn with keys that depend on (seed, k, j) only, so two paths that share
// a seed and step count share every label vector, graph and noise vector.
struct InterpolationPath {
  ModelParams params;
  double epsilon = 0.0;
  QPathKind kind = QPathKind::kSolved;
  DriftEstimator estimator = DriftEstimator::kExact;
  std::vector<double> t_grid;
  std::vector<double> R_values;   // R_values[0] == epsilon
  std::vector<double> drift;      // R_values[k] - epsilon, accumulated
  std::vector<double> q_values;
  std::vector<NodeStats> nodes;
  std::size_t clamped = 0;        // nodes where a negative E<Q> was set to 0
  bool noise_warning = false;     // some E<Q> below -3 stderr
};

// Euler march R_k+1 = R_k + q_k / K on t in [0, t_end] with t_end * K
// rounded to whole steps.
InterpolationPath follow_path(const ModelParams& params, double epsilon,
                              QPathKind kind, double q_const,
                              const PathConfig& config, double t_end = 1.0);

InterpolationPath solve_R_star(const ModelParams& params, double epsilon,
                               const PathConfig& config);

struct LiouvilleReport {
  std::vector<double> t_grid;
  std::vector<double> slope;  // (R(t, eps + d_eps) - R(t, eps)) / d_eps
  double min_slope = 1.0;
  double d_eps = 0.0;
};

// Two solved paths with common instances. d_eps <= 0 selects epsilon / 10.
LiouvilleReport liouville_monotonicity(const ModelParams& params, double epsilon,
                                       double d_eps, const PathConfig& config);

// f_{0,0} - f_{0,eps} from enumerated free energies against
// (1/2) int_0^eps E<Q>_{0,e} de by Gauss-Legendre, on the same instances.
struct FreeEnergyShift {
  Estimate direct;
  Estimate via_overlap;
  Estimate difference;  // paired
};

FreeEnergyShift free_energy_shift(const ModelParams& params, double epsilon,
                                  std::size_t instances, std::uint64_t seed,
                                  int order = 8);

struct SumRuleConfig {
  PathConfig path;
  QPathKind kind = QPathKind::kSolved;
  double q_const = 0.0;
  std::size_t lhs_samples = 20000;  // instances for the free-energy MI
  int epsilon_order = 8;            // Gauss-Legendre nodes for the eps integral
};

// Terms of the mutual-information decomposition along one path,
//   lhs = psi_term + r1 - r2_integral - r3 + residual,
// with the vanishing correction inside r3 left out (it is part of residual).
// closure_residual repeats the balance with the exact graph term d1 in place
// of its large-n form and should vanish up to sampling and quadrature error.
struct SumRuleReport {
  ModelParams params;
  double epsilon = 0.0;
  QPathKind kind = QPathKind::kSolved;
  Estimate lhs_mi_per_node;
  double R_end = 0.0;
  double psi_term = 0.0;
  double r1 = 0.0;
  double r2_integral = 0.0;
  std::vector<double> r2_at_nodes;  // with the rate of the interval to the right
  double r3 = 0.0;
  double r3_overlap_integral = 0.0;  // (1/2) int_0^eps E<Q>_{0,e} de
  double rhs_total = 0.0;
  double residual = 0.0;
  double rhs_stderr = 0.0;       // node stderrs propagated through r2 and r3
  double residual_stderr = 0.0;  // with the lhs stderr
  // |lambda_n E<Q> - q| per node from an independent batch of instances,
  // and the matching sampling budget.
  std::vector<double> cancellation;
  std::vector<double> cancellation_budget;
  bool cancellation_ok = true;
  std::vector<double> t_grid;
  std::vector<double> q_values;
  std::vector<double> R_values;
  std::vector<double> d1_at_nodes;
  std::vector<double> d1_leading_at_nodes;  // lambda_n / 4 E<Q^2>
  std::vector<double> d2_at_nodes;          // -q E<Q> / 2
  std::vector<double> d3_at_nodes;
  std::vector<double> d3_stderr;
  FreeEnergyShift shift;
  double closure_residual = 0.0;
  double closure_stderr = 0.0;
};

SumRuleReport sum_rule_audit(const ModelParams& params, double epsilon,
                             const SumRuleConfig& config);

}  // namespace sbmai
