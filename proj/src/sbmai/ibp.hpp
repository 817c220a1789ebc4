#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbmai/instance.hpp"
#include "sbmai/model.hpp"

namespace sbmai {

// Smooth test functions with closed-form derivative bounds.
enum class TestFunction { kCos, kSin, kTanh, kLogistic, kBump, kLinear };

const char* to_string(TestFunction g);
TestFunction parse_test_function(const std::string& name);

// sup |g^(k)| for k = 1..4; the linear function is 1 + 2u.
struct DerivativeBounds {
  double c[5] = {};  // c[1] .. c[4]
};
DerivativeBounds derivative_bounds(TestFunction g);

//   kBernoulli:        U in {0, 1}, P(U = 1) = p
//   kShiftedBernoulli: U in {shift, 1 + shift}, P(U = 1 + shift) = p
//   kGaussian:         U ~ N(shift, sigma^2)
enum class LawKind { kBernoulli, kShiftedBernoulli, kGaussian };

const char* to_string(LawKind kind);

struct ULaw {
  LawKind kind = LawKind::kBernoulli;
  double p = 0.5;
  double shift = 0.0;
  double sigma = 0.1;
};

struct IbpCheck {
  TestFunction g = TestFunction::kCos;
  ULaw law;
  double residual = 0.0;  // |E[U g] - E[g'] E[U^2] - g(0) E[U]|
  double bound = 0.0;
  bool pass = false;
};

// Two-point laws are exact finite sums; the Gaussian law uses a 61-node
// Gauss-Hermite rule. The residual is assembled from Taylor remainders so it
// vanishes identically for the linear function.
IbpCheck approx_ibp_check(TestFunction g, const ULaw& law);

// The twelve built-in (g, U) pairs: four nonlinear functions against one law
// of each kind.
std::vector<IbpCheck> builtin_ibp_checks();

struct EdgeIbp {
  double lhs = 0.0;    // E[G_ij F(G_ij)] over G_ij given X_i, X_j
  double rhs = 0.0;    // E[F'(G_ij)] E[G_ij] + F(G_ij = 0) E[G_ij]
  double error = 0.0;  // |lhs - rhs|
  double scale = 0.0;  // sqrt(1 - t) lambda_n / (n^2 (1 - p_bar))
};

// Both sides for pair (i, j) of one instance. F(g) for real g follows from
// the pair's class marginals at G_ij = 0 (the Hamiltonian is affine in G_ij);
// F' is a central difference with step fd_step.
EdgeIbp gibbs_edge_ibp_residual(const PlantedInstance& inst, const ModelParams& params,
                                double t, int i, int j, double fd_step = 1e-4);

struct EdgeIbpSweep {
  std::vector<double> deltas;
  std::vector<double> mean_error;  // over all pairs and instances
  std::vector<double> max_ratio;   // max error / scale
  double slope = 0.0;              // log mean_error against log delta
};

// delta0, delta0 / 2, ... (halvings + 1 values) at fixed (n, r, p_bar, t);
// each delta reuses the same instance seeds.
EdgeIbpSweep edge_ibp_delta_sweep(int n, double r, double p_bar, double delta0,
                                  int halvings, double t, int instances,
                                  std::uint64_t seed);

}  // namespace sbmai
