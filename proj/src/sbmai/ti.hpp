#pragma once

#include <cstddef>
#include <vector>

#include "sbmai/exact.hpp"
#include "sbmai/mcmc.hpp"

namespace sbmai {

// What is integrated over t.
//   kOverlap: lambda_n/4 E<Q^2>_t, started from lambda_n/4. Exact only as
//             n -> infinity.
//   kEdge:    the free-energy slope sum_{i<j} E[X_i X_j (F(G_ij=0) -
//             F(G_ij=1))] * delta / (2 sqrt(1-t)), started from the exact
//             first term. Exact at every n; needs pair marginals.
enum class TiIntegrand { kOverlap, kEdge };

const char* to_string(TiIntegrand integrand);

enum class TiGridKind { kUniform, kGeometric };

// intervals + 1 points from 0 to 1. The geometric grid has step ratio
// `ratio` and is finest at t = 0.
std::vector<double> make_t_grid(int intervals, TiGridKind kind, double ratio = 1.15);

struct TiConfig {
  McmcConfig mcmc;
  std::size_t instances = 64;  // fresh planted instances per t node
  TiIntegrand integrand = TiIntegrand::kOverlap;
  // Brackets by enumeration instead of MCMC (n <= cap only).
  bool exact_brackets = false;
};

struct TiEstimate {
  std::vector<double> t_grid;
  std::vector<Estimate> q2_at_t;     // E<Q^2>_{t,0}
  std::vector<Estimate> slope_at_t;  // integrand of the selected kind
  Estimate mi_per_node;
  double lambda_n = 0.0;
  double start = 0.0;  // value at t = 1 subtracted from: lambda_n/4 or first term
  TiIntegrand integrand = TiIntegrand::kOverlap;
  // Nodes where some instance has split R-hat above threshold on Q^2 or
  // the log-weight.
  std::vector<std::size_t> flagged_nodes;
  bool unreliable = false;
  // Replica potential has more than one local minimum at (lambda_n, r): the
  // planted chains follow the informative branch only.
  bool branch_ambiguity = false;
};

// Per-instance edge integrand from brackets that carry pair_xx. Zero at t = 1.
double edge_slope(const PlantedInstance& inst, const ModelParams& params,
                  double t, const GibbsReport& brackets);

TiEstimate ti_mutual_information(const ModelParams& params,
                                 const std::vector<double>& t_grid,
                                 const TiConfig& config);

}  // namespace sbmai
