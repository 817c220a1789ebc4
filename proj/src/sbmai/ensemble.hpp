#pragma once

#include <vector>

#include "sbmai/model.hpp"

namespace sbmai {

// Quenched averages over the joint law of (X, G, Y) at (t, R) for tiny n.
// Labels and graphs are enumerated; Y is integrated on a product
// Gauss-Hermite grid in the noise-free variable y with the exact Gaussian
// likelihood ratio exp(sqrt(R) X y - R X^2 / 2) as weight, so both sides of
// every Nishimori identity are built from the same grid points.
struct EnsembleAverages {
  int n = 0;
  double t = 0.0;
  double R = 0.0;
  double mass = 0.0;  // total weight before normalisation (1 up to quadrature)

  std::vector<double> truth_bracket;       // E[X_i <x_i>]
  std::vector<double> bracket_sq;          // E[<x_i>^2]
  std::vector<double> pair_truth_bracket;  // n*n, E[X_i X_j <x_i x_j>]
  std::vector<double> pair_bracket_sq;     // n*n, E[<x_i x_j>^2]

  double Q = 0.0;        // E<Q>
  double Q2 = 0.0;       // E<Q^2>
  double Q_sq = 0.0;     // E[<Q>^2]
  double L = 0.0;        // E<L>
  double L2 = 0.0;       // E<L^2>
  double log_Z = 0.0;    // E ln Z
  double dH_dec = 0.0;   // (1/n) E< sum_i (y_i x_i / (2 sqrt R) - x_i^2 / 2) >
  double dH_sbm = 0.0;   // (1/n) E< d H_SBM;t / dt >

  // E<(Q - E<Q>)^2> and E<(L - E<L>)^2>.
  double q_fluctuation() const { return Q2 - Q * Q; }
  double l_fluctuation() const { return L2 - L * L; }
};

// n <= 5 at R = 0, n <= 4 with R > 0. gh_order is the number of grid nodes
// per coordinate of y.
EnsembleAverages enumerate_ensemble(const ModelParams& params, double t,
                                    double R, int gh_order = 8);

}  // namespace sbmai
