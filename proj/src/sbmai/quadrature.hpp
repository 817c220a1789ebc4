#pragma once

#include <vector>

namespace sbmai {

// Gauss-Hermite rule for expectations over a standard normal:
//   E f(Z) ~= sum_k weights[k] * f(nodes[k]),  sum_k weights[k] = 1.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Cached and thread-safe; order >= 1.
const GaussRule& gauss_hermite(int order);

// Gauss-Legendre rule on [-1, 1]; cached and thread-safe.
const GaussRule& gauss_legendre(int order);

// Composite trapezoid over an arbitrary sorted grid.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sbmai
