#include "sbmai/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "sbmai/error.hpp"

namespace sbmai {
namespace {

// Physicists' Hermite roots by Newton iteration on the orthonormal
// recurrence, then rescaled to the standard normal weight.
GaussRule build_rule(int n) {
  constexpr double kPiM4 = 0.7511255444649425;  // pi^(-1/4)
  std::vector<double> x(n), w(n);
  // Golub-Welsch eigenvalues as starting points
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int j = 1; j < n; ++j) sub[j - 1] = std::sqrt(0.5 * j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  tri.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = tri.eigenvalues()[n - 1 - i];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = kPiM4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 -
             std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
  }
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  for (int i = 0; i < n; ++i) {
    // ascending order
    rule.nodes[i] = std::sqrt(2.0) * x[n - 1 - i];
    rule.weights[i] = w[n - 1 - i] * inv_sqrt_pi;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

GaussRule build_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  if (order < 1 || order > 400) {
    fail(ErrorKind::kParameter, "Gauss-Legendre order must lie in [1, 400]");
  }
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussRule>(build_legendre(order));
  return *slot;
}

const GaussRule& gauss_hermite(int order) {
  if (order < 1 || order > 400) {
    fail(ErrorKind::kParameter, "Gauss-Hermite order must lie in [1, 400]");
  }
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussRule>(build_rule(order));
  return *slot;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    s += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  }
  return s;
}

}  // namespace sbmai
