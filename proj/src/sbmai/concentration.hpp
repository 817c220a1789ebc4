#pragma once

#include <cstdint>
#include <vector>

#include "sbmai/exact.hpp"
#include "sbmai/interpolation.hpp"

namespace sbmai {

// Ordinary least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

// E<(Q - E<Q>)^2> at fixed (t, R) over fresh instances, brackets by
// enumeration.
Estimate overlap_fluctuation(const ModelParams& params, double t, double R,
                             std::size_t instances, std::uint64_t seed);

struct ConcentrationConfig {
  double t = 0.5;
  double theta = 0.2;   // s_n = n^-theta
  int eps_points = 4;   // midpoint grid on [s_n, 2 s_n]
  PathConfig path;      // Euler march to t along the solved path
};

struct ConcentrationRow {
  int n = 0;
  double s_n = 0.0;
  Estimate variance;         // eps-averaged E<(Q - E<Q>)^2>_{t,eps}
  double bound_proxy = 0.0;  // (s_n^4 n)^(-1/3)
};

struct ConcentrationScan {
  std::vector<ConcentrationRow> rows;
  double slope = 0.0;  // log variance against log bound_proxy
  bool decreasing = false;
};

// Model family params_from_channel(n, r, p_bar, lambda, sign) over n_grid.
ConcentrationScan overlap_variance_scan(double r, double p_bar, double lambda, int sign,
                                        const std::vector<int>& n_grid,
                                        const ConcentrationConfig& config);

struct FreeEnergyRow {
  int n = 0;
  Estimate mean_F;
  Estimate variance;  // sample variance of F and its stderr
};

struct FreeEnergyScan {
  std::vector<FreeEnergyRow> rows;
  double slope = 0.0;  // log Var(F) against log n
};

// Var(F) at t = 0 without side channel; F by enumeration per instance.
FreeEnergyScan free_energy_variance(double r, double p_bar, double lambda, int sign,
                                    const std::vector<int>& n_grid, std::size_t samples,
                                    std::uint64_t seed);

}  // namespace sbmai
