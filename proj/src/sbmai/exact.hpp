#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "sbmai/instance.hpp"
#include "sbmai/model.hpp"

namespace sbmai {

// Brackets of the interpolating posterior for one instance at (t, R).
struct GibbsReport {
  double log_Z = std::numeric_limits<double>::quiet_NaN();
  double F = std::numeric_limits<double>::quiet_NaN();  // -log_Z / n
  std::vector<double> mean_x;   // <x_i>
  std::vector<double> pair_xx;  // n*n row-major <x_i x_j>, diagonal <x_i^2>
  double Q_mean = 0.0;          // <Q> against the planted labels
  double Q2_mean = 0.0;
  double L_mean = 0.0;
  double L2_mean = 0.0;
  double t = 0.0;
  double R = 0.0;
  bool exact = true;
};

// Joint class probabilities P[c_i][c_j] of a pair from <x_i>, <x_j> and
// <x_i x_j>; requires pair_xx. Class 0 carries x1.
void class_pair_marginals(const GibbsReport& brackets, const Alphabet& a, int i,
                          int j, double P[2][2]);

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

constexpr int kDefaultEnumerationCap = 20;
constexpr int kMaxEnumerationCap = 30;

// H_SBM;t(x; G) + H_dec(x; Y) evaluated term by term. R = 0 drops the side
// channel; t = 1 drops the graph term.
double hamiltonian(std::span<const double> x, const PlantedInstance& inst,
                   const ModelParams& params, double t, double R);

// Exact brackets by Gray-code enumeration of all 2^n configurations.
GibbsReport gibbs_report(const PlantedInstance& inst, const ModelParams& params,
                         double t, double R, bool want_pairs = false,
                         int cap = kDefaultEnumerationCap);

// ln Z alone; same enumeration without bracket bookkeeping.
double log_partition(const PlantedInstance& inst, const ModelParams& params,
                     double t, double R, int cap = kDefaultEnumerationCap);

// (1/n) I(X; G) at time t by enumerating every graph and label vector.
// n <= 5.
double exact_mi_tiny(const ModelParams& params, double t = 0.0);

// (n-1)/2 * sum over class pairs of E[(p + d u) ln(1 + d u / p) +
// (1 - p - d u) ln(1 - d u / (1 - p))], d = sqrt(1 - t) delta, written as the
// six explicit class-pair terms.
double mi_closed_form_first_term(const ModelParams& params, double t = 0.0);

// (1/n) I = first term - (1/n) E ln Z, with E ln Z averaged over `samples`
// planted instances whose log_Z is computed exactly.
Estimate mi_via_free_energy(const ModelParams& params, std::size_t samples,
                            std::uint64_t seed,
                            int cap = kDefaultEnumerationCap);

}  // namespace sbmai
