#pragma once

#include <array>
#include <string>

namespace sbmai {

// Two-letter label alphabet with prior weights (r, 1 - r). Class 0 is the
// minority group (value x1 > 0), class 1 the majority group (x2 < 0).
// Centred with unit second moment.
struct Alphabet {
  double r = 0.5;
  double x1 = 1.0;
  double x2 = -1.0;

  static Alphabet for_prior(double r);

  double value(int cls) const { return cls == 0 ? x1 : x2; }
  double weight(int cls) const { return cls == 0 ? r : 1.0 - r; }
  // E[X^k] under the prior.
  double moment(int k) const;
  double max_abs() const { return x1 > -x2 ? x1 : -x2; }
};

// Both parametrizations of one two-group SBM instance. Populated once at
// construction by the factory functions below; immutable afterwards.
struct ModelParams {
  int n = 0;
  double r = 0.5;
  double p_bar = 0.5;
  double delta = 0.0;
  double d_n = 0.0;
  double b_n = 1.0;
  double a_n = 1.0;
  double c_n = 1.0;
  double lambda_n = 0.0;

  Alphabet alphabet() const { return Alphabet::for_prior(r); }

  // P(G_ij = 1 | classes) on the interpolation path at time t.
  double edge_prob(int cls_i, int cls_j, double t = 0.0) const;
};

ModelParams params_from_degrees(int n, double r, double d_n, double b_n);

// sign = +1 assortative, -1 disassortative.
ModelParams params_from_channel(int n, double r, double p_bar, double lambda,
                                int sign);

// Convenience: (p_bar, delta) given directly; lambda_n derived.
ModelParams params_from_delta(int n, double r, double p_bar, double delta);

// Rebuilds params from a stored nine-field record after checking its
// internal consistency (relative tolerance 1e-12).
ModelParams params_from_record(const ModelParams& record);

struct DenseDiagnostic {
  double density_growth = 0.0;  // n p(1-p)^3
  double bias_ratio = 0.0;      // |delta| / (p (1-p)^2)
  double threshold = 0.1;
  bool large_finite_size = false;
};

DenseDiagnostic check_dense_hypotheses(const ModelParams& params,
                                       double threshold = 0.1);

}  // namespace sbmai
