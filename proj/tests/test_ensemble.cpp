#include <cmath>

#include "doctest.h"
#include "sbmai/ensemble.hpp"
#include "sbmai/error.hpp"
#include "sbmai/exact.hpp"

using namespace sbmai;

TEST_CASE("Nishimori identities on the enumerated ensemble") {
  const ModelParams p = params_from_channel(3, 0.3, 0.45, 0.5, 1);
  for (double t : {0.0, 0.5}) {
    for (double R : {0.0, 0.3}) {
      const EnsembleAverages e = enumerate_ensemble(p, t, R, 6);
      CHECK(std::abs(e.mass - 1.0) < 1e-3);
      for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(e.truth_bracket[i] - e.bracket_sq[i]) < 1e-10);
        for (int j = 0; j < 3; ++j) {
          CHECK(std::abs(e.pair_truth_bracket[i * 3 + j] - e.pair_bracket_sq[i * 3 + j]) < 1e-10);
        }
      }
      CHECK(e.Q >= 0.0);
      CHECK(e.Q <= 1.0 + 1e-10);
    }
  }
}

TEST_CASE("fluctuation identity") {
  for (double r : {0.5, 0.25}) {
    const ModelParams p = params_from_channel(3, r, 0.5, 0.2, 1);
    for (double R : {0.2, 1.0}) {
      const EnsembleAverages e = enumerate_ensemble(p, 0.3, R, 10);
      CHECK(e.q_fluctuation() <= 4.0 * e.l_fluctuation() + 1e-10);
      // E<L> = -E<Q>/2 by Gaussian integration by parts and Nishimori
      CHECK(std::abs(e.L + 0.5 * e.Q) < 1e-6);
    }
  }
}

TEST_CASE("the bracket of dH/dt vanishes") {
  const ModelParams p = params_from_channel(3, 0.3, 0.4, 0.3, -1);
  for (double t : {0.0, 0.4, 0.9}) {
    const EnsembleAverages e = enumerate_ensemble(p, t, 0.5, 12);
    CHECK(std::abs(e.dH_sbm) < 1e-12);
    CHECK(std::abs(e.dH_dec) < 1e-8);
  }
}

TEST_CASE("free energy difference along the side channel") {
  // f(0) - f(eps) = 1/2 int_0^eps E<Q>_{eps'} d eps', f = -(1/n) E ln Z
  const ModelParams p = params_from_channel(3, 0.4, 0.5, 0.5, 1);
  const double eps = 0.4;
  const int m = 10;
  double integral = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    integral += w * enumerate_ensemble(p, 0.0, eps * k / m, 16).Q;
  }
  integral *= eps / m / 3.0;
  const double f0 = -enumerate_ensemble(p, 0.0, 0.0).log_Z / 3;
  const double fe = -enumerate_ensemble(p, 0.0, eps, 16).log_Z / 3;
  CHECK(std::abs((f0 - fe) - 0.5 * integral) < 1e-6);
}

TEST_CASE("ensemble log partition matches the mutual-information split") {
  const ModelParams p = params_from_channel(4, 0.5, 0.5, 0.8, 1);
  const EnsembleAverages e = enumerate_ensemble(p, 0.0, 0.0);
  const double mi = mi_closed_form_first_term(p) - e.log_Z / 4;
  CHECK(std::abs(mi - exact_mi_tiny(p)) < 1e-12);
}

TEST_CASE("ensemble size limits") {
  CHECK_THROWS_AS(enumerate_ensemble(params_from_channel(5, 0.5, 0.5, 0.2, 1), 0.0, 0.1), Error);
  CHECK_NOTHROW(enumerate_ensemble(params_from_channel(5, 0.5, 0.5, 0.2, 1), 0.0, 0.0));
}
