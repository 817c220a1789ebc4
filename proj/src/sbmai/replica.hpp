#pragma once

#include <vector>

namespace sbmai {

// How the Gaussian expectation inside psi is computed.
//   kPanel:   the inner log-sum reduces to a linear term plus
//             softplus(alpha z + beta); panels of composite Gauss-Legendre
//             are aligned on the kink z = -beta/alpha and kept narrower than
//             the distance pi/alpha to the nearest complex singularity.
//             ceil(order / 6) nodes per panel.
//   kHermite: plain Gauss-Hermite with `order` nodes.
enum class PsiRule { kPanel, kHermite };

struct PsiQuadrature {
  int order = 61;
  PsiRule rule = PsiRule::kPanel;
};

// lambda/4 + q^2/(4 lambda) - E ln sum_x P_r(x) exp(sqrt(q) Z x + q X x - q x^2/2)
double psi(double q, double lambda, double r, const PsiQuadrature& quad = {});

// E[X <x>_q] for the scalar Gaussian channel at SNR q.
double channel_overlap(double q, double r, const PsiQuadrature& quad = {});

// d psi / dq by a 5-point stencil with h = max(1e-5, 1e-5 q); one-sided
// when q < 2h.
double psi_prime(double q, double lambda, double r, const PsiQuadrature& quad = {});

// q / (2 lambda) - E[X <x>_q] / 2, the derivative taken under the integral.
double psi_prime_analytic(double q, double lambda, double r,
                          const PsiQuadrature& quad = {});

struct LocalMinimum {
  double q = 0.0;
  double psi = 0.0;
};

struct ReplicaSolution {
  double lambda = 0.0;
  double r = 0.5;
  double q_star = 0.0;
  double psi_star = 0.0;
  std::vector<LocalMinimum> local_minima;  // ascending q
  bool coexistence = false;  // two minima with psi values within tol
  PsiQuadrature quad;
};

// Grid scan of [0, lambda] followed by golden-section refinement of every
// bracketed local minimum down to width tol.
ReplicaSolution minimize_psi(double lambda, double r, double tol = 1e-9,
                             const PsiQuadrature& quad = {}, int grid = 2048);

struct StateEvolution {
  double q_fixed = 0.0;
  std::vector<double> iterates;  // q_0, q_1, ...
  bool converged = false;
};

StateEvolution state_evolution(double lambda, double r, double q0,
                               double damping = 1.0, int max_iter = 10000,
                               double tol = 1e-10, const PsiQuadrature& quad = {});

enum class TransitionOrder { kNone, kContinuous, kDiscontinuous };

const char* to_string(TransitionOrder order);

struct PhaseRow {
  double r = 0.5;
  std::vector<ReplicaSolution> sweep;  // one per lambda
  TransitionOrder order = TransitionOrder::kNone;
  double lambda_c = 0.0;     // first lambda with q_star > onset; 0 if none
  double max_jump = 0.0;     // largest q_star increase between grid steps
  double jump_lambda = 0.0;  // lambda at the upper end of that step
  // The onset step and the largest step are bisected in lambda; a continuous
  // onset shrinks to zero there while a first-order jump keeps its size.
  double refined_jump = 0.0;
  double transition_lambda = 0.0;  // where the refined jump sits
  bool metastable = false;   // some lambda shows two separated local minima
};

struct PhaseDiagram {
  std::vector<double> lambdas;
  std::vector<PhaseRow> rows;
  // Midpoint between the largest r classified discontinuous and the next r
  // (all larger r continuous). NaN when the grid shows no such flip.
  double r_star = 0.0;
  bool r_star_found = false;
};

struct PhaseOptions {
  double tol = 1e-9;
  double onset = 0.01;      // q_star threshold that defines lambda_c
  double jump_tol = 1e-4;   // refined jump >= jump_tol * lambda is discontinuous
  int refine_steps = 36;
  int grid = 2048;
  PsiQuadrature quad;
};

PhaseDiagram phase_diagram(const std::vector<double>& lambda_grid,
                           const std::vector<double>& r_grid,
                           const PhaseOptions& options = {});

// (1 - 1/sqrt(3)) / 2
double tricritical_r();

}  // namespace sbmai
