#include "sbmai/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sbmai/ensemble.hpp"
#include "sbmai/error.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/ibp.hpp"
#include "sbmai/instance.hpp"
#include "sbmai/interpolation.hpp"
#include "sbmai/local_fields.hpp"
#include "sbmai/mcmc.hpp"
#include "sbmai/model.hpp"
#include "sbmai/quadrature.hpp"
#include "sbmai/replica.hpp"
#include "sbmai/rng.hpp"
#include "sbmai/ti.hpp"

namespace sbmai {
namespace {

class Suite {
 public:
  explicit Suite(std::uint64_t seed) { report_.seed = seed; }

  std::uint64_t seed(int k) const { return derive_key(report_.seed, Stream::kInstance, k); }

  void add(const char* module, const char* check, double value, const char* rel,
           double limit, double limit_hi = 0.0) {
    VerifyRow row{module, check, value, rel, limit, limit_hi, false};
    const std::string r = rel;
    if (r == "<") row.pass = value < limit;
    if (r == "<=") row.pass = value <= limit;
    if (r == ">=") row.pass = value >= limit;
    if (r == "==") row.pass = value == limit;
    if (r == "in") row.pass = value >= limit && value <= limit_hi;
    report_.all_pass = report_.all_pass && row.pass;
    report_.rows.push_back(row);
  }

  // A check that throws is recorded as a failure with a NaN value.
  void guarded(const char* module, const char* check, const char* rel, double limit,
               const std::function<double()>& body, double limit_hi = 0.0) {
    double v;
    try {
      v = body();
    } catch (const std::exception&) {
      v = std::nan("");
    }
    add(module, check, v, rel, limit, limit_hi);
  }

  VerifyReport take() { return std::move(report_); }

 private:
  VerifyReport report_;
};

void model_checks(Suite& s) {
  s.guarded("model-core", "channel -> degrees -> channel round trip", "<", 1e-12, [] {
    double worst = 0.0;
    for (double r : {0.2, 0.5}) {
      for (double p : {0.3, 0.5}) {
        for (int sign : {1, -1}) {
          const ModelParams a = params_from_channel(200, r, p, 1.5, sign);
          const ModelParams b = params_from_degrees(200, r, a.d_n, a.b_n);
          worst = std::max({worst, std::abs(a.p_bar - b.p_bar) / a.p_bar,
                            std::abs(a.delta - b.delta) / std::abs(a.delta)});
        }
      }
    }
    return worst;
  });
  s.guarded("model-core", "alphabet is +-1 at r = 1/2", "==", 0.0, [] {
    const Alphabet a = Alphabet::for_prior(0.5);
    return std::max(std::abs(a.x1 - 1.0), std::abs(a.x2 + 1.0));
  });
  s.guarded("model-core", "alphabet moments", "<", 1e-12, [] {
    double worst = 0.0;
    for (double r : {0.05, 0.2, 0.35, 0.5}) {
      const Alphabet a = Alphabet::for_prior(r);
      auto m = [&](int k) { return r * std::pow(a.x1, k) + (1 - r) * std::pow(a.x2, k); };
      const double third = (1 - 2 * r) / std::sqrt(r * (1 - r));
      worst = std::max({worst, std::abs(m(1)), std::abs(m(2) - 1.0), std::abs(m(3) - third)});
    }
    return worst;
  });
}

void graph_checks(Suite& s) {
  s.guarded("graph-gen", "edge law chi-square (3 dof, 1% point 11.345)", "<", 11.345, [&] {
    const ModelParams p = params_from_delta(400, 0.3, 0.3, 0.05);
    const auto cls = sample_classes(p.n, p.r, s.seed(1));
    const EdgeSet g = sample_graph(cls, p, 0.25, s.seed(1));
    double hit[3] = {}, tot[3] = {};
    for (int i = 0; i < p.n; ++i) {
      for (int j = i + 1; j < p.n; ++j) {
        tot[cls[i] + cls[j]] += 1;
        hit[cls[i] + cls[j]] += g.has(i, j);
      }
    }
    const int cell[3][2] = {{0, 0}, {0, 1}, {1, 1}};
    double chi2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double q = p.edge_prob(cell[c][0], cell[c][1], 0.25);
      const double e1 = tot[c] * q, e0 = tot[c] * (1 - q);
      chi2 += std::pow(hit[c] - e1, 2) / e1 + std::pow(tot[c] - hit[c] - e0, 2) / e0;
    }
    return chi2;
  });
  s.guarded("graph-gen", "label and noise streams ignore later draw counts", "==", 0.0, [&] {
    const PlantedInstance a = sample_instance_with_noise(params_from_delta(20, 0.4, 0.5, 0.1), 0.0, 1.0, s.seed(2));
    const PlantedInstance b = sample_instance_with_noise(params_from_delta(40, 0.4, 0.5, 0.1), 0.0, 1.0, s.seed(2));
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      worst = std::max({worst, std::abs(a.labels[i] - b.labels[i]), std::abs(a.z[i] - b.z[i])});
    }
    return worst;
  });
}

void exact_checks(Suite& s) {
  const ModelParams tiny = params_from_channel(4, 0.3, 0.45, 0.5, 1);
  std::vector<EnsembleAverages> grid;
  for (double t : {0.0, 0.5}) {
    for (double R : {0.0, 0.3}) grid.push_back(enumerate_ensemble(tiny, t, R, 6));
  }
  s.guarded("exact-engine", "Nishimori identities, n = 4", "<", 1e-10, [&] {
    double worst = 0.0;
    for (const EnsembleAverages& e : grid) {
      for (int i = 0; i < 4; ++i) {
        worst = std::max(worst, std::abs(e.truth_bracket[i] - e.bracket_sq[i]));
        for (int j = 0; j < 4; ++j) {
          worst = std::max(worst, std::abs(e.pair_truth_bracket[i * 4 + j] - e.pair_bracket_sq[i * 4 + j]));
        }
      }
    }
    return worst;
  });
  s.guarded("exact-engine", "E<Q> outside [0, 1]", "<=", 1e-10, [&] {
    double worst = 0.0;
    for (const EnsembleAverages& e : grid) worst = std::max({worst, -e.Q, e.Q - 1.0});
    return worst;
  });
  s.guarded("exact-engine", "dF/dR - <L> by central difference", "<", 1e-6, [&] {
    const ModelParams p = params_from_channel(8, 0.3, 0.5, 1.0, 1);
    double worst = 0.0;
    for (double R : {0.3, 1.2}) {
      PlantedInstance inst = sample_instance_with_noise(p, 0.4, R, s.seed(3));
      const double L = gibbs_report(inst, p, 0.4, R).L_mean;
      const double h = 1e-4;
      set_side_snr(inst, R + h);
      const double fp = gibbs_report(inst, p, 0.4, R + h).F;
      set_side_snr(inst, R - h);
      const double fm = gibbs_report(inst, p, 0.4, R - h).F;
      worst = std::max(worst, std::abs((fp - fm) / (2 * h) - L));
    }
    return worst;
  });
  s.guarded("exact-engine", "Q fluctuation - 4 L fluctuation", "<=", 1e-10, [] {
    double worst = -1.0;
    for (double r : {0.5, 0.25}) {
      const ModelParams p = params_from_channel(3, r, 0.5, 0.2, 1);
      for (double R : {0.2, 1.0}) {
        const EnsembleAverages e = enumerate_ensemble(p, 0.3, R, 10);
        worst = std::max(worst, e.q_fluctuation() - 4.0 * e.l_fluctuation());
      }
    }
    return worst;
  });
  s.guarded("exact-engine", "largest MI decrease as |delta| grows, n = 4", "<=", 1e-15, [] {
    double prev = 0.0, worst = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double mi = exact_mi_tiny(params_from_delta(4, 0.3, 0.5, 0.02 * k));
      worst = std::max(worst, prev - mi);
      prev = mi;
    }
    return worst;
  });
  s.guarded("exact-engine", "MI without signal, n = 4", "==", 0.0,
            [] { return exact_mi_tiny(params_from_delta(4, 0.5, 0.5, 0.0)); });
  s.guarded("exact-engine", "sampled free-energy MI vs enumeration (stderr units)", "<", 3.0, [&] {
    const ModelParams p = params_from_channel(4, 0.4, 0.5, 1.5, 1);
    const Estimate e = mi_via_free_energy(p, 20000, s.seed(4));
    return std::abs(e.mean - exact_mi_tiny(p)) / e.stderr_;
  });
}

void mc_checks(Suite& s) {
  s.guarded("mc-engine", "heat-bath stationary law, total variation", "<", 0.01, [&] {
    const ModelParams p = params_from_channel(3, 0.3, 0.45, 0.5, 1);
    const PlantedInstance inst = sample_instance(p, 0.2, 0.6, s.seed(5));
    const LocalFields lf(inst, p, 0.2, 0.6);
    const Alphabet a = p.alphabet();
    double w[8], z = 0.0;
    for (int c = 0; c < 8; ++c) {
      std::vector<double> x(3);
      double prior = 1.0;
      for (int i = 0; i < 3; ++i) {
        x[i] = a.value((c >> i) & 1);
        prior *= a.weight((c >> i) & 1);
      }
      w[c] = prior * std::exp(-hamiltonian(x, inst, p, 0.2, 0.6));
      z += w[c];
    }
    HeatBathChain chain(lf, initial_classes(inst, p, ChainInit::kRandom, s.seed(5)), s.seed(5));
    double hist[8] = {};
    const int sweeps = 1000000;
    for (int k = 0; k < sweeps; ++k) {
      chain.sweep();
      const auto& cls = chain.classes();
      hist[cls[0] | (cls[1] << 1) | (cls[2] << 2)] += 1.0;
    }
    double tv = 0.0;
    for (int c = 0; c < 8; ++c) tv += 0.5 * std::abs(hist[c] / sweeps - w[c] / z);
    return tv;
  });
  s.guarded("mc-engine", "MCMC <Q^2> vs enumeration, n = 12 (stderr units)", "<", 3.0, [&] {
    const ModelParams p = params_from_channel(12, 0.5, 0.5, 1.5, 1);
    const PlantedInstance inst = sample_instance(p, 0.0, 0.0, s.seed(6));
    McmcConfig c;
    c.sweeps = 6000;
    c.burn_in = 500;
    c.seed = s.seed(6);
    const McmcReport m = mcmc_brackets(inst, p, 0.0, 0.0, c);
    return std::abs(m.brackets.Q2_mean - gibbs_report(inst, p, 0.0, 0.0).Q2_mean) / m.Q2_stderr;
  });
  s.guarded("mc-engine", "largest rise of E<Q^2> in t (2 stderr units)", "<=", 1.0, [&] {
    const ModelParams p = params_from_channel(24, 0.5, 0.5, 1.5, 1);
    TiConfig cfg;
    cfg.instances = 24;
    cfg.mcmc.sweeps = 400;
    cfg.mcmc.burn_in = 100;
    cfg.mcmc.chains = 2;
    cfg.mcmc.seed = s.seed(7);
    const TiEstimate ti = ti_mutual_information(p, make_t_grid(8, TiGridKind::kGeometric), cfg);
    double worst = -1e300;
    for (std::size_t k = 1; k < ti.q2_at_t.size(); ++k) {
      const double se = std::hypot(ti.q2_at_t[k].stderr_, ti.q2_at_t[k - 1].stderr_);
      worst = std::max(worst, (ti.q2_at_t[k].mean - ti.q2_at_t[k - 1].mean) / (2 * se));
    }
    return worst;
  });
  s.guarded("mc-engine", "TI change under grid doubling (stderr units)", "<", 1.0, [&] {
    const ModelParams p = params_from_channel(8, 0.4, 0.5, 1.0, 1);
    TiConfig cfg;
    cfg.exact_brackets = true;
    cfg.integrand = TiIntegrand::kEdge;
    cfg.instances = 400;
    cfg.mcmc.seed = s.seed(8);
    const TiEstimate coarse = ti_mutual_information(p, make_t_grid(16, TiGridKind::kUniform), cfg);
    const TiEstimate fine = ti_mutual_information(p, make_t_grid(32, TiGridKind::kUniform), cfg);
    return std::abs(fine.mi_per_node.mean - coarse.mi_per_node.mean) / fine.mi_per_node.stderr_;
  });
}

void replica_checks(Suite& s) {
  s.guarded("replica", "psi(0) - lambda/4 on a 20 x 20 grid", "<", 1e-12, [] {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        const double lambda = 0.1 + 4.9 * i / 19.0, r = 0.05 + 0.45 * j / 19.0;
        worst = std::max(worst, std::abs(psi(0.0, lambda, r) - lambda / 4));
      }
    }
    return worst;
  });
  s.guarded("replica", "quadrature order 61 vs 121", "<", 1e-9, [] {
    double worst = 0.0;
    for (double r : {0.5, 0.2, 0.05}) {
      for (double lambda : {0.5, 2.0, 10.0}) {
        for (double f : {0.1, 0.5, 1.0}) {
          worst = std::max(worst, std::abs(psi(f * lambda, lambda, r, {61}) -
                                           psi(f * lambda, lambda, r, {121})));
        }
      }
    }
    return worst;
  });
  s.guarded("replica", "Gaussian integration by parts for tanh, order 61", "<", 1e-8, [] {
    const GaussRule& gh = gauss_hermite(61);
    double worst = 0.0;
    // g(z) = tanh(a z + b); larger slopes pull the pole of tanh toward the
    // real axis and need more nodes
    for (double a : {0.5, 1.0}) {
      for (double b : {-0.3, 0.0, 0.7}) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
          const double z = gh.nodes[k], c = std::cosh(a * z + b);
          lhs += gh.weights[k] * z * std::tanh(a * z + b);
          rhs += gh.weights[k] * a / (c * c);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
    return worst;
  });
  s.guarded("replica", "minimizer vs state evolution from q0 = lambda", "<=", 1e-8, [] {
    double worst = 0.0;
    for (double r : {0.5, 0.3}) {
      for (double lambda : {1.5, 2.0, 3.0}) {
        const StateEvolution se = state_evolution(lambda, r, lambda);
        if (!se.converged) return std::nan("");
        worst = std::max(worst, std::abs(se.q_fixed - minimize_psi(lambda, r).q_star));
      }
    }
    return worst;
  });
  s.guarded("replica", "psi_star - (lambda/4 - 1e-4) for lambda >= 1.2", "<", 0.0, [] {
    double worst = -1e300;
    for (double lambda : {1.2, 1.6, 2.5, 4.0}) {
      worst = std::max(worst, minimize_psi(lambda, 0.5).psi_star - (lambda / 4 - 1e-4));
    }
    return worst;
  });
}

void interpolation_checks(Suite& s) {
  const ModelParams p = params_from_channel(8, 0.4, 0.5, 2.0, 1);
  PathConfig pc;
  pc.steps = 20;
  pc.instances = 40;
  pc.seed = s.seed(9);
  const InterpolationPath a = solve_R_star(p, 0.1, pc);
  s.guarded("interpolation", "repeat solve mismatches", "==", 0.0, [&] {
    const InterpolationPath b = solve_R_star(p, 0.1, pc);
    return static_cast<double>((a.R_values != b.R_values) + (a.q_values != b.q_values));
  });
  s.add("interpolation", "R(0) - epsilon", a.R_values.front() - 0.1, "==", 0.0);
  {
    int bad = 0;
    for (std::size_t k = 0; k < a.q_values.size(); ++k) {
      bad += a.q_values[k] < 0.0 || a.q_values[k] > p.lambda_n + 1e-12;
      if (k > 0) bad += a.R_values[k] < a.R_values[k - 1];
    }
    s.add("interpolation", "rate outside [0, lambda] or R decreasing", bad, "==", 0.0);
  }
  s.guarded("interpolation", "Euler order from K = 10, 20, 40", "in", 0.7, [&] {
    const ModelParams q = params_from_channel(10, 0.5, 0.5, 2.0, 1);
    std::vector<double> end;
    for (int K : {10, 20, 40}) {
      PathConfig c = pc;
      c.steps = K;
      c.freeze_disorder = true;
      end.push_back(solve_R_star(q, 0.2, c).R_values.back());
    }
    return std::log2(std::abs(end[0] - end[1]) / std::abs(end[1] - end[2]));
  }, 1.3);
  s.guarded("interpolation", "smallest dR*/d(epsilon), n = 8", ">=", 0.98, [&] {
    return liouville_monotonicity(p, 0.1, 0.0, pc).min_slope;
  });
  s.guarded("interpolation", "free-energy shift identity (stderr units)", "<", 3.0, [&] {
    const FreeEnergyShift f = free_energy_shift(params_from_channel(6, 0.35, 0.5, 1.5, 1), 0.3, 2000, s.seed(10));
    return std::abs(f.difference.mean) / f.difference.stderr_;
  });
  s.guarded("interpolation", "bracket of dH/dt on the enumerated ensemble", "<", 1e-10, [] {
    const ModelParams q = params_from_channel(3, 0.3, 0.4, 0.3, -1);
    double worst = 0.0;
    for (double t : {0.0, 0.4, 0.9}) {
      const EnsembleAverages e = enumerate_ensemble(q, t, 0.5, 20);
      worst = std::max({worst, std::abs(e.dH_sbm), std::abs(e.dH_dec)});
    }
    return worst;
  });
  SumRuleConfig sc;
  sc.path = pc;
  sc.path.instances = 100;
  sc.lhs_samples = 2000;
  const ModelParams sp = params_from_channel(6, 0.5, 0.5, 1.5, 1);
  SumRuleReport audit;
  bool audit_ok = true;
  try {
    audit = sum_rule_audit(sp, 0.1, sc);
  } catch (const std::exception&) {
    audit_ok = false;
  }
  const double nan = std::nan("");
  double r2_min = audit_ok ? 1e300 : nan;
  for (double v : audit.r2_at_nodes) r2_min = std::min(r2_min, v);
  s.add("interpolation", "R1", audit_ok ? audit.r1 : nan, ">=", -1e-12);
  s.add("interpolation", "smallest R2(t)", r2_min, ">=", -1e-12);
  s.add("interpolation", "sum-rule cancellation nodes over budget",
        audit_ok ? static_cast<double>(!audit.cancellation_ok) : nan, "==", 0.0);
  s.add("interpolation", "exact balance residual (stderr units, +2e-3 slack)",
        audit_ok ? std::abs(audit.closure_residual) / (audit.closure_stderr + 2e-3 / 3) : nan,
        "<", 3.0);
}

void ibp_checks(Suite& s) {
  s.guarded("interpolation", "built-in approximate IBP checks over the bound", "==", 0.0, [] {
    int bad = 0;
    for (const IbpCheck& c : builtin_ibp_checks()) bad += !c.pass;
    return static_cast<double>(bad);
  });
  s.guarded("interpolation", "approximate IBP residual for linear g", "==", 0.0, [] {
    return approx_ibp_check(TestFunction::kLinear, {LawKind::kBernoulli, 0.3}).residual;
  });
  s.guarded("interpolation", "edge IBP residual slope in delta, n = 6", "in", 1.7, [&] {
    return edge_ibp_delta_sweep(6, 0.4, 0.3, 0.05, 4, 0.0, 3, s.seed(11)).slope;
  }, 2.3);
}

}  // namespace

VerifyReport run_verify(std::uint64_t seed) {
  Suite s(seed);
  model_checks(s);
  graph_checks(s);
  exact_checks(s);
  mc_checks(s);
  replica_checks(s);
  interpolation_checks(s);
  ibp_checks(s);
  return s.take();
}

}  // namespace sbmai
