// Acceptance run: one PASS/FAIL line per criterion, numbered 1 to 12.
// Arguments select criteria (e.g. `acceptance 1 4 11`); none runs all.
// Exit status is 0 only when every selected criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sbmai/concentration.hpp"
#include "sbmai/ensemble.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/ibp.hpp"
#include "sbmai/interpolation.hpp"
#include "sbmai/replica.hpp"
#include "sbmai/ti.hpp"

using namespace sbmai;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<double> range(double lo, double hi, double step) {
  std::vector<double> v;
  const long count = std::lround((hi - lo) / step);
  for (long k = 0; k <= count; ++k) v.push_back(lo + k * step);
  return v;
}

void c1_trivial_limit(Outcome& o) {
  double worst = 0.0;
  for (double lambda : range(0.1, 5.0, 4.9 / 19)) {
    for (double r : range(0.05, 0.5, 0.45 / 19)) {
      worst = std::max(worst, std::abs(psi(0.0, lambda, r) - lambda / 4.0));
    }
  }
  o.detail << "max |psi(0) - lambda/4| = " << fmt(worst) << " over 20x20 grid";
  o.require(worst <= 1e-12, "tolerance 1e-12");
}

void c2_continuous_transition(Outcome& o) {
  const PhaseDiagram d = phase_diagram(range(0.5, 1.5, 0.01), {0.3, 0.4, 0.5});
  for (const PhaseRow& row : d.rows) {
    o.detail << "r=" << fmt(row.r, 3) << ": lambda_c=" << fmt(row.lambda_c, 4) << " ("
             << to_string(row.order) << ") ";
    o.require(row.lambda_c >= 0.95 && row.lambda_c <= 1.05, "lambda_c in [0.95, 1.05]");
  }
}

void c3_tricritical(Outcome& o) {
  const PhaseDiagram d = phase_diagram(range(0.5, 1.5, 0.01), range(0.1, 0.3, 0.005));
  o.detail << "r_hat* = " << fmt(d.r_star, 5) << " (target " << fmt(tricritical_r(), 5) << " +- 0.02)";
  o.require(d.r_star_found, "continuous/discontinuous flip found");
  o.require(std::abs(d.r_star - tricritical_r()) <= 0.02, "within 0.02");
}

void c4_oracle_equivalence(Outcome& o) {
  struct Case {
    ModelParams p;
    const char* label;
  };
  const std::vector<Case> cases = {
      {params_from_delta(4, 0.5, 0.5, 0.0), "delta=0"},
      {params_from_channel(4, 0.5, 0.5, 1.5, 1), "r=.5 lam=1.5"},
      {params_from_channel(4, 0.4, 0.4, 1.0, 1), "r=.4 p=.4 lam=1"},
      {params_from_channel(4, 0.5, 0.3, 1.0, -1), "disassort lam=1"},
      {params_from_delta(4, 0.2, 0.5, 0.1), "r=.2 delta=.1"},
  };
  std::uint64_t seed = 101;
  for (const Case& c : cases) {
    const double exact = exact_mi_tiny(c.p);
    const Estimate mc = mi_via_free_energy(c.p, 100000, seed++);
    const double z = mc.stderr_ > 0 ? std::abs(mc.mean - exact) / mc.stderr_ : 0.0;
    o.detail << c.label << ": z=" << fmt(z, 3) << " ";
    if (c.p.delta == 0.0) {
      o.require(exact == 0.0 && mc.mean == 0.0, "delta=0 gives exactly 0");
    } else {
      o.require(z <= 3.0, std::string(c.label) + " within 3 stderr");
    }
  }
}

void c5_nishimori(Outcome& o) {
  const ModelParams p = params_from_channel(4, 0.4, 0.5, 1.5, 1);
  double worst = 0.0;
  for (double t : {0.0, 0.5}) {
    for (double R : {0.0, 0.3}) {
      const EnsembleAverages e = enumerate_ensemble(p, t, R);
      for (int i = 0; i < e.n; ++i) {
        worst = std::max(worst, std::abs(e.truth_bracket[i] - e.bracket_sq[i]));
        for (int j = 0; j < e.n; ++j) {
          const std::size_t k = static_cast<std::size_t>(i) * e.n + j;
          worst = std::max(worst, std::abs(e.pair_truth_bracket[k] - e.pair_bracket_sq[k]));
        }
      }
    }
  }
  o.detail << "max identity gap " << fmt(worst) << " at r=0.4, lambda=1.5";
  o.require(worst <= 1e-10, "tolerance 1e-10");
}

void c6_finite_n_trend(Outcome& o) {
  const double target = minimize_psi(1.5, 0.5).psi_star;
  std::vector<double> gap;
  std::uint64_t seed = 601;
  for (int n : {8, 12, 16}) {
    const Estimate mi = mi_via_free_energy(params_from_channel(n, 0.5, 0.5, 1.5, 1), 4000, seed++);
    gap.push_back(std::abs(mi.mean - target));
    o.detail << "n=" << n << ": " << fmt(mi.mean, 5) << "+-" << fmt(mi.stderr_, 2) << " ";
  }
  o.detail << "min psi=" << fmt(target, 5);
  o.require(gap[1] < gap[0] && gap[2] < gap[1], "gap shrinks monotonically");
  o.require(gap[2] < gap[0], "gap(16) < gap(8)");
}

Estimate run_ti(int n, std::size_t instances, TiIntegrand integrand, std::size_t* flagged) {
  TiConfig cfg;
  cfg.mcmc.sweeps = 2000;
  cfg.mcmc.burn_in = 500;
  cfg.mcmc.chains = 2;
  cfg.mcmc.seed = 700 + n;
  cfg.instances = instances;
  cfg.integrand = integrand;
  const TiEstimate e = ti_mutual_information(params_from_channel(n, 0.5, 0.5, 1.5, 1),
                                             make_t_grid(20, TiGridKind::kUniform), cfg);
  if (flagged) *flagged = e.flagged_nodes.size();
  return e.mi_per_node;
}

void c7_thermodynamic_integration(Outcome& o) {
  const double target = minimize_psi(1.5, 0.5).psi_star;
  std::size_t flagged = 0;
  const Estimate big = run_ti(300, 32, TiIntegrand::kEdge, &flagged);
  o.detail << "n=300: " << fmt(big.mean, 5) << " vs min psi " << fmt(target, 5)
           << " (flagged nodes " << flagged << ") ";
  o.require(std::abs(big.mean - target) <= 0.05, "n=300 within 0.05");

  const Estimate small = run_ti(12, 400, TiIntegrand::kEdge, &flagged);
  const Estimate exact = mi_via_free_energy(params_from_channel(12, 0.5, 0.5, 1.5, 1), 20000, 707);
  const double comb = std::hypot(small.stderr_, exact.stderr_);
  o.detail << "n=12: " << fmt(small.mean, 5) << " vs oracle " << fmt(exact.mean, 5) << ", "
           << fmt(std::abs(small.mean - exact.mean) / comb, 3) << " combined stderr (flagged nodes "
           << flagged << ") ";
  o.require(std::abs(small.mean - exact.mean) <= 3.0 * comb, "n=12 within 3 combined stderr");
  const Estimate overlap = run_ti(12, 400, TiIntegrand::kOverlap, nullptr);
  o.detail << "info: overlap integrand at n=12 gives " << fmt(overlap.mean, 5);
}

void c8_monotonicity(Outcome& o) {
  PathConfig pc;
  pc.steps = 200;
  pc.instances = 200;
  pc.seed = 801;
  const LiouvilleReport r = liouville_monotonicity(params_from_channel(10, 0.5, 0.5, 1.5, 1), 0.1, 0.0, pc);
  o.detail << "min dR/deps = " << fmt(r.min_slope, 5) << " over " << r.slope.size()
           << " nodes (eps=0.1, d_eps=" << fmt(r.d_eps, 3) << ")";
  o.require(r.min_slope >= 0.98, "every node >= 0.98");
}

SumRuleReport sum_rule_at(int n) {
  SumRuleConfig sc;
  sc.path.steps = 100;
  sc.path.instances = 200;
  sc.path.seed = 901;
  sc.lhs_samples = 20000;
  return sum_rule_audit(params_from_channel(n, 0.5, 0.5, 1.0, 1), 0.05, sc);
}

void c9_sum_rule(Outcome& o) {
  const SumRuleReport big = sum_rule_at(12);
  std::size_t over = 0;
  for (std::size_t k = 0; k < big.cancellation.size(); ++k) {
    over += !(big.cancellation[k] <= big.cancellation_budget[k]);
  }
  const bool r2_nonneg = std::all_of(big.r2_at_nodes.begin(), big.r2_at_nodes.end(),
                                     [](double v) { return v >= 0.0; });
  const SumRuleReport small = sum_rule_at(8);
  o.detail << "n=12: nodes over budget " << over << "/" << big.cancellation.size() << ", R1=" << fmt(big.r1, 3)
           << ", R2=" << fmt(big.r2_integral, 3) << "; |residual| n=12 " << fmt(std::abs(big.residual), 3)
           << "+-" << fmt(big.residual_stderr, 2) << " vs n=8 " << fmt(std::abs(small.residual), 3) << "+-"
           << fmt(small.residual_stderr, 2);
  o.require(over == 0 && big.cancellation_ok, "cancellation within budget");
  o.require(big.r1 >= 0.0 && big.r2_integral >= 0.0 && r2_nonneg, "R1, R2 >= 0");
  o.require(std::abs(big.residual) < std::abs(small.residual), "residual shrinks from n=8 to n=12");
}

void c10_concentration(Outcome& o) {
  const FreeEnergyScan f = free_energy_variance(0.5, 0.5, 1.0, 1, {8, 10, 12, 14, 16, 18}, 2000, 1001);
  o.detail << "Var(F) slope " << fmt(f.slope, 4) << "; ";
  o.require(f.slope >= -1.5 && f.slope <= -0.6, "Var(F) slope in [-1.5, -0.6]");
  ConcentrationConfig cc;
  cc.path.steps = 20;
  cc.path.instances = 200;
  cc.path.seed = 1002;
  const ConcentrationScan s = overlap_variance_scan(0.5, 0.5, 1.0, 1, {8, 10, 12, 14}, cc);
  o.detail << "overlap variance";
  for (const ConcentrationRow& row : s.rows) o.detail << " " << fmt(row.variance.mean, 4);
  o.require(s.decreasing, "overlap variance strictly decreasing");
}

void c11_ibp(Outcome& o) {
  const std::vector<IbpCheck> checks = builtin_ibp_checks();
  int within = 0;
  double linear_max = 0.0;
  for (const IbpCheck& c : checks) {
    within += c.residual <= c.bound;
    if (c.g == TestFunction::kLinear) linear_max = std::max(linear_max, c.residual);
  }
  o.detail << within << "/" << checks.size() << " within bound, linear residual " << fmt(linear_max) << "; ";
  o.require(checks.size() == 12 && within == 12, "12 combinations within bound");
  o.require(linear_max == 0.0, "linear residual exactly 0");
  const EdgeIbpSweep s = edge_ibp_delta_sweep(6, 0.4, 0.3, 0.05, 4, 0.0, 3, 1101);
  o.detail << "edge slope " << fmt(s.slope, 4) << " at p_bar=0.3";
  o.require(std::abs(s.slope - 2.0) <= 0.3, "edge slope 2.0 +- 0.3");
  const EdgeIbpSweep half = edge_ibp_delta_sweep(6, 0.4, 0.5, 0.05, 4, 0.0, 3, 1101);
  o.detail << "; info: p_bar=0.5 slope " << fmt(half.slope, 4);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void c12_determinism(Outcome& o) {
  const auto dir = std::filesystem::temp_directory_path() / "sbmai_acceptance";
  std::filesystem::create_directories(dir);
  std::string files[2];
  for (int k = 0; k < 2; ++k) {
    const auto path = dir / ("verify" + std::to_string(k) + ".csv");
    const std::string cmd = std::string(SBMAI_CLI) + " verify --seed 7 --threads " +
                            std::to_string(k + 1) + " -o " + path.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.require(code == 0, "verify run " + std::to_string(k + 1) + " exit " + std::to_string(code));
    files[k] = slurp(path);
  }
  std::filesystem::remove_all(dir);
  o.detail << "two verify reports (" << files[0].size() << " bytes, 1 vs 2 threads)";
  o.require(!files[0].empty() && files[0] == files[1], "byte-identical reports");
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "replica trivial limit", 1, c1_trivial_limit},
      {2, "continuous transition at lambda_c = 1", 30, c2_continuous_transition},
      {3, "tricritical asymmetry r*", 300, c3_tricritical},
      {4, "oracle equivalence at n = 4", 60, c4_oracle_equivalence},
      {5, "Nishimori identities at n = 4", 60, c5_nishimori},
      {6, "finite-n trend to the replica limit", 600, c6_finite_n_trend},
      {7, "thermodynamic-integration estimator", 900, c7_thermodynamic_integration},
      {8, "interpolation monotonicity dR/deps >= 1", 600, c8_monotonicity},
      {9, "sum-rule audit", 600, c9_sum_rule},
      {10, "concentration trends", 600, c10_concentration},
      {11, "approximate integration by parts", 1, c11_ibp},
      {12, "determinism of verify", 600, c12_determinism},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
  int failed = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    // criterion 11's 1 s limit covers the 12 combinations; the edge sweep is timed with them
    if (secs > c.limit_s) {
      o.pass = false;
      o.detail << " [over time limit " << c.limit_s << " s]";
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s  (%.1f s)  %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
