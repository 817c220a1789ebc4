#include <cmath>
#include <vector>

#include "doctest.h"
#include "sbmai/error.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/mcmc.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/ti.hpp"

using namespace sbmai;

TEST_CASE("config validation") {
  McmcConfig c;
  CHECK_NOTHROW(c.validate());
  c.burn_in = c.sweeps;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.chains = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.sweeps = 40;
  c.burn_in = 10;
  CHECK_THROWS_AS(c.validate(), Error);  // 30 kept < 32 batches
  CHECK(parse_chain_init("prior") == ChainInit::kPrior);
  CHECK_THROWS_AS(parse_chain_init("cold"), Error);
}

TEST_CASE("heat bath leaves the posterior invariant") {
  const ModelParams p = params_from_channel(3, 0.3, 0.45, 0.5, 1);
  const PlantedInstance inst = sample_instance(p, 0.2, 0.6, 31);
  const LocalFields lf(inst, p, 0.2, 0.6);
  const Alphabet a = p.alphabet();

  // oracle: prior * exp(-H) from the term-by-term Hamiltonian
  double w[8], z = 0.0;
  for (int c = 0; c < 8; ++c) {
    std::vector<double> x(3);
    double prior = 1.0;
    for (int i = 0; i < 3; ++i) {
      const int k = (c >> i) & 1;
      x[i] = a.value(k);
      prior *= a.weight(k);
    }
    w[c] = prior * std::exp(-hamiltonian(x, inst, p, 0.2, 0.6));
    z += w[c];
  }

  HeatBathChain chain(lf, initial_classes(inst, p, ChainInit::kRandom, 5), 5);
  double hist[8] = {};
  const int sweeps = 1000000;
  for (int s = 0; s < sweeps; ++s) {
    chain.sweep();
    const auto& cls = chain.classes();
    hist[cls[0] | (cls[1] << 1) | (cls[2] << 2)] += 1.0;
  }
  double tv = 0.0;
  for (int c = 0; c < 8; ++c) tv += 0.5 * std::abs(hist[c] / sweeps - w[c] / z);
  CHECK(tv < 0.01);

  // incremental log-weight bookkeeping
  CHECK(std::abs(chain.log_weight() - lf.log_weight(chain.ones().data())) < 1e-9);
}

TEST_CASE("brackets against enumeration") {
  const ModelParams p = params_from_channel(10, 0.35, 0.5, 1.2, 1);
  const PlantedInstance inst = sample_instance(p, 0.1, 0.5, 8);
  const GibbsReport ex = gibbs_report(inst, p, 0.1, 0.5, true);
  McmcConfig c;
  c.sweeps = 40000;
  c.burn_in = 1000;
  c.chains = 4;
  c.seed = 3;
  const McmcReport mc = mcmc_brackets(inst, p, 0.1, 0.5, c, true);
  CHECK(!mc.non_mixing);
  CHECK(std::abs(mc.brackets.Q_mean - ex.Q_mean) < 3 * mc.Q_stderr);
  CHECK(std::abs(mc.brackets.Q2_mean - ex.Q2_mean) < 3 * mc.Q2_stderr);
  CHECK(std::abs(mc.brackets.L_mean - ex.L_mean) < 3 * mc.L_stderr);
  int outside = 0;
  for (int i = 0; i < 10; ++i) {
    outside += std::abs(mc.brackets.mean_x[i] - ex.mean_x[i]) > 3 * mc.mean_x_stderr[i];
  }
  CHECK(outside <= 1);
  double worst = 0.0;
  for (std::size_t k = 0; k < ex.pair_xx.size(); ++k) {
    worst = std::max(worst, std::abs(mc.brackets.pair_xx[k] - ex.pair_xx[k]));
  }
  CHECK(worst < 0.03);
  CHECK(!mc.brackets.exact);
  CHECK(std::isnan(mc.brackets.log_Z));
}

TEST_CASE("posterior equals prior at t = 1 without side channel") {
  const ModelParams p = params_from_channel(30, 0.3, 0.4, 1.0, 1);
  const PlantedInstance inst = sample_instance(p, 1.0, 0.0, 4);
  McmcConfig c;
  c.sweeps = 4000;
  c.burn_in = 100;
  const McmcReport mc = mcmc_brackets(inst, p, 1.0, 0.0, c);
  int outside = 0;
  for (int i = 0; i < 30; ++i) outside += std::abs(mc.brackets.mean_x[i]) > 3 * mc.mean_x_stderr[i];
  CHECK(outside <= 2);
}

TEST_CASE("decoupled sites follow the scalar channel") {
  const ModelParams p = params_from_delta(20, 0.3, 0.4, 0.0);
  // moderate R keeps every site away from a frozen posterior
  const double R = 0.8;
  const PlantedInstance inst = sample_instance(p, 0.0, R, 6);
  const Alphabet a = p.alphabet();
  McmcConfig c;
  c.sweeps = 20000;
  c.burn_in = 100;
  const McmcReport mc = mcmc_brackets(inst, p, 0.0, R, c);
  int outside = 0;
  for (int i = 0; i < 20; ++i) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double x = a.value(k);
      const double w = a.weight(k) * std::exp(std::sqrt(R) * inst.y[i] * x - R * x * x / 2);
      num += w * x;
      den += w;
    }
    outside += std::abs(mc.brackets.mean_x[i] - num / den) > 3 * mc.mean_x_stderr[i];
  }
  CHECK(outside <= 2);
}

TEST_CASE("chains are reproducible and thread independent") {
  const ModelParams p = params_from_channel(40, 0.5, 0.5, 2.0, 1);
  const PlantedInstance inst = sample_instance(p, 0.0, 0.0, 2);
  McmcConfig c;
  c.sweeps = 300;
  c.burn_in = 50;
  c.chains = 3;
  set_num_threads(1);
  const McmcReport a = mcmc_brackets(inst, p, 0.0, 0.0, c, true);
  set_num_threads(4);
  const McmcReport b = mcmc_brackets(inst, p, 0.0, 0.0, c, true);
  set_num_threads(0);
  CHECK(a.brackets.Q2_mean == b.brackets.Q2_mean);
  CHECK(a.brackets.mean_x == b.brackets.mean_x);
  CHECK(a.brackets.pair_xx == b.brackets.pair_xx);
  CHECK(a.r_hat == b.r_hat);
}

TEST_CASE("split R-hat flags chains stuck in different modes") {
  // symmetric prior and strong signal: random starts fall into x and -x
  const ModelParams p = params_from_channel(60, 0.5, 0.5, 12.0, 1);
  const PlantedInstance inst = sample_instance(p, 0.0, 0.0, 12);
  McmcConfig c;
  c.sweeps = 400;
  c.burn_in = 50;
  c.chains = 8;
  c.init = ChainInit::kRandom;
  const McmcReport mc = mcmc_brackets(inst, p, 0.0, 0.0, c);
  CHECK(mc.r_hat > kRhatThreshold);
  CHECK(mc.non_mixing);

  c.init = ChainInit::kPlanted;
  const McmcReport planted = mcmc_brackets(inst, p, 0.0, 0.0, c);
  CHECK(!planted.non_mixing);
}

TEST_CASE("edge slope integrates to the exact mutual information") {
  const ModelParams p = params_from_channel(8, 0.4, 0.5, 1.0, 1);
  TiConfig cfg;
  cfg.exact_brackets = true;
  cfg.integrand = TiIntegrand::kEdge;
  cfg.instances = 1500;
  cfg.mcmc.seed = 17;
  const TiEstimate ti = ti_mutual_information(p, make_t_grid(16, TiGridKind::kUniform), cfg);
  const Estimate ex = mi_via_free_energy(p, 20000, 5);
  const double se = std::hypot(ti.mi_per_node.stderr_, ex.stderr_);
  CHECK(std::abs(ti.mi_per_node.mean - ex.mean) < 3 * se);
  CHECK(ti.slope_at_t.back().mean == 0.0);
}

TEST_CASE("TI estimate invariants") {
  const ModelParams p = params_from_channel(24, 0.5, 0.5, 1.5, 1);
  TiConfig cfg;
  cfg.instances = 24;
  cfg.mcmc.sweeps = 400;
  cfg.mcmc.burn_in = 100;
  cfg.mcmc.chains = 2;
  const TiEstimate ti = ti_mutual_information(p, make_t_grid(8, TiGridKind::kGeometric), cfg);
  const Alphabet a = p.alphabet();
  const double top = std::pow(std::max(a.x1 * a.x1, a.x2 * a.x2), 2);
  for (const Estimate& e : ti.q2_at_t) {
    CHECK(e.mean >= -1e-12);
    CHECK(e.mean <= top + 1e-12);
  }
  // more noise, less alignment
  for (std::size_t k = 1; k < ti.q2_at_t.size(); ++k) {
    const double s = std::hypot(ti.q2_at_t[k].stderr_, ti.q2_at_t[k - 1].stderr_);
    CHECK(ti.q2_at_t[k].mean <= ti.q2_at_t[k - 1].mean + 2 * s);
  }
  CHECK(ti.mi_per_node.mean >= -3 * ti.mi_per_node.stderr_);
  CHECK(ti.mi_per_node.mean <= p.lambda_n / 4 + 3 * ti.mi_per_node.stderr_);
  CHECK(!ti.branch_ambiguity);

  CHECK_THROWS_AS(ti_mutual_information(p, {0.0, 0.5}, cfg), Error);
  CHECK_THROWS_AS(ti_mutual_information(p, {0.0, 0.6, 0.5, 1.0}, cfg), Error);
}

TEST_CASE("grid construction") {
  const auto u = make_t_grid(4, TiGridKind::kUniform);
  CHECK(u == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  const auto g = make_t_grid(10, TiGridKind::kGeometric, 1.3);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[1] - g[0] < g[10] - g[9]);
}
