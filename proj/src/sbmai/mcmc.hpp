#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbmai/exact.hpp"
#include "sbmai/instance.hpp"
#include "sbmai/local_fields.hpp"
#include "sbmai/model.hpp"

namespace sbmai {

enum class ChainInit { kPlanted, kRandom, kPrior };

const char* to_string(ChainInit init);
ChainInit parse_chain_init(const std::string& name);

struct McmcConfig {
  int sweeps = 2000;  // total per chain, burn-in included
  int burn_in = 500;
  int chains = 4;
  ChainInit init = ChainInit::kPlanted;
  int thin = 1;
  std::uint64_t seed = 1;

  int kept_per_chain() const { return (sweeps - burn_in) / thin; }
  // Throws kParameter unless sweeps > burn_in >= 0, chains >= 1, thin >= 1
  // and every chain keeps at least one sample per batch.
  void validate() const;
};

constexpr int kBatches = 32;
constexpr double kRhatThreshold = 1.1;

// Systematic-scan heat bath on the interpolating posterior. Draws are keyed
// by (key, sweep, site), so a chain is a pure function of its key.
class HeatBathChain {
 public:
  HeatBathChain(const LocalFields& fields, std::vector<std::uint8_t> classes,
                std::uint64_t key);

  void sweep();

  const std::vector<std::uint8_t>& classes() const { return classes_; }
  const std::vector<std::uint64_t>& ones() const { return ones_; }
  double log_weight() const { return log_weight_; }
  std::uint64_t sweeps_done() const { return sweep_; }

 private:
  const LocalFields* fields_;
  std::vector<std::uint8_t> classes_;
  std::vector<std::uint64_t> ones_;
  int ones_total_ = 0;
  double log_weight_ = 0.0;
  std::uint64_t key_;
  std::uint64_t sweep_ = 0;
};

// Starting configuration for a chain.
std::vector<std::uint8_t> initial_classes(const PlantedInstance& inst,
                                          const ModelParams& params,
                                          ChainInit init, std::uint64_t key);

struct McmcReport {
  GibbsReport brackets;  // exact = false; log_Z and F stay NaN
  std::vector<double> mean_x_stderr;
  double Q_stderr = 0.0;
  double Q2_stderr = 0.0;
  double L_stderr = 0.0;
  double L2_stderr = 0.0;
  // Split potential-scale reduction per trace; r_hat is the largest. Q is
  // not invariant under a global flip, so at r = 1/2 chains sitting in
  // mirrored modes raise r_hat_overlap alone.
  double r_hat_overlap = 1.0;
  double r_hat_overlap_sq = 1.0;
  double r_hat_energy = 1.0;
  double r_hat = 1.0;
  bool non_mixing = false;
  std::size_t samples = 0;
};

// Bracket estimates from config.chains independent chains. Each stderr is
// the larger of the pooled 32-batch-means error and the between-chain error.
// want_pairs fills brackets.pair_xx.
McmcReport mcmc_brackets(const PlantedInstance& inst, const ModelParams& params,
                         double t, double R, const McmcConfig& config,
                         bool want_pairs = false);

}  // namespace sbmai
