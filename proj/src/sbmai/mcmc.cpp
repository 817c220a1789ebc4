#include "sbmai/mcmc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "sbmai/error.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/rng.hpp"

namespace sbmai {
namespace {

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Traced scalars.
enum Trace { kQ, kQ2, kL, kL2, kLogW, kTraces };

struct ChainAcc {
  std::size_t kept = 0;
  double sum[kTraces] = {};
  double batch[kTraces][kBatches] = {};
  double batch_count[kBatches] = {};
  double half_sum[2][kTraces] = {};
  double half_sq[2][kTraces] = {};
  std::vector<double> ones;        // per-node class-1 count
  std::vector<double> ones_batch;  // n x kBatches
  std::vector<std::uint64_t> columns;  // per node, one bit per kept sample
  std::size_t column_words = 0;
};

struct Estimator {
  double mean;
  double stderr_;
};

double sample_var(const double* v, std::size_t m) {
  if (m < 2) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += v[i];
  mean /= m;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += (v[i] - mean) * (v[i] - mean);
  return s / (m - 1);
}

// Chain means and batch-means stderrs combined across chains.
Estimator combine(const std::vector<double>& means, const std::vector<double>& se) {
  const std::size_t m = means.size();
  double mean = 0.0, pooled = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    mean += means[c];
    pooled += se[c] * se[c];
  }
  mean /= m;
  pooled = std::sqrt(pooled) / m;
  const double between = m >= 2 ? std::sqrt(sample_var(means.data(), m) / m) : 0.0;
  return {mean, std::max(pooled, between)};
}

double batch_stderr(const double* batch_sums, const double* counts) {
  double means[kBatches];
  int used = 0;
  for (int b = 0; b < kBatches; ++b) {
    if (counts[b] > 0) means[used++] = batch_sums[b] / counts[b];
  }
  return std::sqrt(sample_var(means, used) / used);
}

// Split-chain potential-scale reduction for one trace.
double split_r_hat(const std::vector<ChainAcc>& acc, int trace, std::size_t half) {
  if (half < 2) return 1.0;
  std::vector<double> means, vars;
  for (const ChainAcc& a : acc) {
    for (int h = 0; h < 2; ++h) {
      const double mu = a.half_sum[h][trace] / half;
      means.push_back(mu);
      vars.push_back(std::max(0.0, (a.half_sq[h][trace] - half * mu * mu) / (half - 1)));
    }
  }
  double W = 0.0;
  for (double v : vars) W += v;
  W /= vars.size();
  const double B_over_N = sample_var(means.data(), means.size());
  const double scale = std::max(1.0, std::abs(means[0]));
  if (W <= 1e-300 || W < 1e-24 * scale * scale) {
    return B_over_N <= 1e-24 * scale * scale ? 1.0
                                             : std::numeric_limits<double>::infinity();
  }
  const double N = static_cast<double>(half);
  const double var_plus = (N - 1.0) / N * W + B_over_N;
  return std::sqrt(var_plus / W);
}

}  // namespace

const char* to_string(ChainInit init) {
  switch (init) {
    case ChainInit::kPlanted: return "planted";
    case ChainInit::kRandom: return "random";
    case ChainInit::kPrior: return "prior";
  }
  return "planted";
}

ChainInit parse_chain_init(const std::string& name) {
  if (name == "planted") return ChainInit::kPlanted;
  if (name == "random") return ChainInit::kRandom;
  if (name == "prior") return ChainInit::kPrior;
  fail(ErrorKind::kParameter, "unknown chain init '" + name + "'");
}

void McmcConfig::validate() const {
  if (!(burn_in >= 0 && sweeps > burn_in)) {
    fail(ErrorKind::kParameter, "MCMC requires sweeps > burn_in >= 0");
  }
  if (chains < 1) fail(ErrorKind::kParameter, "MCMC requires chains >= 1");
  if (thin < 1) fail(ErrorKind::kParameter, "MCMC requires thin >= 1");
  if (kept_per_chain() < kBatches) {
    fail(ErrorKind::kParameter,
         "MCMC keeps fewer than 32 samples per chain; raise sweeps or lower thin");
  }
}

HeatBathChain::HeatBathChain(const LocalFields& fields,
                             std::vector<std::uint8_t> classes, std::uint64_t key)
    : fields_(&fields), classes_(std::move(classes)), key_(key) {
  if (static_cast<int>(classes_.size()) != fields.n()) {
    fail(ErrorKind::kParameter, "chain start has the wrong length");
  }
  ones_.assign(fields.words(), 0);
  for (int i = 0; i < fields.n(); ++i) {
    if (classes_[i]) {
      ones_[i >> 6] |= std::uint64_t{1} << (i & 63);
      ++ones_total_;
    }
  }
  log_weight_ = fields.log_weight(ones_.data());
}

void HeatBathChain::sweep() {
  const int n = fields_->n();
  const std::uint64_t base = sweep_ * static_cast<std::uint64_t>(n);
  double pf[2];
  for (int i = 0; i < n; ++i) {
    fields_->pair_fields(i, ones_.data(), ones_total_, pf);
    const double w0 = fields_->site(i, 0) + pf[0];
    const double w1 = fields_->site(i, 1) + pf[1];
    const double u = uniform01(counter_u64(key_, Stream::kSweep, base + i));
    const std::uint8_t c = u < logistic(w1 - w0) ? 1 : 0;
    if (c != classes_[i]) {
      log_weight_ += c ? (w1 - w0) : (w0 - w1);
      classes_[i] = c;
      ones_[i >> 6] ^= std::uint64_t{1} << (i & 63);
      ones_total_ += c ? 1 : -1;
    }
  }
  ++sweep_;
}

std::vector<std::uint8_t> initial_classes(const PlantedInstance& inst,
                                          const ModelParams& params,
                                          ChainInit init, std::uint64_t key) {
  const int n = inst.n();
  std::vector<std::uint8_t> c(n);
  switch (init) {
    case ChainInit::kPlanted:
      c = inst.classes;
      break;
    case ChainInit::kRandom:
      for (int i = 0; i < n; ++i) c[i] = uniform01(counter_u64(key, Stream::kInit, i)) < 0.5;
      break;
    case ChainInit::kPrior:
      for (int i = 0; i < n; ++i) {
        c[i] = uniform01(counter_u64(key, Stream::kInit, i)) >= params.r;
      }
      break;
  }
  return c;
}

McmcReport mcmc_brackets(const PlantedInstance& inst, const ModelParams& params,
                         double t, double R, const McmcConfig& config,
                         bool want_pairs) {
  config.validate();
  const int n = inst.n();
  const LocalFields lf(inst, params, t, R);
  const Alphabet a = params.alphabet();
  const double xv[2] = {a.x1, a.x2};

  // per-node contributions to Q and L
  const std::vector<double> z = side_noise(inst);
  const bool use_z = R > 0.0 && !z.empty();
  const double inv = use_z ? 1.0 / (2.0 * std::sqrt(R)) : 0.0;
  std::vector<double> qterm(2 * static_cast<std::size_t>(n));
  std::vector<double> lterm(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double x = xv[c], X = inst.labels[i];
      qterm[2 * i + c] = X * x / n;
      double lt = 0.5 * x * x - x * X;
      if (use_z) lt -= x * z[i] * inv;
      lterm[2 * i + c] = lt / n;
    }
  }

  const int chains = config.chains;
  const std::size_t kept = static_cast<std::size_t>(config.kept_per_chain());
  const std::size_t bsize = kept / kBatches;
  const std::size_t half = kept / 2;
  std::vector<ChainAcc> acc(chains);

  parallel_for(chains, [&](std::size_t ci) {
    ChainAcc& A = acc[ci];
    A.ones.assign(n, 0.0);
    A.ones_batch.assign(static_cast<std::size_t>(n) * kBatches, 0.0);
    if (want_pairs) {
      A.column_words = (kept + 63) / 64;
      A.columns.assign(static_cast<std::size_t>(n) * A.column_words, 0);
    }
    const std::uint64_t key = derive_key(config.seed, Stream::kChain, ci);
    HeatBathChain chain(lf, initial_classes(inst, params, config.init, key), key);
    for (int s = 0; s < config.burn_in; ++s) chain.sweep();
    for (std::size_t k = 0; k < kept; ++k) {
      for (int s = 0; s < config.thin; ++s) chain.sweep();
      const auto& cls = chain.classes();
      double v[kTraces];
      double q = 0.0, l = 0.0;
      for (int i = 0; i < n; ++i) {
        q += qterm[2 * i + cls[i]];
        l += lterm[2 * i + cls[i]];
      }
      v[kQ] = q;
      v[kQ2] = q * q;
      v[kL] = l;
      v[kL2] = l * l;
      v[kLogW] = chain.log_weight();
      const std::size_t b = std::min<std::size_t>(k / bsize, kBatches - 1);
      A.batch_count[b] += 1.0;
      for (int tr = 0; tr < kTraces; ++tr) {
        A.sum[tr] += v[tr];
        A.batch[tr][b] += v[tr];
      }
      if (k < 2 * half) {
        const int h = k < half ? 0 : 1;
        for (int tr = 0; tr < kTraces; ++tr) {
          A.half_sum[h][tr] += v[tr];
          A.half_sq[h][tr] += v[tr] * v[tr];
        }
      }
      for (int i = 0; i < n; ++i) {
        if (cls[i]) {
          A.ones[i] += 1.0;
          A.ones_batch[static_cast<std::size_t>(i) * kBatches + b] += 1.0;
          if (want_pairs) {
            A.columns[static_cast<std::size_t>(i) * A.column_words + (k >> 6)] |=
                std::uint64_t{1} << (k & 63);
          }
        }
      }
    }
    A.kept = kept;
  });

  McmcReport rep;
  rep.samples = kept * chains;
  GibbsReport& g = rep.brackets;
  g.t = t;
  g.R = R;
  g.exact = false;

  auto scalar = [&](int tr) {
    std::vector<double> means(chains), se(chains);
    for (int c = 0; c < chains; ++c) {
      means[c] = acc[c].sum[tr] / kept;
      se[c] = batch_stderr(acc[c].batch[tr], acc[c].batch_count);
    }
    return combine(means, se);
  };
  const Estimator q = scalar(kQ), q2 = scalar(kQ2), l = scalar(kL), l2 = scalar(kL2);
  g.Q_mean = q.mean;
  g.Q2_mean = q2.mean;
  g.L_mean = l.mean;
  g.L2_mean = l2.mean;
  rep.Q_stderr = q.stderr_;
  rep.Q2_stderr = q2.stderr_;
  rep.L_stderr = l.stderr_;
  rep.L2_stderr = l2.stderr_;

  const double dx = a.x2 - a.x1;
  std::vector<double> p1(n);
  g.mean_x.resize(n);
  rep.mean_x_stderr.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> means(chains), se(chains);
    for (int c = 0; c < chains; ++c) {
      means[c] = acc[c].ones[i] / kept;
      se[c] = batch_stderr(&acc[c].ones_batch[static_cast<std::size_t>(i) * kBatches],
                           acc[c].batch_count);
    }
    const Estimator e = combine(means, se);
    p1[i] = e.mean;
    g.mean_x[i] = a.x1 + dx * e.mean;
    rep.mean_x_stderr[i] = std::abs(dx) * e.stderr_;
  }

  if (want_pairs) {
    const double total = static_cast<double>(kept) * chains;
    g.pair_xx.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      g.pair_xx[static_cast<std::size_t>(i) * n + i] =
          a.x1 * a.x1 + (a.x2 * a.x2 - a.x1 * a.x1) * p1[i];
      for (int j = i + 1; j < n; ++j) {
        std::uint64_t both = 0;
        for (const ChainAcc& A : acc) {
          const std::uint64_t* ci = &A.columns[static_cast<std::size_t>(i) * A.column_words];
          const std::uint64_t* cj = &A.columns[static_cast<std::size_t>(j) * A.column_words];
          for (std::size_t w = 0; w < A.column_words; ++w) both += std::popcount(ci[w] & cj[w]);
        }
        const double pij = both / total;
        const double v = a.x1 * a.x1 + a.x1 * dx * (p1[i] + p1[j]) + dx * dx * pij;
        g.pair_xx[static_cast<std::size_t>(i) * n + j] = v;
        g.pair_xx[static_cast<std::size_t>(j) * n + i] = v;
      }
    }
  }

  rep.r_hat_overlap = split_r_hat(acc, kQ, half);
  rep.r_hat_overlap_sq = split_r_hat(acc, kQ2, half);
  rep.r_hat_energy = split_r_hat(acc, kLogW, half);
  rep.r_hat = std::max({rep.r_hat_overlap, rep.r_hat_overlap_sq, rep.r_hat_energy});
  rep.non_mixing = !(rep.r_hat <= kRhatThreshold);
  return rep;
}

}  // namespace sbmai
