#include "sbmai/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "sbmai/error.hpp"
#include "sbmai/local_fields.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/rng.hpp"

namespace sbmai {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kRecomputeMask = (std::uint64_t{1} << 16) - 1;
constexpr int kMaxBlockBits = 8;
constexpr int kSerialBelow = 13;  // small enumerations skip thread start-up

void check_cap(int n, int cap) {
  if (cap < 1 || cap > kMaxEnumerationCap) {
    fail(ErrorKind::kParameter, "enumeration cap must lie in [1, 30]");
  }
  if (n < 1) fail(ErrorKind::kParameter, "instance has no nodes");
  if (n > cap) {
    std::ostringstream os;
    os << "n = " << n << " exceeds the enumeration cap " << cap
       << "; use the Monte Carlo engine (mi-mc / mcmc brackets) instead";
    fail(ErrorKind::kSize, os.str());
  }
}

// Weighted sums with a shared reference log-weight `shift`; every stored sum
// carries the factor exp(-shift).
struct Accum {
  double shift = kNegInf;
  double z = 0.0;
  std::vector<double> one;   // sum w [class_i = 1]
  std::vector<double> pair;  // sum w [class_i = class_j = 1], i < j
  double q = 0.0, q2 = 0.0, l = 0.0, l2 = 0.0;

  void rescale(double new_shift) {
    const double f = std::exp(shift - new_shift);
    z *= f;
    for (auto& v : one) v *= f;
    for (auto& v : pair) v *= f;
    q *= f;
    q2 *= f;
    l *= f;
    l2 *= f;
    shift = new_shift;
  }

  void merge(Accum& other) {
    if (other.shift == kNegInf) return;
    if (shift == kNegInf) {
      *this = std::move(other);
      return;
    }
    const double m = std::max(shift, other.shift);
    rescale(m);
    other.rescale(m);
    z += other.z;
    for (std::size_t i = 0; i < one.size(); ++i) one[i] += other.one[i];
    for (std::size_t i = 0; i < pair.size(); ++i) pair[i] += other.pair[i];
    q += other.q;
    q2 += other.q2;
    l += other.l;
    l2 += other.l2;
  }
};

struct Context {
  const LocalFields* lf = nullptr;
  int n = 0;
  double xv[2] = {};
  std::vector<double> qterm;  // X_i x(c) / n, [2 i + c]
  std::vector<double> lterm;  // (x^2/2 - x X_i - x z_i / (2 sqrt R)) / n
};

template <bool kFull, bool kPairs>
void run_block(const Context& ctx, std::uint64_t begin, std::uint64_t count,
               Accum& acc) {
  const LocalFields& lf = *ctx.lf;
  const int n = ctx.n;
  std::uint64_t ones = begin ^ (begin >> 1);
  int total = 0;
  double lw = 0.0, q = 0.0, l = 0.0;

  auto refresh = [&] {
    total = std::popcount(ones);
    lw = lf.log_weight(&ones);
    if constexpr (kFull) {
      q = 0.0;
      l = 0.0;
      for (int i = 0; i < n; ++i) {
        const int c = static_cast<int>((ones >> i) & 1U);
        q += ctx.qterm[2 * i + c];
        l += ctx.lterm[2 * i + c];
      }
    }
  };

  auto add = [&] {
    if (acc.shift == kNegInf) {
      acc.shift = lw;
    } else if (lw > acc.shift + 64.0) {
      acc.rescale(lw);
    }
    const double w = std::exp(lw - acc.shift);
    acc.z += w;
    if constexpr (kFull) {
      for (std::uint64_t b = ones; b != 0; b &= b - 1) {
        const int i = std::countr_zero(b);
        acc.one[i] += w;
        if constexpr (kPairs) {
          double* row = &acc.pair[static_cast<std::size_t>(i) * n];
          for (std::uint64_t c = b & (b - 1); c != 0; c &= c - 1) {
            row[std::countr_zero(c)] += w;
          }
        }
      }
      acc.q += w * q;
      acc.q2 += w * q * q;
      acc.l += w * l;
      acc.l2 += w * l * l;
    }
  };

  refresh();
  add();
  double fields[2];
  for (std::uint64_t k = begin + 1; k < begin + count; ++k) {
    const int i = std::countr_zero(k);
    const int c = static_cast<int>((ones >> i) & 1U);
    const int c2 = c ^ 1;
    lf.pair_fields(i, &ones, total, fields);
    lw += lf.site(i, c2) - lf.site(i, c) + fields[c2] - fields[c];
    ones ^= std::uint64_t{1} << i;
    total += c2 ? 1 : -1;
    if constexpr (kFull) {
      q += ctx.qterm[2 * i + c2] - ctx.qterm[2 * i + c];
      l += ctx.lterm[2 * i + c2] - ctx.lterm[2 * i + c];
    }
    if ((k & kRecomputeMask) == 0) refresh();
    add();
  }
}

void merge_range(std::vector<Accum>& blocks, std::size_t lo, std::size_t hi) {
  // fixed binary tree; result lands in blocks[lo]
  if (hi - lo <= 1) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  merge_range(blocks, lo, mid);
  merge_range(blocks, mid, hi);
  blocks[lo].merge(blocks[mid]);
}

template <bool kFull, bool kPairs>
Accum enumerate(const Context& ctx) {
  const int n = ctx.n;
  const int block_bits = std::min(n, kMaxBlockBits);
  const std::size_t blocks = std::size_t{1} << block_bits;
  const std::uint64_t per_block = std::uint64_t{1} << (n - block_bits);
  std::vector<Accum> acc(blocks);
  for (auto& a : acc) {
    if constexpr (kFull) a.one.assign(n, 0.0);
    if constexpr (kPairs) a.pair.assign(static_cast<std::size_t>(n) * n, 0.0);
  }
  auto body = [&](std::size_t b) {
    run_block<kFull, kPairs>(ctx, b * per_block, per_block, acc[b]);
  };
  if (n < kSerialBelow) {
    for (std::size_t b = 0; b < blocks; ++b) body(b);
  } else {
    parallel_for(blocks, body);
  }
  merge_range(acc, 0, blocks);
  return std::move(acc[0]);
}

Context make_context(const LocalFields& lf, const PlantedInstance& inst,
                     const ModelParams& params, double R, bool full) {
  Context ctx;
  ctx.lf = &lf;
  ctx.n = inst.n();
  const Alphabet a = params.alphabet();
  ctx.xv[0] = a.x1;
  ctx.xv[1] = a.x2;
  if (!full) return ctx;
  const int n = ctx.n;
  const std::vector<double> z = side_noise(inst);
  const bool use_z = R > 0.0 && !z.empty();
  const double inv = use_z ? 1.0 / (2.0 * std::sqrt(R)) : 0.0;
  ctx.qterm.resize(2 * static_cast<std::size_t>(n));
  ctx.lterm.resize(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double x = ctx.xv[c];
      const double X = inst.labels[i];
      ctx.qterm[2 * i + c] = X * x / n;
      double lt = 0.5 * x * x - x * X;
      if (use_z) lt -= x * z[i] * inv;
      ctx.lterm[2 * i + c] = lt / n;
    }
  }
  return ctx;
}

}  // namespace

void class_pair_marginals(const GibbsReport& brackets, const Alphabet& a, int i,
                          int j, double P[2][2]) {
  const std::size_t n = brackets.mean_x.size();
  const double dx = a.x1 - a.x2;
  const double mi = brackets.mean_x[i], mj = brackets.mean_x[j];
  const double pi0 = (mi - a.x2) / dx;
  const double pj0 = (mj - a.x2) / dx;
  const double xx = brackets.pair_xx[static_cast<std::size_t>(i) * n + j];
  P[0][0] = (xx - a.x2 * (mi + mj) + a.x2 * a.x2) / (dx * dx);
  P[0][1] = pi0 - P[0][0];
  P[1][0] = pj0 - P[0][0];
  P[1][1] = 1.0 - pi0 - pj0 + P[0][0];
}

double hamiltonian(std::span<const double> x, const PlantedInstance& inst,
                   const ModelParams& params, double t, double R) {
  const int n = inst.n();
  if (static_cast<int>(x.size()) != n) {
    fail(ErrorKind::kParameter, "configuration length does not match n");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorKind::kParameter, "interpolation time t must lie in [0, 1]");
  }
  if (R > 0.0 && !inst.has_side_channel()) {
    fail(ErrorKind::kParameter, "R > 0 requires side observations y");
  }
  const double s = std::sqrt(1.0 - t);
  const double up = s * params.delta / params.p_bar;
  const double down = s * params.delta / (1.0 - params.p_bar);
  double h = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool g = inst.edges.has(i, j);
      const double arg = g ? 1.0 + up * x[i] * x[j] : 1.0 - down * x[i] * x[j];
      if (!(arg > 0.0)) {
        std::ostringstream os;
        os << "nonpositive logarithm argument " << arg << " on pair (" << i
           << ", " << j << ")" << (g ? " [edge]" : " [non-edge]");
        fail(ErrorKind::kDomain, os.str());
      }
      h -= std::log(arg);
    }
  }
  if (R > 0.0) {
    const double sr = std::sqrt(R);
    for (int i = 0; i < n; ++i) h -= sr * inst.y[i] * x[i] - 0.5 * R * x[i] * x[i];
  }
  return h;
}

GibbsReport gibbs_report(const PlantedInstance& inst, const ModelParams& params,
                         double t, double R, bool want_pairs, int cap) {
  const int n = inst.n();
  check_cap(n, cap);
  const LocalFields lf(inst, params, t, R);
  const Context ctx = make_context(lf, inst, params, R, true);
  Accum acc = want_pairs ? enumerate<true, true>(ctx) : enumerate<true, false>(ctx);

  GibbsReport rep;
  rep.t = t;
  rep.R = R;
  rep.log_Z = acc.shift + std::log(acc.z);
  rep.F = -rep.log_Z / n;
  const double x1 = ctx.xv[0], x2 = ctx.xv[1];
  const double dx = x2 - x1;
  std::vector<double> p1(n);
  rep.mean_x.resize(n);
  for (int i = 0; i < n; ++i) {
    p1[i] = acc.one[i] / acc.z;
    rep.mean_x[i] = x1 + dx * p1[i];
  }
  double qm = 0.0;
  for (int i = 0; i < n; ++i) qm += inst.labels[i] * rep.mean_x[i];
  rep.Q_mean = qm / n;
  rep.Q2_mean = acc.q2 / acc.z;
  rep.L_mean = acc.l / acc.z;
  rep.L2_mean = acc.l2 / acc.z;
  if (want_pairs) {
    rep.pair_xx.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      rep.pair_xx[static_cast<std::size_t>(i) * n + i] =
          x1 * x1 + (x2 * x2 - x1 * x1) * p1[i];
      for (int j = i + 1; j < n; ++j) {
        const double pij = acc.pair[static_cast<std::size_t>(i) * n + j] / acc.z;
        const double v = x1 * x1 + x1 * dx * (p1[i] + p1[j]) + dx * dx * pij;
        rep.pair_xx[static_cast<std::size_t>(i) * n + j] = v;
        rep.pair_xx[static_cast<std::size_t>(j) * n + i] = v;
      }
    }
  }
  return rep;
}

double log_partition(const PlantedInstance& inst, const ModelParams& params,
                     double t, double R, int cap) {
  check_cap(inst.n(), cap);
  const LocalFields lf(inst, params, t, R);
  const Context ctx = make_context(lf, inst, params, R, false);
  const Accum acc = enumerate<false, false>(ctx);
  return acc.shift + std::log(acc.z);
}

double exact_mi_tiny(const ModelParams& params, double t) {
  const int n = params.n;
  if (n < 1 || n > 5) {
    fail(ErrorKind::kSize, "exact graph enumeration needs n <= 5; use mi-mc");
  }
  if (params.delta == 0.0 || t == 1.0) return 0.0;
  const Alphabet a = params.alphabet();
  const int m = n * (n - 1) / 2;
  const int configs = 1 << n;
  const int graphs = 1 << m;

  std::vector<double> prior(configs);
  // edge probability of pair k under configuration x
  std::vector<double> pe(static_cast<std::size_t>(configs) * m);
  for (int x = 0; x < configs; ++x) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= a.weight((x >> i) & 1);
    prior[x] = p;
    int k = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++k) {
        pe[static_cast<std::size_t>(x) * m + k] =
            params.edge_prob((x >> i) & 1, (x >> j) & 1, t);
      }
    }
  }

  std::vector<double> lik(configs);
  double info = 0.0;
  for (int g = 0; g < graphs; ++g) {
    double marginal = 0.0;
    for (int x = 0; x < configs; ++x) {
      double p = 1.0;
      for (int k = 0; k < m; ++k) {
        const double q = pe[static_cast<std::size_t>(x) * m + k];
        p *= ((g >> k) & 1) ? q : 1.0 - q;
      }
      lik[x] = p;
      marginal += prior[x] * p;
    }
    for (int x = 0; x < configs; ++x) {
      if (lik[x] > 0.0) info += prior[x] * lik[x] * std::log(lik[x] / marginal);
    }
  }
  return info / n;
}

double mi_closed_form_first_term(const ModelParams& params, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorKind::kParameter, "interpolation time t must lie in [0, 1]");
  }
  const double r = params.r;
  const double p = params.p_bar;
  const double d = std::sqrt(1.0 - t) * params.delta;
  const double u11 = (1.0 - r) / r;  // x1^2
  const double u22 = r / (1.0 - r);  // x2^2
  auto term = [&](double weight, double coeff, double arg) {
    if (!(arg > 0.0)) {
      std::ostringstream os;
      os << "nonpositive logarithm argument " << arg << " in the closed-form MI";
      fail(ErrorKind::kDomain, os.str());
    }
    return weight * coeff * std::log(arg);
  };
  double s = 0.0;
  s += term(r * r, p + d * u11, 1.0 + d / p * u11);
  s += term(r * r, 1.0 - p - d * u11, 1.0 - d / (1.0 - p) * u11);
  s += term((1.0 - r) * (1.0 - r), p + d * u22, 1.0 + d / p * u22);
  s += term((1.0 - r) * (1.0 - r), 1.0 - p - d * u22, 1.0 - d / (1.0 - p) * u22);
  s += term(2.0 * r * (1.0 - r), p - d, 1.0 - d / p);
  s += term(2.0 * r * (1.0 - r), 1.0 - p + d, 1.0 + d / (1.0 - p));
  return 0.5 * (params.n - 1) * s;
}

Estimate mi_via_free_energy(const ModelParams& params, std::size_t samples,
                            std::uint64_t seed, int cap) {
  check_cap(params.n, cap);
  if (samples < 2) fail(ErrorKind::kParameter, "need at least 2 samples");
  if (params.delta == 0.0) return {0.0, 0.0};
  const double first = mi_closed_form_first_term(params, 0.0);
  std::vector<double> logz(samples);
  parallel_for(samples, [&](std::size_t k) {
    const PlantedInstance inst =
        sample_instance(params, 0.0, 0.0, derive_key(seed, Stream::kInstance, k));
    logz[k] = log_partition(inst, params, 0.0, 0.0, cap);
  });
  const double mean = pairwise_sum(logz) / samples;
  std::vector<double> dev(samples);
  for (std::size_t k = 0; k < samples; ++k) dev[k] = (logz[k] - mean) * (logz[k] - mean);
  const double var = pairwise_sum(dev) / (samples - 1);
  const int n = params.n;
  return {first - mean / n, std::sqrt(var / samples) / n};
}

}  // namespace sbmai
