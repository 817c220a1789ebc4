#include <cmath>
#include <vector>

#include "doctest.h"
#include "sbmai/error.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/parallel.hpp"

using namespace sbmai;

namespace {

// Straightforward double loop over configurations and pairs, long double
// accumulation, no incremental updates.
struct Naive {
  double log_Z;
  std::vector<double> mean_x, pair_xx;
  double Q, Q2, L, L2;
};

Naive naive_brackets(const PlantedInstance& inst, const ModelParams& p,
                     double t, double R) {
  const int n = inst.n();
  const Alphabet a = p.alphabet();
  const double s = std::sqrt(1.0 - t);
  std::vector<long double> lw(1u << n);
  long double mx = -1e300L;
  for (unsigned c = 0; c < (1u << n); ++c) {
    std::vector<double> x(n);
    long double lp = 0;
    for (int i = 0; i < n; ++i) {
      const int k = (c >> i) & 1;
      x[i] = a.value(k);
      lp += std::log(static_cast<long double>(a.weight(k)));
    }
    long double h = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const long double u = x[i] * x[j];
        if (inst.edges.has(i, j)) {
          h -= std::log(1.0L + s * p.delta * u / p.p_bar);
        } else {
          h -= std::log(1.0L - s * p.delta * u / (1.0L - p.p_bar));
        }
      }
    }
    for (int i = 0; i < n && R > 0; ++i) {
      h -= std::sqrt(static_cast<long double>(R)) * inst.y[i] * x[i] - 0.5L * R * x[i] * x[i];
    }
    lw[c] = lp - h;
    mx = std::max(mx, lw[c]);
  }
  long double z = 0;
  std::vector<long double> m(n, 0), pr(n * n, 0);
  long double q = 0, q2 = 0, l = 0, l2 = 0;
  for (unsigned c = 0; c < (1u << n); ++c) {
    const long double w = std::exp(lw[c] - mx);
    z += w;
    long double qq = 0, ll = 0;
    for (int i = 0; i < n; ++i) {
      const double xi = a.value((c >> i) & 1);
      m[i] += w * xi;
      for (int j = 0; j < n; ++j) pr[i * n + j] += w * xi * a.value((c >> j) & 1);
      qq += inst.labels[i] * xi;
      ll += 0.5L * xi * xi - xi * inst.labels[i];
      if (R > 0) ll -= xi * inst.z[i] / (2.0L * std::sqrt(static_cast<long double>(R)));
    }
    qq /= n;
    ll /= n;
    q += w * qq;
    q2 += w * qq * qq;
    l += w * ll;
    l2 += w * ll * ll;
  }
  Naive out;
  out.log_Z = static_cast<double>(mx + std::log(z));
  for (int i = 0; i < n; ++i) out.mean_x.push_back(static_cast<double>(m[i] / z));
  for (int k = 0; k < n * n; ++k) out.pair_xx.push_back(static_cast<double>(pr[k] / z));
  out.Q = static_cast<double>(q / z);
  out.Q2 = static_cast<double>(q2 / z);
  out.L = static_cast<double>(l / z);
  out.L2 = static_cast<double>(l2 / z);
  return out;
}

double binary_entropy(double p) {
  return -(p * std::log(p) + (1 - p) * std::log(1 - p));
}

// E_{X,G} ln[P(G|X) / prod p^G (1-p)^(1-G)] by enumeration of labels and
// graphs.
double first_term_by_enumeration(const ModelParams& p) {
  const int n = p.n, m = n * (n - 1) / 2;
  const Alphabet a = p.alphabet();
  long double s = 0;
  for (int c = 0; c < (1 << n); ++c) {
    long double px = 1;
    for (int i = 0; i < n; ++i) px *= a.weight((c >> i) & 1);
    for (int g = 0; g < (1 << m); ++g) {
      long double pg = 1, lr = 0;
      int k = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++k) {
          const double q = p.edge_prob((c >> i) & 1, (c >> j) & 1);
          const bool e = (g >> k) & 1;
          pg *= e ? q : 1 - q;
          lr += e ? std::log(q / p.p_bar) : std::log((1 - q) / (1 - p.p_bar));
        }
      }
      s += px * pg * lr;
    }
  }
  return static_cast<double>(s / n);
}

// E_{X,G} ln Z(G) by enumeration.
double mean_log_z_by_enumeration(const ModelParams& p) {
  const int n = p.n, m = n * (n - 1) / 2;
  const Alphabet a = p.alphabet();
  long double s = 0;
  for (int g = 0; g < (1 << m); ++g) {
    PlantedInstance inst;
    inst.classes.assign(n, 0);
    inst.labels.assign(n, a.x1);
    inst.edges = EdgeSet(n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j, ++k) {
        if ((g >> k) & 1) inst.edges.set(i, j, true);
      }
    }
    const double lz = log_partition(inst, p, 0.0, 0.0);
    for (int c = 0; c < (1 << n); ++c) {
      long double pr = 1;
      for (int i = 0; i < n; ++i) pr *= a.weight((c >> i) & 1);
      k = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j, ++k) {
          const double q = p.edge_prob((c >> i) & 1, (c >> j) & 1);
          pr *= ((g >> k) & 1) ? q : 1 - q;
        }
      }
      s += pr * lz;
    }
  }
  return static_cast<double>(s);
}

void check_against_naive(const PlantedInstance& inst, const ModelParams& p,
                         double t, double R, double tol) {
  const GibbsReport rep = gibbs_report(inst, p, t, R, true);
  const Naive nv = naive_brackets(inst, p, t, R);
  const int n = inst.n();
  CHECK(std::abs(rep.log_Z - nv.log_Z) < tol * std::max(1.0, std::abs(nv.log_Z)));
  CHECK(rep.F == doctest::Approx(-nv.log_Z / n).epsilon(tol));
  for (int i = 0; i < n; ++i) CHECK(std::abs(rep.mean_x[i] - nv.mean_x[i]) < tol);
  for (int k = 0; k < n * n; ++k) CHECK(std::abs(rep.pair_xx[k] - nv.pair_xx[k]) < tol);
  CHECK(std::abs(rep.Q_mean - nv.Q) < tol);
  CHECK(std::abs(rep.Q2_mean - nv.Q2) < tol);
  CHECK(std::abs(rep.L_mean - nv.L) < tol);
  CHECK(std::abs(rep.L2_mean - nv.L2) < tol);
}

}  // namespace

TEST_CASE("hamiltonian special cases") {
  const ModelParams flat = params_from_delta(5, 0.3, 0.4, 0.0);
  const PlantedInstance inst = sample_instance(flat, 0.0, 0.0, 1);
  CHECK(hamiltonian(inst.labels, inst, flat, 0.0, 0.0) == 0.0);

  const ModelParams two = params_from_delta(2, 0.5, 0.5, 0.2);
  PlantedInstance pair;
  pair.classes = {0, 1};
  pair.labels = {1.0, -1.0};
  pair.edges = EdgeSet(2);
  pair.edges.set(0, 1, true);
  const std::vector<double> x = {1.0, 1.0};
  CHECK(hamiltonian(x, pair, two, 0.0, 0.0) == doctest::Approx(-std::log(1.0 + 0.2 / 0.5)));
  CHECK(hamiltonian(x, pair, two, 1.0, 0.0) == 0.0);
}

TEST_CASE("hamiltonian is the log posterior up to a graph constant") {
  const ModelParams p = params_from_delta(3, 0.3, 0.4, 0.08);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PlantedInstance inst = sample_instance(p, 0.0, 0.0, seed);
    const Alphabet a = p.alphabet();
    const double edges = static_cast<double>(inst.edges.edge_count());
    const double gaps = 3.0 - edges;
    for (int c = 0; c < 8; ++c) {
      std::vector<double> x(3);
      for (int i = 0; i < 3; ++i) x[i] = a.value((c >> i) & 1);
      double lik = 1.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
          const double q = p.edge_prob((c >> i) & 1, (c >> j) & 1);
          lik *= inst.edges.has(i, j) ? q : 1 - q;
        }
      }
      const double ref = -std::log(lik / (std::pow(p.p_bar, edges) * std::pow(1 - p.p_bar, gaps)));
      CHECK(hamiltonian(x, inst, p, 0.0, 0.0) == doctest::Approx(ref).epsilon(1e-13));
    }
  }
}

TEST_CASE("hamiltonian domain error names the pair") {
  ModelParams p = params_from_delta(3, 0.5, 0.5, 0.1);
  PlantedInstance inst = sample_instance(p, 0.0, 0.0, 2);
  inst.edges.set(0, 2, true);
  const std::vector<double> x = {1.0, 1.0, -30.0};
  try {
    hamiltonian(x, inst, p, 0.0, 0.0);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDomain);
    CHECK(std::string(e.what()).find("(0, 2)") != std::string::npos);
  }
}

TEST_CASE("uninformative posterior equals the prior") {
  const ModelParams p = params_from_delta(7, 0.2, 0.3, 0.0);
  const PlantedInstance inst = sample_instance(p, 0.0, 0.0, 3);
  const GibbsReport rep = gibbs_report(inst, p, 0.0, 0.0);
  CHECK(std::abs(rep.log_Z) < 1e-13);
  for (double m : rep.mean_x) CHECK(std::abs(m) < 1e-13);
}

TEST_CASE("strong side channel pins the labels") {
  const ModelParams p = params_from_delta(6, 0.3, 0.5, 0.05);
  const PlantedInstance inst = sample_instance(p, 1.0, 1e4, 8);
  const GibbsReport rep = gibbs_report(inst, p, 1.0, 1e4);
  const Alphabet a = p.alphabet();
  for (int i = 0; i < 6; ++i) {
    // one-site posterior in closed form
    double num = 0, den = 0;
    const double ref = std::max(std::sqrt(1e4) * inst.y[i] * a.x1 - 0.5e4 * a.x1 * a.x1,
                                std::sqrt(1e4) * inst.y[i] * a.x2 - 0.5e4 * a.x2 * a.x2);
    for (int c = 0; c < 2; ++c) {
      const double x = a.value(c);
      const double w = a.weight(c) * std::exp(std::sqrt(1e4) * inst.y[i] * x - 0.5e4 * x * x - ref);
      num += w * x;
      den += w;
    }
    CHECK(rep.mean_x[i] == doctest::Approx(num / den).epsilon(1e-12));
    CHECK(std::abs(rep.mean_x[i] - inst.labels[i]) < 1e-3);
  }
}

TEST_CASE("enumeration agrees with the naive double loop") {
  const double tol = 1e-12;
  for (double r : {0.5, 0.25}) {
    const ModelParams p = params_from_delta(3, r, 0.4, 0.05);
    for (double t : {0.0, 0.6}) {
      for (double R : {0.0, 0.8}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
          check_against_naive(sample_instance_with_noise(p, t, R, seed), p, t, R, tol);
        }
      }
    }
  }
  const ModelParams big = params_from_channel(11, 0.3, 0.35, 0.6, -1);
  check_against_naive(sample_instance_with_noise(big, 0.3, 0.5, 21), big, 0.3, 0.5, 1e-11);
}

TEST_CASE("bracket invariants") {
  const ModelParams p = params_from_channel(9, 0.2, 0.5, 0.4, 1);
  const Alphabet a = p.alphabet();
  const PlantedInstance inst = sample_instance_with_noise(p, 0.1, 0.4, 4);
  const GibbsReport rep = gibbs_report(inst, p, 0.1, 0.4, true);
  double q = 0, q2 = 0;
  for (int i = 0; i < 9; ++i) {
    CHECK(std::abs(rep.mean_x[i]) <= a.max_abs());
    const double d = rep.pair_xx[i * 9 + i];
    CHECK(d >= std::min(a.x1 * a.x1, a.x2 * a.x2) - 1e-12);
    CHECK(d <= std::max(a.x1 * a.x1, a.x2 * a.x2) + 1e-12);
    q += inst.labels[i] * rep.mean_x[i];
    for (int j = 0; j < 9; ++j) q2 += inst.labels[i] * inst.labels[j] * rep.pair_xx[i * 9 + j];
  }
  CHECK(rep.Q_mean == q / 9);
  CHECK(rep.Q2_mean == doctest::Approx(q2 / 81).epsilon(1e-12));
}

TEST_CASE("results do not depend on the thread count") {
  const ModelParams p = params_from_channel(16, 0.4, 0.5, 1.5, 1);
  const PlantedInstance inst = sample_instance_with_noise(p, 0.2, 0.3, 12);
  set_num_threads(1);
  const GibbsReport one = gibbs_report(inst, p, 0.2, 0.3, true);
  set_num_threads(4);
  const GibbsReport four = gibbs_report(inst, p, 0.2, 0.3, true);
  set_num_threads(0);
  CHECK(one.log_Z == four.log_Z);
  CHECK(one.mean_x == four.mean_x);
  CHECK(one.pair_xx == four.pair_xx);
  CHECK(one.Q2_mean == four.Q2_mean);
  CHECK(one.L2_mean == four.L2_mean);
}

TEST_CASE("free-energy derivative in R equals <L>") {
  const ModelParams p = params_from_channel(8, 0.3, 0.5, 1.0, 1);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (double R : {0.3, 1.2}) {
      PlantedInstance inst = sample_instance_with_noise(p, 0.4, R, seed);
      const double L = gibbs_report(inst, p, 0.4, R).L_mean;
      const double h = 1e-4;
      set_side_snr(inst, R + h);
      const double fp = gibbs_report(inst, p, 0.4, R + h).F;
      set_side_snr(inst, R - h);
      const double fm = gibbs_report(inst, p, 0.4, R - h).F;
      CHECK(std::abs((fp - fm) / (2 * h) - L) < 1e-6);
    }
  }
}

TEST_CASE("enumeration cap") {
  const ModelParams p = params_from_channel(21, 0.5, 0.5, 1.0, 1);
  const PlantedInstance inst = sample_instance(p, 0.0, 0.0, 1);
  try {
    gibbs_report(inst, p, 0.0, 0.0);
    FAIL("expected a size error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSize);
  }
  CHECK_THROWS_AS(exact_mi_tiny(params_from_channel(6, 0.5, 0.5, 1.0, 1)), Error);
}

TEST_CASE("exact mutual information") {
  CHECK(exact_mi_tiny(params_from_delta(4, 0.3, 0.4, 0.0)) == 0.0);

  SUBCASE("two nodes against the one-edge channel") {
    const ModelParams p = params_from_delta(2, 0.5, 0.5, 0.25);
    const double ref =
        0.5 * (binary_entropy(0.5) - 0.5 * binary_entropy(0.75) - 0.5 * binary_entropy(0.25));
    CHECK(exact_mi_tiny(p) == doctest::Approx(ref).epsilon(1e-13));
  }
  SUBCASE("sign of delta at p_bar = 1/2") {
    // complementing the graph maps delta to -delta when p_bar = 1/2
    for (double r : {0.5, 0.3}) {
      const ModelParams a = params_from_channel(4, r, 0.5, 0.4, 1);
      const ModelParams b = params_from_channel(4, r, 0.5, 0.4, -1);
      CHECK(exact_mi_tiny(a) == doctest::Approx(exact_mi_tiny(b)).epsilon(1e-12));
    }
  }
  SUBCASE("first term plus log-partition decomposition") {
    for (double r : {0.5, 0.3}) {
      for (double d : {0.04, -0.06, 0.1}) {
        const ModelParams p = params_from_delta(4, r, 0.45, d);
        CHECK(std::abs(mi_closed_form_first_term(p) - first_term_by_enumeration(p)) < 1e-12);
        const double direct = exact_mi_tiny(p);
        const double split = mi_closed_form_first_term(p) - mean_log_z_by_enumeration(p) / 4;
        CHECK(std::abs(direct - split) < 1e-12);
        CHECK(direct >= 0.0);
      }
    }
  }
  SUBCASE("nondecreasing in |delta|") {
    double prev = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const ModelParams p = params_from_delta(4, 0.3, 0.5, 0.02 * k);
      const double mi = exact_mi_tiny(p);
      CHECK(mi >= prev - 1e-15);
      prev = mi;
    }
  }
  SUBCASE("interpolation time scales delta") {
    const ModelParams p = params_from_delta(4, 0.3, 0.5, 0.12);
    const ModelParams q = params_from_delta(4, 0.3, 0.5, 0.12 * std::sqrt(0.36));
    CHECK(exact_mi_tiny(p, 0.64) == doctest::Approx(exact_mi_tiny(q)).epsilon(1e-12));
    CHECK(exact_mi_tiny(p, 1.0) == 0.0);
  }
}

TEST_CASE("closed-form first term") {
  CHECK(mi_closed_form_first_term(params_from_delta(10, 0.3, 0.4, 0.0)) == 0.0);
  // remainder beyond lambda (n-1)/(4n) is cubic in delta for r != 1/2
  const double r = 0.3, pb = 0.4;
  auto remainder = [&](double d) {
    const ModelParams p = params_from_delta(10, r, pb, d);
    return mi_closed_form_first_term(p) - p.lambda_n * 9.0 / 40.0;
  };
  const double r1 = remainder(0.004), r2 = remainder(0.002);
  CHECK(r1 / r2 == doctest::Approx(8.0).epsilon(5e-2));
  // (p + a) ln(1 + a/p) + (1 - p - a) ln(1 - a/(1 - p))
  //   = a^2 (1/p + 1/(1-p)) / 2 - a^3 (1/p^2 - 1/(1-p)^2) / 6 + O(a^4)
  const Alphabet a = Alphabet::for_prior(r);
  const double m3 = a.moment(3);
  const double c3 = -4.5 / 6.0 * (1 / (pb * pb) - 1 / ((1 - pb) * (1 - pb))) * m3 * m3;
  auto scaled = [&](double d) { return remainder(d) / (d * d * d); };
  const double richardson = 2 * scaled(0.0005) - scaled(0.001);
  CHECK(richardson == doctest::Approx(c3).epsilon(1e-3));
}

TEST_CASE("mutual information from sampled free energies") {
  const Estimate zero = mi_via_free_energy(params_from_delta(4, 0.4, 0.5, 0.0), 100, 1);
  CHECK(zero.mean == 0.0);
  CHECK(zero.stderr_ == 0.0);

  const ModelParams p = params_from_channel(4, 0.3, 0.45, 0.5, 1);
  const Estimate e = mi_via_free_energy(p, 20000, 99);
  const double exact = exact_mi_tiny(p);
  CHECK(e.stderr_ > 0.0);
  CHECK(std::abs(e.mean - exact) < 3 * e.stderr_);

  const Estimate twelve = mi_via_free_energy(params_from_channel(12, 0.5, 0.5, 1.5, 1), 200, 7);
  CHECK(twelve.mean > 0.0);
  CHECK(twelve.mean < 1.5 / 4);

  set_num_threads(1);
  const Estimate s1 = mi_via_free_energy(p, 500, 3);
  set_num_threads(3);
  const Estimate s3 = mi_via_free_energy(p, 500, 3);
  set_num_threads(0);
  CHECK(s1.mean == s3.mean);
  CHECK(s1.stderr_ == s3.stderr_);
}
