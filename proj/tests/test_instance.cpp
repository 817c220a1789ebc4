#include <cmath>
#include <set>

#include "doctest.h"
#include "sbmai/error.hpp"
#include "sbmai/instance.hpp"
#include "sbmai/rng.hpp"

using namespace sbmai;

TEST_CASE("edge set indexing") {
  const int n = 9;
  std::set<std::size_t> seen;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) seen.insert(EdgeSet::pair_index(n, i, j));
  }
  CHECK(seen.size() == 36);
  CHECK(*seen.rbegin() == 35);

  EdgeSet e(70);  // beyond the adjacency-word size
  e.set(3, 68, true);
  e.set(69, 0, true);
  CHECK(e.has(68, 3));
  CHECK(e.has(0, 69));
  CHECK(!e.has(1, 2));
  CHECK(e.edge_count() == 2);
  CHECK(!e.has_words());
  CHECK(EdgeSet::from_bits(70, e.bits()) == e);

  EdgeSet small(5);
  small.set(1, 4, true);
  CHECK(small.neighbours(1) == (1u << 4));
  CHECK(small.neighbours(4) == (1u << 1));
  small.set(4, 1, false);
  CHECK(small.neighbours(1) == 0);
}

TEST_CASE("labels") {
  const auto l = sample_labels(5, 0.5, 11);
  for (double v : l) CHECK((v == 1.0 || v == -1.0));
  CHECK(sample_labels(200, 0.3, 5) == sample_labels(200, 0.3, 5));
  CHECK(sample_labels(200, 0.3, 5) != sample_labels(200, 0.3, 6));

  const int n = 100000;
  const auto cls = sample_classes(n, 0.25, 1234);
  double ones = 0;
  for (auto c : cls) ones += (c == 0);
  CHECK(std::abs(ones / n - 0.25) < 3 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("graph law per class cell") {
  const ModelParams p = params_from_delta(300, 0.5, 0.5, 0.1);
  const auto cls = sample_classes(p.n, p.r, 77);
  const EdgeSet g = sample_graph(cls, p, 0.0, 77);
  double hit[2] = {0, 0}, tot[2] = {0, 0};
  for (int i = 0; i < p.n; ++i) {
    for (int j = i + 1; j < p.n; ++j) {
      const int same = cls[i] == cls[j];
      tot[same] += 1;
      hit[same] += g.has(i, j);
    }
  }
  CHECK(tot[0] > 10000);
  CHECK(tot[1] > 10000);
  CHECK(std::abs(hit[1] / tot[1] - 0.6) < 3 * std::sqrt(0.24 / tot[1]));
  CHECK(std::abs(hit[0] / tot[0] - 0.4) < 3 * std::sqrt(0.24 / tot[0]));
}

TEST_CASE("chi-square goodness of fit in every cell") {
  // asymmetric prior: three distinct cells
  const ModelParams p = params_from_delta(400, 0.3, 0.3, 0.05);
  const auto cls = sample_classes(p.n, p.r, 9);
  const EdgeSet g = sample_graph(cls, p, 0.25, 9);
  double hit[3] = {}, tot[3] = {};
  for (int i = 0; i < p.n; ++i) {
    for (int j = i + 1; j < p.n; ++j) {
      const int cell = cls[i] + cls[j];
      tot[cell] += 1;
      hit[cell] += g.has(i, j);
    }
  }
  double chi2 = 0;
  const int pairs[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  for (int c = 0; c < 3; ++c) {
    const double q = p.edge_prob(pairs[c][0], pairs[c][1], 0.25);
    const double e1 = tot[c] * q, e0 = tot[c] * (1 - q);
    chi2 += std::pow(hit[c] - e1, 2) / e1 + std::pow(tot[c] - hit[c] - e0, 2) / e0;
  }
  // 3 degrees of freedom, upper 1% point
  CHECK(chi2 < 11.345);
}

TEST_CASE("t = 1 is Erdos-Renyi") {
  const ModelParams p = params_from_delta(300, 0.2, 0.3, 0.05);
  const auto cls = sample_classes(p.n, p.r, 3);
  const EdgeSet g = sample_graph(cls, p, 1.0, 3);
  const double m = static_cast<double>(g.pair_count());
  CHECK(std::abs(g.edge_count() / m - 0.3) < 3 * std::sqrt(0.21 / m));
  CHECK_THROWS_AS(sample_graph(cls, p, 1.5, 3), Error);
}

TEST_CASE("side channel") {
  const auto labels = sample_labels(10, 0.5, 4);
  const SideChannel zero = sample_side_channel(labels, 0.0, 4);
  CHECK(zero.y == zero.z);

  const int n = 100000;
  const auto big = sample_labels(n, 0.5, 8);
  const SideChannel s = sample_side_channel(big, 4.0, 8);
  double m = 0;
  for (int i = 0; i < n; ++i) {
    CHECK(s.y[i] == 2.0 * big[i] + s.z[i]);
    m += s.y[i] * big[i];
  }
  CHECK(std::abs(m / n - 2.0) < 3 * std::sqrt(5.0 / n));
  double zm = 0, zv = 0;
  for (double z : s.z) {
    zm += z;
    zv += z * z;
  }
  CHECK(std::abs(zm / n) < 3 / std::sqrt(n));
  CHECK(std::abs(zv / n - 1) < 4 * std::sqrt(2.0 / n));
  CHECK(sample_side_channel(big, 4.0, 8).y == s.y);
}

TEST_CASE("streams do not interact") {
  // Same master seed: the label draws are unaffected by how many edges or
  // noises are drawn afterwards.
  const ModelParams a = params_from_delta(20, 0.5, 0.5, 0.1);
  const ModelParams b = params_from_delta(40, 0.5, 0.5, 0.1);
  const PlantedInstance ia = sample_instance_with_noise(a, 0.0, 1.0, 42);
  const PlantedInstance ib = sample_instance_with_noise(b, 0.0, 1.0, 42);
  for (int i = 0; i < 20; ++i) {
    CHECK(ia.labels[i] == ib.labels[i]);
    CHECK(ia.z[i] == ib.z[i]);
  }
  CHECK(counter_u64(42, Stream::kLabels, 0) != counter_u64(42, Stream::kNoise, 0));
}

TEST_CASE("instance invariants and side-SNR rebuild") {
  const ModelParams p = params_from_delta(12, 0.3, 0.5, 0.05);
  PlantedInstance inst = sample_instance(p, 0.2, 0.7, 5);
  for (int i = 0; i < inst.n(); ++i) {
    CHECK(inst.y[i] == std::sqrt(0.7) * inst.labels[i] + inst.z[i]);
  }
  const PlantedInstance zero = sample_instance(p, 0.2, 0.0, 5);
  CHECK(!zero.has_side_channel());
  CHECK(zero.edges == inst.edges);

  const auto z = inst.z;
  set_side_snr(inst, 2.0);
  CHECK(inst.z == z);
  for (int i = 0; i < inst.n(); ++i) {
    CHECK(inst.y[i] == std::sqrt(2.0) * inst.labels[i] + inst.z[i]);
  }
}
