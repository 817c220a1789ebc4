#include "sbmai/instance.hpp"

#include <bit>
#include <cmath>

#include "sbmai/error.hpp"
#include "sbmai/rng.hpp"

namespace sbmai {

EdgeSet::EdgeSet(int n) : n_(n) {
  bits_.assign((pair_count() + 63) / 64, 0);
  if (n <= 64) adj_.assign(n, 0);
}

std::size_t EdgeSet::pair_index(int n, int i, int j) {
  // rows i = 0..n-2 hold (n-1-i) pairs each
  const auto ii = static_cast<std::size_t>(i);
  return ii * (2 * static_cast<std::size_t>(n) - ii - 1) / 2 +
         static_cast<std::size_t>(j - i - 1);
}

bool EdgeSet::has(int i, int j) const {
  if (i > j) std::swap(i, j);
  const std::size_t k = pair_index(n_, i, j);
  return (bits_[k >> 6] >> (k & 63)) & 1U;
}

void EdgeSet::set(int i, int j, bool present) {
  if (i > j) std::swap(i, j);
  const std::size_t k = pair_index(n_, i, j);
  const std::uint64_t mask = std::uint64_t{1} << (k & 63);
  if (present) {
    bits_[k >> 6] |= mask;
  } else {
    bits_[k >> 6] &= ~mask;
  }
  if (!adj_.empty()) {
    const std::uint64_t mi = std::uint64_t{1} << i;
    const std::uint64_t mj = std::uint64_t{1} << j;
    if (present) {
      adj_[i] |= mj;
      adj_[j] |= mi;
    } else {
      adj_[i] &= ~mj;
      adj_[j] &= ~mi;
    }
  }
}

std::size_t EdgeSet::edge_count() const {
  std::size_t c = 0;
  for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

EdgeSet EdgeSet::from_bits(int n, std::vector<std::uint64_t> bits) {
  EdgeSet e(n);
  if (bits.size() != e.bits_.size()) {
    fail(ErrorKind::kParameter, "edge bitset has the wrong length");
  }
  const std::size_t pairs = e.pair_count();
  if (pairs % 64 != 0 && !bits.empty()) {
    const std::uint64_t tail = bits.back() >> (pairs % 64);
    if (tail != 0) fail(ErrorKind::kParameter, "edge bitset has stray bits");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const std::size_t k = pair_index(n, i, j);
      if ((bits[k >> 6] >> (k & 63)) & 1U) e.set(i, j, true);
    }
  }
  return e;
}

std::vector<std::uint8_t> sample_classes(int n, double r, std::uint64_t seed) {
  std::vector<std::uint8_t> cls(n);
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(counter_u64(seed, Stream::kLabels, i));
    cls[i] = u < r ? 0 : 1;
  }
  return cls;
}

std::vector<double> sample_labels(int n, double r, std::uint64_t seed) {
  const Alphabet a = Alphabet::for_prior(r);
  std::vector<double> labels(n);
  const auto cls = sample_classes(n, r, seed);
  for (int i = 0; i < n; ++i) labels[i] = a.value(cls[i]);
  return labels;
}

EdgeSet sample_graph(std::span<const std::uint8_t> classes,
                     const ModelParams& params, double t, std::uint64_t seed) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorKind::kParameter, "interpolation time t must lie in [0, 1]");
  }
  const int n = static_cast<int>(classes.size());
  double prob[2][2];
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      prob[a][b] = params.edge_prob(a, b, t);
      if (prob[a][b] < 0.0 || prob[a][b] > 1.0) {
        fail(ErrorKind::kParameter, "edge probability outside [0, 1]");
      }
    }
  }
  EdgeSet edges(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const std::size_t k = EdgeSet::pair_index(n, i, j);
      const double u = uniform01(counter_u64(seed, Stream::kEdges, k));
      if (u < prob[classes[i]][classes[j]]) edges.set(i, j, true);
    }
  }
  return edges;
}

SideChannel sample_side_channel(std::span<const double> labels, double R,
                                std::uint64_t seed) {
  if (!(R >= 0.0)) fail(ErrorKind::kParameter, "side-channel SNR R must be >= 0");
  SideChannel s;
  const std::size_t n = labels.size();
  s.y.resize(n);
  s.z.resize(n);
  const double sr = std::sqrt(R);
  for (std::size_t i = 0; i < n; ++i) {
    s.z[i] = standard_normal(counter_u64(seed, Stream::kNoise, i));
    s.y[i] = sr * labels[i] + s.z[i];
  }
  return s;
}

PlantedInstance sample_instance_with_noise(const ModelParams& params, double t,
                                           double R, std::uint64_t seed) {
  PlantedInstance inst;
  const Alphabet a = params.alphabet();
  inst.classes = sample_classes(params.n, params.r, seed);
  inst.labels.resize(params.n);
  for (int i = 0; i < params.n; ++i) inst.labels[i] = a.value(inst.classes[i]);
  inst.edges = sample_graph(inst.classes, params, t, seed);
  auto side = sample_side_channel(inst.labels, R, seed);
  inst.y = std::move(side.y);
  inst.z = std::move(side.z);
  inst.t = t;
  inst.R = R;
  inst.seed = seed;
  return inst;
}

PlantedInstance sample_instance(const ModelParams& params, double t, double R,
                                std::uint64_t seed) {
  PlantedInstance inst = sample_instance_with_noise(params, t, R, seed);
  if (R == 0.0) {
    inst.y.clear();
    inst.z.clear();
  }
  return inst;
}

void set_side_snr(PlantedInstance& inst, double R) {
  if (!(R >= 0.0)) fail(ErrorKind::kParameter, "side-channel SNR R must be >= 0");
  if (inst.z.empty()) {
    fail(ErrorKind::kParameter, "instance carries no side-channel noise");
  }
  const double sr = std::sqrt(R);
  inst.y.resize(inst.z.size());
  for (std::size_t i = 0; i < inst.y.size(); ++i) {
    inst.y[i] = sr * inst.labels[i] + inst.z[i];
  }
  inst.R = R;
}

}  // namespace sbmai
