#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sbmai/model.hpp"

namespace sbmai {

// Packed upper-triangular adjacency of a simple undirected graph. For n <= 64
// a per-node adjacency word is kept alongside.
class EdgeSet {
 public:
  EdgeSet() = default;
  explicit EdgeSet(int n);

  int n() const { return n_; }
  std::size_t pair_count() const {
    return static_cast<std::size_t>(n_) * (n_ - 1) / 2;
  }
  static std::size_t pair_index(int n, int i, int j);  // requires i < j

  bool has(int i, int j) const;
  void set(int i, int j, bool present);
  std::size_t edge_count() const;

  // Adjacency word of node i; only valid when n <= 64.
  std::uint64_t neighbours(int i) const { return adj_[i]; }
  bool has_words() const { return !adj_.empty(); }

  const std::vector<std::uint64_t>& bits() const { return bits_; }
  static EdgeSet from_bits(int n, std::vector<std::uint64_t> bits);

  bool operator==(const EdgeSet& other) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint64_t> adj_;
};

// Hidden labels, one graph at interpolation time t, and optional Gaussian
// side observations y = sqrt(R) x + z.
struct PlantedInstance {
  std::vector<std::uint8_t> classes;  // 0 -> x1, 1 -> x2
  std::vector<double> labels;         // alphabet values of `classes`
  EdgeSet edges;
  std::vector<double> y;  // empty when no side channel
  std::vector<double> z;
  double t = 0.0;
  double R = 0.0;
  std::uint64_t seed = 0;

  int n() const { return static_cast<int>(classes.size()); }
  bool has_side_channel() const { return !y.empty(); }
};

struct SideChannel {
  std::vector<double> y;
  std::vector<double> z;
};

std::vector<std::uint8_t> sample_classes(int n, double r, std::uint64_t seed);
std::vector<double> sample_labels(int n, double r, std::uint64_t seed);

EdgeSet sample_graph(std::span<const std::uint8_t> classes,
                     const ModelParams& params, double t, std::uint64_t seed);

SideChannel sample_side_channel(std::span<const double> labels, double R,
                                std::uint64_t seed);

// Labels, graph and (for R > 0) side channel from one master seed, each on
// its own stream.
PlantedInstance sample_instance(const ModelParams& params, double t, double R,
                                std::uint64_t seed);

// Same as sample_instance with the side channel always attached (y = z at
// R = 0).
PlantedInstance sample_instance_with_noise(const ModelParams& params, double t,
                                           double R, std::uint64_t seed);

// Rebuilds y for a new R keeping labels, graph and noise fixed.
void set_side_snr(PlantedInstance& inst, double R);

}  // namespace sbmai
