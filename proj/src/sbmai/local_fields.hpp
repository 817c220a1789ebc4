#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "sbmai/instance.hpp"
#include "sbmai/model.hpp"

namespace sbmai {

// log(1 + s*delta/p * u) for an edge and log(1 - s*delta/(1-p) * u) for a
// non-edge, s = sqrt(1 - t), u = x_a x_b. Indexed [g][a][b].
struct PairTable {
  double J[2][2][2] = {};
};

PairTable build_pair_table(const ModelParams& params, double t);

// Log-weight bookkeeping of prior * exp(-H) for one instance. A configuration
// is a bitset `ones` whose bit i is set when node i carries class 1. Pair
// contributions come from popcounts of adjacency rows, so one local field
// costs O(n / 64).
class LocalFields {
 public:
  LocalFields(const PlantedInstance& inst, const ModelParams& params, double t,
              double R);

  int n() const { return n_; }
  int words() const { return words_; }
  const PairTable& table() const { return table_; }

  // log prior + side-channel term of node i in class c.
  double site(int i, int c) const { return site_[2 * i + c]; }

  // sum_{j != i} J[G_ij][c][class_j]; the own bit of i is ignored.
  double pair_field(int i, int c, const std::uint64_t* ones,
                    int ones_total) const {
    const std::uint64_t* row = &rows_[static_cast<std::size_t>(i) * words_];
    int e1 = 0;
    for (int w = 0; w < words_; ++w) e1 += std::popcount(row[w] & ones[w]);
    const int own = static_cast<int>((ones[i >> 6] >> (i & 63)) & 1U);
    const int n1 = ones_total - own;
    const int n0 = n_ - 1 - n1;
    const int e0 = degree_[i] - e1;
    const double* j1 = table_.J[1][c];
    const double* j0 = table_.J[0][c];
    return e1 * j1[1] + e0 * j1[0] + (n1 - e1) * j0[1] + (n0 - e0) * j0[0];
  }

  // Both class values of pair_field at once.
  void pair_fields(int i, const std::uint64_t* ones, int ones_total,
                   double out[2]) const {
    const std::uint64_t* row = &rows_[static_cast<std::size_t>(i) * words_];
    int e1 = 0;
    for (int w = 0; w < words_; ++w) e1 += std::popcount(row[w] & ones[w]);
    const int own = static_cast<int>((ones[i >> 6] >> (i & 63)) & 1U);
    const int n1 = ones_total - own;
    const int n0 = n_ - 1 - n1;
    const int e0 = degree_[i] - e1;
    for (int c = 0; c < 2; ++c) {
      const double* j1 = table_.J[1][c];
      const double* j0 = table_.J[0][c];
      out[c] = e1 * j1[1] + e0 * j1[0] + (n1 - e1) * j0[1] + (n0 - e0) * j0[0];
    }
  }

  // Full log-weight of a configuration, O(n^2 / 64).
  double log_weight(const std::uint64_t* ones) const;

 private:
  int n_ = 0;
  int words_ = 0;
  PairTable table_;
  std::vector<std::uint64_t> rows_;
  std::vector<int> degree_;
  std::vector<double> site_;
};

// Side-channel noise of an instance, reconstructed from y when z was not
// stored. Empty when the instance has no side channel.
std::vector<double> side_noise(const PlantedInstance& inst);

}  // namespace sbmai
