#include "sbmai/local_fields.hpp"

#include <cmath>
#include <sstream>

#include "sbmai/error.hpp"

namespace sbmai {

PairTable build_pair_table(const ModelParams& params, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorKind::kParameter, "interpolation time t must lie in [0, 1]");
  }
  const Alphabet a = params.alphabet();
  const double s = std::sqrt(1.0 - t);
  const double up = s * params.delta / params.p_bar;
  const double down = s * params.delta / (1.0 - params.p_bar);
  PairTable table;
  for (int ca = 0; ca < 2; ++ca) {
    for (int cb = 0; cb < 2; ++cb) {
      const double u = a.value(ca) * a.value(cb);
      const double edge_arg = 1.0 + up * u;
      const double gap_arg = 1.0 - down * u;
      if (!(edge_arg > 0.0) || !(gap_arg > 0.0)) {
        std::ostringstream os;
        os << "nonpositive logarithm argument for classes (" << ca << ", " << cb
           << "): edge term " << edge_arg << ", non-edge term " << gap_arg;
        fail(ErrorKind::kDomain, os.str());
      }
      table.J[1][ca][cb] = std::log1p(up * u);
      table.J[0][ca][cb] = std::log1p(-down * u);
    }
  }
  return table;
}

std::vector<double> side_noise(const PlantedInstance& inst) {
  if (!inst.z.empty()) return inst.z;
  if (inst.y.empty()) return {};
  std::vector<double> z(inst.y.size());
  const double sr = std::sqrt(inst.R);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = inst.y[i] - sr * inst.labels[i];
  return z;
}

LocalFields::LocalFields(const PlantedInstance& inst, const ModelParams& params,
                         double t, double R)
    : n_(inst.n()), words_((inst.n() + 63) / 64) {
  if (inst.edges.n() != n_) {
    fail(ErrorKind::kParameter, "graph size does not match label count");
  }
  if (!(R >= 0.0)) fail(ErrorKind::kParameter, "side-channel SNR R must be >= 0");
  if (R > 0.0 && !inst.has_side_channel()) {
    fail(ErrorKind::kParameter, "R > 0 requires side observations y");
  }
  table_ = build_pair_table(params, t);

  rows_.assign(static_cast<std::size_t>(n_) * words_, 0);
  degree_.assign(n_, 0);
  for (int i = 0; i < n_; ++i) {
    std::uint64_t* row = &rows_[static_cast<std::size_t>(i) * words_];
    if (inst.edges.has_words()) {
      row[0] = inst.edges.neighbours(i);
    } else {
      for (int j = 0; j < n_; ++j) {
        if (j != i && inst.edges.has(i, j)) row[j >> 6] |= std::uint64_t{1} << (j & 63);
      }
    }
    for (int w = 0; w < words_; ++w) degree_[i] += std::popcount(row[w]);
  }

  const Alphabet a = params.alphabet();
  const double sr = std::sqrt(R);
  site_.assign(2 * static_cast<std::size_t>(n_), 0.0);
  for (int i = 0; i < n_; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double x = a.value(c);
      double v = std::log(a.weight(c));
      if (R > 0.0) v += sr * inst.y[i] * x - 0.5 * R * x * x;
      site_[2 * i + c] = v;
    }
  }
}

double LocalFields::log_weight(const std::uint64_t* ones) const {
  int total = 0;
  for (int w = 0; w < words_; ++w) total += std::popcount(ones[w]);
  double s = 0.0, p = 0.0;
  for (int i = 0; i < n_; ++i) {
    const int c = static_cast<int>((ones[i >> 6] >> (i & 63)) & 1U);
    s += site(i, c);
    p += pair_field(i, c, ones, total);
  }
  return s + 0.5 * p;
}

}  // namespace sbmai
