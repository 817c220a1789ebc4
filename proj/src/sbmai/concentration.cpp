#include "sbmai/concentration.hpp"

#include <cmath>

#include "sbmai/error.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/rng.hpp"

namespace sbmai {

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    fail(ErrorKind::kParameter, "slope fit needs two or more matching points");
  }
  const std::size_t m = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) fail(ErrorKind::kDomain, "log-log fit needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

Estimate overlap_fluctuation(const ModelParams& params, double t, double R,
                             std::size_t instances, std::uint64_t seed) {
  if (instances < 2) fail(ErrorKind::kParameter, "need at least 2 instances");
  if (params.n > kDefaultEnumerationCap) fail(ErrorKind::kSize, "needs n <= enumeration cap");
  std::vector<double> ov(instances), ov2(instances);
  parallel_for(instances, [&](std::size_t j) {
    const PlantedInstance inst =
        sample_instance_with_noise(params, t, R, derive_key(seed, Stream::kInstance, j));
    const GibbsReport g = gibbs_report(inst, params, t, R);
    ov[j] = g.Q_mean;
    ov2[j] = g.Q2_mean;
  });
  const double m = static_cast<double>(instances);
  const double q = pairwise_sum(ov) / m;
  const double q2 = pairwise_sum(ov2) / m;
  std::vector<double> lin(instances);
  for (std::size_t j = 0; j < instances; ++j) lin[j] = ov2[j] - 2.0 * q * ov[j];
  const double lm = pairwise_sum(lin) / m;
  for (double& v : lin) v = (v - lm) * (v - lm);
  return {q2 - q * q, std::sqrt(pairwise_sum(lin) / (m - 1) / m)};
}

ConcentrationScan overlap_variance_scan(double r, double p_bar, double lambda, int sign,
                                        const std::vector<int>& n_grid,
                                        const ConcentrationConfig& config) {
  if (!(config.theta > 0.0 && config.theta < 0.25)) {
    fail(ErrorKind::kParameter, "theta must lie in (0, 1/4)");
  }
  if (config.eps_points < 1) fail(ErrorKind::kParameter, "need at least one eps point");
  if (!(config.t >= 0.0 && config.t <= 1.0)) fail(ErrorKind::kParameter, "t must lie in [0, 1]");
  ConcentrationScan scan;
  std::vector<double> proxy, var;
  for (int n : n_grid) {
    const ModelParams params = params_from_channel(n, r, p_bar, lambda, sign);
    ConcentrationRow row;
    row.n = n;
    row.s_n = std::pow(static_cast<double>(n), -config.theta);
    row.bound_proxy = std::pow(std::pow(row.s_n, 4) * n, -1.0 / 3.0);
    double sum = 0.0, se2 = 0.0;
    for (int e = 0; e < config.eps_points; ++e) {
      const double eps = row.s_n * (1.0 + (e + 0.5) / config.eps_points);
      PathConfig pc = config.path;
      pc.diagnostics = false;
      pc.seed = derive_key(config.path.seed, Stream::kInstance,
                           static_cast<std::uint64_t>(n) * 1000 + e);
      NodeStats last;
      if (config.t == 0.0) {
        const Estimate f = overlap_fluctuation(params, 0.0, eps, pc.instances, pc.seed);
        last.fluctuation = f;
      } else {
        const InterpolationPath path =
            follow_path(params, eps, QPathKind::kSolved, 0.0, pc, config.t);
        last = path.nodes.back();
      }
      sum += last.fluctuation.mean;
      se2 += last.fluctuation.stderr_ * last.fluctuation.stderr_;
    }
    row.variance = {sum / config.eps_points, std::sqrt(se2) / config.eps_points};
    proxy.push_back(row.bound_proxy);
    var.push_back(row.variance.mean);
    scan.rows.push_back(row);
  }
  scan.decreasing = true;
  for (std::size_t k = 1; k < scan.rows.size(); ++k) {
    if (!(scan.rows[k].variance.mean < scan.rows[k - 1].variance.mean)) scan.decreasing = false;
  }
  if (scan.rows.size() >= 2) scan.slope = log_log_slope(proxy, var);
  return scan;
}

FreeEnergyScan free_energy_variance(double r, double p_bar, double lambda, int sign,
                                    const std::vector<int>& n_grid, std::size_t samples,
                                    std::uint64_t seed) {
  if (samples < 4) fail(ErrorKind::kParameter, "need at least 4 samples");
  FreeEnergyScan scan;
  std::vector<double> ns, vars;
  for (int n : n_grid) {
    const ModelParams params = params_from_channel(n, r, p_bar, lambda, sign);
    const std::uint64_t key = derive_key(seed, Stream::kInstance, static_cast<std::uint64_t>(n));
    std::vector<double> F(samples);
    parallel_for(samples, [&](std::size_t j) {
      const PlantedInstance inst =
          sample_instance(params, 0.0, 0.0, derive_key(key, Stream::kInstance, j));
      F[j] = -log_partition(inst, params, 0.0, 0.0) / n;
    });
    const double m = static_cast<double>(samples);
    const double mean = pairwise_sum(F) / m;
    std::vector<double> sq(samples);
    for (std::size_t j = 0; j < samples; ++j) sq[j] = (F[j] - mean) * (F[j] - mean);
    const double v = pairwise_sum(sq) / (m - 1);
    // stderr of the sample variance from the spread of squared deviations
    std::vector<double> dev(samples);
    const double sq_mean = pairwise_sum(sq) / m;
    for (std::size_t j = 0; j < samples; ++j) dev[j] = (sq[j] - sq_mean) * (sq[j] - sq_mean);
    FreeEnergyRow row;
    row.n = n;
    row.mean_F = {mean, std::sqrt(v / m)};
    row.variance = {v, std::sqrt(pairwise_sum(dev) / (m - 1) / m)};
    scan.rows.push_back(row);
    ns.push_back(n);
    vars.push_back(v);
  }
  if (scan.rows.size() >= 2) {
    bool positive = true;
    for (double v : vars) positive = positive && v > 0.0;
    scan.slope = positive ? log_log_slope(ns, vars) : 0.0;
  }
  return scan;
}

}  // namespace sbmai
