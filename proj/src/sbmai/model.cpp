#include "sbmai/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "sbmai/error.hpp"

namespace sbmai {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_r(double r) {
  if (!(r > 0.0 && r <= 0.5)) {
    fail(ErrorKind::kParameter, "r must lie in (0, 1/2], got " + fmt(r));
  }
}

void require_n(int n) {
  if (n < 1) fail(ErrorKind::kParameter, "n must be positive");
}

bool close(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

// Checks p_bar + delta * u in [0, 1] for the three products u the alphabet
// can produce. Returns the offending |u| or 0 when all are admissible.
double worst_product(const ModelParams& p) {
  const Alphabet a = p.alphabet();
  const std::array<double, 3> products = {a.x1 * a.x1, a.x1 * a.x2,
                                          a.x2 * a.x2};
  double worst = 0.0;
  for (double u : products) {
    const double prob = p.p_bar + p.delta * u;
    if (prob < 0.0 || prob > 1.0) worst = std::max(worst, std::abs(u));
  }
  return worst;
}

void fill_degree_form(ModelParams& p) {
  p.d_n = p.n * p.p_bar;
  p.b_n = 1.0 - p.delta / p.p_bar;
  const double k = 1.0 - 1.0 / p.r;
  p.a_n = 1.0 - k * (1.0 - p.b_n);
  p.c_n = 1.0 - (1.0 - p.b_n) / k;
}

}  // namespace

Alphabet Alphabet::for_prior(double r) {
  require_r(r);
  Alphabet a;
  a.r = r;
  if (r == 0.5) {
    a.x1 = 1.0;
    a.x2 = -1.0;
  } else {
    a.x1 = std::sqrt((1.0 - r) / r);
    a.x2 = -std::sqrt(r / (1.0 - r));
  }
  return a;
}

double Alphabet::moment(int k) const {
  return r * std::pow(x1, k) + (1.0 - r) * std::pow(x2, k);
}

double ModelParams::edge_prob(int cls_i, int cls_j, double t) const {
  const Alphabet a = alphabet();
  return p_bar + std::sqrt(1.0 - t) * delta * a.value(cls_i) * a.value(cls_j);
}

ModelParams params_from_degrees(int n, double r, double d_n, double b_n) {
  require_n(n);
  require_r(r);
  if (!(d_n > 0.0 && d_n < n)) {
    fail(ErrorKind::kParameter,
         "average degree d_n must lie in (0, n), got " + fmt(d_n));
  }
  ModelParams p;
  p.n = n;
  p.r = r;
  p.d_n = d_n;
  p.b_n = b_n;
  const double k = 1.0 - 1.0 / r;
  p.a_n = 1.0 - k * (1.0 - b_n);
  p.c_n = 1.0 - (1.0 - b_n) / k;
  p.p_bar = d_n / n;
  p.delta = d_n * (1.0 - b_n) / n;
  p.lambda_n = n * p.delta * p.delta / (p.p_bar * (1.0 - p.p_bar));

  const std::array<std::pair<const char*, double>, 3> entries = {
      std::pair{"(d_n/n)*a_n", p.p_bar * p.a_n},
      std::pair{"(d_n/n)*b_n", p.p_bar * p.b_n},
      std::pair{"(d_n/n)*c_n", p.p_bar * p.c_n}};
  for (const auto& [name, value] : entries) {
    if (value < 0.0 || value > 1.0) {
      fail(ErrorKind::kParameter, std::string("edge probability ") + name +
                                      " = " + fmt(value) + " outside [0, 1]");
    }
  }
  return p;
}

ModelParams params_from_channel(int n, double r, double p_bar, double lambda,
                                int sign) {
  require_n(n);
  require_r(r);
  if (!(p_bar > 0.0 && p_bar < 1.0)) {
    fail(ErrorKind::kParameter, "p_bar must lie in (0, 1), got " + fmt(p_bar));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorKind::kParameter, "lambda must be >= 0, got " + fmt(lambda));
  }
  if (sign != 1 && sign != -1) {
    fail(ErrorKind::kParameter, "sign must be +1 or -1");
  }
  ModelParams p;
  p.n = n;
  p.r = r;
  p.p_bar = p_bar;
  p.delta = sign * std::sqrt(lambda * p_bar * (1.0 - p_bar) / n);
  p.lambda_n = lambda;
  fill_degree_form(p);
  if (const double u = worst_product(p); u > 0.0) {
    fail(ErrorKind::kParameter,
         "probability bound violated: p_bar + delta*x*x' leaves [0, 1] at "
         "|x*x'| = " + fmt(u));
  }
  return p;
}

ModelParams params_from_delta(int n, double r, double p_bar, double delta) {
  require_n(n);
  require_r(r);
  if (!(p_bar > 0.0 && p_bar < 1.0)) {
    fail(ErrorKind::kParameter, "p_bar must lie in (0, 1), got " + fmt(p_bar));
  }
  if (!std::isfinite(delta)) fail(ErrorKind::kParameter, "delta must be finite");
  ModelParams p;
  p.n = n;
  p.r = r;
  p.p_bar = p_bar;
  p.delta = delta;
  p.lambda_n = n * delta * delta / (p_bar * (1.0 - p_bar));
  fill_degree_form(p);
  if (const double u = worst_product(p); u > 0.0) {
    fail(ErrorKind::kParameter,
         "probability bound violated: p_bar + delta*x*x' leaves [0, 1] at "
         "|x*x'| = " + fmt(u));
  }
  return p;
}

ModelParams params_from_record(const ModelParams& rec) {
  require_n(rec.n);
  require_r(rec.r);
  if (!(rec.p_bar > 0.0 && rec.p_bar < 1.0)) {
    fail(ErrorKind::kParameter, "p_bar must lie in (0, 1)");
  }
  const double k = 1.0 - 1.0 / rec.r;
  struct Check {
    const char* what;
    double lhs, rhs;
  };
  const Check checks[] = {
      {"d_n = n*p_bar", rec.d_n, rec.n * rec.p_bar},
      {"delta = d_n(1-b_n)/n", rec.delta, rec.d_n * (1.0 - rec.b_n) / rec.n},
      {"a_n closed form", rec.a_n, 1.0 - k * (1.0 - rec.b_n)},
      {"c_n closed form", rec.c_n, 1.0 - (1.0 - rec.b_n) / k},
      {"lambda_n = n delta^2/(p(1-p))", rec.lambda_n,
       rec.n * rec.delta * rec.delta / (rec.p_bar * (1.0 - rec.p_bar))},
  };
  for (const auto& c : checks) {
    if (!close(c.lhs, c.rhs)) {
      fail(ErrorKind::kParameter,
           std::string("inconsistent parameter record: ") + c.what);
    }
  }
  if (const double u = worst_product(rec); u > 0.0) {
    fail(ErrorKind::kParameter,
         "probability bound violated at |x*x'| = " + fmt(u));
  }
  return rec;
}

DenseDiagnostic check_dense_hypotheses(const ModelParams& p, double threshold) {
  DenseDiagnostic d;
  const double q = 1.0 - p.p_bar;
  d.density_growth = p.n * p.p_bar * q * q * q;
  d.bias_ratio = std::abs(p.delta) / (p.p_bar * q * q);
  d.threshold = threshold;
  d.large_finite_size = d.bias_ratio > threshold;
  return d;
}

}  // namespace sbmai
