#include "sbmai/serialize.hpp"

#include <charconv>
#include <cmath>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/dataflow_exception.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "sbmai/error.hpp"

namespace sbmai {
namespace {

void emit_string(const std::string& s, std::string& out) {
  out += nlohmann::json(s).dump();
}

void emit(const Json& j, std::string& out, int depth, bool pretty) {
  const std::string pad = pretty ? std::string(2 * (depth + 1), ' ') : "";
  const std::string close_pad = pretty ? std::string(2 * depth, ' ') : "";
  const char* nl = pretty ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        emit_string(it.key(), out);
        out += pretty ? ": " : ":";
        emit(it.value(), out, depth + 1, pretty);
      }
      out += nl;
      out += close_pad;
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      out += "[";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k > 0) out += ",";
        if (flat) {
          if (k > 0 && pretty) out += " ";
        } else {
          out += nl;
          out += pad;
        }
        emit(j[k], out, depth + 1, pretty);
      }
      if (!flat) {
        out += nl;
        out += close_pad;
      }
      out += "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    case Json::value_t::string:
      emit_string(j.get<std::string>(), out);
      return;
    default:
      out += j.dump();
      return;
  }
}

double number(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    fail(ErrorKind::kParameter, std::string("record lacks numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

double nan_or(const Json& j) {
  return j.is_number() ? j.get<double>() : std::nan("");
}

Json doubles(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string dump_json(const Json& j) {
  std::string out;
  emit(j, out, 0, true);
  out += "\n";
  return out;
}

std::string dump_compact(const Json& j) {
  std::string out;
  emit(j, out, 0, false);
  return out;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParameter, std::string("malformed JSON: ") + e.what());
  }
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const std::uint8_t*, 6, 8>>;
  const std::size_t pad = (3 - bytes.size() % 3) % 3;
  std::vector<std::uint8_t> padded(bytes);
  padded.resize(bytes.size() + pad, 0);
  std::string out(It(padded.data()), It(padded.data() + padded.size()));
  out.resize(out.size() - pad);
  out.append(pad, '=');
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<const char*>, 8, 6>;
  if (text.size() % 4 != 0) fail(ErrorKind::kParameter, "base64 length must be a multiple of 4");
  std::string body = text;
  std::size_t pad = 0;
  while (!body.empty() && body.back() == '=') {
    body.pop_back();
    ++pad;
  }
  if (pad > 2) fail(ErrorKind::kParameter, "bad base64 padding");
  body.append(pad, 'A');
  try {
    std::vector<std::uint8_t> out(It(body.data()), It(body.data() + body.size()));
    out.resize(out.size() - pad);
    return out;
  } catch (const dataflow_exception&) {
    fail(ErrorKind::kParameter, "invalid base64 character");
  }
}

Json estimate_json(const Estimate& e) { return Json{{"mean", e.mean}, {"stderr", e.stderr_}}; }

std::vector<double> json_doubles(const Json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(nan_or(x));
  return v;
}

Json params_json(const ModelParams& p) {
  return Json{{"n", p.n},         {"r", p.r},     {"p_bar", p.p_bar},
              {"delta", p.delta}, {"d_n", p.d_n}, {"b_n", p.b_n},
              {"a_n", p.a_n},     {"c_n", p.c_n}, {"lambda_n", p.lambda_n}};
}

ModelParams params_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::kParameter, "params record must be an object");
  ModelParams p;
  const double n = number(j, "n");
  if (n != std::floor(n) || n < 1 || n > 1e9) fail(ErrorKind::kParameter, "n must be a positive integer");
  p.n = static_cast<int>(n);
  p.r = number(j, "r");
  p.p_bar = number(j, "p_bar");
  p.delta = number(j, "delta");
  p.d_n = number(j, "d_n");
  p.b_n = number(j, "b_n");
  p.a_n = number(j, "a_n");
  p.c_n = number(j, "c_n");
  p.lambda_n = number(j, "lambda_n");
  return params_from_record(p);
}

Json instance_json(const PlantedInstance& inst, const Alphabet& a) {
  const int n = inst.n();
  std::string codes(n, '+');
  for (int i = 0; i < n; ++i) codes[i] = inst.classes[i] == 0 ? '+' : '-';
  std::vector<std::uint8_t> bytes((inst.edges.pair_count() + 7) / 8, 0);
  const auto& words = inst.edges.bits();
  for (std::size_t b = 0; b < bytes.size(); ++b) {
    bytes[b] = static_cast<std::uint8_t>(words[b / 8] >> (8 * (b % 8)));
  }
  Json j{{"n", n},
         {"t", inst.t},
         {"R", inst.R},
         {"seed", inst.seed},
         {"labels", codes},
         {"edge_count", inst.edges.edge_count()},
         {"edges", base64_encode(bytes)},
         {"alphabet", Json{{"r", a.r}, {"x1", a.x1}, {"x2", a.x2}}}};
  if (inst.has_side_channel()) {
    j["y"] = doubles(inst.y);
    j["z"] = doubles(inst.z);
  }
  return j;
}

PlantedInstance instance_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::kParameter, "instance record must be an object");
  PlantedInstance inst;
  const int n = static_cast<int>(number(j, "n"));
  if (n < 1) fail(ErrorKind::kParameter, "instance needs n >= 1");
  inst.t = number(j, "t");
  inst.R = number(j, "R");
  inst.seed = j.at("seed").get<std::uint64_t>();
  const std::string codes = j.at("labels").get<std::string>();
  if (static_cast<int>(codes.size()) != n) fail(ErrorKind::kParameter, "label string length != n");
  const Json& alpha = j.at("alphabet");
  const double x1 = number(alpha, "x1"), x2 = number(alpha, "x2");
  for (char c : codes) {
    if (c != '+' && c != '-') fail(ErrorKind::kParameter, "labels must be '+' or '-'");
    inst.classes.push_back(c == '+' ? 0 : 1);
    inst.labels.push_back(c == '+' ? x1 : x2);
  }
  const std::vector<std::uint8_t> bytes = base64_decode(j.at("edges").get<std::string>());
  const std::size_t pairs = static_cast<std::size_t>(n) * (n - 1) / 2;
  if (bytes.size() != (pairs + 7) / 8) fail(ErrorKind::kParameter, "edge bitset has wrong length");
  std::vector<std::uint64_t> words((pairs + 63) / 64, 0);
  for (std::size_t b = 0; b < bytes.size(); ++b) {
    words[b / 8] |= static_cast<std::uint64_t>(bytes[b]) << (8 * (b % 8));
  }
  inst.edges = EdgeSet::from_bits(n, std::move(words));
  if (j.contains("y")) {
    inst.y = json_doubles(j.at("y"));
    inst.z = json_doubles(j.at("z"));
    if (static_cast<int>(inst.y.size()) != n || inst.z.size() != inst.y.size()) {
      fail(ErrorKind::kParameter, "side channel arrays must have length n");
    }
  }
  return inst;
}

Json gibbs_json(const GibbsReport& g, bool with_pairs) {
  Json j{{"exact", g.exact},   {"t", g.t},           {"R", g.R},
         {"log_Z", g.log_Z},   {"F", g.F},           {"Q_mean", g.Q_mean},
         {"Q2_mean", g.Q2_mean}, {"L_mean", g.L_mean}, {"L2_mean", g.L2_mean},
         {"mean_x", doubles(g.mean_x)}};
  if (with_pairs && !g.pair_xx.empty()) {
    const std::size_t n = g.mean_x.size();
    Json rows = Json::array();
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(doubles({g.pair_xx.begin() + i * n, g.pair_xx.begin() + (i + 1) * n}));
    }
    j["pair_xx"] = rows;
  }
  return j;
}

Json mcmc_json(const McmcReport& m) {
  Json j = gibbs_json(m.brackets, false);
  j["mean_x_stderr"] = doubles(m.mean_x_stderr);
  j["Q_stderr"] = m.Q_stderr;
  j["Q2_stderr"] = m.Q2_stderr;
  j["L_stderr"] = m.L_stderr;
  j["L2_stderr"] = m.L2_stderr;
  j["r_hat"] = Json{{"overlap", m.r_hat_overlap},
                    {"overlap_sq", m.r_hat_overlap_sq},
                    {"energy", m.r_hat_energy},
                    {"max", m.r_hat}};
  j["non_mixing"] = m.non_mixing;
  j["samples"] = m.samples;
  return j;
}

Json replica_json(const ReplicaSolution& s) {
  Json minima = Json::array();
  for (const LocalMinimum& m : s.local_minima) minima.push_back(Json{{"q", m.q}, {"psi", m.psi}});
  return Json{{"lambda", s.lambda},
              {"r", s.r},
              {"q_star", s.q_star},
              {"psi_star", s.psi_star},
              {"trivial_value", s.lambda / 4.0},
              {"local_minima", minima},
              {"coexistence", s.coexistence},
              {"quad_order", s.quad.order},
              {"quad_rule", s.quad.rule == PsiRule::kPanel ? "panel" : "hermite"}};
}

Json state_evolution_json(const StateEvolution& s) {
  return Json{{"q_fixed", s.q_fixed},
              {"converged", s.converged},
              {"iterations", s.iterates.empty() ? 0 : s.iterates.size() - 1}};
}

Json ti_json(const TiEstimate& e) {
  Json flagged = Json::array();
  for (std::size_t k : e.flagged_nodes) flagged.push_back(k);
  return Json{{"integrand", to_string(e.integrand)},
              {"mi_per_node", e.mi_per_node.mean},
              {"stderr", e.mi_per_node.stderr_},
              {"lambda_n", e.lambda_n},
              {"start", e.start},
              {"nodes", e.t_grid.size()},
              {"flagged_nodes", flagged},
              {"unreliable", e.unreliable},
              {"branch_ambiguity", e.branch_ambiguity}};
}

Json path_json(const InterpolationPath& p) {
  Json stderrs = Json::array();
  for (const NodeStats& s : p.nodes) stderrs.push_back(s.overlap.stderr_);
  return Json{{"epsilon", p.epsilon},
              {"q_path", to_string(p.kind)},
              {"estimator", to_string(p.estimator)},
              {"t", doubles(p.t_grid)},
              {"R", doubles(p.R_values)},
              {"q", doubles(p.q_values)},
              {"overlap_stderr", stderrs},
              {"clamped", p.clamped},
              {"noise_warning", p.noise_warning}};
}

Json sum_rule_json(const SumRuleReport& r) {
  return Json{{"epsilon", r.epsilon},
              {"q_path", to_string(r.kind)},
              {"lhs_mi_per_node", estimate_json(r.lhs_mi_per_node)},
              {"R_end", r.R_end},
              {"psi_term", r.psi_term},
              {"r1", r.r1},
              {"r2_integral", r.r2_integral},
              {"r3", r.r3},
              {"r3_overlap_integral", r.r3_overlap_integral},
              {"rhs_total", r.rhs_total},
              {"rhs_stderr", r.rhs_stderr},
              {"residual", r.residual},
              {"residual_stderr", r.residual_stderr},
              {"closure_residual", r.closure_residual},
              {"closure_stderr", r.closure_stderr},
              {"shift",
               Json{{"direct", estimate_json(r.shift.direct)},
                    {"via_overlap", estimate_json(r.shift.via_overlap)},
                    {"difference", estimate_json(r.shift.difference)}}},
              {"cancellation_ok", r.cancellation_ok},
              {"nodes",
               Json{{"t", doubles(r.t_grid)},
                    {"R", doubles(r.R_values)},
                    {"q", doubles(r.q_values)},
                    {"r2", doubles(r.r2_at_nodes)},
                    {"d1", doubles(r.d1_at_nodes)},
                    {"d1_leading", doubles(r.d1_leading_at_nodes)},
                    {"d2", doubles(r.d2_at_nodes)},
                    {"d3", doubles(r.d3_at_nodes)},
                    {"d3_stderr", doubles(r.d3_stderr)},
                    {"cancellation", doubles(r.cancellation)},
                    {"cancellation_budget", doubles(r.cancellation_budget)}}}};
}

Json concentration_json(const ConcentrationScan& s) {
  Json rows = Json::array();
  for (const ConcentrationRow& row : s.rows) {
    rows.push_back(Json{{"n", row.n},
                        {"s_n", row.s_n},
                        {"variance", estimate_json(row.variance)},
                        {"bound_proxy", row.bound_proxy}});
  }
  return Json{{"rows", rows}, {"slope", s.slope}, {"decreasing", s.decreasing}};
}

Json free_energy_scan_json(const FreeEnergyScan& s) {
  Json rows = Json::array();
  for (const FreeEnergyRow& row : s.rows) {
    rows.push_back(Json{{"n", row.n},
                        {"mean_F", estimate_json(row.mean_F)},
                        {"variance", estimate_json(row.variance)}});
  }
  return Json{{"rows", rows}, {"slope", s.slope}};
}

Json ibp_json(const IbpCheck& c) {
  return Json{{"g", to_string(c.g)},
              {"law", to_string(c.law.kind)},
              {"p", c.law.p},
              {"shift", c.law.shift},
              {"sigma", c.law.sigma},
              {"residual", c.residual},
              {"bound", c.bound},
              {"pass", c.pass}};
}

Json edge_sweep_json(const EdgeIbpSweep& s) {
  return Json{{"delta", doubles(s.deltas)},
              {"mean_error", doubles(s.mean_error)},
              {"max_ratio", doubles(s.max_ratio)},
              {"slope", s.slope}};
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::comment(const std::string& key, const Json& value) {
  comments_ += "# " + key + ": " + dump_compact(value) + "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) fail(ErrorKind::kParameter, "CSV row width mismatch");
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k > 0) body_ += ",";
    body_ += cells[k];
  }
  body_ += "\n";
}

void CsvWriter::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  for (double v : cells) s.push_back(format_double(v));
  row(s);
}

std::string CsvWriter::str() const {
  std::string head;
  for (std::size_t k = 0; k < columns_.size(); ++k) {
    if (k > 0) head += ",";
    head += columns_[k];
  }
  return comments_ + head + "\n" + body_;
}

}  // namespace sbmai
