#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbmai/concentration.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/ibp.hpp"
#include "sbmai/instance.hpp"
#include "sbmai/interpolation.hpp"
#include "sbmai/mcmc.hpp"
#include "sbmai/model.hpp"
#include "sbmai/replica.hpp"
#include "sbmai/ti.hpp"

namespace sbmai {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

// 17 significant digits, locale independent. Non-finite values print as
// nan / inf / -inf.
std::string format_double(double v);

// Two-space indented JSON with every double at 17 significant digits and
// non-finite doubles as null. Ends with a newline.
std::string dump_json(const Json& j);

// Throws kParameter on malformed text.
Json parse_json(const std::string& text);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

Json estimate_json(const Estimate& e);
std::vector<double> json_doubles(const Json& j);

// The nine-field record.
Json params_json(const ModelParams& p);
ModelParams params_from_json(const Json& j);

// Labels as a string of '+' (class 0, x1 > 0) and '-' (class 1), edges as
// base64 of the packed upper-triangular bits (pair index order, little-endian
// bytes). The alphabet is stored with the record.
Json instance_json(const PlantedInstance& inst, const Alphabet& a);
PlantedInstance instance_from_json(const Json& j);

Json gibbs_json(const GibbsReport& g, bool with_pairs);
Json mcmc_json(const McmcReport& m);
Json replica_json(const ReplicaSolution& s);
Json state_evolution_json(const StateEvolution& s);
Json ti_json(const TiEstimate& e);
Json path_json(const InterpolationPath& p);
Json sum_rule_json(const SumRuleReport& r);
Json concentration_json(const ConcentrationScan& s);
Json free_energy_scan_json(const FreeEnergyScan& s);
Json ibp_json(const IbpCheck& c);
Json edge_sweep_json(const EdgeIbpSweep& s);

// CSV with a leading "# key: <compact json>" comment per header entry.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void comment(const std::string& key, const Json& value);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::string comments_;
  std::string body_;
};

// Compact single-line dump with the same number formatting as dump_json.
std::string dump_compact(const Json& j);

}  // namespace sbmai
