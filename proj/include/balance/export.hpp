#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "balance/continuum_bounds.hpp"
#include "balance/dp_oracle.hpp"
#include "balance/hjb_fbsde.hpp"
#include "balance/montecarlo.hpp"

namespace balance {

using Json = nlohmann::ordered_json;

// %.17g, with "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double v);

Json to_json(const RunStats& stats);
Json to_json(const StepDiagnostics& diag);
Json to_json(const BoundEnvelope& env);
Json to_json(const FbsdeSolution& sol, bool include_series = true);
Json to_json(const std::vector<ConvergenceRow>& rows);

using CsvRow = std::vector<std::string>;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

std::string export_csv(const CsvTable& table);
std::string export_json(const Json& doc);

CsvTable summary_table(const std::vector<SummaryRow>& rows);
CsvTable envelope_table(const std::vector<BoundEnvelope>& envs);
// One row per (t, x) node.
CsvTable grid_table(const GridFunction& g, const std::string& value_name);

std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::string_view bytes);

struct RunManifest {
  std::string subcommand;
  std::vector<std::string> args;  // full flag set after the subcommand
  std::uint64_t seed = 0;
  std::string version;
  double wall_time_s = 0.0;
  std::string digest;
};

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

// key=value lines, '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_config(std::string_view text);

}  // namespace balance
