#include "balance/export.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace balance {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

Json number(double v) {
  if (!std::isfinite(v)) return Json();  // null
  return v;
}

Json array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace

Json to_json(const StepDiagnostics& d) {
  Json j;
  j["drift_bound"] = d.drift_bound;
  j["admissible"] = d.admissible;
  j["drift_norm"] = array(d.drift_norm);
  j["drift_norm_se"] = array(d.drift_norm_se);
  j["sigma2"] = array(d.sigma2);
  j["sigma2_se"] = array(d.sigma2_se);
  if (!d.feedback_drift_max.empty()) {
    j["feedback_drift_max"] = array(d.feedback_drift_max);
    j["feedback_sigma2"] = array(d.feedback_sigma2);
  }
  return j;
}

Json to_json(const RunStats& s) {
  Json j;
  j["strategy"] = s.strategy;
  j["dist"] = s.dist;
  j["n"] = s.n;
  j["m"] = s.m;
  j["reps"] = s.reps;
  j["seed"] = s.seed;
  j["mean"] = number(s.mean);
  j["stderr"] = number(s.stderr_);
  j["batch_means"] = array(s.batch_means);
  if (s.diagnostics) j["diagnostics"] = to_json(*s.diagnostics);
  return j;
}

Json to_json(const BoundEnvelope& e) {
  Json j;
  j["T"] = e.T;
  j["lower"] = number(e.lower);
  j["upper_stationary"] = number(e.upper_stationary);
  j["upper_eigen"] = number(e.upper_eigen);
  j["upper_trapezoid"] = number(e.upper_trapezoid);
  j["min_upper"] = number(e.min_upper);
  j["min_source"] = e.min_source;
  j["asymptotic"] = number(e.asymptotic);
  return j;
}

Json to_json(const FbsdeSolution& s, bool include_series) {
  Json j;
  j["value"] = number(s.value);
  j["primal"] = number(s.primal);
  j["gap"] = number(s.gap);
  j["relative_gap"] = number(s.relative_gap);
  j["iterations"] = s.iterations;
  j["gamma"] = number(s.gamma);
  j["x_norm_p"] = number(s.x_norm_p);
  j["lambda_residual"] = number(s.lambda_residual);
  j["gamma_residual"] = number(s.gamma_residual);
  j["mass_error"] = number(s.fp.max_mass_error);
  j["boundary_mass"] = number(s.fp.max_boundary_mass);
  if (include_series) {
    j["lambda"] = array(s.lambda);
    j["y_norm"] = array(s.y_norm);
  }
  return j;
}

Json to_json(const std::vector<ConvergenceRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["order"] = r.order;
    j["value"] = number(r.value);
    j["change"] = number(r.change);
    a.push_back(j);
  }
  return a;
}

std::string export_json(const Json& doc) { return doc.dump(2) + "\n"; }

std::string export_csv(const CsvTable& table) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

CsvTable summary_table(const std::vector<SummaryRow>& rows) {
  CsvTable t{{"strategy", "n", "m", "mean", "stderr"}, {}};
  for (const auto& r : rows)
    t.rows.push_back({r.strategy, std::to_string(r.n), std::to_string(r.m), format_double(r.mean),
                      format_double(r.stderr_)});
  return t;
}

CsvTable envelope_table(const std::vector<BoundEnvelope>& envs) {
  CsvTable t{{"T", "lower", "upper_stationary", "upper_eigen", "upper_trapezoid", "min_upper",
              "asymptotic"},
             {}};
  for (const auto& e : envs)
    t.rows.push_back({format_double(e.T), format_double(e.lower), format_double(e.upper_stationary),
                      format_double(e.upper_eigen), format_double(e.upper_trapezoid),
                      format_double(e.min_upper), format_double(e.asymptotic)});
  return t;
}

CsvTable grid_table(const GridFunction& g, const std::string& value_name) {
  CsvTable t{{"t", "x", value_name}, {}};
  t.rows.reserve(g.values.size());
  for (int k = 0; k <= g.K; ++k)
    for (int j = 0; j <= g.J; ++j)
      t.rows.push_back({format_double(g.t(k)), format_double(g.x(j)), format_double(g.at(k, j))});
  return t;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::string_view bytes) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

Json to_json(const RunManifest& m) {
  Json j;
  j["subcommand"] = m.subcommand;
  j["args"] = m.args;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["wall_time_s"] = m.wall_time_s;
  j["digest"] = m.digest;
  return j;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.args = j.at("args").get<std::vector<std::string>>();
  m.seed = j.value("seed", std::uint64_t(0));
  m.version = j.value("version", std::string());
  m.wall_time_s = j.value("wall_time_s", 0.0);
  m.digest = j.at("digest").get<std::string>();
  return m;
}

std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + " has no '='");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + " has an empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace balance
