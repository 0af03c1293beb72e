#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "balance/continuum_bounds.hpp"
#include "balance/coupling.hpp"
#include "balance/dp_oracle.hpp"
#include "balance/errors.hpp"
#include "balance/export.hpp"
#include "balance/hjb_fbsde.hpp"
#include "balance/montecarlo.hpp"

namespace balance::cli {

namespace {

struct HelpRequested {
  std::string text;
};

struct FlagError {
  std::string message;
  std::string help;
};

void parse_flags(CLI::App& app, const std::vector<std::string>& flags) {
  std::vector<std::string> reversed(flags.rbegin(), flags.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw FlagError{e.what(), app.help()};
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// "a,b,c" or "lo:hi:count" (log-spaced, inclusive).
std::vector<double> parse_t_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_list(text);
  std::stringstream ss(text);
  std::string a, b, c;
  std::getline(ss, a, ':');
  std::getline(ss, b, ':');
  std::getline(ss, c, ':');
  const double lo = std::stod(a), hi = std::stod(b);
  const int count = std::stoi(c);
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw std::invalid_argument("bad log range " + text);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out[std::size_t(i)] = lo * std::pow(hi / lo, double(i) / double(count - 1));
  return out;
}

CommandOutput cmd_simulate(const std::vector<std::string>& flags) {
  CLI::App app{"Monte Carlo estimate of E|Y(m)|_inf", "simulate"};
  std::string strategy = "random", drift = "tan", dist = "gaussian", out = "json";
  double drift_param = 0.0, dof = 5.0;
  int n = 64, m = 64, threads = 0;
  long reps = 1000;
  std::uint64_t seed = 1;
  bool diagnostics = false;
  app.add_option("--strategy", strategy, "random | greedy | drift")->check(CLI::IsMember({"random", "greedy", "drift"}));
  app.add_option("--drift", drift, "tan | follmer | const")->check(CLI::IsMember({"tan", "follmer", "const"}));
  app.add_option("--drift-param", drift_param, "clip margin, interval half-width or constant");
  app.add_option("--dist", dist, "gaussian | rademacher | uniform | student");
  app.add_option("--dof", dof, "Student-t degrees of freedom");
  app.add_option("--n", n)->check(CLI::PositiveNumber);
  app.add_option("--m", m)->check(CLI::PositiveNumber);
  app.add_option("--reps", reps);
  app.add_option("--seed", seed);
  app.add_option("--out", out)->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--diagnostics", diagnostics, "per-step drift and variance statistics");
  app.add_option("--threads", threads, "worker count, 0 for the default")->check(CLI::NonNegativeNumber);
  parse_flags(app, flags);

  const StrategyConfig cfg = parse_strategy(strategy, parse_drift(drift, drift_param), n, m);
  const IncrementDistribution law = parse_distribution(dist, dof);
  const RunStats stats = run_experiment(cfg, law, reps, seed, RunOptions{diagnostics, threads});
  CommandOutput result{{}, seed};
  if (out == "json") result.text = export_json(to_json(stats));
  else result.text = export_csv(summary_table(summarize({stats})));
  return result;
}

CommandOutput cmd_dp(const std::vector<std::string>& flags) {
  CLI::App app{"Dynamic-programming value for n = 1 or n = 2", "dp"};
  int n = 1, m = 1, k = 0, q = 32;
  std::string x, orders = "16,32,64";
  app.add_option("--n", n)->check(CLI::IsMember({1, 2}));
  app.add_option("--m", m)->check(CLI::PositiveNumber);
  app.add_option("--k", k)->check(CLI::NonNegativeNumber);
  app.add_option("--x", x, "state, comma-separated for n = 2 (default: origin)");
  app.add_option("--quad-order", q)->check(CLI::Range(8, 256));
  app.add_option("--orders", orders, "orders for the n = 2 convergence table");
  parse_flags(app, flags);
  if (k > m) throw std::invalid_argument("--k must not exceed --m");

  const std::vector<double> state =
      x.empty() ? std::vector<double>(static_cast<std::size_t>(n), 0.0) : parse_list(x);
  Json j;
  j["n"] = n;
  j["m"] = m;
  j["k"] = k;
  j["x"] = state;
  j["quad_order"] = q;
  if (n == 1) {
    if (state.size() != 1) throw std::invalid_argument("--x needs one coordinate for n = 1");
    j["value"] = dp_value_n1(k, state[0], m, q);
  } else {
    if (m != 2) throw std::invalid_argument("n = 2 supports --m 2 only");
    if (state.size() != 2) throw std::invalid_argument("--x needs two coordinates for n = 2");
    const double y1 = state[0], y2 = state[1];
    if (k == 2) {
      j["value"] = std::max(std::abs(y1), std::abs(y2));
    } else if (k == 1) {
      j["value"] = dp_v1_n2(y1, y2, q);
    } else if (y1 == 0.0 && y2 == 0.0) {
      j["value"] = dp_value_n2(q);
      std::vector<int> ord;
      for (double o : parse_list(orders)) ord.push_back(int(o));
      j["convergence_table"] = to_json(dp_convergence_n2(ord));
    } else {
      j["value"] = DpN2(q).value(0, y1, y2);
    }
  }
  return {export_json(j), 0};
}

CommandOutput cmd_bounds(const std::vector<std::string>& flags) {
  CLI::App app{"Lower and upper bounds on the continuum value", "bounds"};
  std::string t_grid = "0.01,0.1,1,10", out = "json";
  double p = 5.0;
  app.add_option("--t-grid", t_grid, "comma list, or lo:hi:count log-spaced");
  app.add_option("--p", p, "moment order of the trapezoid bound")->check(CLI::PositiveNumber);
  app.add_option("--out", out)->check(CLI::IsMember({"json", "csv"}));
  parse_flags(app, flags);

  const std::vector<double> T = parse_t_grid(t_grid);
  for (double t : T)
    if (!(t > 0.0)) throw std::invalid_argument("horizons must be positive");
  const std::vector<BoundEnvelope> env = bound_envelope(T, p);
  if (out == "csv") return {export_csv(envelope_table(env)), 0};
  Json j;
  j["p"] = p;
  j["stationary_upper"] = stationary_upper();
  Json rows = Json::array();
  for (const auto& e : env) rows.push_back(to_json(e));
  j["envelope"] = rows;
  return {export_json(j), 0};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

CommandOutput cmd_hjb(const std::vector<std::string>& flags) {
  CLI::App app{"Regularized HJB / Fokker-Planck fixed point", "hjb"};
  double p = 2.0, delta = 0.1, half_width = 8.0;
  HjbGrid grid;
  FixedPointOptions opt;
  std::string out = "json", grids_dir;
  app.add_option("--p", p)->check(CLI::Range(1.0 + 1e-9, 1e9));
  app.add_option("--delta", delta)->check(CLI::PositiveNumber);
  app.add_option("--grid-t", grid.K, "time intervals")->check(CLI::Range(8, 100000));
  app.add_option("--grid-x", grid.J, "space intervals")->check(CLI::Range(16, 1000000));
  app.add_option("--half-width", half_width, "spatial domain [-L, L]")->check(CLI::PositiveNumber);
  app.add_option("--damping", opt.damping)->check(CLI::Range(1e-6, 1.0));
  app.add_option("--max-iter", opt.max_iter)->check(CLI::PositiveNumber);
  app.add_option("--tol", opt.tol)->check(CLI::PositiveNumber);
  app.add_option("--out", out)->check(CLI::IsMember({"json"}));
  app.add_option("--grids-dir", grids_dir, "write u.csv and m.csv here");
  parse_flags(app, flags);
  grid.L = half_width;

  const FbsdeSolution sol = fixed_point_solve(p, delta, grid, opt);
  Json j;
  j["p"] = p;
  j["delta"] = delta;
  j["grid"] = {{"K", grid.K}, {"J", grid.J}, {"L", grid.L}};
  const Json fields = to_json(sol);
  for (auto& [key, value] : fields.items()) j[key] = value;
  if (p == 2.0) {
    const OdeOracle oracle = p2_ode_oracle(delta, grid.sigma0_sq());
    j["oracle_value"] = oracle.value;
    j["oracle_relative_error"] = (sol.value - oracle.value) / oracle.value;
  }
  if (!grids_dir.empty()) {
    const std::filesystem::path dir(grids_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / "u.csv", export_csv(grid_table(sol.u, "u")));
    write_text(dir / "m.csv", export_csv(grid_table(sol.m, "m")));
  }
  return {export_json(j), 0};
}

CommandOutput cmd_couple_test(const std::vector<std::string>& flags) {
  CLI::App app{"Statistical checks of the sign-flip coupling", "couple-test"};
  int n = 16, m = 2;
  long reps = 100000, norm_draws = 100000;
  double fraction = 0.5;
  std::uint64_t seed = 7;
  std::string trace;
  app.add_option("--n", n)->check(CLI::PositiveNumber);
  app.add_option("--m", m)->check(CLI::PositiveNumber);
  app.add_option("--reps", reps);
  app.add_option("--drift-fraction", fraction, "|b|_2 as a fraction of c0/sqrt(n)")->check(CLI::Range(0.0, 1.0));
  app.add_option("--norm-draws", norm_draws);
  app.add_option("--seed", seed);
  app.add_option("--trace", trace, "JSON-lines trace of one replication");
  parse_flags(app, flags);

  std::vector<double> b(static_cast<std::size_t>(n), fraction * kC0 / n);
  const CouplingValidation v = validate_coupling(b, m, reps, seed);
  const NormConcentration nc = norm_concentration_test(n, norm_draws, seed);
  Json j;
  j["n"] = n;
  j["m"] = m;
  j["reps"] = reps;
  j["seed"] = seed;
  j["drift_fraction"] = fraction;
  j["conditional_mean"] = {{"b", v.b}, {"mean", v.mean}, {"se", v.se}, {"max_abs_z", v.max_abs_z},
                           {"pass", v.max_abs_z <= 4.0}};
  j["w_ks_min_pvalue"] = v.ks_min_pvalue;
  j["reconstruction_residual"] = v.reconstruction_residual;
  j["norm_residual"] = v.norm_residual;
  j["norm_concentration"] = {{"draws", nc.draws}, {"mean", nc.mean}, {"se", nc.stderr_},
                             {"bound", nc.bound}, {"pass", nc.mean <= nc.bound + 4.0 * nc.stderr_}};
  if (!trace.empty()) {
    std::vector<std::vector<double>> inc(static_cast<std::size_t>(m),
                                         std::vector<double>(static_cast<std::size_t>(n)));
    for (int k = 0; k < m; ++k) {
      fill_draws(IncrementDistribution::gaussian(), CounterKey{seed, 0}, std::uint64_t(k) * n,
                 inc[std::size_t(k)]);
      for (double& x : inc[std::size_t(k)]) x /= std::sqrt(double(n));
    }
    std::ofstream f(trace);
    if (!f) throw std::runtime_error("cannot write " + trace);
    write_trace_jsonl(couple_paths(inc, constant_drift(b)), f);
  }
  return {export_json(j), seed};
}

struct Globals {
  std::string config;
  std::string manifest;
  std::vector<std::string> rest;
};

Globals split_globals(const std::vector<std::string>& args) {
  Globals g;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto take = [&](const std::string& name, std::string& into) {
      if (a == name) {
        if (i + 1 >= args.size()) throw CLI::ArgumentMismatch(name + " needs a value");
        into = args[++i];
        return true;
      }
      if (a.rfind(name + "=", 0) == 0) {
        into = a.substr(name.size() + 1);
        return true;
      }
      return false;
    };
    if (take("--config", g.config) || take("--manifest", g.manifest)) continue;
    g.rest.push_back(a);
  }
  return g;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int replay(const std::vector<std::string>& flags, std::ostream& out, std::ostream& err) {
  if (flags.size() != 1) {
    err << "usage: balance replay MANIFEST.json\n";
    return 2;
  }
  const RunManifest m = manifest_from_json(Json::parse(read_file(flags[0])));
  const CommandOutput o = run_subcommand(m.subcommand, m.args);
  out << o.text;
  const std::string digest = digest_hex(o.text);
  if (digest != m.digest) {
    err << "digest mismatch: expected " << m.digest << ", got " << digest << "\n";
    return 1;
  }
  err << "digest " << digest << " reproduced\n";
  return 0;
}

}  // namespace

std::string usage() {
  return "usage: balance [--config FILE] [--manifest FILE] <subcommand> [flags]\n"
         "subcommands:\n"
         "  simulate     Monte Carlo of a sign strategy\n"
         "  dp           dynamic-programming value (n = 1, 2)\n"
         "  bounds       bound envelope over horizons\n"
         "  hjb          regularized HJB / FBSDE fixed point\n"
         "  couple-test  coupling statistics\n"
         "  replay       rerun a manifest and compare digests\n"
         "run 'balance <subcommand> --help' for flags\n";
}

std::vector<std::string> merge_config(std::vector<std::string> flags, const std::string& config_text) {
  for (const auto& [key, value] : parse_config(config_text)) {
    const std::string flag = "--" + key;
    const bool present = std::any_of(flags.begin(), flags.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (present) continue;
    flags.push_back(flag);
    if (value != "true") flags.push_back(value);
  }
  return flags;
}

CommandOutput run_subcommand(const std::string& name, const std::vector<std::string>& flags) {
  if (name == "simulate") return cmd_simulate(flags);
  if (name == "dp") return cmd_dp(flags);
  if (name == "bounds") return cmd_bounds(flags);
  if (name == "hjb") return cmd_hjb(flags);
  if (name == "couple-test") return cmd_couple_test(flags);
  throw CLI::ValidationError("unknown subcommand '" + name + "'");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    Globals g = split_globals(args);
    if (g.rest.empty() || g.rest[0] == "--help" || g.rest[0] == "-h") {
      (g.rest.empty() ? err : out) << usage();
      return g.rest.empty() ? 2 : 0;
    }
    if (g.rest[0] == "--version") {
      out << BALANCE_VERSION << "\n";
      return 0;
    }
    const std::string sub = g.rest[0];
    std::vector<std::string> flags(g.rest.begin() + 1, g.rest.end());
    if (sub == "replay") return replay(flags, out, err);
    if (!g.config.empty()) flags = merge_config(std::move(flags), read_file(g.config));

    const auto start = std::chrono::steady_clock::now();
    const CommandOutput o = run_subcommand(sub, flags);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << o.text;
    out.flush();

    RunManifest m;
    m.subcommand = sub;
    m.args = flags;
    m.seed = o.seed;
    m.version = BALANCE_VERSION;
    m.wall_time_s = wall;
    m.digest = digest_hex(o.text);
    if (g.manifest.empty()) {
      err << "manifest " << to_json(m).dump() << "\n";
    } else {
      std::ofstream f(g.manifest);
      if (!f) throw std::runtime_error("cannot write " + g.manifest);
      f << to_json(m).dump(2) << "\n";
    }
    return 0;
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const FlagError& e) {
    err << "error: " << e.message << "\n" << e.help;
    return 2;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << usage();
    return 2;
  } catch (const ConvergenceError& e) {
    Json body;
    body["error"] = "NoConvergence";
    body["message"] = e.what();
    out << export_json(body);
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace balance::cli
