#ifndef PAM_CLI_HPP
#define PAM_CLI_HPP

// The `pam` command line. Every run records its options as strings in a
// config object; feeding a JSON result (or manifest) back through --config
// replays exactly the same options.
//
// Exit codes: 0 success, 2 bad parameters or unwritable output, 3 numerical
// non-convergence, 1 anything else.

#include <pam/error.hpp>
#include <pam/greens.hpp>
#include <pam/io.hpp>
#include <pam/lattice.hpp>
#include <pam/montecarlo.hpp>
#include <pam/phase.hpp>
#include <pam/rng.hpp>
#include <pam/spectral.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace pam::cli {

inline constexpr const char* version = "0.1.0";

using json = nlohmann::json;

/// Options of one invocation, as the strings that were given.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> options;

  bool has(const std::string& k) const { return options.count(k) != 0; }
  const std::string& get(const std::string& k) const { return options.at(k); }

  json to_json() const {
    json j;
    j["command"] = command;
    j["options"] = options;
    j["version"] = version;
    j["seed"] = has("seed") ? json(get("seed")) : json(nullptr);
    return j;
  }
};

inline json number(double v) {
  if (std::isfinite(v)) return v;
  return io::format_double(v);  // "inf" / "nan" as strings
}

namespace detail {

template <class T>
T parse_scalar(const std::string& name, const std::string& s) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) throw parameter_error("bad value for --" + name + ": " + s);
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& name, const std::string& s) {
  std::vector<T> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(parse_scalar<T>(name, item));
  if (out.empty()) throw parameter_error("empty list for --" + name);
  return out;
}

struct Args {
  const RunConfig& cfg;

  template <class T>
  T get(const std::string& k, T fallback) const {
    return cfg.has(k) ? parse_scalar<T>(k, cfg.get(k)) : fallback;
  }
  template <class T>
  T need(const std::string& k) const {
    if (!cfg.has(k)) throw parameter_error("--" + k + " is required for " + cfg.command);
    return parse_scalar<T>(k, cfg.get(k));
  }
  template <class T>
  std::vector<T> list(const std::string& plural, const std::string& single, T fallback) const {
    if (cfg.has(plural)) return parse_list<T>(plural, cfg.get(plural));
    return {get<T>(single, fallback)};
  }
};

inline json green_json(const GreenEstimate& g) {
  json j;
  j["quantity"] = to_string(g.quantity);
  j["value"] = number(g.value);
  j["abs_error"] = g.abs_error;
  j["method"] = to_string(g.method);
  j["divergent"] = g.divergent();
  return j;
}

struct Output {
  std::string text;
  bool is_json = true;
};

inline std::string want_format(const Args& a, const char* fallback) {
  const std::string f = a.cfg.has("format") ? a.cfg.get("format") : fallback;
  if (f != "csv" && f != "json") throw parameter_error("--format must be csv or json");
  return f;
}

inline Output finish_json(json j, const RunConfig& cfg) {
  j["config"] = cfg.to_json();
  return {j.dump(2) + "\n", true};
}

inline Output cmd_green(const Args& a) {
  const int d = a.need<int>("d");
  const double tol = a.get<double>("tol", 1e-10);
  const std::string method = a.cfg.has("method") ? a.cfg.get("method") : "time-integral";
  GreenEstimate g0;
  GreenEstimate l2;
  if (method == "time-integral") {
    g0 = green_zero(d, tol);
    l2 = green_l2sq(d, tol);
  } else if (method == "fourier") {
    g0 = green_zero_fourier(d);
    l2 = green_l2sq_fourier(d);
  } else {
    throw parameter_error("--method must be time-integral or fourier");
  }
  std::vector<GreenEstimate> rows{g0, l2};
  if (d >= 3) rows.push_back(alpha(d, tol));
  if (want_format(a, "json") == "csv") {
    std::string s = "d,quantity,value,abs_error,method\n";
    for (const auto& g : rows) {
      s += std::to_string(d) + ',' + io::csv_field(to_string(g.quantity)) + ',' + io::format_double(g.value) +
           ',' + io::format_double(g.abs_error) + ',' + to_string(g.method) + '\n';
    }
    return {s, false};
  }
  json j;
  j["command"] = "green";
  j["d"] = d;
  j["green_zero"] = green_json(g0);
  j["green_l2sq"] = green_json(l2);
  if (d >= 3) j["alpha"] = green_json(rows[2]);
  return finish_json(j, a.cfg);
}

inline Output cmd_mu(const Args& a) {
  const int d = a.need<int>("d");
  const double tol = a.get<double>("tol", 1e-10);
  const auto kappas = a.list<double>("kappas", "kappa", 0.0);
  if (!a.cfg.has("kappa") && !a.cfg.has("kappas")) throw parameter_error("--kappa is required for mu");
  std::vector<double> values;
  for (double k : kappas) values.push_back(mu(d, k, tol));
  if (want_format(a, "json") == "csv") {
    std::string s = "d,kappa,mu\n";
    for (std::size_t i = 0; i < kappas.size(); ++i) {
      s += std::to_string(d) + ',' + io::format_double(kappas[i]) + ',' + io::format_double(values[i]) + '\n';
    }
    return {s, false};
  }
  json j;
  j["command"] = "mu";
  j["d"] = d;
  if (kappas.size() == 1) {
    j["kappa"] = kappas[0];
    j["mu"] = values[0];
  } else {
    j["kappa"] = kappas;
    j["mu"] = values;
  }
  j["tol"] = tol;
  return finish_json(j, a.cfg);
}

inline PamParams params_from(const Args& a) {
  PamParams q{a.need<int>("d"), a.get<int>("n", 1), a.get<int>("p", 1), a.get<double>("kappa", 0.0),
              a.get<double>("rho", 0.0)};
  q.validate();
  return q;
}

inline Output cmd_lambda_spectral(const Args& a) {
  const auto q = params_from(a);
  std::vector<int> radii;
  if (a.cfg.has("radii")) {
    radii = parse_list<int>("radii", a.cfg.get("radii"));
  } else {
    radii = {a.need<int>("radius")};
  }
  const auto est = lambda_spectral(q, radii, a.get<double>("tol", 1e-9));
  if (want_format(a, "csv") == "csv") {
    std::string s = "d,n,p,kappa,rho,R,lambda_box,residual\n";
    for (const auto& e : est) {
      s += std::to_string(q.d) + ',' + std::to_string(q.n) + ',' + std::to_string(q.p) + ',' +
           io::format_double(q.kappa) + ',' + io::format_double(q.rho) + ',' + std::to_string(e.radius) + ',' +
           io::format_double(e.value) + ',' + io::format_double(e.residual) + '\n';
    }
    return {s, false};
  }
  json j;
  j["command"] = "lambda-spectral";
  json rows = json::array();
  for (const auto& e : est) {
    rows.push_back({{"R", e.radius},
                    {"lambda_box", e.value},
                    {"residual", e.residual},
                    {"error", e.error},
                    {"iterations", e.iterations},
                    {"kind", to_string(e.kind)}});
  }
  j["estimates"] = rows;
  j["radius_converged"] = est.back().radius_converged;
  return finish_json(j, a.cfg);
}

inline Output cmd_lambda_mc(const Args& a) {
  const auto q = params_from(a);
  if (!a.cfg.has("seed")) throw parameter_error("lambda-mc is randomized: --seed is required");
  const auto seed = a.need<std::uint64_t>("seed");
  const double t = a.need<double>("t");
  const auto samples = a.need<std::uint64_t>("samples");
  McOptions o;
  o.workers = a.get<unsigned>("workers", 1u);
  const auto e = lambda_mc(q, t, samples, seed, o);
  if (want_format(a, "json") == "csv") {
    std::string s = "d,n,p,kappa,rho,t,samples,seed,lambda_t,stderr,ess\n";
    s += std::to_string(q.d) + ',' + std::to_string(q.n) + ',' + std::to_string(q.p) + ',' +
         io::format_double(q.kappa) + ',' + io::format_double(q.rho) + ',' + io::format_double(t) + ',' +
         std::to_string(samples) + ',' + std::to_string(seed) + ',' + io::format_double(e.lambda_t) + ',' +
         io::format_double(e.std_error) + ',' + io::format_double(e.ess) + '\n';
    return {s, false};
  }
  json j;
  j["command"] = "lambda-mc";
  j["lambda_t"] = e.lambda_t;
  j["stderr"] = e.std_error;
  j["ess"] = e.ess;
  if (e.ci_available) {
    j["ci95"] = {e.lambda_t - 1.96 * e.std_error, e.lambda_t + 1.96 * e.std_error};
  } else {
    j["ci95"] = nullptr;
    j["warning"] = "effective sample size below 30; no confidence interval";
  }
  j["t"] = t;
  j["samples"] = samples;
  j["seed"] = seed;
  return finish_json(j, a.cfg);
}

inline Output cmd_phase(const Args& a, const std::optional<std::string>& out_path) {
  SweepSpec s;
  s.d = a.need<int>("d");
  s.n = a.get<int>("n", 1);
  s.ps = a.list<int>("ps", "p", 1);
  s.kappas = a.list<double>("kappas", "kappa", 0.0);
  s.rhos = a.list<double>("rhos", "rho", 0.0);
  s.radius = a.get<int>("radius", 2);
  s.tol = a.get<double>("tol", 1e-9);
  s.workers = a.get<unsigned>("workers", 1u);
  if (want_format(a, "csv") != "csv") throw parameter_error("phase writes CSV only");
  if (out_path) {
    sweep_to_csv(s, *out_path);
    return {"", false};  // already on disk
  }
  std::string text = std::string(phase_csv_header()) + "\n";
  for (const auto& r : sweep(s)) text += phase_csv_line(r) + "\n";
  return {text, false};
}

inline Output cmd_check_gn(const Args& a) {
  const int d = a.need<int>("d");
  const int radius = a.get<int>("radius", 4);
  const auto samples = a.get<std::uint64_t>("samples", 1000);
  if (!a.cfg.has("seed")) throw parameter_error("check-gn is randomized: --seed is required");
  const auto seed = a.need<std::uint64_t>("seed");
  const Box box(d, radius);
  const auto anchor = check_gn(Field::delta(box), d);
  bool all = anchor.holds;
  double worst = anchor.lhs / anchor.rhs;
  for (std::uint64_t i = 0; i < samples; ++i) {
    Stream rng(seed, i);
    Field f(box);
    for (auto& v : f.values()) v = 2.0 * rng.uniform() - 1.0;
    const auto r = check_gn(f, d);
    all = all && r.holds;
    worst = std::max(worst, r.lhs / r.rhs);
  }
  json j;
  j["command"] = "check-gn";
  j["d"] = d;
  j["samples"] = samples;
  j["all_hold"] = all;
  j["max_lhs_over_rhs"] = worst;
  j["delta_anchor"] = {{"lhs", anchor.lhs}, {"rhs", anchor.rhs}, {"holds", anchor.holds}};
  return finish_json(j, a.cfg);
}

inline Output cmd_tensor_gap(const Args& a) {
  auto q = params_from(a);
  if (q.p != 1) throw parameter_error("tensor-gap uses p = 1");
  const int radius = a.need<int>("radius");
  const auto g = tensor_gap(q, radius, a.get<double>("tol", 1e-11));
  json j;
  j["command"] = "tensor-gap";
  j["lambda1"] = g.lambda1;
  j["gap"] = g.gap;
  j["rayleigh2"] = g.rayleigh2;
  j["identity_error"] = g.identity_error;
  j["residual"] = g.residual;
  return finish_json(j, a.cfg);
}

inline Output dispatch(const RunConfig& cfg) {
  const Args a{cfg};
  std::optional<std::string> out;
  if (cfg.has("out")) out = cfg.get("out");
  if (cfg.command == "green") return cmd_green(a);
  if (cfg.command == "mu") return cmd_mu(a);
  if (cfg.command == "lambda-spectral") return cmd_lambda_spectral(a);
  if (cfg.command == "lambda-mc") return cmd_lambda_mc(a);
  if (cfg.command == "phase") return cmd_phase(a, out);
  if (cfg.command == "check-gn") return cmd_check_gn(a);
  if (cfg.command == "tensor-gap") return cmd_tensor_gap(a);
  throw parameter_error("unknown command " + cfg.command);
}

inline const std::vector<std::string>& known_options() {
  static const std::vector<std::string> names{"d",    "n",      "p",       "kappa", "rho",    "tol",
                                              "radius", "radii", "t",     "samples", "seed",  "workers",
                                              "out",  "format", "kappas", "rhos",   "ps",     "method"};
  return names;
}

/// Builds a RunConfig from a JSON document: either a manifest/config object
/// or a result carrying one under "config".
inline RunConfig config_from_json(const json& doc) {
  const json& c = doc.contains("config") ? doc.at("config") : doc;
  RunConfig cfg;
  cfg.command = c.at("command").get<std::string>();
  for (const auto& [k, v] : c.at("options").items()) cfg.options[k] = v.get<std::string>();
  return cfg;
}

}  // namespace detail

/// Parses argv into a RunConfig. Help and version requests are answered on
/// `out` and yield no config; grammar errors throw CLI::ParseError.
inline std::optional<RunConfig> parse(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Lyapunov exponents of the parabolic Anderson model with moving catalysts", "pam"};
  app.set_version_flag("--version", version);
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path, "replay the options recorded in a JSON result or manifest")
      ->check(CLI::ExistingFile);

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"green", "Green function constants G_d(0), |G_d|^2, alpha_d"},
      {"mu", "spectral function mu(kappa)"},
      {"lambda-spectral", "Dirichlet box estimates of lambda_p^{(n)}"},
      {"lambda-mc", "Feynman-Kac Monte Carlo estimate of Lambda_p(t)"},
      {"phase", "critical-kappa bounds, regimes and box estimates on a grid"},
      {"check-gn", "Gagliardo-Nirenberg inequality on random fields"},
      {"tensor-gap", "tensor-square certificate lambda_2 >= lambda_1 + gap"},
  };
  std::map<std::string, std::string> raw;
  // with --config and no subcommand the overriding flags land on the top level
  for (const auto& name : detail::known_options()) {
    app.add_option_function<std::string>(
        "--" + name, [&raw, name](const std::string& v) { raw[name] = v; }, name);
  }
  std::vector<CLI::App*> apps;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    for (const auto& name : detail::known_options()) {
      sub->add_option_function<std::string>(
          "--" + name, [&raw, name](const std::string& v) { raw[name] = v; }, name);
    }
    apps.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::Success&) {
    out << version << "\n";
    return std::nullopt;
  }
  if (argc <= 1) {
    out << app.help();
    return std::nullopt;
  }

  if (!config_path.empty()) {
    std::ifstream in(config_path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw parameter_error(std::string("cannot read config: ") + e.what());
    }
    RunConfig cfg;
    try {
      cfg = detail::config_from_json(doc);
    } catch (const json::exception& e) {
      throw parameter_error(std::string("malformed config: ") + e.what());
    }
    for (const auto& [k, v] : raw) cfg.options[k] = v;  // explicit flags win
    return cfg;
  }
  for (auto* sub : apps) {
    if (sub->parsed()) return RunConfig{sub->get_name(), raw};
  }
  return std::nullopt;
}

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  std::optional<RunConfig> cfg;
  try {
    cfg = parse(argc, argv, out);
  } catch (const CLI::ParseError& e) {
    err << "pam: " << e.what() << "\n";
    return 2;
  } catch (const parameter_error& e) {
    err << "pam: " << e.what() << "\n";
    return 2;
  }
  if (!cfg) return 0;  // help or version
  try {
    const auto result = detail::dispatch(*cfg);
    if (cfg->has("out")) {
      const std::string path = cfg->get("out");
      if (!result.text.empty()) {
        std::ofstream f(path, std::ios::trunc);
        if (!f || !(f << result.text)) throw parameter_error("cannot write " + path);
      }
      std::ofstream m(path + ".manifest.json", std::ios::trunc);
      if (!m || !(m << cfg->to_json().dump(2) << "\n")) throw parameter_error("cannot write manifest for " + path);
    } else {
      out << result.text;
    }
    return 0;
  } catch (const convergence_error& e) {
    err << "pam: " << e.what() << " (best value " << io::format_double(e.best_value()) << ", residual "
        << io::format_double(e.best_residual()) << ")\n";
    return 3;
  } catch (const parameter_error& e) {
    err << "pam: " << e.what() << "\n";
    return 2;
  } catch (const divergence_error& e) {
    err << "pam: " << e.what() << "\n";
    return 2;
  } catch (const domain_error& e) {
    err << "pam: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "pam: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pam::cli

#endif  // PAM_CLI_HPP
