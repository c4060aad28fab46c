// Experiment runner: fbmldp <config.json> [--seed N]
//
// The config is a single JSON object; see README.md for the schema. Every
// run writes result files plus manifest.json into the output directory,
// which is resolved against $FBMLDP_OUTPUT_ROOT (or the working directory)
// when relative.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "fbmldp/cmspace.hpp"
#include "fbmldp/errors.hpp"
#include "fbmldp/fbm.hpp"
#include "fbmldp/ldp.hpp"
#include "fbmldp/sde.hpp"
#include "fbmldp/validate.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace fbmldp;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kChecksFailed = 1, kSchema = 2, kNumeric = 3, kInfeasible = 4 };

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- schema helpers -------------------------------------------------------

const std::set<std::string> kCommands = {"sample", "solve", "rate", "ldp-scaling", "laplace-check", "validate-ops"};
const std::set<std::string> kKeys = {"command",   "hurst",     "n_steps",  "d",           "m",
                                     "eps",       "eps_list",  "coefficients", "x0",      "event",
                                     "functional", "n_samples", "seed",     "output_dir", "sampler",
                                     "n_ctrl",    "workers",   "tolerances", "alpha",     "delta"};
const std::set<std::string> kTolerances = {"residual_tol", "mu0", "mu_factor", "stages", "starts",
                                           "fd_rel_step",  "max_iter", "grad_tol"};

double get_number(const json& c, const std::string& key, double fallback) {
  if (!c.contains(key)) return fallback;
  if (!c[key].is_number()) throw SchemaError("'" + key + "' must be a number");
  return c[key].get<double>();
}

std::size_t get_count(const json& c, const std::string& key, std::size_t fallback) {
  if (!c.contains(key)) return fallback;
  if (!c[key].is_number_unsigned()) throw SchemaError("'" + key + "' must be a non-negative integer");
  return c[key].get<std::size_t>();
}

std::map<std::string, double> get_params(const json& obj, const std::string& where) {
  std::map<std::string, double> p;
  if (!obj.contains("params")) return p;
  if (!obj["params"].is_object()) throw SchemaError(where + ".params must be an object");
  for (const auto& [k, v] : obj["params"].items()) {
    if (!v.is_number()) throw SchemaError(where + ".params." + k + " must be a number");
    p[k] = v.get<double>();
  }
  return p;
}

std::vector<double> get_vector(const json& c, const std::string& key) {
  if (!c[key].is_array()) throw SchemaError("'" + key + "' must be an array of numbers");
  std::vector<double> v;
  for (const auto& x : c[key]) {
    if (!x.is_number()) throw SchemaError("'" + key + "' must be an array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

void validate_schema(const json& c) {
  if (!c.is_object()) throw SchemaError("config must be a JSON object");
  for (const auto& [k, v] : c.items()) {
    if (!kKeys.count(k)) throw SchemaError("unknown config key '" + k + "'");
  }
  if (!c.contains("command") || !c["command"].is_string()) throw SchemaError("'command' (string) is required");
  const std::string cmd = c["command"];
  if (!kCommands.count(cmd)) throw SchemaError("unknown command '" + cmd + "'");
  if (c.contains("tolerances")) {
    if (!c["tolerances"].is_object()) throw SchemaError("'tolerances' must be an object");
    for (const auto& [k, v] : c["tolerances"].items()) {
      if (!kTolerances.count(k)) throw SchemaError("unknown tolerance '" + k + "'");
      if (!v.is_number()) throw SchemaError("tolerance '" + k + "' must be a number");
    }
  }
  if (c.contains("output_dir") && !c["output_dir"].is_string()) throw SchemaError("'output_dir' must be a string");
  const double hurst = get_number(c, "hurst", 0.75);
  if (cmd == "sample") {
    if (!(hurst > 0.0 && hurst < 1.0)) throw SchemaError("hurst must lie in (0,1)");
  } else if (cmd != "validate-ops") {
    if (!(hurst > 0.5 && hurst < 1.0)) throw SchemaError("hurst must lie in (1/2,1) for " + cmd);
  }
  if (get_count(c, "n_steps", 256) == 0) throw SchemaError("n_steps must be positive");
  const std::size_t d = get_count(c, "d", 1);
  if (d == 0 || d > kMaxFbmDim) throw SchemaError("d must lie in 1..4");
  if (get_count(c, "m", 1) == 0) throw SchemaError("m must be positive");
  if (c.contains("seed") && !c["seed"].is_number_unsigned()) throw SchemaError("'seed' must be a non-negative integer");
  if (c.contains("eps_list")) {
    const auto e = get_vector(c, "eps_list");
    if (e.empty()) throw SchemaError("eps_list must not be empty");
  }
  if ((cmd == "rate" || cmd == "ldp-scaling") && !c.contains("event")) throw SchemaError("'event' is required for " + cmd);
  if (cmd == "ldp-scaling" && !c.contains("eps_list")) throw SchemaError("'eps_list' is required for ldp-scaling");
  if (cmd == "laplace-check" && !c.contains("functional")) throw SchemaError("'functional' is required for laplace-check");
}

// ---- config to library objects -------------------------------------------

SdeProblem make_problem(const json& c) {
  SdeProblem p;
  const std::size_t m = get_count(c, "m", 1), d = get_count(c, "d", 1);
  std::string name = "additive";
  std::map<std::string, double> params;
  if (c.contains("coefficients")) {
    const json& co = c["coefficients"];
    if (!co.is_object() || !co.contains("name") || !co["name"].is_string()) {
      throw SchemaError("'coefficients' must be an object with a string 'name'");
    }
    name = co["name"];
    params = get_params(co, "coefficients");
  }
  p.coeffs = make_coefficients(name, m, d, params);
  p.x0 = c.contains("x0") ? get_vector(c, "x0") : std::vector<double>(m, 0.0);
  if (p.x0.size() != m) throw SchemaError("x0 must have m components");
  p.hurst = get_number(c, "hurst", 0.75);
  p.n_steps = get_count(c, "n_steps", 256);
  validate(p);
  return p;
}

EventSpec make_event(const json& c, std::size_t m) {
  const json& e = c["event"];
  if (!e.is_object() || !e.contains("kind") || !e["kind"].is_string()) {
    throw SchemaError("'event' must be an object with a string 'kind'");
  }
  for (const auto& [k, v] : e.items()) {
    if (k != "kind" && k != "a" && k != "y" && k != "r") throw SchemaError("unknown event key '" + k + "'");
  }
  EventSpec ev;
  ev.kind = event_kind_from_string(e["kind"]);
  ev.a = get_number(e, "a", 0.0);
  ev.r = get_number(e, "r", 0.0);
  if (e.contains("y")) ev.y = get_vector(e, "y");
  validate(ev, m);
  return ev;
}

RateOptions make_rate_options(const json& c) {
  RateOptions o;
  o.n_ctrl = get_count(c, "n_ctrl", 16);
  o.workers = get_count(c, "workers", 1);
  o.seed = c.value("seed", std::uint64_t{0});
  if (c.contains("tolerances")) {
    const json& t = c["tolerances"];
    o.residual_tol = get_number(t, "residual_tol", o.residual_tol);
    o.mu0 = get_number(t, "mu0", o.mu0);
    o.mu_factor = get_number(t, "mu_factor", o.mu_factor);
    o.stages = static_cast<std::size_t>(get_number(t, "stages", static_cast<double>(o.stages)));
    o.starts = static_cast<std::size_t>(get_number(t, "starts", static_cast<double>(o.starts)));
    o.bfgs.fd_rel_step = get_number(t, "fd_rel_step", o.bfgs.fd_rel_step);
    o.bfgs.max_iter = static_cast<std::size_t>(get_number(t, "max_iter", static_cast<double>(o.bfgs.max_iter)));
    o.bfgs.grad_tol = get_number(t, "grad_tol", o.bfgs.grad_tol);
  }
  return o;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(x > 0 ? "inf" : (x < 0 ? "-inf" : "nan")); }

json rate_json(const RateResult& r) {
  json starts = json::array();
  for (double v : r.diagnostics.start_values) starts.push_back(num(v));
  json conv = json::array();
  for (bool b : r.diagnostics.converged) conv.push_back(b);
  return {{"value", num(r.value)},
          {"cm_norm", cm_norm(r.control)},
          {"residual", num(r.residual)},
          {"feasible", r.feasible},
          {"diagnostics",
           {{"penalty_schedule", r.diagnostics.penalty_schedule},
            {"start_values", starts},
            {"iterations", r.diagnostics.iterations},
            {"evaluations", r.diagnostics.evaluations},
            {"converged", conv},
            {"restarts", r.diagnostics.restarts},
            {"best_start", r.diagnostics.best_start},
            {"message", r.diagnostics.message}}}};
}

// ---- output ---------------------------------------------------------------

class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    if (name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
      throw std::logic_error("output names must be plain file names");
    }
    files_.push_back(name);
    std::ofstream os(dir_ / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << "\n"; }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

fs::path resolve_output_dir(const json& c) {
  const fs::path rel = c.value("output_dir", std::string("fbmldp_out"));
  if (rel.is_absolute()) return rel;
  const char* root = std::getenv("FBMLDP_OUTPUT_ROOT");
  return (root && *root ? fs::path(root) : fs::current_path()) / rel;
}

// ---- workflows ------------------------------------------------------------

json run_sample(const json& c, Output& out) {
  const double hurst = get_number(c, "hurst", 0.75);
  const std::size_t n = get_count(c, "n_steps", 256), d = get_count(c, "d", 1);
  const std::size_t paths = get_count(c, "n_samples", 1000);
  const std::uint64_t seed = c.value("seed", std::uint64_t{0});
  const std::size_t workers = get_count(c, "workers", 1);
  const Sampler sampler = sampler_from_string(c.value("sampler", std::string("volterra")));
  const FbmBatch b = sampler == Sampler::cholesky ? sample_cholesky(n, hurst, d, paths, seed, workers)
                                                  : sample_volterra(n, hurst, d, paths, seed, workers);
  {
    auto os = out.open("batch.csv");
    write_batch_csv(os, b);
  }
  {
    auto os = out.open("increments.bin");
    write_increments_binary(os, b);
  }
  json comps = json::array();
  const std::size_t half = n / 2;
  for (std::size_t comp = 0; comp < d; ++comp) {
    double s1 = 0, s2 = 0, cross = 0;
    for (const auto& p : b.paths) {
      s1 += p(n, comp);
      s2 += p(n, comp) * p(n, comp);
      cross += p(half, comp) * p(n, comp);
    }
    const double nn = static_cast<double>(paths);
    comps.push_back({{"component", comp},
                     {"mean_1", s1 / nn},
                     {"second_moment_1", s2 / nn},
                     {"cross_moment_half_1", cross / nn},
                     {"t_half", static_cast<double>(half) / static_cast<double>(n)}});
  }
  return {{"sampler", to_string(sampler)},
          {"n_paths", paths},
          {"reference_variance_1", 1.0},
          {"reference_covariance_half_1", covariance(static_cast<double>(half) / static_cast<double>(n), 1.0, hurst)},
          {"components", comps}};
}

json run_solve(const json& c, Output& out) {
  const SdeProblem p = make_problem(c);
  const double eps = get_number(c, "eps", 0.1);
  const std::size_t paths = get_count(c, "n_samples", 1);
  const std::uint64_t seed = c.value("seed", std::uint64_t{0});
  const double alpha = get_number(c, "alpha", 0.35), delta = get_number(c, "delta", 0.05);
  const auto table = VolterraTable::get(p.n_steps, p.hurst);

  auto os = out.open("terminal.csv");
  os << "# fbmldp-terminal v1 eps=" << fmt17(eps) << " hurst=" << fmt17(p.hurst) << "\n";
  os << "path";
  for (std::size_t i = 0; i < p.coeffs.m; ++i) os << ",x" << i << "_1";
  os << "\n";
  json first;
  for (std::size_t i = 0; i < paths; ++i) {
    const FbmDraw draw = draw_volterra(*table, p.coeffs.d, seed, i);
    SolvedPath s = small_noise_path(p.x0, p.coeffs, eps, draw.path);
    s.hurst = p.hurst;
    os << i;
    for (double v : s.path.node(p.n_steps)) os << "," << fmt17(v);
    os << "\n";
    if (i == 0) {
      auto ps = out.open("solution.csv");
      write_solved_csv(ps, s);
      const NormReport nr = norm_report(s, alpha, delta);
      first = {{"sup_norm", nr.solution.sup_norm},
               {"holder_norm", nr.solution.holder_norm},
               {"holder_exponent", nr.solution.lambda},
               {"w_alpha_norm", nr.solution.w_alpha_norm},
               {"driver_holder_norm", nr.driver_holder},
               {"alpha", alpha},
               {"delta", delta}};
    }
  }
  return {{"eps", eps}, {"n_paths", paths}, {"coefficients", p.coeffs.name}, {"first_path_norms", first}};
}

json run_rate(const json& c, Output& out) {
  const SdeProblem p = make_problem(c);
  const EventSpec e = make_event(c, p.coeffs.m);
  const RateResult r = rate_minimize(p, e, make_rate_options(c));
  {
    auto os = out.open("control.csv");
    write_control_csv(os, r.control);
  }
  {
    SolvedPath s = skeleton(p.x0, p.coeffs, r.control);
    auto os = out.open("skeleton.csv");
    write_solved_csv(os, s);
  }
  json j = rate_json(r);
  if (!r.feasible) {
    out.write_json("result.json", {{"rate", j}});
    throw InfeasibleError("rate problem infeasible: " + r.diagnostics.message);
  }
  return {{"rate", j}, {"event", to_string(e.kind)}};
}

json run_scaling(const json& c, Output& out) {
  const SdeProblem p = make_problem(c);
  const EventSpec e = make_event(c, p.coeffs.m);
  const auto eps = get_vector(c, "eps_list");
  const std::size_t n = get_count(c, "n_samples", 10000);
  const std::uint64_t seed = c.value("seed", std::uint64_t{0});
  const RateOptions ro = make_rate_options(c);
  const ScalingTable t = scaling_table(p, e, eps, n, seed, ro, ro.workers);
  {
    auto os = out.open("scaling.csv");
    os << "# fbmldp-scaling v1 event=" << to_string(e.kind) << " a=" << fmt17(e.a) << " n_samples=" << n << "\n";
    os << "eps,p_hat,std_err,minus_eps_log_p,rate,gap,n_hits\n";
    for (const auto& r : t.rows) {
      os << fmt17(r.eps) << "," << fmt17(r.p_hat) << "," << fmt17(r.std_err) << "," << fmt17(r.minus_eps_log_p) << ","
         << fmt17(r.rate) << "," << fmt17(r.gap) << "," << r.n_hits << "\n";
    }
  }
  {
    auto os = out.open("control.csv");
    write_control_csv(os, t.rate.control);
  }
  json rows = json::array();
  bool shrinking = true;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    rows.push_back({{"eps", r.eps},
                    {"p_hat", r.p_hat},
                    {"std_err", r.std_err},
                    {"minus_eps_log_p", num(r.minus_eps_log_p)},
                    {"gap", num(r.gap)},
                    {"n_hits", r.n_hits}});
    if (i > 0 && !(std::abs(r.gap) <= std::abs(t.rows[i - 1].gap))) shrinking = false;
  }
  return {{"rate", rate_json(t.rate)},
          {"rows", rows},
          {"gap_shrinking", shrinking},
          {"final_gap", num(t.rows.back().gap)}};
}

json run_laplace(const json& c, Output& out) {
  const SdeProblem p = make_problem(c);
  const json& fj = c["functional"];
  if (!fj.is_object() || !fj.contains("name") || !fj["name"].is_string()) {
    throw SchemaError("'functional' must be an object with a string 'name'");
  }
  const Functional h = make_functional(fj["name"], get_params(fj, "functional"));
  const auto eps = c.contains("eps_list") ? get_vector(c, "eps_list") : std::vector<double>{0.5, 0.2, 0.1};
  const std::size_t n = get_count(c, "n_samples", 10000);
  const std::uint64_t seed = c.value("seed", std::uint64_t{0});
  const RateOptions ro = make_rate_options(c);
  const LaplaceVariationalResult var = laplace_variational(p, h, ro);

  auto os = out.open("laplace.csv");
  os << "# fbmldp-laplace v1 functional=" << h.name << " n_samples=" << n << "\n";
  os << "eps,laplace_mc,std_err,variational,inf_h,sup_h\n";
  json rows = json::array();
  bool sandwich = true;
  for (double e : eps) {
    const LaplaceMcResult r = laplace_mc(p, h, e, n, seed, ro.workers);
    sandwich = sandwich && r.value >= h.inf_h && r.value <= h.sup_h;
    os << fmt17(e) << "," << fmt17(r.value) << "," << fmt17(r.std_err) << "," << fmt17(var.value) << ","
       << fmt17(h.inf_h) << "," << fmt17(h.sup_h) << "\n";
    rows.push_back({{"eps", e}, {"value", r.value}, {"std_err", r.std_err}});
  }
  return {{"functional", h.name},
          {"variational", {{"value", var.value}, {"converged", var.converged}, {"message", var.message}}},
          {"rows", rows},
          {"sandwich", sandwich}};
}

json run_validate(const json& c, Output& out, bool& all_passed) {
  const auto checks = run_invariant_suite(get_count(c, "workers", 1));
  auto os = out.open("validate.csv");
  os << "# fbmldp-validate v1\n";
  os << "check,passed,value,threshold,detail\n";
  json arr = json::array();
  all_passed = true;
  for (const auto& ch : checks) {
    all_passed = all_passed && ch.passed;
    os << ch.name << "," << (ch.passed ? "PASS" : "FAIL") << "," << fmt17(ch.value) << "," << fmt17(ch.threshold)
       << ",\"" << ch.detail << "\"\n";
    arr.push_back({{"name", ch.name}, {"passed", ch.passed}, {"value", num(ch.value)}, {"detail", ch.detail}});
  }
  return {{"checks", arr}, {"all_passed", all_passed}};
}

int report_error(const std::string& type, const std::string& message, int code, std::optional<std::size_t> step,
                 const std::optional<fs::path>& dir) {
  json err = {{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
  if (step) err["error"]["step"] = *step;
  std::cerr << err.dump() << "\n";
  if (dir) {
    std::error_code ec;
    fs::create_directories(*dir, ec);
    std::ofstream os(*dir / "error.json");
    if (os) os << err.dump(2) << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbmldp experiment runner"};
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  app.add_option("config", config_path, "JSON config (or a manifest.json from an earlier run)")->required();
  app.add_option("--seed", seed_override, "override the config seed");
  CLI11_PARSE(app, argc, argv);

  std::optional<fs::path> out_dir;
  try {
    std::ifstream is(config_path);
    if (!is) throw SchemaError("cannot open config '" + config_path + "'");
    json cfg;
    try {
      cfg = json::parse(is);
    } catch (const json::parse_error& e) {
      throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
    if (cfg.is_object() && cfg.contains("fbmldp_manifest")) {
      if (!cfg.contains("config")) throw SchemaError("manifest without 'config'");
      cfg = cfg["config"];
    }
    if (seed_override) cfg["seed"] = *seed_override;
    validate_schema(cfg);
    if (!cfg.contains("seed")) cfg["seed"] = 0;

    out_dir = resolve_output_dir(cfg);
    Output out(*out_dir);
    const auto start = std::chrono::steady_clock::now();
    const std::string cmd = cfg["command"];
    json hashed = cfg;
    hashed.erase("workers");
    hashed.erase("output_dir");
    const std::string hash = hex64(fnv1a(hashed.dump()));

    bool all_passed = true;
    json result;
    if (cmd == "sample") result = run_sample(cfg, out);
    else if (cmd == "solve") result = run_solve(cfg, out);
    else if (cmd == "rate") result = run_rate(cfg, out);
    else if (cmd == "ldp-scaling") result = run_scaling(cfg, out);
    else if (cmd == "laplace-check") result = run_laplace(cfg, out);
    else result = run_validate(cfg, out, all_passed);

    out.write_json("result.json", {{"command", cmd},
                                   {"version", kVersion},
                                   {"config_hash", hash},
                                   {"seed", cfg["seed"]},
                                   {"result", result}});

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::vector<std::string> files = out.files();
    files.push_back("manifest.json");
    std::ofstream(*out_dir / "manifest.json") << json{{"fbmldp_manifest", 1},
                                                      {"config", cfg},
                                                      {"config_hash", hash},
                                                      {"seed", cfg["seed"]},
                                                      {"version", kVersion},
                                                      {"wall_time_s", wall},
                                                      {"timestamp", stamp},
                                                      {"outputs", files}}
                                                     .dump(2)
                                              << "\n";
    std::cout << "wrote " << files.size() << " files to " << out_dir->string() << "\n";
    return all_passed ? kOk : kChecksFailed;
  } catch (const SchemaError& e) {
    return report_error("schema", e.what(), kSchema, std::nullopt, out_dir);
  } catch (const DomainError& e) {
    return report_error("schema", e.what(), kSchema, std::nullopt, out_dir);
  } catch (const json::exception& e) {
    return report_error("schema", e.what(), kSchema, std::nullopt, out_dir);
  } catch (const NumericError& e) {
    return report_error("numeric", e.what(), kNumeric, e.step(), out_dir);
  } catch (const InfeasibleError& e) {
    return report_error("infeasible", e.what(), kInfeasible, std::nullopt, out_dir);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1, std::nullopt, out_dir);
  }
}
