#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
  fs::path root;
  Sandbox() {
    root = fs::temp_directory_path() / ("fbmldp_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root / "configs");
    fs::create_directories(root / "out");
    ::setenv("FBMLDP_OUTPUT_ROOT", (root / "out").c_str(), 1);
  }
  ~Sandbox() { fs::remove_all(root); }

  fs::path config(const std::string& name, const json& j) const {
    auto p = root / "configs" / (name + ".json");
    std::ofstream(p) << j.dump(2);
    return p;
  }

  int run(const fs::path& cfg, const std::string& extra = "") const {
    const std::string cmd = std::string("\"") + FBMLDP_CLI_PATH + "\" \"" + cfg.string() + "\" " + extra + " > \"" +
                            (root / "stdout.txt").string() + "\" 2> \"" + (root / "stderr.txt").string() + "\"";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  }

  std::string stderr_text() const { return slurp(root / "stderr.txt"); }

  static std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  }
};

json read_json(const fs::path& p) { return json::parse(Sandbox::slurp(p)); }

}  // namespace

TEST_CASE("validate-ops passes every check") {
  Sandbox sb;
  REQUIRE(sb.run(sb.config("v", {{"command", "validate-ops"}, {"output_dir", "v"}, {"workers", 2}})) == 0);
  auto r = read_json(sb.root / "out" / "v" / "result.json");
  CHECK(r["result"]["all_passed"] == true);
  const auto csv = Sandbox::slurp(sb.root / "out" / "v" / "validate.csv");
  CHECK(csv.find(",FAIL,") == std::string::npos);
}

TEST_CASE("schema errors exit with 2 and a JSON message") {
  Sandbox sb;
  CHECK(sb.run(sb.config("a", {{"command", "rate"}, {"hurst", 0.75}, {"bogus", 1}})) == 2);
  auto err = json::parse(sb.stderr_text());
  CHECK(err["error"]["type"] == "schema");
  CHECK(sb.run(sb.config("b", {{"command", "fly"}})) == 2);
  CHECK(sb.run(sb.config("c", {{"command", "rate"}, {"hurst", 0.4}, {"event", {{"kind", "terminal_exceedance"}, {"a", 1}}}})) == 2);
  CHECK(sb.run(sb.root / "configs" / "missing.json") == 2);
}

TEST_CASE("infeasible and numeric failures") {
  Sandbox sb;
  json inf = {{"command", "rate"},
              {"n_steps", 64},
              {"n_ctrl", 4},
              {"coefficients", {{"name", "zero"}}},
              {"event", {{"kind", "terminal_exceedance"}, {"a", 1.0}}},
              {"output_dir", "inf"}};
  CHECK(sb.run(sb.config("inf", inf)) == 4);
  CHECK(fs::exists(sb.root / "out" / "inf" / "error.json"));

  json num = {{"command", "solve"},
              {"n_steps", 64},
              {"eps", 1.0},
              {"x0", {1.0}},
              {"coefficients", {{"name", "linear_noise"}, {"params", {{"sigma", 1e4}}}}},
              {"output_dir", "num"}};
  CHECK(sb.run(sb.config("num", num)) == 3);
  auto err = json::parse(sb.stderr_text());
  CHECK(err["error"]["type"] == "numeric");
  CHECK(err["error"].contains("step"));
}

TEST_CASE("outputs are byte-identical across runs and worker counts") {
  Sandbox sb;
  const std::vector<json> cfgs = {
      {{"command", "sample"}, {"n_steps", 32}, {"d", 2}, {"n_samples", 20}, {"seed", 5}, {"sampler", "cholesky"}},
      {{"command", "solve"}, {"n_steps", 64}, {"eps", 0.2}, {"n_samples", 3}, {"seed", 6}, {"coefficients", {{"name", "tanh"}}}},
      {{"command", "rate"}, {"n_steps", 64}, {"n_ctrl", 8}, {"seed", 7}, {"event", {{"kind", "terminal_exceedance"}, {"a", 1.0}}}},
      {{"command", "ldp-scaling"}, {"n_steps", 64}, {"n_ctrl", 8}, {"eps_list", {0.25, 0.1}}, {"n_samples", 1000}, {"seed", 8},
       {"event", {{"kind", "terminal_exceedance"}, {"a", 1.0}}}},
      {{"command", "laplace-check"}, {"n_steps", 64}, {"n_ctrl", 8}, {"n_samples", 1000}, {"seed", 9},
       {"functional", {{"name", "terminal_shortfall"}}}}};
  int idx = 0;
  for (json c : cfgs) {
    const std::string tag = c["command"].get<std::string>() + std::to_string(idx++);
    c["output_dir"] = tag + "_w1";
    c["workers"] = 1;
    REQUIRE(sb.run(sb.config(tag + "_w1", c)) == 0);
    c["output_dir"] = tag + "_w3";
    c["workers"] = 3;
    REQUIRE(sb.run(sb.config(tag + "_w3", c)) == 0);
    const fs::path a = sb.root / "out" / (tag + "_w1"), b = sb.root / "out" / (tag + "_w3");
    const auto manifest = read_json(a / "manifest.json");
    for (const auto& f : manifest["outputs"]) {
      if (f == "manifest.json") continue;
      INFO(tag << "/" << f.get<std::string>());
      CHECK(Sandbox::slurp(a / f.get<std::string>()) == Sandbox::slurp(b / f.get<std::string>()));
    }
  }
}

TEST_CASE("a manifest reruns to the same result") {
  Sandbox sb;
  json c = {{"command", "rate"}, {"n_steps", 64}, {"n_ctrl", 8}, {"seed", 11}, {"output_dir", "m"},
            {"event", {{"kind", "sup_exceedance"}, {"a", 0.8}}}, {"coefficients", {{"name", "ou"}}}};
  REQUIRE(sb.run(sb.config("m", c)) == 0);
  const fs::path dir = sb.root / "out" / "m";
  const auto first = Sandbox::slurp(dir / "result.json");
  fs::copy_file(dir / "manifest.json", sb.root / "configs" / "manifest.json");
  REQUIRE(sb.run(sb.root / "configs" / "manifest.json") == 0);
  CHECK(Sandbox::slurp(dir / "result.json") == first);
  auto r = read_json(dir / "result.json");
  CHECK(r["seed"] == 11);
  CHECK(r["version"].is_string());
  CHECK(r["config_hash"].is_string());

  REQUIRE(sb.run(sb.root / "configs" / "manifest.json", "--seed 12") == 0);
  CHECK(read_json(dir / "result.json")["seed"] == 12);
}

TEST_CASE("nothing is written outside the output directory") {
  Sandbox sb;
  std::set<fs::path> before;
  for (auto& e : fs::recursive_directory_iterator(sb.root)) before.insert(e.path());
  REQUIRE(sb.run(sb.config("w", {{"command", "sample"}, {"n_steps", 16}, {"n_samples", 2}, {"output_dir", "only"}})) == 0);
  const fs::path only = sb.root / "out" / "only";
  for (auto& e : fs::recursive_directory_iterator(sb.root)) {
    if (before.count(e.path())) continue;
    const auto rel = e.path().lexically_relative(only);
    const bool inside = e.path() == only || (!rel.empty() && *rel.begin() != "..");
    const bool harness = e.path().filename() == "stdout.txt" || e.path().filename() == "stderr.txt" ||
                         e.path().parent_path() == sb.root / "configs";
    CHECK_MESSAGE((inside || harness), e.path().string());
  }
  const auto m = read_json(only / "manifest.json");
  std::set<std::string> listed;
  for (const auto& f : m["outputs"]) listed.insert(f);
  for (auto& e : fs::directory_iterator(only)) CHECK(listed.count(e.path().filename().string()) == 1);
}
