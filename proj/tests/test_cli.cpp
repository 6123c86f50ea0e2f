#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"

using namespace pgbias;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> lines;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

/// One sigmoid state that either loops on itself or leaves with `reward`.
std::filesystem::path loop_mdp(const std::string& name, double reward) {
  auto mdp = TabularMDP::make({"s", "end"}, {"stay", "go"}, "end", 1.0);
  mdp.set_transition("s", "stay", "s", 1.0);
  mdp.set_transition("s", "go", "end", 1.0);
  mdp.set_reward("s", "stay", reward);
  mdp.set_initial("s", 1.0);
  const auto path = temp_file(name);
  save_mdp(mdp, path);
  return path;
}

}  // namespace

TEST_CASE("analyze emits a header and one row per (gamma, theta, field)") {
  const auto r = run({"analyze", "--gallery", "figure1", "--gamma", "0.5,1", "--theta-grid", "-1:1:3,-1:1:2",
                      "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# pgbias", 0) == 0);
  CHECK(r.out.find("\"seed\":0") != std::string::npos);
  const auto lines = data_lines(r.out);
  REQUIRE(lines.size() == 1 + 2 * 6 * 3);
  CHECK(lines[0] == "gamma,theta_0,theta_1,field,g_0,g_1,J_gamma,J");
}

TEST_CASE("JSON documents carry tool, version, config and result") {
  const auto r = run({"symmetry", "--gallery", "figure1", "--gamma", "0.5", "--theta", "0,0", "--method", "analytic"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["tool"] == "pgbias");
  CHECK(doc["config"]["subcommand"] == "symmetry");
  CHECK(doc["config"]["seed"] == 0);
  const double defect = doc["result"][0]["defect"];
  CHECK(defect == doctest::Approx(0.5 / 16.0).epsilon(1e-12));
}

TEST_CASE("numbers survive a text round trip exactly") {
  const auto r = run({"analyze", "--gallery", "figure1", "--theta", "0.3,0.7", "--gamma", "0.5"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  const auto e = figure1();
  const Eigen::VectorXd g = grad_biased<double>(e.mdp, e.policy, Eigen::Vector2d(0.3, 0.7), 0.5);
  CHECK(doc["result"][1]["field"] == "grad_biased");
  CHECK(doc["result"][1]["gradient"][1].get<double>() == g(1));
}

TEST_CASE("reruns with the same configuration are byte-identical") {
  const std::vector<std::string> mc = {"--seed", "9", "mc", "--gallery", "figure1", "--theta", "0.3,0.7", "--episodes",
                                       "2000"};
  CHECK(run(mc).out == run(mc).out);
  const std::vector<std::string> flow = {"flow", "--gallery", "figure3", "--theta0", "1"};
  CHECK(run(flow).out == run(flow).out);
}

TEST_CASE("results do not depend on the worker count") {
  auto result_of = [](const std::string& jobs) {
    const auto r = run({"--jobs", jobs, "--seed", "4", "mc", "--gallery", "figure1", "--episodes", "3000"});
    REQUIRE(r.code == 0);
    return json::parse(r.out)["result"].dump();
  };
  CHECK(result_of("1") == result_of("3"));

  auto sweep = [](const std::string& jobs) {
    const auto r = run({"--jobs", jobs, "symmetry", "--gallery", "figure1", "--gamma", "0,0.5,1", "--theta-grid",
                        "-1:1:4,-1:1:4"});
    return json::parse(r.out)["result"].dump();
  };
  CHECK(sweep("1") == sweep("4"));
}

TEST_CASE("mc reports both estimators against the exact fields") {
  const auto r = run({"mc", "--gallery", "figure1", "--theta", "0.3,0.7", "--episodes", "1000", "--weighted"});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  REQUIRE(doc["result"]["estimators"].size() == 1);
  CHECK(doc["result"]["estimators"][0]["estimator"] == "weighted");
  CHECK(doc["result"]["estimators"][0].contains("z_vs_grad_discounted"));
  CHECK(doc["result"].contains("grad_biased"));

  const auto path = temp_file("pgbias_traj.jsonl");
  REQUIRE(run({"mc", "--gallery", "figure1", "--episodes", "7", "--trajectories", path.string()}).code == 0);
  std::ifstream in(path);
  int count = 0;
  for (std::string line; std::getline(in, line); ++count) CHECK(json::accept(line));
  CHECK(count == 7);
  std::filesystem::remove(path);
}

TEST_CASE("circulation and flow subcommands") {
  const auto c = run({"circulation", "--gallery", "figure1", "--gamma", "0,0.5", "--rect", "-1,1,-1,1"});
  REQUIRE(c.code == 0);
  const json circ = json::parse(c.out)["result"];
  const double gap = oracle::sigmoid(1.0) - oracle::sigmoid(-1.0);
  CHECK(circ[0]["value"].get<double>() == doctest::Approx(-gap * gap).epsilon(1e-9));
  CHECK(circ[1]["value"].get<double>() == doctest::Approx(-0.5 * gap * gap).epsilon(1e-9));

  const auto f = run({"flow", "--gallery", "figure2", "--gamma", "0.5"});
  REQUIRE(f.code == 0);
  const json result = json::parse(f.out)["result"];
  CHECK(result["stop_reason"] == "saturated");
  CHECK(result["terminal_policy"][0][0].get<double>() > 0.99);

  const auto csv = run({"flow", "--gallery", "figure3", "--theta0", "0", "--format", "csv", "--decimate", "1000"});
  REQUIRE(csv.code == 0);
  CHECK(data_lines(csv.out).front() == "iter,theta_0");
}

TEST_CASE("--out writes the document to a file") {
  const auto path = temp_file("pgbias_out.json");
  const auto r = run({"--out", path.string(), "gallery", "list"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  CHECK(json::parse(slurp(path))["result"].size() == 3);
  std::filesystem::remove(path);
}

TEST_CASE("gallery export produces a loadable document") {
  for (const auto& name : gallery_names()) {
    const auto path = temp_file("pgbias_export_" + name + ".json");
    REQUIRE(run({"gallery", "export", name, path.string()}).code == 0);
    CHECK(structurally_equal(load_mdp(path), gallery_entry(name).mdp));
    CHECK(json::parse(slurp(path)).contains("generator"));
    CHECK(run({"validate", "--mdp", path.string()}).code == 0);
    std::filesystem::remove(path);
  }
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == cli::usage);
  CHECK(run({"--help"}).code == cli::ok);
  CHECK(run({"analyze", "--bogus"}).code == cli::usage);
  CHECK(run({"analyze", "--gallery", "figure9"}).code == cli::usage);
  CHECK(run({"analyze", "--gallery", "figure1", "--gamma", "1.5"}).code == cli::usage);
  CHECK(run({"analyze", "--gallery", "figure1", "--theta", "1,2,3"}).code == cli::usage);
  CHECK(run({"analyze", "--gallery", "figure1", "--theta-grid", "0:1"}).code == cli::usage);
  CHECK(run({"--format", "xml", "gallery", "list"}).code == cli::usage);

  SUBCASE("validation failures") {
    json doc = mdp_to_json(figure1().mdp);
    doc["d0"][0]["p"] = 0.25;
    const auto path = temp_file("pgbias_bad_d0.json");
    std::ofstream(path) << doc.dump();
    const auto v = run({"validate", "--mdp", path.string()});
    CHECK(v.code == cli::validation);
    CHECK(json::parse(v.out)["result"]["violations"][0]["code"] == "d0_sum");
    CHECK(run({"analyze", "--mdp", path.string()}).code == cli::validation);
    std::ofstream(path) << "{ not json";
    CHECK(run({"validate", "--mdp", path.string()}).code == cli::validation);
    std::filesystem::remove(path);
  }
  SUBCASE("numerical failure") {
    const auto path = loop_mdp("pgbias_loop.json", 0.0);
    CHECK(run({"analyze", "--mdp", path.string(), "--gamma", "1", "--theta", "0"}).code == cli::ok);
    const auto r = run({"analyze", "--mdp", path.string(), "--gamma", "1", "--theta", "800"});
    CHECK(r.code == cli::numerical);
    CHECK(r.err.find("numerical") != std::string::npos);
    std::filesystem::remove(path);
  }
  SUBCASE("divergence is a warning, not a failure") {
    const auto path = loop_mdp("pgbias_big.json", 1e7);
    const auto r = run({"flow", "--mdp", path.string(), "--gamma", "0.5", "--alpha", "1"});
    CHECK(r.code == cli::ok);
    CHECK(r.err.find("diverged") != std::string::npos);
    CHECK(json::parse(r.out)["result"]["diverged"] == true);
    std::filesystem::remove(path);
  }
}

TEST_CASE("the installed binary reports exit codes to the shell") {
  auto shell = [](const std::string& args) {
    const std::string cmd = std::string("\"") + PGBIAS_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  CHECK(shell("gallery list") == 0);
  CHECK(shell("analyze --gallery nowhere") == 2);
  CHECK(shell("validate --mdp /nonexistent/file.json") == 3);
}
