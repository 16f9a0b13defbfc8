#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "magnet/bench.hpp"
#include "magnet/cli.hpp"
#include "magnet/io.hpp"
#include "tmpdir.hpp"

using namespace magnet;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "magnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(std::ifstream(path)); }

// Simulated chain data in `dir`: data.csv, layout.json, precision.csv.
void simulate(const testing::TempDir& dir, int samples = 400) {
  const auto r = run({"simulate", "--kind", "chain", "--p", "20", "--k", "2", "--samples",
                      std::to_string(samples), "--seed", "3", "--out", dir.path().string()});
  REQUIRE(r.code == cli::kExitOk);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version and help") {
  auto r = run({"--version"});
  CHECK(r.code == 0);
  CHECK(r.out.find(cli::version()) != std::string::npos);
  CHECK(r.out.find(cli::kReportSchema) != std::string::npos);
  r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("estimate") != std::string::npos);
  CHECK(run({}).code == 0);
}

TEST_CASE("simulate writes the ground truth and samples") {
  testing::TempDir dir;
  simulate(dir);
  for (const char* f : {"truth_edges.csv", "precision.csv", "data.csv", "layout.json", "simulate.json"})
    CHECK(fs::exists(dir.path() / f));
  CHECK(io::read_matrix_csv(dir.file("data.csv")).rows() == 400);
  CHECK(io::read_edges_csv(dir.file("truth_edges.csv"), 20).edge_count() == 19);
  CHECK(read_json(dir.file("simulate.json"))["seed"] == 3);
}

TEST_CASE("estimate from a covariance file") {
  testing::TempDir dir;
  simulate(dir);
  const Eigen::MatrixXd x = io::read_matrix_csv(dir.file("data.csv"));
  io::write_matrix_csv(dir.file("S.csv"), x.transpose() * x / double(x.rows()));
  const auto r = run({"estimate", "--cov", dir.file("S.csv"), "--layout", dir.file("layout.json"), "--lambda",
                      "0.3", "--out", dir.path().string()});
  CHECK(r.code == cli::kExitOk);
  for (const char* f : {"omega.csv", "sigma.csv", "edges.csv", "report.json"}) CHECK(fs::exists(dir.path() / f));
  const auto rep = read_json(dir.file("report.json"));
  CHECK(rep["schema"] == cli::kReportSchema);
  CHECK(rep["config"]["lambda"] == 0.3);
  CHECK(rep["config"]["solver"].contains("epsilon"));
  CHECK(rep.contains("seed"));
  CHECK(rep["result"]["converged"] == true);
}

TEST_CASE("estimate usage and input errors") {
  testing::TempDir dir;
  simulate(dir, 100);
  auto r = run({"estimate", "--data", dir.file("data.csv"), "--layout", dir.file("layout.json")});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.out.find("--lambda") != std::string::npos);
  CHECK(nlohmann::json::parse(r.err)["error"]["code"] == cli::kExitUsage);

  r = run({"estimate", "--data", dir.file("nope.csv"), "--layout", dir.file("layout.json"), "--lambda", "0.3"});
  CHECK(r.code == cli::kExitInput);
  CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "input");

  r = run({"estimate", "--lambda", "0.3", "--layout", dir.file("layout.json")});
  CHECK(r.code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
}

TEST_CASE("non-PD diagonal blocks exit with a numerical error naming the node") {
  testing::TempDir dir;
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4);
  s(2, 3) = s(3, 2) = 2.0;  // diagonal block of node 1 is indefinite
  io::write_matrix_csv(dir.file("S.csv"), s);
  io::write_layout_json(dir.file("l.json"), AttributeLayout::uniform(2, 2));
  const auto r = run({"estimate", "--cov", dir.file("S.csv"), "--layout", dir.file("l.json"), "--lambda", "0.3",
                      "--out", dir.path().string()});
  CHECK(r.code == cli::kExitNumerical);
  const auto e = nlohmann::json::parse(r.err)["error"];
  CHECK(e["kind"] == "numerical");
  CHECK(e["message"].get<std::string>().find("node 1") != std::string::npos);
}

TEST_CASE("non-convergence exits 3 but still writes the best iterate") {
  testing::TempDir dir;
  simulate(dir, 200);
  const auto r = run({"estimate", "--data", dir.file("data.csv"), "--layout", dir.file("layout.json"), "--lambda",
                      "0.05", "--max-sweeps", "1", "--epsilon", "1e-12", "--out", dir.path().string()});
  CHECK(r.code == cli::kExitNumerical);
  CHECK(fs::exists(dir.path() / "omega.csv"));
}

TEST_CASE("path, screen, stability, interpret and theory run end to end") {
  testing::TempDir dir;
  simulate(dir, 600);
  const std::string data = dir.file("data.csv"), layout = dir.file("layout.json"), out = dir.path().string();

  auto r = run({"path", "--data", data, "--layout", layout, "--grid-size", "8", "--out", out});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir.path() / "path.csv"));
  const auto path = read_json(dir.file("path.json"));
  CHECK(path["result"].contains("best_index"));

  r = run({"screen", "--data", data, "--layout", layout, "--lambda", "0.2", "--out", out});
  CHECK(r.code == 0);
  CHECK(read_json(dir.file("components.json"))["result"]["components"].is_array());

  r = run({"stability", "--data", data, "--layout", layout, "--lambda", "0.2", "--reps", "6", "--threshold", "5",
           "--seed", "7", "--jobs", "2", "--out", out});
  CHECK(r.code == 0);
  const auto st = read_json(dir.file("stability.json"));
  CHECK(st["config"]["seed"] == 7);
  CHECK(fs::exists(dir.path() / "stable_edges.csv"));
  std::ifstream first(dir.file("stable_edges.csv"));
  std::stringstream a;
  a << first.rdbuf();
  CHECK(run({"stability", "--data", data, "--layout", layout, "--lambda", "0.2", "--reps", "6", "--threshold", "5",
             "--seed", "7", "--out", out})
            .code == 0);
  std::ifstream second(dir.file("stable_edges.csv"));
  std::stringstream b;
  b << second.rdbuf();
  CHECK(a.str() == b.str());

  r = run({"interpret", "--data", data, "--layout", layout, "--edges", dir.file("truth_edges.csv"), "--out", out});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir.path() / "interpretations.csv"));
  CHECK(fs::exists(dir.path() / "nodes.csv"));

  r = run({"theory", "--precision", dir.file("precision.csv"), "--layout", layout, "--out", out});
  CHECK(r.code == 0);
  CHECK(read_json(dir.file("diagnostics.json"))["result"].contains("alpha_irrep"));
}

TEST_CASE("bench writes a versioned csv and a plot script") {
  testing::TempDir dir;
  const std::string out = dir.file("bench.csv");
  const auto r = run({"bench", "--p", "20", "--k", "1", "--thetas", "2,8", "--reps", "2", "--grid-size", "6",
                      "--no-timing", "--emit-gnuplot", "--seed", "1", "--out", out});
  CHECK(r.code == 0);
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);
  CHECK(line == std::string("# schema: ") + kBenchSchema);
  CHECK(fs::exists(out + ".gp"));
  CHECK(run({"bench", "--thetas", "4,2", "--out", out}).code == cli::kExitInput);
}

}  // TEST_SUITE
