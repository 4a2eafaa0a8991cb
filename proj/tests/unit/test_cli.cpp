#ifdef INVLQR_HAVE_CLI

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "io.hpp"
#include "json.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const char* kCaseStudy = R"({"A": [[1,0,1],[-2,-3,-1],[0,0,2]], "B": [[1,0],[0,1],[0,1]],
  "Q": [[4,-1,2],[-1,2,-2],[2,-2,3]], "F": [[3,-1,0],[-1,2,-1],[0,-1,1]], "T": 1.0, "N": 1000,
  "x0": [1,-0.5,0]})";

const char* kExample1 = R"({"A": [[2,1],[0,-1]], "B": [[0],[1]], "Q": [[4,2],[2,1]], "F": [[1,0],[0,1]]})";

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("invlqr_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string put(const std::string& name, const std::string& text) const {
    const auto p = (dir / name).string();
    std::ofstream(p) << text;
    return p;
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = invlqr::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json load(const std::string& path) { return json::parse(invlqr::cli::read_file(path)); }

}  // namespace

TEST_CASE("forward writes one row per grid point") {
  Workspace ws;
  const auto p = ws.put("p.json", kCaseStudy);
  REQUIRE(run({"forward", "--problem", p, "--out", ws.path("k.csv")}).code == 0);
  std::istringstream csv(invlqr::cli::read_file(ws.path("k.csv")));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,k_11,k_12,k_13,k_21,k_22,k_23");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
  }
  CHECK(rows == 1001);

  CHECK(run({"forward", "--problem", p, "--steps", "50", "--out", ws.path("k50.csv")}).code == 0);
  CHECK(invlqr::cli::parse_trajectory_csv(invlqr::cli::read_file(ws.path("k50.csv")), 3, 2).K.size() == 51);
}

TEST_CASE("forward input errors") {
  Workspace ws;
  const auto neg = ws.put("neg.json", R"({"A": [[0]], "B": [[1]], "Q": [[1]], "F": [[1]], "T": -1})");
  CHECK(run({"forward", "--problem", neg}).code == invlqr::cli::kInputError);
  const auto noq = ws.put("noq.json", R"({"A": [[0]], "B": [[1]], "F": [[1]]})");
  const auto r = run({"forward", "--problem", noq});
  CHECK(r.code == invlqr::cli::kInputError);
  CHECK(r.err.find("forward requires Q") != std::string::npos);
  const auto shape = ws.put("shape.json", R"({"A": [[0, 1]], "B": [[1]], "Q": [[1]], "F": [[1]]})");
  CHECK(run({"forward", "--problem", shape}).code == invlqr::cli::kInputError);
  CHECK(run({"forward", "--problem", ws.path("missing.json")}).code == invlqr::cli::kInputError);
  CHECK(run({"frobnicate"}).code == invlqr::cli::kInputError);
}

TEST_CASE("check exit codes") {
  Workspace ws;
  const auto p = ws.put("p.json", kCaseStudy);
  REQUIRE(run({"forward", "--problem", p, "--out", ws.path("k.csv")}).code == 0);
  const auto k = ws.path("k.csv");

  CHECK(run({"check", "--problem", p, "--trajectory", k, "--out", ws.path("c.json")}).code == 0);
  CHECK(load(ws.path("c.json"))["existence"]["feasible"] == true);

  CHECK(run({"check", "--problem", p, "--trajectory", k, "--snr-db", "20", "--out", ws.path("n.json")}).code ==
        invlqr::cli::kInfeasible);
  const auto n = load(ws.path("n.json"));
  CHECK(n["existence"]["feasible"] == false);
  CHECK(n["existence"]["constancy"]["deviation"].get<double>() > 1e-4);

  const std::string text = invlqr::cli::read_file(k);
  const auto cut = ws.put("cut.csv", text.substr(0, text.size() / 2));
  CHECK(run({"check", "--problem", p, "--trajectory", cut}).code == invlqr::cli::kInputError);
  const auto garbage = ws.put("bad.csv", "t,k_11\n0,abc\n");
  CHECK(run({"check", "--problem", p, "--trajectory", garbage}).code == invlqr::cli::kInputError);
}

TEST_CASE("solve reports the family") {
  Workspace ws;
  const auto p = ws.put("p.json", kCaseStudy);
  REQUIRE(run({"forward", "--problem", p, "--out", ws.path("k.csv")}).code == 0);
  REQUIRE(run({"solve", "--problem", p, "--trajectory", ws.path("k.csv"), "--out", ws.path("s.json")}).code == 0);
  const auto s = load(ws.path("s.json"));
  CHECK(s["solution_space"]["r"] == 1);
  CHECK(s["selection"]["method"] == "mincond");
  CHECK(s["selection"]["Q"].size() == 3);
  CHECK_FALSE(s["solution_space"]["interval"].is_null());

  const auto e1 = ws.put("e1.json", kExample1);
  REQUIRE(run({"forward", "--problem", e1, "--out", ws.path("k1.csv")}).code == 0);
  REQUIRE(run({"solve", "--problem", e1, "--trajectory", ws.path("k1.csv"), "--out", ws.path("s1.json")}).code == 0);
  CHECK(load(ws.path("s1.json"))["uniqueness"]["unique"] == true);

  const auto r = run({"solve", "--problem", p, "--trajectory", ws.path("k.csv"), "--snr-db", "20"});
  CHECK(r.code == invlqr::cli::kInfeasible);
  CHECK((r.out + r.err).find("approx") != std::string::npos);
  CHECK(run({"solve", "--problem", p, "--trajectory", ws.path("k.csv"), "--select", "best"}).code ==
        invlqr::cli::kInputError);
}

TEST_CASE("approx on noiseless data") {
  Workspace ws;
  const auto p = ws.put("p.json", kCaseStudy);
  REQUIRE(run({"forward", "--problem", p, "--out", ws.path("k.csv")}).code == 0);
  REQUIRE(run({"approx", "--problem", p, "--trajectory", ws.path("k.csv"), "--method", "both", "--out",
               ws.path("a.json")})
              .code == 0);
  const auto a = load(ws.path("a.json"))["approximate"];
  REQUIRE(a["solutions"].size() == 2);
  for (const auto& s : a["solutions"]) {
    CHECK(s["residual"].get<double>() <= 1e-6);
    CHECK(s["member_of_exact_space"] == true);
    CHECK(s["max_state_error"].is_number());
  }
  CHECK(a["agreement_gap"].get<double>() <= 1e-3);
  CHECK(a["authoritative"] == "kkt-qp");
  REQUIRE(run({"approx", "--problem", p, "--trajectory", ws.path("k.csv"), "--snr-db", "20", "--seed", "4",
               "--out", ws.path("n.json")})
              .code == 0);
  const auto n = load(ws.path("n.json"))["approximate"];
  CHECK(n["exact_feasible"] == false);
  CHECK(n["solutions"][0]["residual"].get<double>() > 1e-3);
  CHECK(n["agreement_gap"].get<double>() <= 1e-3);
  CHECK(run({"approx", "--problem", p, "--trajectory", ws.path("k.csv"), "--method", "newton"}).code ==
        invlqr::cli::kInputError);
}

TEST_CASE("demos") {
  CHECK(run({"demo", "example2"}).code == 0);
  const auto r = run({"demo", "sec7"});
  CHECK(r.code == invlqr::cli::kInputError);
}

TEST_CASE("reports are deterministic and round-trip") {
  Workspace ws;
  REQUIRE(run({"demo", "case-study-noisy", "--steps", "300", "--seed", "5", "--out", ws.path("a.json")}).code == 0);
  REQUIRE(run({"demo", "case-study-noisy", "--steps", "300", "--seed", "5", "--out", ws.path("b.json")}).code == 0);
  const auto ta = invlqr::cli::read_file(ws.path("a.json"));
  CHECK(ta == invlqr::cli::read_file(ws.path("b.json")));
  REQUIRE(run({"demo", "case-study-noisy", "--steps", "300", "--seed", "6", "--out", ws.path("c.json")}).code == 0);
  CHECK(ta != invlqr::cli::read_file(ws.path("c.json")));
  // Parsing and re-serializing with the same layout reproduces the bytes.
  CHECK(json::parse(ta).dump(2) + "\n" == ta);
  CHECK(json::parse(ta)["inputs"]["noise"]["seed"] == 5);
}

TEST_CASE("trajectory CSV round-trips") {
  invlqr::FeedbackTrajectory K{invlqr::TimeGrid(2.0, 4), {}};
  for (int i = 0; i <= 4; ++i) K.K.push_back((invlqr::Matrix(2, 2) << i, -0.1 * i, 1.0 / 3.0, 1e-9).finished());
  const auto back = invlqr::cli::parse_trajectory_csv(invlqr::cli::format_trajectory_csv(K), 2, 2);
  REQUIRE(back.K.size() == K.K.size());
  CHECK(back.grid.horizon() == doctest::Approx(2.0));
  for (std::size_t i = 0; i < K.K.size(); ++i) CHECK((back.K[i] - K.K[i]).norm() <= 1e-11);
  CHECK_THROWS_AS(invlqr::cli::parse_trajectory_csv("t,k_11\n0,1\n0.5,1\n0.6,1\n", 1, 1), invlqr::cli::InputError);
  CHECK(invlqr::cli::digest("") == "fnv1a64:cbf29ce484222325");
  CHECK(invlqr::cli::digest("a") == "fnv1a64:af63dc4c8601ec8c");
}

#endif
