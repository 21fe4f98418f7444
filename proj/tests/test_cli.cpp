#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "app.hpp"
#include "curve_io.hpp"
#include "run_config.hpp"
#include "slasso/estimator.hpp"

namespace fs = std::filesystem;
using fof::parse_curve_csv;
using fof::ParseError;
using fof::UsageError;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("FOF_SLASSO_TMP");
  fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "fof_slasso_cli";
  fs::path dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code;
  std::string out, err;
};

Run run(std::initializer_list<std::string> args) {
  std::vector<std::string> store{"fof-slasso"};
  store.insert(store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : store) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = fof::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return fof::read_text(p); }

// Small scenario II dataset shared by the command tests.
fs::path dataset() {
  static const fs::path dir = [] {
    const fs::path d = scratch("data");
    const Run r = run({"generate", "--scenario", "II", "--n", "40", "--n-test", "10", "--seed", "3", "--out", d.string()});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::vector<std::vector<double>> read_rows(const fs::path& p, bool header) {
  std::istringstream in(slurp(p));
  std::string line;
  std::vector<std::vector<double>> rows;
  if (header) std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const auto& c : fof::split_csv_line(line)) row.push_back(*fof::parse_double(c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("curve csv parsing") {
  const fof::CurveFile f = parse_curve_csv("0,0.5,1\n1,2,3\n-1,+2.5e0,4\n");
  CHECK(f.sample.n() == 2);
  CHECK(f.sample.grid.size() == 3);
  CHECK(f.sample.values(1, 1) == 2.5);
  CHECK(f.ids.empty());

  const fof::CurveFile g = parse_curve_csv("id,0,1\na,1,2\n\nb,3,4\r\n");
  CHECK(g.ids == std::vector<std::string>{"a", "b"});
  CHECK(g.sample.values(1, 1) == 4.0);

  CHECK_THROWS_WITH_AS(parse_curve_csv("0,0.5,1\n1,2,3\n1,2\n", "x.csv"),
                       doctest::Contains("x.csv:3: row 2 has 2 fields, expected 3"), ParseError);
  CHECK_THROWS_WITH_AS(parse_curve_csv("0,0.5,1\n1,abc,3\n", "x.csv"), doctest::Contains("x.csv:2:"), ParseError);
  CHECK_THROWS_WITH_AS(parse_curve_csv("0,1,0.5\n1,2,3\n", "x.csv"), doctest::Contains("not strictly increasing"),
                       ParseError);
  CHECK_THROWS_AS(parse_curve_csv("0,1\n1,nan\n"), ParseError);
  CHECK_THROWS_AS(parse_curve_csv(""), ParseError);
  CHECK_THROWS_AS(parse_curve_csv("0,1\n"), ParseError);
  // comma decimals are not numbers
  CHECK_THROWS_AS(parse_curve_csv("0;1\n1;2\n"), ParseError);
}

TEST_CASE("curve csv round trip keeps full precision") {
  Eigen::MatrixXd v(2, 3);
  v << 1.0 / 3.0, -2e-300, 12345.678901234567, 0.1, 6.02214076e23, -0.0;
  const slasso::FunctionalSample s(slasso::Grid({0.0, 1.0 / 7.0, 1.0}), v);
  const fof::CurveFile back = parse_curve_csv(fof::curve_csv(s, {"p", "q"}));
  CHECK(back.sample.values == v);
  CHECK(back.sample.grid.matches(s.grid));
  CHECK(back.sample.grid[1] == 1.0 / 7.0);
  CHECK(back.ids == std::vector<std::string>{"p", "q"});
}

TEST_CASE("parse_double") {
  CHECK(*fof::parse_double(" 1e-3 ") == 1e-3);
  CHECK(*fof::parse_double("+2") == 2.0);
  CHECK_FALSE(fof::parse_double("1,5"));
  CHECK_FALSE(fof::parse_double("1x"));
  CHECK_FALSE(fof::parse_double(""));
}

TEST_CASE("run config json") {
  fof::RunConfig cfg;
  fof::apply_config_json(cfg, R"({"bases":{"M1":8,"k2":3,"mt":1},"lambdas":{"lambda_s":0.1,"lambda_l":[0,1]},
                                 "cv":{"K":5,"seed":9,"k_se":0.5},"solver":{"max_iters":50,"tol_pg":1e-7},
                                 "output":{"dir":"o","surface_points":11}})");
  CHECK(cfg.bases.M1 == 8);
  CHECK(cfg.bases.k2 == 3);
  CHECK(cfg.bases.m_t == 1);
  CHECK(*cfg.lambda_s == std::vector<double>{0.1});
  CHECK(*cfg.lambda_l == std::vector<double>{0.0, 1.0});
  CHECK(cfg.K == 5);
  CHECK(cfg.seed == 9);
  CHECK(cfg.k_se == 0.5);
  CHECK(cfg.solver.max_iters == 50);
  CHECK(cfg.solver.tol_pg == 1e-7);
  CHECK(cfg.out_dir == "o");
  CHECK(cfg.surface_points == 11);
  CHECK_THROWS_AS(cfg.fixed_params(), UsageError);
  CHECK(cfg.grids().lambda_t.size() == 7);

  fof::RunConfig c2;
  CHECK_THROWS_WITH_AS(fof::apply_config_json(c2, R"({"bases":{"M3":1}})"), doctest::Contains("M3"), UsageError);
  CHECK_THROWS_AS(fof::apply_config_json(c2, R"({"colour":"red"})"), UsageError);
  CHECK_THROWS_AS(fof::apply_config_json(c2, R"({"cv":{"K":"ten"}})"), UsageError);
  CHECK_THROWS_AS(fof::apply_config_json(c2, R"({"lambdas":{"lambda_s":[]}})"), UsageError);
  CHECK_THROWS_AS(fof::apply_config_json(c2, "{not json"), ParseError);
  CHECK(fof::parse_lambda_list("1e-3,1e-2", "--lambda-s") == std::vector<double>{1e-3, 1e-2});
  CHECK_THROWS_AS(fof::parse_lambda_list("1e-3,x", "--lambda-s"), UsageError);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  const fs::path d = dataset();
  const Run missing = run({"permtest", "--x", (d / "X.csv").string()});
  CHECK(missing.code == 2);
  CHECK(run({"fit", "--x", (d / "X.csv").string(), "--y", (d / "nope.csv").string()}).code == 2);
  CHECK(run({"simulate", "--scenario", "V"}).code == 2);
  CHECK(run({"fit", "--x", (d / "X.csv").string(), "--y", (d / "Y.csv").string(), "--lambda-l", "0.1,1"}).code == 2);
  CHECK(run({"fit", "--x", (d / "X.csv").string(), "--y", (d / "Y.csv").string(), "--ms", "4"}).code == 2);

  const fs::path bad = scratch("bad");
  fof::write_text(bad / "ragged.csv", "0,0.5,1\n1,2,3\n4,5\n");
  const Run r = run({"fit", "--x", (bad / "ragged.csv").string(), "--y", (d / "Y.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("row 2 has 2 fields") != std::string::npos);

  fof::write_text(bad / "cfg.json", R"({"bases":{"M1":6},"extra":1})");
  const Run c = run({"fit", "--x", (d / "X.csv").string(), "--y", (d / "Y.csv").string(), "--config",
                     (bad / "cfg.json").string()});
  CHECK(c.code == 2);
  CHECK(c.err.find("extra") != std::string::npos);
}

TEST_CASE("fit bundle reloads consistently") {
  const fs::path d = dataset();
  const fs::path o = scratch("fit");
  const Run r = run({"fit", "--x", (d / "X.csv").string(), "--y", (d / "Y.csv").string(), "--M1", "6", "--M2", "5",
                     "--lambda-s", "1e-3", "--lambda-t", "1e-3", "--lambda-l", "0.05", "--surface-points", "21",
                     "--out", o.string()});
  REQUIRE(r.code == 0);
  const auto B = read_rows(o / "coefficients.csv", false);
  REQUIRE(B.size() == 10);
  REQUIRE(B[0].size() == 9);
  Eigen::MatrixXd Bm(10, 9);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 9; ++j) Bm(i, j) = B[i][j];
  const slasso::CoefficientSurface surf(Bm, slasso::make_basis(0, 1, 4, 6), slasso::make_basis(0, 1, 4, 5));
  const auto S = read_rows(o / "surface.csv", true);
  REQUIRE(S.size() == 21 * 21);
  double worst = 0.0;
  int zeros = 0;
  for (const auto& row : S) {
    worst = std::max(worst, std::abs(surf.eval(row[0], row[1]) - row[2]));
    zeros += std::abs(row[2]) <= 1e-8;
  }
  CHECK(worst < 1e-12);

  const nlohmann::json meta = nlohmann::json::parse(slurp(o / "fit.json"));
  CHECK(meta["estimator"] == "slasso");
  CHECK(meta["params"]["lambda_l"] == 0.05);
  CHECK(meta["dim_s"] == 10);
  CHECK(meta["n"] == 40);
  CHECK(meta["null_region_tol"] == 1e-8);
  CHECK(meta["null_region_fraction"].get<double>() == doctest::Approx(zeros / 441.0));
  CHECK(meta["solver"].contains("reason"));

  // the same fit through the library
  const auto X = fof::read_curve_file(d / "X.csv").sample;
  const auto Y = fof::read_curve_file(d / "Y.csv").sample;
  slasso::PenaltyParams p;
  p.M1 = 6;
  p.M2 = 5;
  p.lambda_s = p.lambda_t = 1e-3;
  p.lambda_l = 0.05;
  CHECK(slasso::fit(X, Y, p).surface.coefficients() == Bm);
}

TEST_CASE("huge lambda_L writes an all-zero surface") {
  const fs::path d = dataset();
  const fs::path o = scratch("fit_zero");
  REQUIRE(run({"fit", "--x", (d / "X.csv").string(), "--y", (d / "Y.csv").string(), "--M1", "6", "--M2", "6",
               "--lambda-l", "1e6", "--surface-points", "11", "--out", o.string()})
              .code == 0);
  for (const auto& row : read_rows(o / "surface.csv", true)) CHECK(row[2] == 0.0);
  CHECK(nlohmann::json::parse(slurp(o / "fit.json"))["null_region_fraction"] == 1.0);
}

TEST_CASE("cv command") {
  const fs::path d = dataset();
  const std::string X = (d / "X.csv").string(), Y = (d / "Y.csv").string();
  const fs::path one = scratch("cv_one");
  REQUIRE(run({"cv", "--x", X, "--y", Y, "--M1", "5", "--M2", "5", "--K", "4", "--lambda-s", "1e-3", "--lambda-t",
               "1e-3", "--lambda-l", "0.01", "--out", one.string()})
              .code == 0);
  const auto rows = read_rows(one / "cv_table.csv", true);
  REQUIRE(rows.size() == 1);
  const nlohmann::json choice = nlohmann::json::parse(slurp(one / "cv_choice.json"));
  CHECK(choice["params"]["lambda_l"] == rows[0][2]);
  CHECK(choice["cv_error"] == rows[0][3]);

  double prev = -1.0;
  std::string first_table;
  for (const char* k : {"0", "1", "100"}) {
    const fs::path o = scratch(std::string("cv_k") + k);
    REQUIRE(run({"cv", "--x", X, "--y", Y, "--M1", "5", "--M2", "5", "--K", "4", "--lambda-s", "1e-3,1e-1",
                 "--lambda-t", "1e-3", "--lambda-l", "0,0.01,0.1,1", "--k-se", k, "--out", o.string()})
                .code == 0);
    const double ll = nlohmann::json::parse(slurp(o / "cv_choice.json"))["params"]["lambda_l"];
    CHECK(ll >= prev);
    prev = ll;
    const std::string table = slurp(o / "cv_table.csv");
    if (first_table.empty()) first_table = table;
    CHECK(table == first_table);
  }
}

TEST_CASE("simulate command") {
  const fs::path o = scratch("sim");
  const Run r = run({"simulate", "--scenario", "I", "--reps", "2", "--n", "30", "--n-test", "20", "--M1", "4", "--M2",
                     "4", "--K", "3", "--lambda-s", "1e-3", "--lambda-t", "1e-3", "--lambda-l", "0,0.1", "--out",
                     o.string()});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(o / "replications.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2);
  CHECK(csv.rfind("replicate,estimator,ise0,ise1,pmse,lambda_s,lambda_t,lambda_l\n", 0) == 0);
}

TEST_CASE("permtest command") {
  const fs::path d = dataset();
  const fs::path o = scratch("perm");
  REQUIRE(run({"permtest", "--x", (d / "X.csv").string(), "--y", (d / "Y.csv").string(), "--M1", "5", "--M2", "5",
               "--lambda-s", "1e-3", "--lambda-t", "1e-3", "--n-perm", "1", "--out", o.string()})
              .code == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(o / "permtest.json"));
  CHECK(j["permuted"].size() == 1);
  CHECK(j["n_perm"] == 1);
  const double p = j["p_value"];
  CHECK((p == 0.5 || p == 1.0));
  const auto env = read_rows(o / "envelope.csv", true);
  CHECK(env.size() == 100);
}

TEST_CASE("jobs flag and environment") {
  const fs::path d = dataset();
  const fs::path a = scratch("jobs_a"), b = scratch("jobs_b");
  const std::string X = (d / "X.csv").string(), Y = (d / "Y.csv").string();
  REQUIRE(run({"permtest", "--x", X, "--y", Y, "--M1", "4", "--M2", "4", "--n-perm", "4", "--out", a.string()}).code ==
          0);
  REQUIRE(run({"permtest", "--x", X, "--y", Y, "--M1", "4", "--M2", "4", "--n-perm", "4", "--jobs", "3", "--out",
               b.string()})
              .code == 0);
  CHECK(slurp(a / "permtest.json") == slurp(b / "permtest.json"));
  CHECK(run({"permtest", "--x", X, "--y", Y, "--jobs", "0"}).code == 2);
}
