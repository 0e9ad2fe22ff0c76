#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "casimir_wn/cli.hpp"
#include "casimir_wn/config.hpp"
#include "casimir_wn/io.hpp"
#include "casimir_wn/oracle.hpp"

using namespace casimir_wn;
using Catch::Approx;

namespace {

const double kPi = 3.141592653589793238462643383279502884;
namespace fs = std::filesystem;

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "casimir_wn_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(CASIMIR_WN_BIN) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

std::vector<std::string> fields_of(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("reference hamiltonian construction") {
  SECTION("static cavity is diagonal") {
    CavityParams p;
    p.q0 = 0.0;
    const SparseOp H = oracle::build_hamiltonian(p, 0.0, 8);
    for (int outer = 0; outer < H.outerSize(); ++outer)
      for (SparseOp::InnerIterator it(H, outer); it; ++it)
        CHECK(it.row() == it.col());
    CHECK(std::abs(H.coeff(2 * 8 + 1, 2 * 8 + 1) - cd(4.0 * kPi, 0.0)) < 1e-13);
  }

  SECTION("pair-creation element at the initial instant") {
    CavityParams p;
    const SparseOp H = oracle::build_hamiltonian(p, 0.0, 8);
    const cd elem = H.coeff(2 * 8 + 0, 0);
    CHECK(std::abs(elem - cd(0.0, kPi * std::sqrt(2.0) / 24.0)) < 1e-14);
  }

  SECTION("hermitian at generic times") {
    CavityParams p;
    const Eigen::MatrixXcd H =
        Eigen::MatrixXcd(oracle::build_hamiltonian(p, 0.37, 10));
    CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("matches the generator-coefficient expansion") {
    CavityParams p;
    p.phi = 0.3;
    const double t = 0.61;
    const Eigen::MatrixXcd H =
        Eigen::MatrixXcd(oracle::build_hamiltonian(p, t, 10));
    const CavityModel model(p);
    const auto f = model.f_vector(t);
    Eigen::MatrixXcd H2 = Eigen::MatrixXcd::Zero(100, 100);
    for (int g = 1; g <= 11; ++g)
      H2 += f[g - 1] * Eigen::MatrixXcd(fock_matrix(g, 10));
    CHECK((H - H2).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("undersized cutoff rejected") {
    CavityParams p;
    CHECK_THROWS_AS(oracle::build_hamiltonian(p, 0.0, 3), std::invalid_argument);
  }
}

TEST_CASE("reference evolution") {
  SECTION("vacuum is stationary in the static cavity") {
    CavityParams p;
    p.q0 = 0.0;
    const auto res = oracle::evolve(p, {0.0, 1.0}, 8, 1e-3);
    REQUIRE(res.states.size() == 2);
    CHECK(std::abs(std::abs(res.states[1].amplitudes[0]) - 1.0) < 1e-12);
    CHECK(res.diag.leakage == 0.0);
    CHECK_FALSE(res.diag.leakage_flagged);
    CHECK(std::abs(res.norms[1] - 1.0) < 1e-12);
  }

  SECTION("truncation contamination is flagged on a tight cutoff") {
    CavityParams p;
    const auto res = oracle::evolve(p, uniform_grid(0.0, 8.0, 9), 12, 1e-2);
    CHECK(res.diag.leakage_flagged);
    CHECK(res.diag.leakage >= oracle::kLeakageThreshold);
    CHECK(res.diag.norm_drift < 1e-4);
  }

  SECTION("stop threshold truncates the run at the crossing") {
    CavityParams p;
    const auto res = oracle::evolve(p, uniform_grid(0.0, 8.0, 9), 12, 1e-2,
                                    oracle::kLeakageThreshold);
    CHECK(res.states.size() < 9);
    CHECK(res.states.size() >= 1);
    CHECK(res.leakages.back() >= oracle::kLeakageThreshold);
  }

  SECTION("input validation") {
    CavityParams p;
    CHECK_THROWS_AS(oracle::evolve(p, {0.0, 1.0}, 3, 1e-3),
                    std::invalid_argument);
    CHECK_THROWS_AS(oracle::evolve(p, {}, 8, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(oracle::evolve(p, {1.0, 0.5}, 8, 1e-3),
                    std::invalid_argument);
    CHECK_THROWS_AS(oracle::evolve(p, {0.0, 1.0}, 8, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("direct state measurement") {
  const int C = 8;

  SECTION("vacuum") {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(C * C);
    v[0] = 1.0;
    const auto r = oracle::measure({C, v}, 0.0);
    CHECK(r.n1 == 0.0);
    CHECK(r.n2 == 0.0);
    CHECK(r.dq1 == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r.dp2 == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r.uncertainty_product1 == Approx(0.5).epsilon(1e-14));
    CHECK_FALSE(r.mandel_q1.has_value());
    CHECK_FALSE(r.mandel_q2.has_value());
    CHECK(r.invariant == Approx(0.5).epsilon(1e-13));
  }

  SECTION("one photon in the first mode") {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(C * C);
    v[1 * C + 0] = 1.0;
    const auto r = oracle::measure({C, v}, 0.0);
    CHECK(r.n1 == Approx(1.0).epsilon(1e-14));
    CHECK(r.n2 == 0.0);
    CHECK(r.dq1 == Approx(std::sqrt(1.5)).epsilon(1e-13));
    CHECK(r.dp1 == Approx(std::sqrt(1.5)).epsilon(1e-13));
    CHECK(r.dq2 == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    REQUIRE(r.mandel_q1.has_value());
    CHECK(*r.mandel_q1 == Approx(0.0).margin(1e-12));
    CHECK_FALSE(r.mandel_q2.has_value());
    // the invariant's mode terms use the normal-ordered second moments, so a
    // bare Fock photon lifts it to (1 + 1/2)^2 + 1/4
    CHECK(r.invariant == Approx(2.5).epsilon(1e-13));
  }
}

TEST_CASE("numeric formatting") {
  CHECK(io::fmt(0.0) == "0.0000000000000000e+00");
  CHECK(io::fmt(1.0) == "1.0000000000000000e+00");
  CHECK(io::fmt(0.1) == "1.0000000000000001e-01");
  CHECK(io::fmt(-0.5) == "-5.0000000000000000e-01");
  CHECK(io::fmt(std::optional<double>{}) == "");
  CHECK(io::fmt(std::optional<double>{2.0}) == "2.0000000000000000e+00");
  CHECK(io::fmt(cd(1.0, -2.0)) ==
        "1.0000000000000000e+00-2.0000000000000000e+00j");
  CHECK(io::fmt(cd(1.0, 2.0)) ==
        "1.0000000000000000e+00+2.0000000000000000e+00j");

  SECTION("round trip preserves the value") {
    const double x = 46.63167202774752;
    CHECK(std::stod(io::fmt(x)) == x);
  }
}

TEST_CASE("atomic file writes") {
  const fs::path p = scratch_dir() / "io" / "atomic.txt";
  io::write_atomic(p.string(), "first\n");
  CHECK(slurp(p) == "first\n");
  io::write_atomic(p.string(), "second\n");
  CHECK(slurp(p) == "second\n");
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST_CASE("run configuration") {
  SECTION("defaults") {
    const RunConfig c = parse_config(nlohmann::json::object());
    CHECK(c.cavity.L == 1.0);
    CHECK(c.cavity.q0 == Approx(1.0 / 12.0).epsilon(1e-15));
    CHECK(c.cavity.phi == 0.0);
    CHECK(c.cavity.omega_d == Approx(2.0 * kPi).epsilon(1e-15));
    CHECK(c.t_start == 0.0);
    CHECK(c.t_end == 20.0);
    CHECK(c.samples == 2001);
    CHECK(c.rtol == 1e-10);
    CHECK(c.atol == 1e-12);
    CHECK(c.oracle_cutoff == 40);
    CHECK_FALSE(c.emit_transfer_matrix);
    CHECK(c.output_path.empty());
  }

  SECTION("explicit values") {
    const nlohmann::json j = {
        {"cavity", {{"L", 2.0}, {"q0", 0.05}, {"phi", 0.5}, {"omega_d", 3.0}}},
        {"t_start", 1.0},
        {"t_end", 4.0},
        {"samples", 11},
        {"rtol", 1e-8},
        {"atol", 1e-10},
        {"oracle_cutoff", 16},
        {"emit_transfer_matrix", true},
        {"output_path", "x.csv"}};
    const RunConfig c = parse_config(j);
    CHECK(c.cavity.L == 2.0);
    CHECK(c.cavity.q0 == 0.05);
    CHECK(c.cavity.phi == 0.5);
    CHECK(c.cavity.omega_d == 3.0);
    CHECK(c.t_start == 1.0);
    CHECK(c.t_end == 4.0);
    CHECK(c.samples == 11);
    CHECK(c.rtol == 1e-8);
    CHECK(c.atol == 1e-10);
    CHECK(c.oracle_cutoff == 16);
    CHECK(c.emit_transfer_matrix);
    CHECK(c.output_path == "x.csv");
  }

  SECTION("rejected values") {
    CHECK_THROWS_AS(parse_config({{"samples", 1}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"t_end", -1.0}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"rtol", 0.0}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"atol", -1e-9}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"oracle_cutoff", 2}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"cavity", {{"L", -1.0}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"samples", "many"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(nlohmann::json::array()), ConfigError);
  }

  SECTION("unknown keys are tolerated") {
    CHECK_NOTHROW(parse_config({{"typo_key", 1.0}}));
  }

  SECTION("missing file") {
    CHECK_THROWS_AS(load_config((scratch_dir() / "absent.json").string()),
                    ConfigError);
  }
}

TEST_CASE("command line interface") {
  const fs::path dir = scratch_dir();

  SECTION("simulate is deterministic and lands the golden first row") {
    const fs::path cfgp = dir / "sim.json";
    const fs::path out1 = dir / "sim1.csv";
    const fs::path out2 = dir / "sim2.csv";
    spit(cfgp, R"({"t_end": 0.5, "samples": 6})");
    REQUIRE(run_cli("simulate --config " + cfgp.string() + " --out " +
                    out1.string()) == 0);
    REQUIRE(run_cli("simulate --config " + cfgp.string() + " --out " +
                    out2.string()) == 0);
    const std::string csv = slurp(out1);
    CHECK(csv == slurp(out2));

    const auto rows = lines_of(csv);
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == std::string(cli::kCsvColumns));
    const auto f = fields_of(rows[1]);
    REQUIRE(f.size() == 14);
    CHECK(f[0] == io::fmt(0.0));
    CHECK(f[1] == io::fmt(0.0));                  // n1
    CHECK(f[2] == io::fmt(0.0));                  // n2
    CHECK(f[3] == io::fmt(std::sqrt(0.5)));       // dQ1
    CHECK(f[9] == "");                            // mandel_q1 null at vacuum
    CHECK(f[10] == "");
    CHECK(f[11] == io::fmt(0.5));                 // invariant
    CHECK(std::abs(std::stod(f[7]) - 0.5) < 1e-14);
  }

  SECTION("static cavity produces constant vacuum columns") {
    const fs::path cfgp = dir / "static.json";
    const fs::path out = dir / "static.csv";
    spit(cfgp, R"({"cavity": {"q0": 0.0}, "t_end": 1.0, "samples": 5})");
    REQUIRE(run_cli("simulate --config " + cfgp.string() + " --out " +
                    out.string()) == 0);
    const auto rows = lines_of(slurp(out));
    REQUIRE(rows.size() == 6);
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto f = fields_of(rows[i]);
      CHECK(f[1] == io::fmt(0.0));
      CHECK(f[2] == io::fmt(0.0));
      CHECK(f[11] == io::fmt(0.5));
      CHECK(f[12] == io::fmt(0.0));  // unitarity residual is exact here
    }
  }

  SECTION("transfer matrix columns on request") {
    const fs::path cfgp = dir / "tm.json";
    const fs::path out = dir / "tm.csv";
    spit(cfgp,
         R"({"t_end": 0.5, "samples": 3, "emit_transfer_matrix": true})");
    REQUIRE(run_cli("simulate --config " + cfgp.string() + " --out " +
                    out.string()) == 0);
    const auto rows = lines_of(slurp(out));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].find(",t11,t12,t13,t14,t21") != std::string::npos);
    CHECK(rows[0].find(",t44") != std::string::npos);
    const auto f = fields_of(rows[1]);
    REQUIRE(f.size() == 30);
    CHECK(f[14] == io::fmt(cd(1.0, 0.0)));  // t11 at t = 0
    CHECK(f[15] == io::fmt(cd(0.0, 0.0)));  // t12 at t = 0
  }

  SECTION("bad configuration exits with the config code") {
    const fs::path cfgp = dir / "bad.json";
    spit(cfgp, R"({"samples": 1})");
    CHECK(run_cli("simulate --config " + cfgp.string()) == 2);
    spit(cfgp, R"({not json)");
    CHECK(run_cli("simulate --config " + cfgp.string()) == 2);
    CHECK(run_cli("simulate --config " + (dir / "nope.json").string()) == 2);
  }

  SECTION("hopeless tolerances exit with the integration code") {
    const fs::path cfgp = dir / "stiff.json";
    const fs::path out = dir / "stiff.csv";
    spit(cfgp,
         R"({"t_end": 1.0, "samples": 2, "rtol": 1e-300, "atol": 1e-300})");
    CHECK(run_cli("simulate --config " + cfgp.string() + " --out " +
                  out.string()) == 3);
  }

  SECTION("algebra validation report") {
    const fs::path out = dir / "algebra.json";
    REQUIRE(run_cli("validate-algebra --out " + out.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j.at("pass").get<bool>());
    CHECK(j.at("closure").at("antisymmetric").get<bool>());
    CHECK(j.at("closure").at("jacobi_holds").get<bool>());
    CHECK(j.at("closure").at("max_jacobi_defect").get<double>() == 0.0);
    CHECK(j.at("numeric").at("max_residual").get<double>() <= 1e-10);
    CHECK(j.at("structure_matrix_check").at("max_deviation").get<double>() <=
          1e-9);
    const auto& c_3_10 = j.at("structure_constants").at(2).at(9);
    REQUIRE(c_3_10.size() == 11);
    CHECK(c_3_10.at(5).get<int>() == -1);
    CHECK(c_3_10.at(6).get<int>() == -1);
    CHECK(c_3_10.at(10).get<int>() == -1);
    CHECK(c_3_10.at(0).get<int>() == 0);
  }

  SECTION("degenerate sweep reproduces the simulate endpoint") {
    const fs::path cfgp = dir / "sweepbase.json";
    const fs::path out = dir / "sweep.csv";
    spit(cfgp, R"({"t_end": 2.0, "samples": 21})");
    REQUIRE(run_cli("sweep --config " + cfgp.string() + " --out " +
                    out.string() +
                    " --param omega_d --values 6.283185307179586"
                    " --workers 1") == 0);
    const auto rows = lines_of(slurp(out));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] ==
          "value,n1_end,n2_end,max_invariant_deviation,max_ccr_residual,"
          "status");
    const auto f = fields_of(rows[1]);
    REQUIRE(f.size() == 6);
    CHECK(f[5] == "ok");

    RunConfig cfg;
    cfg.t_end = 2.0;
    cfg.samples = 21;
    cfg.cavity.omega_d = 6.283185307179586;
    const auto res = cli::run_pipeline(cfg);
    CHECK(f[0] == io::fmt(6.283185307179586));
    CHECK(f[1] == io::fmt(res.records.back().n1));
    CHECK(f[2] == io::fmt(res.records.back().n2));
  }

  SECTION("sweep rejects unknown parameters and empty value lists") {
    CHECK(run_cli("sweep --param length --values 1.0") == 2);
    CHECK(run_cli("sweep --param omega_d --values nan") == 2);
  }

  SECTION("compare agrees with the reference on a static cavity") {
    const fs::path cfgp = dir / "cmp.json";
    const fs::path out = dir / "cmp.json.report.json";
    spit(cfgp,
         R"({"cavity": {"q0": 0.0}, "t_end": 1.0, "samples": 5,
             "oracle_cutoff": 8})");
    REQUIRE(run_cli("compare --config " + cfgp.string() + " --out " +
                    out.string()) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j.at("pass").get<bool>());
    CHECK(j.at("window").at("reached_grid_end").get<bool>());
    CHECK(j.at("window").at("t_end").get<double>() == 1.0);
    CHECK(j.at("fields").at("n1").at("pass").get<bool>());
    CHECK(j.at("fields").at("invariant").at("max_abs").get<double>() < 1e-6);
    CHECK_FALSE(j.at("oracle").at("leakage_flagged").get<bool>());

    const fs::path base = dir / "cmp.json.report";
    CHECK(fs::exists(base.string() + ".exact.csv"));
    CHECK(fs::exists(base.string() + ".oracle.csv"));
    CHECK(fs::exists(base.string() + ".oracle-diagnostics.json"));
    const auto orows = lines_of(slurp(base.string() + ".oracle.csv"));
    REQUIRE(orows.size() == 6);
    CHECK(orows[0] == std::string(cli::kCsvColumns) + ",source");
    CHECK(orows[1].substr(orows[1].size() - 7) == ",oracle");
  }
}
