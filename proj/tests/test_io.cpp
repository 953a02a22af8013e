#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "flatpulse/io.hpp"
#include "flatpulse/sweep.hpp"

using namespace flatpulse;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("flatpulse_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SimConfig small_config() {
  SimConfig c;
  c.k = 2;
  c.theta_pi_multiple = 3;
  c.alpha = 1.0;
  c.epsilon = 1e-30;
  c.omegaB_T = log_grid(0.1, 10.0, 20);
  c.lambda_over_omegaB = {1e-2, 2e-2};
  c.protocols = {"smooth", "udd6"};
  c.leading_digits = 0;
  return c;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char ch : s) n += ch == '\n';
  return n;
}
}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(WriteAtomic, ReplacesContentWithoutLeftovers) {
  const auto dir = scratch("atomic");
  write_atomic(dir / "a.txt", "first");
  write_atomic(dir / "a.txt", "second");
  EXPECT_EQ(read_file(dir / "a.txt"), "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(ReadFile, MissingThrowsIoError) { EXPECT_THROW(read_file("/nonexistent/flatpulse/x"), IoError); }

TEST(Manifest, RoundTrip) {
  RunManifest m;
  m.command = "synth";
  m.parameters = {{"k", 4}, {"alpha", 1.0}};
  m.seeds = {1, 18446744073709551615ull};
  m.outputs = {{"a.csv", sha256_hex("a")}};
  m.wall_time_s = 0.25;
  const auto back = RunManifest::from_json(json::parse(m.to_json().dump()));
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.parameters, m.parameters);
  EXPECT_EQ(back.seeds, m.seeds);
  EXPECT_EQ(back.version, kVersion);
  ASSERT_EQ(back.outputs.size(), 1u);
  EXPECT_EQ(back.outputs[0].sha256, m.outputs[0].sha256);
  EXPECT_EQ(back.wall_time_s, 0.25);
  m.wall_time_s = -1;
  EXPECT_FALSE(m.to_json().contains("wall_time_s"));
}

TEST(OutputSet, ManifestListsChecksums) {
  const auto dir = scratch("outset");
  OutputSet out(dir);
  out.write("x.csv", "a,b\n1,2\n");
  RunManifest m;
  m.command = "test";
  out.finish(m);
  const auto j = json::parse(read_file(dir / "manifest.json"));
  ASSERT_EQ(j["outputs"].size(), 1u);
  EXPECT_EQ(j["outputs"][0]["sha256"], sha256_hex("a,b\n1,2\n"));
}

TEST(Solution, RoundTripKeepsFullPrecision) {
  SolverConfig c;
  c.k = 3;
  c.theta_pi_multiple = 4;
  c.precision_digits = 50;
  c.epsilon = 1e-30;
  const auto rep = solve<Extended50>(c);
  ASSERT_TRUE(rep.converged());
  const auto s = parse_solution(json::parse(solution_to_json(c, rep).dump()));
  EXPECT_EQ(s.k, 3);
  EXPECT_EQ(s.precision_digits, 50);
  ASSERT_EQ(s.coeffs_text.size(), rep.coeffs.coeffs().size());
  const auto p = s.poly<Extended50>();
  for (std::size_t i = 0; i < p.coeffs().size(); ++i)
    EXPECT_LT(to_double(abs(p.coeffs()[i] - rep.coeffs.coeffs()[i])), 1e-45);
  EXPECT_LT(constraint_vector(p, 3, c.theta_as<Extended50>()).inf_norm(), 1e-28);
}

TEST(Solution, MalformedInputs) {
  EXPECT_THROW(parse_solution(json::parse(R"({"k": 2})")), std::invalid_argument);
  EXPECT_THROW(parse_solution(json::parse(R"({"k": 2, "theta": 1, "coeffs": []})")), std::invalid_argument);
  EXPECT_THROW(parse_solution(json::parse(R"({"k": "two", "theta": 1, "coeffs": [1]})")), std::invalid_argument);
  EXPECT_THROW(parse_solution(json::parse(R"({"k": 0, "theta": 1, "coeffs": [1, 2], "coeffs_text": ["1"]})")),
               std::invalid_argument);
  const auto dir = scratch("malformed");
  write_atomic(dir / "bad.json", "{not json");
  EXPECT_THROW(load_solution(dir / "bad.json"), std::invalid_argument);
  EXPECT_THROW(load_solution(dir / "missing.json"), IoError);
}

TEST(SimConfigParse, UnknownKeysReportPath) {
  try {
    parse_sim_config(json::parse(R"({"omegaB_T": [1], "lamda": 1})"));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("$.lamda"), std::string::npos);
  }
  try {
    parse_sim_config(json::parse(R"({"omegaB_T_log": {"lo": 1, "hi": 2, "n": 5, "x": 1}})"));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("$.omegaB_T_log.x"), std::string::npos);
  }
  EXPECT_THROW(parse_sim_config(json::parse(R"({"omegaB_T": "1"})")), std::invalid_argument);
  EXPECT_THROW(parse_sim_config(json::parse(R"({"omegaB_T": [1], "methods": ["exact"]})")), std::invalid_argument);
  EXPECT_THROW(parse_sim_config(json::parse(R"({})")), std::invalid_argument);
}

TEST(SimConfigParse, RoundTripAndLogGrid) {
  const auto c = parse_sim_config(json::parse(R"({"omegaB_T_log": {"lo": 0.1, "hi": 10, "n": 20}, "seed": 7})"));
  ASSERT_EQ(c.omegaB_T.size(), 20u);
  EXPECT_NEAR(c.omegaB_T.front(), 0.1, 1e-15);
  EXPECT_NEAR(c.omegaB_T.back(), 10.0, 1e-13);
  const auto back = parse_sim_config(sim_config_to_json(c));
  EXPECT_EQ(sim_config_to_json(back), sim_config_to_json(c));
}

TEST(Sweep, CardinalityAndDeterminism) {
  const auto cfg = small_config();
  const auto pulse = synthesize_pulse(cfg);
  const auto a = run_sweep(cfg, pulse, 1);
  ASSERT_EQ(a.size(), 80u);
  for (const auto& p : a) {
    EXPECT_TRUE(p.ok) << p.error;
    EXPECT_GT(p.value, 0.0);
  }
  const std::string csv = sweep_csv(a);
  EXPECT_EQ(count_lines(csv), 81u);
  EXPECT_EQ(sha256_hex(csv), sha256_hex(sweep_csv(run_sweep(cfg, pulse, 1))));
  EXPECT_EQ(csv.rfind("method,protocol,k,theta,lambda_over_omegaB,omegaB_T,infidelity,stderr,seed\n", 0), 0u);
}

TEST(Sweep, FailedPointsAreMarked) {
  auto cfg = small_config();
  cfg.methods = {"classical"};
  cfg.omegaB_T = {1.0};
  cfg.lambda_over_omegaB = {1e-2};
  cfg.protocols = {"smooth"};
  cfg.n_traj = 100;
  // classical MC requires the rtn noise model
  const auto pts = run_sweep(cfg, synthesize_pulse(cfg));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_FALSE(pts[0].ok);
  EXPECT_NE(sweep_csv(pts).find(",nan,nan,"), std::string::npos);
}
