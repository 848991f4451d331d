#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chern/cli.hpp"

using namespace chern;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "chern-transfer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string oracle(const std::string& mode) { return std::string(FAKE_ORACLE) + " " + mode; }

}  // namespace

TEST(Cli, TrivialGroupEulerClass) {
  const auto r = run({"euler", "cyclic", "-q", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1\n");
}

TEST(Cli, JsonOutputIsDeterministic) {
  const auto a = run({"fgl", "-p", "3", "-s", "1", "--format", "json", "--check-axioms"});
  const auto b = run({"fgl", "-p", "3", "-s", "1", "--format", "json", "--check-axioms"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto j = Json::parse(a.out);
  EXPECT_EQ(j["header"]["tool"], "chern-transfer");
  EXPECT_EQ(j["header"]["job"]["command"], "fgl");
  EXPECT_EQ(j["payload"]["axioms"]["associativity"], true);
}

TEST(Cli, ExitCodesForBadInput) {
  EXPECT_EQ(run({"fgl", "-p", "4"}).code, 2);
  EXPECT_EQ(run({"nonsense"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"sigma-expand", "-p", "3", "-s", "2", "--x-order", "5"}).code, 2);
  EXPECT_EQ(run({"fgl", "--format", "xml"}).code, 2);
  EXPECT_EQ(run({"euler", "torus"}).code, 2);
  EXPECT_EQ(run({"lambda", "-p", "3", "-k", "3"}).code, 2);
  const auto r = run({"fgl", "-p", "4"});
  EXPECT_NE(r.err.find("prime"), std::string::npos);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, DisplayLayout) {
  const auto r = run({"sigma-expand", "-p", "3", "-s", "2", "--format", "paper-layout"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out,
            "sigma_1 = v_2 y^3 sigma_3 + v_2 x y^4\n"
            "sigma_2 = 2 v_2^2 y^3 sigma_3^4 + 2 v_2 y^2 sigma_3^2 + v_2 x^2 y^4 + 2 y\n");
}

TEST(Cli, DeltaReport) {
  const auto r = run({"delta-bp2", "--z-order", "8", "--c2-order", "1", "--format", "json"});
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(r.out);
  for (const char* k : {"base_case", "residual_zero", "annihilation", "homogeneous", "rho_consistent"})
    EXPECT_EQ(j["payload"]["checks"][k], true) << k;
  EXPECT_EQ(j["payload"]["diff"]["reference_homogeneous"], false);
  EXPECT_EQ(run({"delta-bp2", "--z-order", "1"}).code, 2);
}

TEST(Cli, GroupsAndBases) {
  EXPECT_EQ(run({"euler", "wreath", "-p", "2", "-s", "1", "-n", "1"}).out, "Tr*(1) Z/2 wr Z/2 = v_1^3*c*c_2\n");
  EXPECT_EQ(run({"euler", "sigma-p", "-p", "3", "-s", "2"}).out, "2*v_2*y^4\n");
  EXPECT_EQ(run({"euler", "product", "-p", "3", "-s", "2", "--qs", "3,3"}).out, "v_2^2*z_1^8*z_2^8\n");
  const auto b = Json::parse(run({"basis", "-p", "2", "-s", "1", "-n", "2", "--format", "json"}).out);
  EXPECT_EQ(b["payload"]["formula_rank"], "14");
  EXPECT_EQ(b["payload"]["enumerated_rank"], 14);
  const auto pr = run({"present", "sigma-p", "-p", "3", "-s", "2"});
  EXPECT_EQ(pr.code, 0);
  EXPECT_NE(pr.out.find("bp relation check = ok"), std::string::npos);
  EXPECT_EQ(run({"transfer", "-p", "3", "-s", "1", "--what", "norm", "--poly", "x_1 x_2 x_3"}).code, 0);
  EXPECT_EQ(run({"transfer", "--theory", "bp", "--what", "x-power", "-k", "3", "--z-order", "4", "--c2-order", "2"}).code, 0);
}

TEST(Cli, OutputFile) {
  const auto path = std::filesystem::temp_directory_path() / "chern_cli_out.txt";
  std::filesystem::remove(path);
  const auto r = run({"pseries", "-p", "2", "-s", "2", "-q", "2", "-o", path.string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "[2](z) = v_2*z^4");
}

TEST(Cli, LawCache) {
  const auto dir = std::filesystem::temp_directory_path() / "chern_cli_cache";
  std::filesystem::remove_all(dir);
  ::setenv("FGL_CACHE_DIR", dir.c_str(), 1);
  const auto a = run({"fgl", "-p", "3", "-s", "2", "--format", "json"});
  const auto file = dir / "morava-p3-s2-o27.json";
  EXPECT_TRUE(std::filesystem::exists(file));
  const auto b = run({"fgl", "-p", "3", "-s", "2", "--format", "json"});
  EXPECT_EQ(a.out, b.out);
  std::ofstream(file) << "{broken";
  const auto c = run({"fgl", "-p", "3", "-s", "2", "--format", "json"});
  EXPECT_EQ(a.out, c.out);
  const auto d = run({"sigma-expand", "-p", "3", "-s", "2", "--format", "paper-layout"});
  EXPECT_EQ(d.code, 0);
  ::unsetenv("FGL_CACHE_DIR");
  std::filesystem::remove_all(dir);
}

TEST(Cli, CompareOracleVerdicts) {
  const std::vector<std::string> base = {"compare-oracle", "--job", "sigma-expand", "-p", "3", "-s", "2"};
  auto with = [&](const std::string& mode) {
    auto args = base;
    args.push_back("--oracle-cmd");
    args.push_back(oracle(mode));
    return run(args);
  };
  const auto ok = with("match");
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out, "sigma_1: match\nsigma_2: match\nsigma_3: match\n");
  EXPECT_EQ(with("mismatch").code, 3);
  const auto drop = with("drop");
  EXPECT_EQ(drop.code, 3);
  EXPECT_NE(drop.out.find("sigma_3: missing"), std::string::npos);
  EXPECT_EQ(with("garbage").code, 3);
  EXPECT_EQ(with("fail").code, 3);
  for (const char* job : {"fgl", "pseries", "norm-enum"})
    EXPECT_EQ(run({"compare-oracle", "--job", job, "-p", "5", "--oracle-cmd", oracle("match")}).code, 0) << job;
  EXPECT_EQ(run({"compare-oracle", "--job", "bogus", "--oracle-cmd", oracle("match")}).code, 2);
  EXPECT_EQ(run({"compare-oracle", "--job", "fgl"}).code, 2);
}

// The job document sent on stdin carries the primary's canonical values.
TEST(Cli, OracleJobDocument) {
  cli::JobConfig c;
  c.command = "compare-oracle";
  c.job = "pseries";
  c.p = 2;
  c.s = 2;
  const auto q = cli::oracle_quantities(c);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0]["name"], "pseries");
  EXPECT_EQ(q[0]["primary"][0]["vars"], Json::parse(R"({"z":4})"));
}

TEST(Cli, StandaloneBinary) {
  const std::string cmd = std::string(CHERN_TRANSFER) + " euler cyclic -q 1";
  FILE* f = ::popen(cmd.c_str(), "r");
  ASSERT_NE(f, nullptr);
  char buf[64] = {};
  const std::size_t n = std::fread(buf, 1, sizeof buf - 1, f);
  EXPECT_EQ(::pclose(f), 0);
  EXPECT_EQ(std::string(buf, n), "1\n");
}
