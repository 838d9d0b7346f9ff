#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HYPERNET_CLI;
const fs::path kFixtures = HYPERNET_FIXTURE_DIR;

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + kCli + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

int exit_code(const std::string& args) {
  return WEXITSTATUS(std::system((kCli + " " + args + " >/dev/null 2>&1").c_str()));
}

std::size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && line.rfind("dataset,", 0) != 0) ++n;
  }
  return n;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("hypernet_cli_" + name);
}

const std::string kTiny = " --dataset " + (kFixtures / "tiny" / "manifest.json").string();
const std::string kQuick = kTiny + " --epochs 3 --hidden 4";

}  // namespace

TEST(Cli, RunIsDeterministic) {
  const fs::path a = temp_path("a.csv"), b = temp_path("b.csv");
  const std::string args = "run" + kQuick + " --family reshgnn --depth 3 --seed 5 --out ";
  const Result r1 = run(args + a.string());
  const Result r2 = run(args + b.string());
  ASSERT_EQ(r1.code, 0);
  EXPECT_EQ(r1.out, r2.out);
  std::ifstream fa(a), fb(b);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(data_rows(sa.str()), 1u);
  fs::remove(a);
  fs::remove(b);
}

TEST(Cli, SeedFromEnvironmentAndFlagOverride) {
  const std::string args = "run" + kQuick + " --family hgnn";
  const Result env7 = run(args, "HYPERNET_SEED=7");
  const Result flag7 = run(args + " --seed 7");
  const Result override = run(args + " --seed 7", "HYPERNET_SEED=3");
  ASSERT_EQ(env7.code, 0);
  EXPECT_EQ(env7.out, flag7.out);
  EXPECT_EQ(override.out, flag7.out);
  EXPECT_NE(env7.out.find("seed=7"), std::string::npos) << env7.out;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(exit_code("run" + kQuick + " --family gcn"), 1);
  EXPECT_EQ(exit_code("run" + kQuick + " --family hgnn --depth 0"), 2);
  EXPECT_EQ(exit_code("ratio-sweep" + kQuick + " --ratios 1.5"), 2);
  EXPECT_EQ(exit_code("frobnicate"), 1);
  EXPECT_EQ(exit_code("run --family hgnn"), 1);
  EXPECT_EQ(exit_code("validate-dataset --dataset " +
                      (kFixtures / "bad_labels" / "manifest.json").string()),
            2);
  EXPECT_EQ(exit_code("validate-dataset --dataset " +
                      (kFixtures / "tiny" / "manifest.json").string()),
            0);
  EXPECT_EQ(exit_code("run" + kQuick + " --family hgnn --lr nan"), 2);
}

TEST(Cli, DepthOneRejectedForResidual) {
  EXPECT_EQ(exit_code("run" + kQuick + " --family reshgnn --depth 1"), 2);
}

TEST(Cli, DepthSweepRowCounts) {
  const Result r = run("depth-sweep" + kQuick + " --family hgnn --depths 2,3 --seeds 0");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(data_rows(r.out), 2u);
}

TEST(Cli, DefaultDepths) {
  const Result r = run("depth-sweep" + kTiny + " --epochs 1 --hidden 4 --family hgnn");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::string depths;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("dataset,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string field;
    for (int i = 0; i < 3; ++i) std::getline(ss, field, ',');
    depths += field + " ";
  }
  EXPECT_EQ(depths, "2 4 8 16 32 64 ");
}

TEST(Cli, RatioSweepRowCounts) {
  SCOPED_TRACE("1 ratio x 8 default seeds x 2 default families");
  const Result r = run("ratio-sweep" + kQuick + " --ratios 0.5");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(data_rows(r.out), 16u);
}

TEST(Cli, GenSyntheticRoundTrip) {
  const fs::path dir = temp_path("gen");
  fs::remove_all(dir);
  const fs::path spec = temp_path("spec.json");
  std::ofstream(spec) << R"({"name":"g","n_vertices":40,"n_classes":2,"dims":[3,3],)"
                      << R"("separation":2,"noise_std":0.5,"correlation":0.8,"label_rate":0.25,)"
                      << R"("seed":1,"knn_k":3})";
  EXPECT_EQ(exit_code("gen-synthetic --synthetic " + spec.string() + " --out " + dir.string()), 0);
  EXPECT_EQ(exit_code("gen-synthetic --synthetic " + spec.string() + " --out " + dir.string()), 2);
  EXPECT_EQ(exit_code("gen-synthetic --synthetic " + spec.string() + " --out " + dir.string() +
                      " --force"),
            0);
  const Result v = run("validate-dataset --dataset " + (dir / "manifest.json").string());
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find("n_vertices=40"), std::string::npos) << v.out;
  fs::remove_all(dir);
  fs::remove(spec);
}
