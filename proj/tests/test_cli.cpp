#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rtensor");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = rtensor::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Data rows of a CSV document (header comments and the column row dropped).
std::vector<std::vector<std::string>> csv_rows(const std::string& text, std::vector<std::string>* columns = nullptr) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (!header_seen) {
      header_seen = true;
      if (columns) *columns = cells;
      continue;
    }
    rows.push_back(cells);
  }
  return rows;
}

class ScopedEnv {
public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) { setenv(name, value.c_str(), 1); }
  ~ScopedEnv() { unsetenv(name_); }

private:
  const char* name_;
};

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("rtensor_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

} // namespace

TEST(Cli, DensitySpansSupport) {
  const auto r = run_cli({"density", "--p", "3", "--grid", "400"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> cols;
  const auto rows = csv_rows(r.out, &cols);
  EXPECT_EQ(cols, (std::vector<std::string>{"y", "rho"}));
  ASSERT_EQ(rows.size(), 400u);
  const double edge = rtensor::support_edge(3);
  EXPECT_NEAR(std::stod(rows.front()[0]), -edge * (1 - 1.0 / 400), 1e-12);
  EXPECT_NEAR(std::stod(rows.back()[0]), edge * (1 - 1.0 / 400), 1e-12);
  for (const auto& row : rows) {
    EXPECT_GE(std::stod(row[1]), 0.0);
    EXPECT_NEAR(std::stod(row[1]), rtensor::wigner_density(3, std::stod(row[0])), 1e-14);
  }
  EXPECT_NE(r.out.find("# rtensor "), std::string::npos);
  EXPECT_NE(r.out.find("# config: {"), std::string::npos);
  EXPECT_NE(r.out.find("# seed: 0"), std::string::npos);
}

TEST(Cli, SpikeSweepJumpsAtThreshold) {
  const auto r = run_cli({"spike", "--p", "3", "--b-sweep", "0:6:0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> cols;
  const auto rows = csv_rows(r.out, &cols);
  EXPECT_EQ(cols, (std::vector<std::string>{"p", "b", "y_c", "theta_c", "rho_c_sq", "dominant_saddle", "f0", "f1"}));
  ASSERT_EQ(rows.size(), 121u);
  double jump_at = -1, prev = std::stod(rows[0][2]);
  for (const auto& row : rows) {
    const double y = std::stod(row[2]);
    if (y > prev + 1.0 && jump_at < 0) jump_at = std::stod(row[1]);
    prev = y;
  }
  EXPECT_GT(jump_at, std::sqrt(8.0));
  EXPECT_LT(jump_at - 0.05, std::sqrt(8.0));
  EXPECT_NEAR(std::stod(rows[0][2]), 1.5 * std::sqrt(3.0), 1e-12);
}

TEST(Cli, SpikeThreshold) {
  const auto r = run_cli({"spike", "--p", "4", "--threshold"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(std::stod(rows[0][1]), 4.5, 1e-12);
  EXPECT_NEAR(std::stod(rows[0][2]), 4.5, 1e-8);
}

TEST(Cli, BorelDiscontinuityJson) {
  const auto r = run_cli({"borel", "--p", "4", "--disc", "--g", "0.1", "--q", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  ASSERT_TRUE(j.contains("meta"));
  ASSERT_EQ(j["data"].size(), 1u);
  const auto& row = j["data"][0];
  EXPECT_NEAR(row["instanton_im"].get<double>(), std::sqrt(2.0) * std::exp(-2.5), 1e-15);
  EXPECT_NEAR(row["im_disc"].get<double>() / row["instanton_im"].get<double>(), row["ratio"].get<double>(), 1e-12);
  EXPECT_NEAR(row["ratio"].get<double>(), 1.0, 0.1);
  EXPECT_EQ(j["meta"]["config"]["q"], 0);
  EXPECT_EQ(j["meta"]["table"], "borel/disc");
}

TEST(Cli, BorelOtherModes) {
  auto r = run_cli({"borel", "--p", "3", "--coeffs", "4", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 3u);  // n = 0, 2, 4
  EXPECT_EQ(rows[1][3], "5/6");
  r = run_cli({"borel", "--p", "4", "--z", "--g", "0.05", "--arg", "1.0", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  rows = csv_rows(r.out);
  const auto z = rtensor::borel::sector_Z<double>(4, {0.05, 1.0}, 0);
  EXPECT_EQ(std::stod(rows[0][4]), z.real());
  r = run_cli({"borel", "--p", "5", "--instantons", "--q", "1", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv_rows(r.out).size(), 3u);
  r = run_cli({"borel", "--p", "4", "--z", "--coeffs", "3"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, MomentsResolventAnnealed) {
  auto r = run_cli({"moments", "--p", "4", "--n-max", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& row : csv_rows(r.out)) EXPECT_LT(std::stod(row[3]), 1e-6);
  r = run_cli({"resolvent", "--p", "3", "--w", "3,1", "--w", "0.5,2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) EXPECT_LT(std::stod(row[7]), 1e-6);
  r = run_cli({"annealed", "--p", "3", "--w", "5", "--N", "100", "--N", "200", "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto an = csv_rows(r.out);
  ASSERT_EQ(an.size(), 2u);
  EXPECT_GT(std::stod(an[0][9]), std::stod(an[1][9]));
}

TEST(Cli, MapsAndInvariants) {
  auto r = run_cli({"maps", "--p", "3", "--n", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["data"].size(), 5u);
  EXPECT_EQ(j["meta"]["count"], 5);
  r = run_cli({"maps", "--p", "3", "--n", "2", "--format", "csv"});
  EXPECT_EQ(csv_rows(r.out).size(), 5u);
  r = run_cli({"invariants", "--p", "3", "--N", "8", "--n", "2", "--samples", "2000", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(std::stod(rows[0][6]), 1 + 6.0 / 8 + 8.0 / 64, 1e-14);
  EXPECT_LT(std::abs(std::stod(rows[0][7])), 4.0);
}

TEST(Cli, ByteIdenticalAndThreadIndependent) {
  const std::vector<std::string> a{"invariants", "--p", "3", "--N", "6", "--n", "2", "--samples", "500", "--seed", "9"};
  const auto r1 = run_cli(a);
  const auto r2 = run_cli(a);
  EXPECT_EQ(r1.out, r2.out);
  auto b = a;
  b.back() = "10";
  EXPECT_NE(run_cli(b).out, r1.out);
  const auto e1 = run_cli({"eigen", "--p", "3", "--N", "3", "--seed", "2", "--threads", "1"});
  const auto e4 = run_cli({"eigen", "--p", "3", "--N", "3", "--seed", "2", "--threads", "4"});
  ASSERT_EQ(e1.code, 0);
  // only the recorded thread count differs
  EXPECT_EQ(csv_rows(e1.out), csv_rows(e4.out));
  EXPECT_EQ(run_cli({"spike", "--p", "3", "--b-sweep", "2:4:0.5"}).out,
            run_cli({"spike", "--p", "3", "--b-sweep", "2:4:0.5"}).out);
}

TEST(Cli, SampleRoundTrip) {
  const auto dir = temp_dir("sample");
  const auto file = (dir / "t.bin").string();
  auto r = run_cli({"sample", "--p", "3", "--N", "4", "--seed", "5", "--b", "2", "--output", file});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream is(file, std::ios::binary);
  const auto t = rtensor::read_tensor(is);
  EXPECT_EQ(t.order(), 3);
  EXPECT_EQ(t.dim(), 4);
  std::ifstream hs(file, std::ios::binary);
  std::string header;
  std::getline(hs, header);
  EXPECT_EQ(json::parse(header)["generator"]["config"]["b"], 2.0);
  r = run_cli({"eigen", "--tensor", file, "--starts", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(csv_rows(r.out).empty());
  r = run_cli({"invariants", "--tensor", file, "--n", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(std::stod(csv_rows(r.out)[0][3]), rtensor::balanced_invariant(t, 2), 1e-12);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = temp_dir("env");
  ScopedEnv env(rtensor::cli::kOutputDirEnv, dir.string());
  auto r = run_cli({"moments", "--p", "2", "--n-max", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  ASSERT_TRUE(fs::exists(dir / "moments.csv"));
  r = run_cli({"moments", "--p", "2", "--output", "sub/m.json", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream is(dir / "sub" / "m.json");
  const auto j = json::parse(is);
  EXPECT_EQ(j["data"].size(), 7u);
}

TEST(Cli, ExitCodes) {
  auto r = run_cli({"density", "--p", "3", "--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos);
  r = run_cli({"density", "--p", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--p"), std::string::npos);
  r = run_cli({"resolvent", "--p", "3", "--w", "1,0"});
  EXPECT_EQ(r.code, 2);
  r = run_cli({"resolvent", "--p", "3", "--w", "abc"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--w"), std::string::npos);
  r = run_cli({"spike", "--p", "3", "--b-sweep", "1:0:0.1"});
  EXPECT_EQ(r.code, 2);
  r = run_cli({"borel", "--p", "3", "--coeffs", "3", "--format", "xml"});
  EXPECT_EQ(r.code, 2);
  r = run_cli({"eigen", "--example", "--tol", "1e-300", "--starts", "3"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("numerical failure"), std::string::npos);
  r = run_cli({});
  EXPECT_EQ(r.code, 2);
  r = run_cli({"density", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("rho:"), std::string::npos);
}

TEST(Cli, SchemaFileMatchesTool) {
  std::ifstream is(std::string(RTENSOR_SOURCE_DIR) + "/docs/cli_schema.json");
  ASSERT_TRUE(is.good());
  const auto shipped = json::parse(is);
  EXPECT_EQ(shipped, rtensor::cli::schema_json());
  const auto r = run_cli({"schema"});
  EXPECT_EQ(json::parse(r.out), shipped);
  // every table's header row matches its schema
  const auto d = run_cli({"borel", "--p", "3", "--coeffs", "2", "--format", "csv"});
  std::vector<std::string> cols;
  (void)csv_rows(d.out, &cols);
  std::vector<std::string> expected;
  for (const auto& c : shipped["tables"]["borel/coeffs"]["columns"]) expected.push_back(c["name"]);
  EXPECT_EQ(cols, expected);
}
