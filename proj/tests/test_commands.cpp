#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rippler/commands.hpp"
#include "rippler/config.hpp"
#include "rippler/errors.hpp"
#include "support.hpp"

using namespace rippler;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rippler-test-" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig small_config(const std::string& out) {
  RunConfig c = preset("sir-5.2");
  c.model.num_individuals = 8;
  c.model.num_timepoints = 6;
  c.model.beta = 0.2;
  c.model.gamma = 0.3;
  c.observation.test_probability = 0.5;
  c.sampler.iterations = 40;
  c.sampler.updates_per_iteration = 3;
  c.seed = 11;
  c.out = out;
  return c;
}

}  // namespace

TEST(Simulate, ByteIdenticalAcrossRuns) {
  const fs::path a = scratch("sim-a"), b = scratch("sim-b");
  cmd_simulate(small_config(a.string()));
  cmd_simulate(small_config(b.string()));
  // config.ini also records the output directory, so it differs by that line.
  for (const char* f : {"X.csv", "Y.csv", "manifest.json"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Simulate, ReproducesShippedDataset) {
  const fs::path dir = scratch("sim-sir52");
  RunConfig c = load_config(testkit::source_path("configs/sir-5.2.ini"));
  c.out = dir.string();
  cmd_simulate(c);
  const fs::path shipped = testkit::source_path("data/sir-5.2");
  for (const char* f : {"X.csv", "Y.csv", "manifest.json"}) EXPECT_EQ(slurp(dir / f), slurp(shipped / f)) << f;
}

TEST(Simulate, ZeroTestProbabilityLeavesYEmpty) {
  const fs::path dir = scratch("sim-empty");
  RunConfig c = small_config(dir.string());
  c.observation.test_probability = 0.0;
  cmd_simulate(c);
  const auto y = lines(dir / "Y.csv");
  ASSERT_EQ(y.size(), 1u + 8 * 6);
  for (std::size_t i = 1; i < y.size(); ++i) EXPECT_EQ(y[i].back(), ',') << y[i];
  EXPECT_NE(slurp(dir / "manifest.json").find("\"observed_cells\": 0"), std::string::npos);
}

TEST(Infer, ZeroIterationsWritesHeadersOnly) {
  const fs::path dir = scratch("infer-zero");
  RunConfig c = small_config(dir.string());
  c.sampler.iterations = 0;
  cmd_infer(c, std::nullopt);
  for (const char* f : {"trace.csv", "state_counts.csv", "intervals.csv"}) {
    EXPECT_EQ(lines(dir / f).size(), 1u) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
}

TEST(Infer, WritesEveryOutputForEachKernel) {
  for (const char* kernel : {"rippler", "rippler-data-informed", "iffbs", "rjmcmc-sir"}) {
    const fs::path dir = scratch(std::string("infer-") + kernel);
    RunConfig c = small_config(dir.string());
    c.sampler.kernel = kernel;
    cmd_infer(c, std::nullopt);
    for (const char* f : {"trace.csv", "state_counts.csv", "intervals.csv", "majd.csv", "acceptance_by_kappa.csv",
                          "ripple_sizes.csv", "summary.json", "manifest.json", "X.csv", "Y.csv"}) {
      EXPECT_TRUE(fs::exists(dir / f)) << kernel << " " << f;
    }
    EXPECT_EQ(lines(dir / "trace.csv").size(), 1u + 40 * 3) << kernel;
    // iteration x t x state rows plus the header
    EXPECT_EQ(lines(dir / "state_counts.csv").size(), 1u + 40 * 6 * 3) << kernel;
  }
}

TEST(Infer, ReadsDataDirectoryAndChecksShape) {
  const fs::path data = scratch("infer-data");
  cmd_simulate(small_config(data.string()));
  const fs::path out = scratch("infer-data-out");
  RunConfig c = small_config(out.string());
  EXPECT_NO_THROW(cmd_infer(c, data.string()));

  c.model.num_individuals = 9;
  EXPECT_THROW(cmd_infer(c, data.string()), ConfigError);
}

TEST(Infer, DeterministicTraceApartFromTimings) {
  const fs::path a = scratch("infer-a"), b = scratch("infer-b");
  cmd_infer(small_config(a.string()), std::nullopt);
  cmd_infer(small_config(b.string()), std::nullopt);
  for (const char* f : {"trace.csv", "state_counts.csv", "intervals.csv", "acceptance_by_kappa.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Benchmark, SingleSizeHasUnitRelativeTime) {
  const fs::path dir = scratch("bench");
  RunConfig c = preset("seir-5.3");
  c.model.num_individuals = 10;
  c.model.num_timepoints = 8;
  c.sampler.iterations = 20;
  c.sampler.updates_per_iteration = 2;
  c.benchmark.num_states = {5};
  c.out = dir.string();
  cmd_benchmark(c);
  const auto rows = lines(dir / "scaling.csv");
  ASSERT_EQ(rows.size(), 1u + c.benchmark.kernels.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> cells;
    std::stringstream ss(rows[i]);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 7u);
    EXPECT_DOUBLE_EQ(std::stod(cells[5]), 1.0) << rows[i];
  }
  EXPECT_TRUE(fs::exists(dir / "slopes.csv"));
}

TEST(Oracle, RefusesLargeSpaces) {
  RunConfig c = preset("sir-5.2");
  c.out = scratch("oracle-big").string();
  try {
    cmd_oracle(c, {});
    FAIL() << "expected refusal";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("S^(N*T)"), std::string::npos);
  }
}

TEST(Oracle, FixtureRunWritesEnumerationAndTv) {
  const fs::path dir = scratch("oracle-sis");
  RunConfig c = preset("sis-5.4");
  c.out = dir.string();
  OracleOptions o;
  o.fixture = "sis";
  o.updates = 20000;
  cmd_oracle(c, o);
  const auto enumeration = lines(dir / "enumeration.csv");
  EXPECT_EQ(enumeration.size(), 1u + 64);  // 2^(2*3) configurations
  double total = 0.0;
  for (std::size_t i = 1; i < enumeration.size(); ++i) total += std::stod(enumeration[i].substr(enumeration[i].find(',') + 1));
  EXPECT_NEAR(total, 1.0, 1e-12);
  const auto oracle = lines(dir / "oracle.csv");
  ASSERT_EQ(oracle.size(), 5u);
  for (std::size_t i = 1; i < oracle.size(); ++i) {
    EXPECT_LT(std::stod(oracle[i].substr(oracle[i].rfind(',') + 1)), 0.1) << oracle[i];
  }

  o.fixture = "nope";
  EXPECT_THROW(cmd_oracle(c, o), ConfigError);
}
