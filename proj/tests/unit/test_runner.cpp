#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "htsgd/checkpoint.hpp"
#include "htsgd/config.hpp"
#include "htsgd/csv.hpp"
#include "htsgd/errors.hpp"
#include "htsgd/runner.hpp"
#include "oracles.hpp"

using namespace htsgd;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p;
}

// kSmoke with `overrides` ("key=value" lines) applied.
std::string smoke(const std::vector<std::pair<std::string, std::string>>& overrides);

const char* kSmoke = R"(dataset.name = synthetic
dataset.d = 3
dataset.l = 2
dataset.per_class = 30
model.n = 16
train.eta = 2^-6
train.batch_size = 8
train.epochs = 4
train.seed = 11
noise.alpha = 1.8
noise.type = II
noise.sigma = 0.05
)";

std::string smoke(const std::vector<std::pair<std::string, std::string>>& overrides) {
  auto c = FlatConfig::parse_string(kSmoke);
  for (const auto& [k, v] : overrides) c.set(k, v);
  return c.canonical();
}

}  // namespace

TEST(FlatConfig, ParsesNumbersAndComments) {
  const auto c = FlatConfig::parse_string("# comment\na.x = 2^-4\n\na.y = 1e-3  # trailing\nb.list = 1, 2,3\n");
  EXPECT_EQ(c.get_double("a.x", 0), 0.0625);
  EXPECT_EQ(c.get_double("a.y", 0), 1e-3);
  EXPECT_EQ(c.get_size_list("b.list"), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_NO_THROW(c.reject_unused());
  EXPECT_EQ(parse_number("-2^3"), -8.0);
}

TEST(FlatConfig, CanonicalRoundTrip) {
  const auto c = FlatConfig::parse_string("z.b = 2\na.a = hello world\n");
  const auto d = FlatConfig::parse_string(c.canonical());
  EXPECT_EQ(c.entries(), d.entries());
  EXPECT_EQ(c.canonical(), "a.a = hello world\nz.b = 2\n");
}

TEST(FlatConfig, SyntaxErrorsCarryLine) {
  try {
    FlatConfig::parse_string("a.b = 1\nnot a pair\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ExperimentConfig, AlphaOutOfRangeNamesBound) {
  const auto c = FlatConfig::parse_string("train.eta = 0.1\ntrain.batch_size = 2\nnoise.alpha = 2.5\n");
  try {
    parse_experiment_config(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "noise.alpha");
    EXPECT_NE(std::string(e.what()).find("(0, 2]"), std::string::npos);
  }
}

TEST(ExperimentConfig, UnknownAndMissingKeys) {
  EXPECT_THROW(parse_experiment_config(FlatConfig::parse_string("train.eta = 0.1\ntrain.batch_size = 2\ntrain.etta = 1\n")),
               ConfigError);
  try {
    parse_experiment_config(FlatConfig::parse_string("train.batch_size = 2\n"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "train.eta");
  }
  EXPECT_THROW(parse_experiment_config(FlatConfig::parse_string("train.eta = 0.1\ntrain.batch_size = 2\nrun.repeat = 0\n")),
               ConfigError);
}

TEST(GitBlobHash, KnownValues) {
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Aggregate, MeanAndSampleSd) {
  std::vector<SeedResult> seeds(5);
  const double acc[] = {0.9, 0.92, 0.95, 0.91, 0.93};
  for (int i = 0; i < 5; ++i) {
    seeds[i].ok = true;
    seeds[i].test_acc = acc[i];
  }
  const auto row = aggregate("1.9", seeds);
  double mean = 0;
  for (double a : acc) mean += a / 5;
  double ss = 0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  EXPECT_NEAR(row.test_acc.mean, mean, 1e-15);
  EXPECT_NEAR(row.test_acc.sd, std::sqrt(ss / 4), 1e-15);
  EXPECT_EQ(row.completed, 5u);

  seeds[2].ok = false;
  EXPECT_EQ(aggregate("x", seeds).completed, 4u);
}

TEST(RunCommand, SmokeRunWritesEverything) {
  const auto dir = oracle::temp_dir("run");
  const auto cfg = write_config(dir, "smoke.cfg", smoke({{"run.repeat", "2"}, {"train.checkpoint_every", "2"}}));
  std::ostringstream log, err;
  ASSERT_EQ(run_command(cfg, log, err, dir / "out"), kExitOk) << err.str();
  for (const char* f : {"manifest.cfg", "seeds.csv", "metrics.csv", "results.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "out" / "checkpoints" / "seed_11.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "out" / "checkpoints" / "seed_12" / "epoch_2.ckpt"));
  const auto results = read_csv(dir / "out" / "results.csv");
  ASSERT_EQ(results.rows.size(), 1u);
  EXPECT_EQ(results.rows[0][results.column("completed")], "2");
  const auto metrics = read_csv(dir / "out" / "metrics.csv");
  EXPECT_EQ(metrics.rows.size(), 8u);
  const auto ckpt = load_checkpoint(dir / "out" / "checkpoints" / "seed_11.ckpt");
  EXPECT_EQ(ckpt.n(), 16u);
}

TEST(RunCommand, ManifestReproducesResultsBitwise) {
  const auto dir = oracle::temp_dir("manifest");
  const auto cfg = write_config(dir, "smoke.cfg", smoke({{"run.repeat", "3"}, {"run.jobs", "3"}}));
  std::ostringstream log, err;
  ASSERT_EQ(run_command(cfg, log, err, dir / "a"), kExitOk) << err.str();
  const std::string manifest = slurp(dir / "a" / "manifest.cfg");
  EXPECT_NE(manifest.find("# config-hash "), std::string::npos);
  EXPECT_NE(manifest.find("# seeds: 11 12 13"), std::string::npos);
  std::ofstream(dir / "replay.cfg") << manifest;
  ASSERT_EQ(run_command(dir / "replay.cfg", log, err, dir / "b"), kExitOk) << err.str();
  EXPECT_EQ(slurp(dir / "a" / "results.csv"), slurp(dir / "b" / "results.csv"));
  EXPECT_EQ(slurp(dir / "a" / "seeds.csv"), slurp(dir / "b" / "seeds.csv"));

  // Thread count does not change the numbers.
  const auto serial = write_config(dir, "serial.cfg", smoke({{"run.repeat", "3"}, {"run.jobs", "1"}}));
  ASSERT_EQ(run_command(serial, log, err, dir / "c"), kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "results.csv"), slurp(dir / "c" / "results.csv"));
}

TEST(RunCommand, ConfigErrorExitCode) {
  const auto dir = oracle::temp_dir("badcfg");
  std::ostringstream log, err;
  EXPECT_EQ(run_command(write_config(dir, "a.cfg", smoke({{"noise.alpha", "2.5"}})), log, err), kExitConfigError);
  EXPECT_NE(err.str().find("(0, 2]"), std::string::npos);
  EXPECT_EQ(run_command(write_config(dir, "b.cfg", "this is not a config\n"), log, err), kExitConfigError);
  EXPECT_EQ(run_command(write_config(dir, "c.cfg", std::string(kSmoke) + "noise.sigma = 1\n"), log, err),
            kExitConfigError);
}

TEST(RunCommand, DivergedSeedIsRecordedAndOthersContinue) {
  const auto dir = oracle::temp_dir("diverge");
  // Cauchy noise at a huge scale overflows for some seeds but not necessarily all.
  const auto cfg = write_config(dir, "d.cfg", smoke({{"run.repeat", "2"}, {"noise.sigma", "1e306"}}));
  std::ostringstream log, err;
  const int rc = run_command(cfg, log, err, dir / "out");
  EXPECT_EQ(rc, kExitRunFailure);
  const auto seeds = read_csv(dir / "out" / "seeds.csv");
  ASSERT_EQ(seeds.rows.size(), 2u);
  EXPECT_EQ(seeds.rows[0][seeds.column("status")], "failed");
  EXPECT_NE(seeds.rows[0][seeds.column("error")].find("diverged"), std::string::npos);
}

TEST(Report, EmptyDirectory) {
  const auto dir = oracle::temp_dir("report-empty");
  std::ostringstream out;
  EXPECT_EQ(report_command(dir, out), kExitRunFailure);
  EXPECT_NE(out.str().find("no complete results"), std::string::npos);
}

TEST(Report, RowWithPlusMinusAndIncompleteMarker) {
  const auto dir = oracle::temp_dir("report");
  const auto cfg = write_config(dir, "smoke.cfg", smoke({{"run.repeat", "3"}, {"run.label", "1.8"}}));
  std::ostringstream log, err, out;
  ASSERT_EQ(run_command(cfg, log, err, dir / "results" / "noisy"), kExitOk);
  fs::create_directories(dir / "results" / "pending");
  std::ofstream(dir / "results" / "pending" / "manifest.cfg") << "model.n = 3\n";
  ASSERT_EQ(report_command(dir / "results", out), kExitOk);
  const std::string text = out.str();
  EXPECT_NE(text.find("Pruning Ratio"), std::string::npos);
  EXPECT_NE(text.find("±"), std::string::npos);
  EXPECT_NE(text.find("pending"), std::string::npos);
  EXPECT_NE(text.find("incomplete"), std::string::npos);

  // The ± value is the sample sd over the per-seed rows.
  const auto seeds = read_csv(dir / "results" / "noisy" / "seeds.csv");
  std::vector<double> acc;
  for (const auto& r : seeds.rows) acc.push_back(parse_double(r[seeds.column("test_acc")]));
  double m = 0;
  for (double a : acc) m += a / 3;
  double ss = 0;
  for (double a : acc) ss += (a - m) * (a - m);
  const auto results = read_csv(dir / "results" / "noisy" / "results.csv");
  EXPECT_NEAR(parse_double(results.rows[0][results.column("test_acc_sd")]), std::sqrt(ss / 2), 1e-15);
}

TEST(SdeRun, ZeroDriftEulerTableIsAllZero) {
  const auto dir = oracle::temp_dir("sde-euler");
  const auto cfg = write_config(dir, "e.cfg",
                                "experiment.kind = euler\nexperiment.drift = zero\nexperiment.etas = 2^-2, 2^-3\n"
                                "experiment.eta_ref = 2^-6\nexperiment.trials = 3\n");
  std::ostringstream log, err;
  ASSERT_EQ(sde_run_command(cfg, log, err, dir / "out"), kExitOk) << err.str();
  const auto t = read_csv(dir / "out" / "table.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& r : t.rows) EXPECT_EQ(parse_double(r[1]), 0.0);
  EXPECT_TRUE(fs::exists(dir / "out" / "plot.tsv"));
  std::ostringstream out;
  EXPECT_EQ(report_command(dir / "out", out), kExitOk);
}

TEST(SdeRun, PocAndIidTables) {
  const auto dir = oracle::temp_dir("sde-poc");
  std::ostringstream log, err;
  const auto poc = write_config(dir, "p.cfg",
                                "experiment.kind = poc\nexperiment.drift = logistic\nexperiment.ns = 64, 256, 1024\n"
                                "experiment.trials = 3\n");
  ASSERT_EQ(sde_run_command(poc, log, err, dir / "poc"), kExitOk) << err.str();
  const auto t = read_csv(dir / "poc" / "table.csv");
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.header[3], "slope");
  EXPECT_TRUE(std::isfinite(parse_double(t.rows[0][3])));

  const auto iid = write_config(dir, "i.cfg",
                                "experiment.kind = iid\nexperiment.alpha = 1.5\nexperiment.ns = 1000, 10000\n"
                                "experiment.trials = 10\n");
  ASSERT_EQ(sde_run_command(iid, log, err, dir / "iid"), kExitOk) << err.str();
  const auto u = read_csv(dir / "iid" / "table.csv");
  EXPECT_GT(parse_double(u.rows[0][1]), parse_double(u.rows[1][1]));
}

TEST(SdeRun, ConfigErrors) {
  const auto dir = oracle::temp_dir("sde-bad");
  std::ostringstream log, err;
  EXPECT_EQ(sde_run_command(write_config(dir, "a.cfg", "experiment.kind = nope\n"), log, err), kExitConfigError);
  EXPECT_EQ(sde_run_command(write_config(dir, "b.cfg", "experiment.kind = iid\nexperiment.ns = 10\nexperiment.typo = 1\n"),
                            log, err),
            kExitConfigError);
  EXPECT_EQ(sde_run_command(write_config(dir, "c.cfg", "experiment.kind = iid\nexperiment.alpha = 2\nexperiment.ns = 10\n"),
                            log, err),
            kExitConfigError);
}

TEST(Csv, RoundTrip) {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{format_double(0.1), format_double(1e-300)}, {format_double(std::nan("")), "x"}};
  const auto dir = oracle::temp_dir("csv");
  write_csv(dir / "t.csv", t);
  const auto u = read_csv(dir / "t.csv");
  EXPECT_EQ(u.header, t.header);
  EXPECT_EQ(u.rows, t.rows);
  EXPECT_EQ(parse_double(u.rows[0][0]), 0.1);
}
