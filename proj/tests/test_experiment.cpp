#include "blm/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>

using namespace blm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("blm_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.name = "small";
  spec.n = 40;
  spec.p = 60;
  spec.s = 3;
  spec.max_iters = 15;
  spec.replications = 3;
  spec.base_seed = 11;
  spec.blm_samples = 10000;
  return spec;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t k = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++k;
  return k;
}

}  // namespace

TEST(Config, ParsesAllSections) {
  std::istringstream is(R"(name = demo
[data]
n = 120
p = 300
s = 7
dist = exponential
link = sign
noise_std = 0.5
[solver]
constraint = sparsity
eta = subexponential:2
max_iters = 40
tol = 1e-9
fit_bias = false
[run]
replications = 4
base_seed = 99
blm_samples = 20000
check_dirs = 5
checks = rho, spectral
output_dir = /tmp/x
)");
  const auto spec = parse_spec(is);
  EXPECT_EQ(spec.name, "demo");
  EXPECT_EQ(spec.n, 120);
  EXPECT_EQ(spec.p, 300);
  EXPECT_EQ(spec.s, 7);
  EXPECT_EQ(spec.dist, Distribution::CenteredExponential);
  EXPECT_EQ(spec.link.kind, LinkKind::Sign);
  EXPECT_EQ(spec.link.noise_std, 0.5);
  EXPECT_DOUBLE_EQ(std::get<SubexponentialEta>(spec.eta).c0, 2.0);
  EXPECT_EQ(spec.max_iters, 40);
  EXPECT_EQ(spec.tol, 1e-9);
  EXPECT_EQ(spec.fit_bias, BiasMode::Off);
  EXPECT_EQ(spec.replications, 4);
  EXPECT_EQ(spec.base_seed, 99u);
  EXPECT_EQ(spec.checks, (std::vector<std::string>{"rho", "spectral"}));
  EXPECT_EQ(spec.output_dir, "/tmp/x");
}

TEST(Config, RoundTripsThroughManifestTree) {
  auto spec = small_spec();
  spec.checks = {"clip", "rsv"};
  std::ostringstream os;
  boost::property_tree::write_ini(os, spec_tree(spec));
  std::istringstream is(os.str());
  const auto back = parse_spec(is);
  std::ostringstream again;
  boost::property_tree::write_ini(again, spec_tree(back));
  EXPECT_EQ(os.str(), again.str());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return parse_spec(is);
  };
  EXPECT_THROW(parse("[data]\nm = 3\n"), InvalidArgument);
  EXPECT_THROW(parse("[data]\nn = abc\n"), InvalidArgument);
  EXPECT_THROW(parse("[data]\nn = 5\ns = 9\np = 6\n"), InvalidArgument);
  EXPECT_THROW(parse("[run]\nchecks = rho, magic\n"), InvalidArgument);
  EXPECT_THROW(parse("[solver]\nfit_bias = maybe\n"), InvalidArgument);
  EXPECT_THROW(parse("[run]\nreplications = 0\n"), InvalidArgument);
  try {
    parse("[data]\nn = 5\nthis line is not ini\n");
    FAIL() << "expected parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, RoundTripIsLossless) {
  const auto ds = make_dataset(25, 7, 2, Distribution::CenteredExponential, LinkFunction{LinkKind::Relu, 0.3}, 4);
  const auto dir = scratch("csv");
  export_dataset(dir / "d.csv", ds);
  const auto back = ingest_csv(dir / "d.csv");
  EXPECT_EQ(back.X, ds.X);
  EXPECT_EQ(back.y, ds.y);
  const std::string meta = slurp(dir / "d.meta.ini");
  EXPECT_NE(meta.find("seed=4"), std::string::npos);
  EXPECT_NE(meta.find("dist=exponential"), std::string::npos);
  EXPECT_NE(meta.find("support="), std::string::npos);
}

TEST(Csv, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(1e-5), "1.0000000000000001e-05");
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int k = 0; k < 1000; ++k) {
    const double v = std::pow(10.0, u(rng)) * (k % 2 ? -1.0 : 1.0);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Csv, ParseErrorsCarryLineNumbers) {
  auto read = [](const std::string& text) {
    std::istringstream is(text);
    return read_csv(is);
  };
  try {
    read("x_1,x_2\n1,2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_NE(std::string(e.what()).find("x_1,x_2"), std::string::npos);
  }
  try {
    read("x_1,y\n1,2\n3,oops\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    read("x_1,x_2,y\n1,2,3\n1,2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(read("x_2,y\n1,2\n"), ParseError);
  EXPECT_THROW(read(""), ParseError);
  EXPECT_THROW(read("x_1,y\n"), InvalidArgument);
  const auto ok = read("x_1,x_2,y\r\n1,2,3\r\n4, 5 ,6\r\n");
  EXPECT_EQ(ok.X.rows(), 2);
  EXPECT_EQ(ok.X(1, 1), 5.0);
  EXPECT_EQ(ok.y[1], 6.0);
}

TEST(Experiment, PairedArmsShareData) {
  const auto result = run_experiment(small_spec());
  ASSERT_EQ(result.replications.size(), 3u);
  for (const auto& rep : result.replications) {
    ASSERT_EQ(rep.arms.size(), 2u);
    // Record 0 is the zero init on the same data, so both arms agree there.
    EXPECT_EQ(rep.arms[0].trace.records[0].train_err, rep.arms[1].trace.records[0].train_err);
    EXPECT_EQ(rep.arms[0].trace.records[0].test_err, rep.arms[1].trace.records[0].test_err);
    EXPECT_EQ(rep.arms[1].final.mu, 0.0);
  }
  EXPECT_EQ(result.replications[2].seed, 13u);
}

TEST(Experiment, ZeroIterationsGivesInitMetrics) {
  auto spec = small_spec();
  spec.replications = 1;
  spec.max_iters = 0;
  const auto result = run_experiment(spec);
  for (const auto& row : result.summary) {
    EXPECT_EQ(row.iter, 0);
    EXPECT_EQ(row.std, 0.0);
    if (row.metric == "train_err" || row.metric == "test_err") {
      EXPECT_DOUBLE_EQ(row.mean, 1.0);
    }
  }
  // corr is undefined at theta = 0.
  EXPECT_TRUE(std::none_of(result.summary.begin(), result.summary.end(),
                           [](const SummaryRow& r) { return r.metric == "corr"; }));
}

TEST(Experiment, ByteIdenticalAcrossRunsAndThreadCounts) {
  auto spec = small_spec();
  spec.checks = {"rho", "spectral", "clip"};
  const auto a = scratch("det_a"), b = scratch("det_b");
  const auto files_a = emit_outputs(run_experiment(spec, 1), a);
  emit_outputs(run_experiment(spec, 3), b);
  for (const auto& f : files_a) EXPECT_EQ(slurp(f), slurp(b / f.filename())) << f.filename();
}

TEST(Experiment, OutputsForTwoArms) {
  auto spec = small_spec();
  const auto dir = scratch("outputs");
  const auto files = emit_outputs(run_experiment(spec), dir);
  int svgs = 0;
  for (const auto& f : files) {
    if (f.extension() != ".svg") continue;
    ++svgs;
    const std::string svg = slurp(f);
    EXPECT_EQ(count(svg, "class=\"band\""), 2u) << f;
    EXPECT_EQ(count(svg, "class=\"reference\""), 1u) << f;
    EXPECT_NE(svg.find("iteration"), std::string::npos);
  }
  EXPECT_EQ(svgs, 4);  // est_err, train_err, test_err, corr
  EXPECT_EQ(slurp(dir / "theory.csv"), "quantity,n,p,s,dist,seed,measured,bound,satisfied\n");
  const std::string summary = slurp(dir / "summary.csv");
  EXPECT_EQ(summary.rfind("iter,arm,metric,mean,std\n", 0), 0u);
  const std::string manifest = slurp(dir / "manifest.ini");
  EXPECT_NE(manifest.find("[replication_2]"), std::string::npos);
  EXPECT_NE(manifest.find("design_seed="), std::string::npos);
}

TEST(Experiment, SingleReplicationHasZeroStd) {
  auto spec = small_spec();
  spec.replications = 1;
  const auto result = run_experiment(spec);
  for (const auto& row : result.summary) EXPECT_EQ(row.std, 0.0);
}

TEST(Experiment, SingleArmAndChecks) {
  auto spec = small_spec();
  spec.fit_bias = BiasMode::On;
  spec.checks = known_checks();
  const auto result = run_experiment(spec);
  EXPECT_EQ(result.arm_names(), (std::vector<std::string>{"with_bias"}));
  EXPECT_EQ(result.reports.size(), 3u * known_checks().size());
  std::ostringstream os;
  write_theory_csv(os, result.reports);
  EXPECT_EQ(count(os.str(), "\n"), 1u + result.reports.size());
}

TEST(Experiment, DivergedReplicationsAreRecorded) {
  auto spec = small_spec();
  spec.eta = FixedEta{5.0};
  spec.constraint = "none";
  const auto result = run_experiment(spec);
  for (const auto& rep : result.replications)
    for (const auto& a : rep.arms) EXPECT_TRUE(a.diverged.has_value());
  EXPECT_TRUE(result.summary.empty());
  std::ostringstream os;
  write_manifest(os, result);
  EXPECT_NE(os.str().find("with_bias_diverged"), std::string::npos);
}

TEST(Experiment, UnwritableOutputRaises) {
  const auto dir = scratch("blocked");
  std::ofstream(dir / "file") << "x";
  auto spec = small_spec();
  spec.replications = 1;
  EXPECT_THROW(emit_outputs(run_experiment(spec), dir / "file" / "sub"), IoError);
}

TEST(Scaling, SingletonMatchesExperiment) {
  auto spec = small_spec();
  const auto scaling = run_scaling_study(spec, {spec.n});
  const auto direct = run_experiment(spec);
  ASSERT_EQ(scaling.runs.size(), 1u);
  std::ostringstream a, b;
  write_summary_csv(a, scaling.runs[0].summary);
  write_summary_csv(b, direct.summary);
  EXPECT_EQ(a.str(), b.str());
  ASSERT_EQ(scaling.rows.size(), 2u);
  EXPECT_EQ(scaling.rows[0].median_est_err, median(direct.finals("with_bias", "est_err")));
}

#ifdef BLM_CLI_PATH
namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(BLM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}
}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli("width --p 50 --s 3 --n-mc 100"), 0);
  EXPECT_EQ(run_cli("--frobnicate"), 1);
  std::ofstream(dir / "bad.ini") << "[data]\nn = -3\n";
  EXPECT_EQ(run_cli("experiment " + (dir / "bad.ini").string()), 1);
  std::ofstream(dir / "ok.ini") << "[data]\nn = 30\np = 40\ns = 2\n[solver]\nmax_iters = 5\n"
                                   "[run]\nreplications = 2\nblm_samples = 10000\n";
  EXPECT_EQ(run_cli("--output-dir " + (dir / "out").string() + " experiment " + (dir / "ok.ini").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.csv"));
  EXPECT_EQ(run_cli("--output-dir " + (dir / "syn").string() + " synth --n 20 --p 5 --s 2"), 0);
  EXPECT_EQ(run_cli("fit --data " + (dir / "syn" / "train.csv").string() + " --constraint sparsity:2 --trace " +
                    (dir / "trace.jsonl").string()),
            0);
  EXPECT_NE(slurp(dir / "trace.jsonl").find("\"est_err\":null"), std::string::npos);
  EXPECT_EQ(run_cli("fit --data " + (dir / "missing.csv").string()), 2);
  // With n far below 2s + 1 the restricted minimum gain is zero, so the
  // RSV check fails and the command reports it.
  std::ofstream(dir / "check.ini") << "[data]\nn = 10\np = 400\ns = 20\n"
                                      "[run]\nreplications = 1\nblm_samples = 10000\nchecks = rsv\n";
  EXPECT_EQ(run_cli("--output-dir " + (dir / "chk").string() + " check " + (dir / "check.ini").string()), 3);
}
#endif
