// blm: command-line harness for the PGD best-linear-model library.
//
// Exit codes: 0 success, 1 invalid config or arguments, 2 runtime or numeric
// failure, 3 a theory check came out unsatisfied (check subcommand).

#include "blm/experiment.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kCheckFailed = 3 };

struct DataOptions {
  blm::Index n = 500;
  blm::Index p = 800;
  blm::Index s = 20;
  std::string dist = "gaussian";
  std::string link = "relu";
  double noise_std = 0.0;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--n", d.n, "sample size")->capture_default_str();
  cmd->add_option("--p", d.p, "dimension")->capture_default_str();
  cmd->add_option("--s", d.s, "sparsity of beta")->capture_default_str();
  cmd->add_option("--dist", d.dist, "gaussian | exponential")->capture_default_str();
  cmd->add_option("--link", d.link, "linear | sign | relu")->capture_default_str();
  cmd->add_option("--noise-std", d.noise_std, "additive Gaussian label noise")->capture_default_str();
}

blm::ConstraintSpec parse_constraint(const std::string& text, blm::Index p) {
  if (text == "none") return blm::ConstraintSpec::unconstrained(p);
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "sparsity" && !arg.empty())
    return blm::ConstraintSpec::sparsity(p, blm::detail::parse_number<blm::Index>("constraint", arg));
  if (kind == "l1" && !arg.empty())
    return blm::ConstraintSpec::l1_ball(p, blm::detail::parse_number<double>("constraint", arg));
  if (kind == "lowrank" && !arg.empty()) {
    // lowrank:r:rows
    const auto parts = blm::split(arg, ':');
    if (parts.size() == 2) {
      const auto r = blm::detail::parse_number<blm::Index>("constraint", parts[0]);
      const auto rows = blm::detail::parse_number<blm::Index>("constraint", parts[1]);
      blm::require(rows >= 1 && p % rows == 0, "lowrank rows must divide p");
      return blm::ConstraintSpec::low_rank(rows, p / rows, r);
    }
  }
  throw blm::InvalidArgument("constraint must be none, sparsity:S, l1:R or lowrank:R:ROWS (got '" +
                             text + "')");
}

std::vector<blm::Index> parse_n_list(const std::string& text) {
  std::vector<blm::Index> out;
  for (const auto& item : blm::split(text, ','))
    out.push_back(blm::detail::parse_number<blm::Index>("--n-values", item));
  blm::require(!out.empty(), "--n-values is empty");
  return out;
}

void print_timings(const blm::ExperimentResult& r) {
  for (const auto& [phase, sec] : r.phase_seconds)
    std::cerr << "  " << phase << ": " << std::fixed << std::setprecision(2) << sec << " s\n";
}

int cmd_synth(const DataOptions& d, std::uint64_t seed, const std::string& out_dir, bool with_test) {
  const auto link = blm::LinkFunction{blm::parse_link(d.link), d.noise_std};
  const auto ds = blm::make_dataset(d.n, d.p, d.s, blm::parse_distribution(d.dist), link, seed);
  const std::filesystem::path dir(out_dir);
  blm::export_dataset(dir / "train.csv", ds);
  if (with_test) blm::export_dataset(dir / "test.csv", blm::make_test_set(ds, d.n));
  std::cout << "wrote " << (dir / "train.csv").string() << " (n=" << ds.n() << ", p=" << ds.p()
            << ")\n";
  return kOk;
}

struct FitOptions {
  std::string data;
  std::string test;
  std::string constraint = "sparsity:20";
  std::string eta = "one_over_five_n";
  blm::Index max_iters = 300;
  double tol = 0.0;
  bool no_bias = false;
  std::string trace;
  blm::Index blm_samples = 1000000;
};

int cmd_fit(const FitOptions& f, const DataOptions& d, std::uint64_t seed) {
  blm::Matrix X, Xt;
  blm::Vector y, yt;
  std::optional<blm::FitOracle> oracle;
  if (!f.data.empty()) {
    auto data = blm::ingest_csv(f.data);
    X = std::move(data.X);
    y = std::move(data.y);
    if (!f.test.empty()) {
      auto t = blm::ingest_csv(f.test);
      Xt = std::move(t.X);
      yt = std::move(t.y);
    }
  } else {
    const auto dist = blm::parse_distribution(d.dist);
    const auto link = blm::LinkFunction{blm::parse_link(d.link), d.noise_std};
    auto ds = blm::make_dataset(d.n, d.p, d.s, dist, link, seed);
    auto test = blm::make_test_set(ds, d.n);
    const auto pop = blm::population_blm(ds.beta, dist, link, f.blm_samples,
                                         blm::derive_seed(seed, blm::Stream::Population));
    oracle = blm::FitOracle{pop.theta_star, pop.mu_star, ds.beta};
    X = std::move(ds.X);
    y = std::move(ds.y);
    Xt = std::move(test.X);
    yt = std::move(test.y);
  }
  blm::PgdConfig config{parse_constraint(f.constraint, X.cols())};
  config.eta = blm::parse_eta(f.eta);
  config.max_iters = f.max_iters;
  config.tol = f.tol;
  config.fit_bias = !f.no_bias;
  std::optional<blm::HeldOut> held;
  if (Xt.size() > 0) held.emplace(blm::HeldOut{Xt, yt});

  auto fit = blm::pgd_fit(X, y, config, oracle, held);
  if (!f.trace.empty()) {
    auto os = blm::open_output(f.trace);
    blm::write_trace_jsonl(os, fit.trace);
    blm::check_written(os, f.trace);
  }
  const auto& last = fit.trace.final();
  std::cout << "iterations: " << last.iter << "\nmu: " << blm::format_double(fit.params.mu)
            << "\nnonzeros: " << (fit.params.theta.array() != 0.0).count() << '\n';
  auto show = [](const char* name, const std::optional<double>& v) {
    std::cout << name << ": " << (v ? blm::format_double(*v) : "null") << '\n';
  };
  show("train_err", last.train_err);
  show("test_err", last.test_err);
  show("est_err", last.est_err);
  show("corr", last.corr);
  return kOk;
}

blm::ExperimentSpec load_spec_with_overrides(const std::string& config,
                                             const std::optional<std::uint64_t>& seed,
                                             const std::string& out_dir) {
  blm::ExperimentSpec spec = config.empty() ? blm::ExperimentSpec{} : blm::load_spec(config);
  if (seed) spec.base_seed = *seed;
  if (!out_dir.empty()) spec.output_dir = out_dir;
  blm::validate(spec);
  return spec;
}

int cmd_experiment(const blm::ExperimentSpec& spec, blm::Index jobs) {
  const auto result = blm::run_experiment(spec, jobs);
  const auto files = blm::emit_outputs(result, spec.output_dir);
  std::cout << "experiment '" << spec.name << "': " << spec.replications << " replications, "
            << files.size() << " files in " << spec.output_dir << '\n';
  for (const auto& arm : result.arm_names()) {
    const auto te = result.finals(arm, "test_err");
    const auto co = result.finals(arm, "corr");
    std::cout << "  " << arm << ": final test_err mean "
              << (te.empty() ? "n/a" : blm::format_double(blm::summarize("", te).mean))
              << ", corr mean "
              << (co.empty() ? "n/a" : blm::format_double(blm::summarize("", co).mean)) << '\n';
  }
  print_timings(result);
  return kOk;
}

int cmd_scaling(const blm::ExperimentSpec& spec, const std::string& n_values, blm::Index jobs) {
  const auto result = blm::run_scaling_study(spec, parse_n_list(n_values), jobs);
  const std::filesystem::path dir(spec.output_dir);
  for (const auto& run : result.runs)
    blm::emit_outputs(run, dir / ("n_" + std::to_string(run.spec.n)));
  auto os = blm::open_output(dir / "scaling.csv");
  blm::write_scaling_csv(os, result);
  blm::check_written(os, dir / "scaling.csv");
  blm::write_scaling_csv(std::cout, result);
  return kOk;
}

int cmd_check(blm::ExperimentSpec spec, blm::Index jobs) {
  if (spec.checks.empty()) spec.checks = blm::known_checks();
  spec.max_iters = 0;
  const auto result = blm::run_experiment(spec, jobs);
  const std::filesystem::path path = std::filesystem::path(spec.output_dir) / "theory.csv";
  auto os = blm::open_output(path);
  blm::write_theory_csv(os, result.reports);
  blm::check_written(os, path);
  std::size_t failed = 0;
  for (const auto& r : result.reports) {
    std::cout << (r.satisfied ? "ok   " : "FAIL ") << std::setw(16) << std::left
              << blm::quantity_name(r.quantity) << " seed=" << r.seed
              << " measured=" << blm::format_double(r.measured)
              << " bound=" << blm::format_double(r.bound) << "  [" << r.bound_formula << "]";
    if (!r.note.empty()) std::cout << "  (" << r.note << ")";
    std::cout << '\n';
    if (!r.satisfied) ++failed;
  }
  std::cout << failed << " of " << result.reports.size() << " checks unsatisfied\n";
  return failed ? kCheckFailed : kOk;
}

int cmd_width(blm::Index p, blm::Index s, blm::Index n_mc, std::uint64_t seed) {
  const blm::Vector anchor = blm::Vector::Zero(p);
  const blm::TangentBallSpec full(blm::ConstraintSpec::unconstrained(p), anchor,
                                  blm::Relaxation::FullBall);
  const blm::TangentBallSpec sparse(blm::ConstraintSpec::sparsity(p, s), anchor,
                                    blm::Relaxation::DoubledSparsity);
  std::cout << "relaxation,table_width,mc_width,std_error,ratio\n";
  for (const auto* T : {&full, &sparse}) {
    const double table = std::sqrt(T->table_width_sq());
    const auto mc = blm::width_mc(*T, n_mc, seed);
    std::cout << blm::relaxation_name(T->relaxation()) << ',' << blm::format_double(table) << ','
              << blm::format_double(mc.estimate) << ',' << blm::format_double(mc.std_error) << ','
              << blm::format_double(mc.estimate / table) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected gradient descent for the best linear model, with theory checks"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  blm::Index jobs = 1;
  std::string out_dir;
  std::string config;
  app.add_option("--seed", seed, "base seed (overrides the config)");
  app.add_option("--jobs", jobs, "parallel replications")->check(CLI::PositiveNumber);
  app.add_option("--output-dir", out_dir, "output directory (overrides the config)");
  app.add_option("--config", config, "experiment spec file (INI)");

  DataOptions data;
  bool with_test = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset as CSV");
  add_data_options(synth, data);
  synth->add_flag("--with-test", with_test, "also write a fresh test set of the same size");

  FitOptions fit;
  DataOptions fit_data;
  auto* fitc = app.add_subcommand("fit", "single PGD solve; trace as JSON lines");
  fitc->add_option("--data", fit.data, "training CSV (synthesizes one when omitted)");
  fitc->add_option("--test", fit.test, "held-out CSV");
  add_data_options(fitc, fit_data);
  fitc->add_option("--constraint", fit.constraint, "none | sparsity:S | l1:R | lowrank:R:ROWS")
      ->capture_default_str();
  fitc->add_option("--eta", fit.eta, "one_over_n | one_over_five_n | subexponential[:c0] | number")
      ->capture_default_str();
  fitc->add_option("--max-iters", fit.max_iters)->capture_default_str();
  fitc->add_option("--tol", fit.tol)->capture_default_str();
  fitc->add_flag("--no-bias", fit.no_bias, "fit X only (mu stays 0)");
  fitc->add_option("--trace", fit.trace, "write the iterate trace here");
  fitc->add_option("--blm-samples", fit.blm_samples)->capture_default_str();

  auto* exp = app.add_subcommand("experiment", "replicated experiment from a spec file");
  exp->add_option("config_file", config, "spec file (same as --config)");

  std::string n_values = "250,500";
  auto* scaling = app.add_subcommand("scaling", "one experiment per sample size");
  scaling->add_option("config_file", config, "spec file (same as --config)");
  scaling->add_option("--n-values", n_values, "comma-separated sample sizes")->capture_default_str();

  auto* check = app.add_subcommand("check", "theory-check battery; exit 3 on any failure");
  check->add_option("config_file", config, "spec file (same as --config)");

  blm::Index width_p = 800, width_s = 20, width_mc = 20000;
  auto* width = app.add_subcommand("width", "table widths against Monte Carlo");
  width->add_option("--p", width_p)->capture_default_str();
  width->add_option("--s", width_s)->capture_default_str();
  width->add_option("--n-mc", width_mc)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const std::uint64_t s = seed.value_or(0);
    if (synth->parsed()) return cmd_synth(data, s, out_dir.empty() ? "." : out_dir, with_test);
    if (fitc->parsed()) return cmd_fit(fit, fit_data, s);
    if (width->parsed()) return cmd_width(width_p, width_s, width_mc, s);
    const auto spec = load_spec_with_overrides(config, seed, out_dir);
    if (exp->parsed()) return cmd_experiment(spec, jobs);
    if (scaling->parsed()) return cmd_scaling(spec, n_values, jobs);
    if (check->parsed()) return cmd_check(spec, jobs);
  } catch (const blm::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const blm::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
