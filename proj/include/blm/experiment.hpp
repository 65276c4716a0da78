#pragma once

// Replicated synthetic experiments: config parsing, paired with/without-bias
// runs on identical data, per-iteration aggregation, theory checks, and the
// CSV / SVG / manifest writers.

#include "blm/diagnostics.hpp"
#include "blm/io.hpp"
#include "blm/pgd.hpp"
#include "blm/svg.hpp"
#include "blm/synth.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace blm {

enum class BiasMode { Both, On, Off };

inline std::string bias_mode_name(BiasMode m) {
  switch (m) {
    case BiasMode::Both: return "both";
    case BiasMode::On: return "true";
    case BiasMode::Off: return "false";
  }
  return "both";
}

inline BiasMode parse_bias_mode(const std::string& s) {
  if (s == "both") return BiasMode::Both;
  if (s == "true" || s == "on" || s == "yes") return BiasMode::On;
  if (s == "false" || s == "off" || s == "no") return BiasMode::Off;
  throw InvalidArgument("fit_bias must be both, true or false (got '" + s + "')");
}

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"rho", "nu", "rsv", "spectral",
                                                 "clip", "clip_bias", "width"};
  return names;
}

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"est_err", "train_err", "test_err", "corr"};
  return names;
}

struct ExperimentSpec {
  std::string name = "experiment";
  Index n = 500;
  Index p = 800;
  Index s = 20;
  Distribution dist = Distribution::Gaussian;
  LinkFunction link{LinkKind::Relu, 0.0};
  std::string constraint = "sparsity";  // sparsity | none
  EtaPolicy eta = OneOverFiveN{};
  Index max_iters = 300;
  double tol = 0.0;
  BiasMode fit_bias = BiasMode::Both;
  Index replications = 10;
  std::uint64_t base_seed = 0;
  Index blm_samples = 1000000;
  Index check_dirs = 20;
  std::vector<std::string> checks;
  std::string output_dir = "out";
};

inline void validate(const ExperimentSpec& spec) {
  require(spec.n >= 1 && spec.p >= 1, "n and p must be positive");
  require(spec.s >= 1 && spec.s <= spec.p, "need 1 <= s <= p");
  require(spec.constraint == "sparsity" || spec.constraint == "none",
          "constraint must be sparsity or none");
  require(spec.max_iters >= 0, "max_iters must be nonnegative");
  require(spec.tol >= 0.0, "tol must be nonnegative");
  require(spec.replications >= 1, "replications must be positive");
  require(spec.blm_samples >= 10000, "blm_samples must be at least 10000");
  require(spec.check_dirs >= 1, "check_dirs must be positive");
  require(spec.link.noise_std >= 0.0 && std::isfinite(spec.link.noise_std),
          "noise_std must be a nonnegative number");
  for (const auto& c : spec.checks)
    require(std::find(known_checks().begin(), known_checks().end(), c) != known_checks().end(),
            "unknown check '" + c + "'");
  require(spec.base_seed <= std::numeric_limits<std::uint64_t>::max() -
                                static_cast<std::uint64_t>(spec.replications),
          "base_seed + replications overflows");
}

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const std::string t = trim(text);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw InvalidArgument("bad value '" + text + "' for " + key);
  return v;
}

inline std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split(text, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

/// INI layout:
///   name = ...
///   [data]   n, p, s, dist, link, noise_std
///   [solver] constraint, eta, max_iters, tol, fit_bias
///   [run]    replications, base_seed, blm_samples, check_dirs, checks, output_dir
inline ExperimentSpec parse_spec(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config: " + e.message(), e.line());
  }
  ExperimentSpec spec;
  using detail::parse_number;
  const std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"name", [&](const std::string& v) { spec.name = v; }},
      {"data.n", [&](const std::string& v) { spec.n = parse_number<Index>("data.n", v); }},
      {"data.p", [&](const std::string& v) { spec.p = parse_number<Index>("data.p", v); }},
      {"data.s", [&](const std::string& v) { spec.s = parse_number<Index>("data.s", v); }},
      {"data.dist", [&](const std::string& v) { spec.dist = parse_distribution(v); }},
      {"data.link", [&](const std::string& v) { spec.link.kind = parse_link(v); }},
      {"data.noise_std",
       [&](const std::string& v) { spec.link.noise_std = parse_number<double>("data.noise_std", v); }},
      {"solver.constraint", [&](const std::string& v) { spec.constraint = v; }},
      {"solver.eta", [&](const std::string& v) { spec.eta = parse_eta(v); }},
      {"solver.max_iters",
       [&](const std::string& v) { spec.max_iters = parse_number<Index>("solver.max_iters", v); }},
      {"solver.tol", [&](const std::string& v) { spec.tol = parse_number<double>("solver.tol", v); }},
      {"solver.fit_bias", [&](const std::string& v) { spec.fit_bias = parse_bias_mode(v); }},
      {"run.replications",
       [&](const std::string& v) { spec.replications = parse_number<Index>("run.replications", v); }},
      {"run.base_seed",
       [&](const std::string& v) { spec.base_seed = parse_number<std::uint64_t>("run.base_seed", v); }},
      {"run.blm_samples",
       [&](const std::string& v) { spec.blm_samples = parse_number<Index>("run.blm_samples", v); }},
      {"run.check_dirs",
       [&](const std::string& v) { spec.check_dirs = parse_number<Index>("run.check_dirs", v); }},
      {"run.checks", [&](const std::string& v) { spec.checks = detail::parse_list(v); }},
      {"run.output_dir", [&](const std::string& v) { spec.output_dir = v; }},
  };
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      auto it = setters.find(key);
      if (it == setters.end()) throw InvalidArgument("unknown config key '" + key + "'");
      it->second(node.data());
      continue;
    }
    for (const auto& [sub, leaf] : node) {
      const std::string full = key + "." + sub;
      auto it = setters.find(full);
      if (it == setters.end()) throw InvalidArgument("unknown config key '" + full + "'");
      it->second(leaf.data());
    }
  }
  validate(spec);
  return spec;
}

inline ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config " + path.string());
  return parse_spec(is);
}

inline boost::property_tree::ptree spec_tree(const ExperimentSpec& spec) {
  boost::property_tree::ptree t;
  t.put("name", spec.name);
  t.put("data.n", spec.n);
  t.put("data.p", spec.p);
  t.put("data.s", spec.s);
  t.put("data.dist", distribution_name(spec.dist));
  t.put("data.link", link_name(spec.link.kind));
  t.put("data.noise_std", format_double(spec.link.noise_std));
  t.put("solver.constraint", spec.constraint);
  t.put("solver.eta", eta_name(spec.eta));
  t.put("solver.max_iters", spec.max_iters);
  t.put("solver.tol", format_double(spec.tol));
  t.put("solver.fit_bias", bias_mode_name(spec.fit_bias));
  t.put("run.replications", spec.replications);
  t.put("run.base_seed", spec.base_seed);
  t.put("run.blm_samples", spec.blm_samples);
  t.put("run.check_dirs", spec.check_dirs);
  std::string checks;
  for (const auto& c : spec.checks) checks += (checks.empty() ? "" : ",") + c;
  t.put("run.checks", checks);
  t.put("run.output_dir", spec.output_dir);
  return t;
}

inline std::uint64_t replication_seed(const ExperimentSpec& spec, Index r) {
  return spec.base_seed + static_cast<std::uint64_t>(r);
}

struct ArmRun {
  std::string arm;  // with_bias | no_bias
  bool fit_bias = true;
  IterateTrace trace;
  ModelParams final;
  std::optional<std::string> diverged;
};

struct ReplicationResult {
  Index replication = 0;
  std::uint64_t seed = 0;
  std::vector<ArmRun> arms;
  double gamma = 0.0;
  IterateRecord baseline;  // metrics of the gamma * beta model
  std::vector<TheoryReport> reports;
};

struct SummaryRow {
  Index iter;
  std::string arm;
  std::string metric;
  double mean;
  double std;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<ReplicationResult> replications;
  std::vector<SummaryRow> summary;
  std::map<std::string, MetricSeries> baseline;  // per metric, over replications
  std::vector<TheoryReport> reports;
  std::map<std::string, double> phase_seconds;  // never written to disk

  std::vector<std::string> arm_names() const {
    std::vector<std::string> out;
    if (!replications.empty())
      for (const auto& a : replications.front().arms) out.push_back(a.arm);
    return out;
  }

  /// Final-iterate values of one metric for one arm, skipping diverged or
  /// absent entries.
  std::vector<double> finals(const std::string& arm, const std::string& metric) const;
};

namespace detail {

inline std::optional<double> metric_value(const IterateRecord& r, const std::string& metric) {
  if (metric == "est_err") return r.est_err;
  if (metric == "train_err") return r.train_err;
  if (metric == "test_err") return r.test_err;
  if (metric == "corr") return r.corr;
  if (metric == "displacement") return r.displacement;
  throw InvalidArgument("unknown metric '" + metric + "'");
}

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Exceptions are
/// rethrown for the lowest failing index.
inline void parallel_for(Index count, Index jobs, const std::function<void(Index)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<Index> next{0};
  auto worker = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (Index t = 0; t < std::min(jobs, count); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int orlicz_index(Distribution d) { return d == Distribution::Gaussian ? 2 : 1; }

}  // namespace detail

inline std::vector<double> ExperimentResult::finals(const std::string& arm,
                                                    const std::string& metric) const {
  std::vector<double> out;
  for (const auto& rep : replications)
    for (const auto& a : rep.arms) {
      if (a.arm != arm || a.diverged || a.trace.records.empty()) continue;
      if (auto v = detail::metric_value(a.trace.final(), metric)) out.push_back(*v);
    }
  return out;
}

/// Theory battery on one dataset. Sparsity experiments use the
/// DoubledSparsity relaxation anchored at theta*; unconstrained ones the
/// full ball.
inline std::vector<TheoryReport> run_checks(const ExperimentSpec& spec, const SyntheticDataset& ds,
                                            const PopulationBlm& blm, std::uint64_t seed) {
  std::vector<TheoryReport> out;
  if (spec.checks.empty()) return out;
  const bool sparse = spec.constraint == "sparsity";
  const ConstraintSpec K =
      sparse ? ConstraintSpec::sparsity(ds.p(), spec.s) : ConstraintSpec::unconstrained(ds.p());
  const TangentBallSpec T(K, project(blm.theta_star, K),
                          sparse ? Relaxation::DoubledSparsity : Relaxation::FullBall);
  const int a = detail::orlicz_index(ds.dist);
  const Vector w = residual_vector(ds, blm);
  const double sigma = orlicz_norm_estimate(w, a);
  const std::uint64_t check_seed = derive_seed(seed, Stream::Checks);
  const double eta = resolve_eta(spec.eta, ds.n(), ds.p());

  for (const auto& name : known_checks()) {
    if (std::find(spec.checks.begin(), spec.checks.end(), name) == spec.checks.end()) continue;
    if (name == "rho") {
      out.push_back(rho_check(ds.X, T, eta, spec.check_dirs, check_seed));
    } else if (name == "nu") {
      out.push_back(nu_check(ds.X, w, T, sigma, a));
    } else if (name == "rsv") {
      out.push_back(rsv_lower_check(ds.X, T, spec.check_dirs, check_seed));
    } else if (name == "spectral") {
      out.push_back(spectral_chernoff_check(ds.X));
    } else if (name == "clip") {
      out.push_back(clip_check(w, sigma, a));
    } else if (name == "clip_bias") {
      out.push_back(clip_bias_check(ds.dist, ds.link, ds.beta, blm, sigma, clip_level(ds.n(), a),
                                    spec.blm_samples, check_seed));
    } else if (name == "width") {
      auto reps = empirical_width_check(ds.dist, T, ds.n(), 1, check_seed);
      out.insert(out.end(), reps.begin(), reps.end());
    }
  }
  for (auto& r : out) {
    r.n = ds.n();
    r.p = ds.p();
    r.s = spec.s;
    r.dist = distribution_name(ds.dist);
    r.seed = seed;
    if (r.relaxation.empty()) r.relaxation = relaxation_name(T.relaxation());
  }
  return out;
}

inline ReplicationResult run_replication(const ExperimentSpec& spec, Index r) {
  ReplicationResult out;
  out.replication = r;
  out.seed = replication_seed(spec, r);
  const SyntheticDataset ds = make_dataset(spec.n, spec.p, spec.s, spec.dist, spec.link, out.seed);
  const SyntheticDataset test = make_test_set(ds, spec.n);
  const PopulationBlm blm = population_blm(ds.beta, spec.dist, spec.link, spec.blm_samples,
                                           derive_seed(out.seed, Stream::Population));
  const FitOracle oracle{blm.theta_star, blm.mu_star, ds.beta};
  const HeldOut held{test.X, test.y};

  std::vector<std::pair<std::string, bool>> arms;
  if (spec.fit_bias != BiasMode::Off) arms.emplace_back("with_bias", true);
  if (spec.fit_bias != BiasMode::On) arms.emplace_back("no_bias", false);
  for (const auto& [arm, bias] : arms) {
    PgdConfig config{spec.constraint == "sparsity" ? ConstraintSpec::sparsity(spec.p, spec.s)
                                                   : ConstraintSpec::unconstrained(spec.p)};
    config.eta = spec.eta;
    config.max_iters = spec.max_iters;
    config.tol = spec.tol;
    config.fit_bias = bias;
    ArmRun run;
    run.arm = arm;
    run.fit_bias = bias;
    try {
      auto fit = pgd_fit(ds.X, ds.y, config, oracle, held);
      run.trace = std::move(fit.trace);
      run.final = std::move(fit.params);
    } catch (const DivergedError& e) {
      run.trace = e.trace();
      run.diverged = e.what();
    }
    out.arms.push_back(std::move(run));
  }

  try {
    const auto base = gamma_baseline(ds.X, ds.y, ds.beta);
    out.gamma = base.gamma;
    const ModelParams model{base.gamma * ds.beta, base.intercept};
    out.baseline = make_record(0, model, ds.X, ds.y, oracle, held);
  } catch (const UndefinedMetric&) {
    out.gamma = std::numeric_limits<double>::quiet_NaN();
  }
  out.reports = run_checks(spec, ds, blm, out.seed);
  return out;
}

/// Per-iteration mean/std over replications. A trace that stopped early
/// contributes its last record to later iterations; diverged runs are
/// excluded.
inline std::vector<SummaryRow> aggregate(const std::vector<ReplicationResult>& reps) {
  std::vector<SummaryRow> rows;
  if (reps.empty()) return rows;
  for (std::size_t k = 0; k < reps.front().arms.size(); ++k) {
    const std::string arm = reps.front().arms[k].arm;
    std::vector<const IterateTrace*> traces;
    std::size_t len = 0;
    for (const auto& rep : reps) {
      const auto& a = rep.arms[k];
      if (a.diverged || a.trace.records.empty()) continue;
      traces.push_back(&a.trace);
      len = std::max(len, a.trace.size());
    }
    for (const auto& metric : metric_names()) {
      std::vector<SummaryRow> block;
      for (std::size_t it = 0; it < len; ++it) {
        std::vector<double> values;
        for (const auto* t : traces) {
          const auto& rec = t->records[std::min(it, t->size() - 1)];
          if (auto v = detail::metric_value(rec, metric)) values.push_back(*v);
        }
        if (values.empty()) continue;
        const auto m = summarize(metric, std::move(values));
        block.push_back({static_cast<Index>(it), arm, metric, m.mean, m.std});
      }
      rows.insert(rows.end(), block.begin(), block.end());
    }
  }
  return rows;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec, Index jobs = 1) {
  validate(spec);
  using clock = std::chrono::steady_clock;
  ExperimentResult result;
  result.spec = spec;
  result.replications.resize(static_cast<std::size_t>(spec.replications));
  const auto t0 = clock::now();
  detail::parallel_for(spec.replications, jobs, [&](Index r) {
    result.replications[static_cast<std::size_t>(r)] = run_replication(spec, r);
  });
  const auto t1 = clock::now();
  result.summary = aggregate(result.replications);
  for (const auto& metric : metric_names()) {
    std::vector<double> values;
    for (const auto& rep : result.replications)
      if (auto v = detail::metric_value(rep.baseline, metric)) values.push_back(*v);
    if (!values.empty()) result.baseline[metric] = summarize(metric, std::move(values));
  }
  for (const auto& rep : result.replications)
    result.reports.insert(result.reports.end(), rep.reports.begin(), rep.reports.end());
  const auto t2 = clock::now();
  result.phase_seconds["replications"] = std::chrono::duration<double>(t1 - t0).count();
  result.phase_seconds["aggregate"] = std::chrono::duration<double>(t2 - t1).count();
  return result;
}

inline void write_theory_csv(std::ostream& os, const std::vector<TheoryReport>& reports) {
  write_theory_csv_header(os);
  for (const auto& r : reports)
    os << quantity_name(r.quantity) << ',' << r.n << ',' << r.p << ',' << r.s << ',' << r.dist << ','
       << r.seed << ',' << format_double(r.measured) << ',' << format_double(r.bound) << ','
       << (r.satisfied ? "true" : "false") << '\n';
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "iter,arm,metric,mean,std\n";
  for (const auto& r : rows)
    os << r.iter << ',' << r.arm << ',' << r.metric << ',' << format_double(r.mean) << ','
       << format_double(r.std) << '\n';
}

inline void write_replications_csv(std::ostream& os, const ExperimentResult& result) {
  os << "replication,seed,arm,iterations,diverged,est_err,train_err,test_err,corr\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& rep : result.replications) {
    for (const auto& a : rep.arms) {
      const IterateRecord last = a.trace.records.empty() ? IterateRecord{} : a.trace.final();
      os << rep.replication << ',' << rep.seed << ',' << a.arm << ','
         << (a.trace.records.empty() ? 0 : a.trace.size() - 1) << ','
         << (a.diverged ? "true" : "false") << ',' << cell(last.est_err) << ','
         << cell(last.train_err) << ',' << cell(last.test_err) << ',' << cell(last.corr) << '\n';
    }
    os << rep.replication << ',' << rep.seed << ",gamma_beta,0,false," << cell(rep.baseline.est_err)
       << ',' << cell(rep.baseline.train_err) << ',' << cell(rep.baseline.test_err) << ','
       << cell(rep.baseline.corr) << '\n';
  }
}

/// Config echo plus every seed the run derived, so each random draw can be
/// reproduced from this file alone.
inline void write_manifest(std::ostream& os, const ExperimentResult& result) {
  namespace pt = boost::property_tree;
  pt::ptree tree = spec_tree(result.spec);
  for (const auto& rep : result.replications) {
    const std::string sec = "replication_" + std::to_string(rep.replication);
    tree.put(sec + ".seed", rep.seed);
    for (Stream s : {Stream::Beta, Stream::Design, Stream::LabelNoise, Stream::TestDesign,
                     Stream::TestNoise, Stream::Population, Stream::Checks})
      tree.put(sec + "." + std::string(stream_name(s)) + "_seed", derive_seed(rep.seed, s));
    for (const auto& a : rep.arms)
      if (a.diverged) tree.put(sec + "." + a.arm + "_diverged", *a.diverged);
  }
  pt::write_ini(os, tree);
}

inline ChartSpec metric_chart(const ExperimentResult& result, const std::string& metric) {
  ChartSpec chart;
  chart.title = result.spec.name + ": " + metric;
  chart.y_label = metric;
  for (const auto& arm : result.arm_names()) {
    BandSeries s;
    s.label = arm == "with_bias" ? "[X 1] (with bias)" : "X only";
    for (const auto& row : result.summary) {
      if (row.arm != arm || row.metric != metric) continue;
      s.x.push_back(static_cast<double>(row.iter));
      s.mean.push_back(row.mean);
      s.std.push_back(row.std);
    }
    if (!s.x.empty()) chart.series.push_back(std::move(s));
  }
  if (auto it = result.baseline.find(metric); it != result.baseline.end())
    chart.references.push_back({"gamma * beta baseline", it->second.mean});
  return chart;
}

/// Writes summary.csv, replications.csv, theory.csv, one SVG per metric
/// present in the summary, and manifest.ini. Returns the written paths.
inline std::vector<std::filesystem::path> emit_outputs(const ExperimentResult& result,
                                                       const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& path, const auto& fn) {
    auto os = open_output(path);
    fn(os);
    check_written(os, path);
    written.push_back(path);
  };
  emit(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, result.summary); });
  emit(dir / "replications.csv", [&](std::ostream& os) { write_replications_csv(os, result); });
  emit(dir / "theory.csv", [&](std::ostream& os) { write_theory_csv(os, result.reports); });
  for (const auto& metric : metric_names()) {
    const bool present = std::any_of(result.summary.begin(), result.summary.end(),
                                     [&](const SummaryRow& r) { return r.metric == metric; });
    if (!present) continue;
    emit(dir / (metric + ".svg"),
         [&](std::ostream& os) { write_svg(os, metric_chart(result, metric)); });
  }
  emit(dir / "manifest.ini", [&](std::ostream& os) { write_manifest(os, result); });
  return written;
}

struct ScalingRow {
  Index n;
  std::string arm;
  double median_est_err;
  double median_corr;
  Index runs;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
  std::vector<ExperimentResult> runs;
};

/// One experiment per n with the same base seed; rows hold medians of the
/// final estimation error and correlation per arm.
inline ScalingResult run_scaling_study(const ExperimentSpec& spec, const std::vector<Index>& n_values,
                                       Index jobs = 1) {
  require(!n_values.empty(), "scaling: empty n list");
  ScalingResult out;
  for (Index n : n_values) {
    ExperimentSpec sub = spec;
    sub.n = n;
    auto result = run_experiment(sub, jobs);
    for (const auto& arm : result.arm_names()) {
      auto errs = result.finals(arm, "est_err");
      auto corrs = result.finals(arm, "corr");
      out.rows.push_back({n, arm, errs.empty() ? std::nan("") : median(errs),
                          corrs.empty() ? std::nan("") : median(corrs),
                          static_cast<Index>(errs.size())});
    }
    out.runs.push_back(std::move(result));
  }
  return out;
}

inline void write_scaling_csv(std::ostream& os, const ScalingResult& result) {
  os << "n,arm,median_est_err,median_corr,runs\n";
  for (const auto& r : result.rows)
    os << r.n << ',' << r.arm << ',' << format_double(r.median_est_err) << ','
       << format_double(r.median_corr) << ',' << r.runs << '\n';
}

}  // namespace blm
