#pragma once

// Projected gradient descent on the least-squares loss with an optional
// unconstrained bias coordinate:
//
//   [theta; mu] <- P_{K x R}([theta; mu] + eta [X 1]^T (y - [X 1][theta; mu]))
//
// With a sparsity constraint this is iterative hard thresholding.

#include "blm/common.hpp"
#include "blm/metrics.hpp"
#include "blm/model_sets.hpp"

#include <json.hpp>

#include <charconv>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace blm {

struct FixedEta {
  double value;
};
struct OneOverN {};
struct OneOverFiveN {};
/// c0 / ((n + p) ln^3(n + p)), the conservative rate for heavy-tailed designs.
struct SubexponentialEta {
  double c0 = 1.0;
};

using EtaPolicy = std::variant<FixedEta, OneOverN, OneOverFiveN, SubexponentialEta>;

inline double resolve_eta(const EtaPolicy& policy, Index n, Index p) {
  require(n >= 1 && p >= 1, "resolve_eta: n and p must be positive");
  const double nd = static_cast<double>(n);
  return std::visit(
      [&](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, FixedEta>) {
          return e.value;
        } else if constexpr (std::is_same_v<T, OneOverN>) {
          return 1.0 / nd;
        } else if constexpr (std::is_same_v<T, OneOverFiveN>) {
          return 1.0 / (5.0 * nd);
        } else {
          const double q = static_cast<double>(n + p);
          return e.c0 / (q * log_cubed(q));
        }
      },
      policy);
}

inline std::string eta_name(const EtaPolicy& policy) {
  return std::visit(
      [](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, FixedEta>) {
          char buf[32];
          auto res = std::to_chars(buf, buf + sizeof buf, e.value);
          return std::string(buf, res.ptr);
        } else if constexpr (std::is_same_v<T, OneOverN>) {
          return "one_over_n";
        } else if constexpr (std::is_same_v<T, OneOverFiveN>) {
          return "one_over_five_n";
        } else {
          char buf[32];
          auto res = std::to_chars(buf, buf + sizeof buf, e.c0);
          return "subexponential:" + std::string(buf, res.ptr);
        }
      },
      policy);
}

/// Accepts one_over_n (or 1/n), one_over_five_n (or 1/5n),
/// subexponential[:c0], or a positive number.
inline EtaPolicy parse_eta(const std::string& s) {
  if (s == "one_over_n" || s == "1/n") return OneOverN{};
  if (s == "one_over_five_n" || s == "1/5n") return OneOverFiveN{};
  auto parse_positive = [&s](const std::string& text) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !(v > 0.0) ||
        !std::isfinite(v))
      throw InvalidArgument("invalid learning rate '" + s + "'");
    return v;
  };
  const std::string prefix = "subexponential";
  if (s.rfind(prefix, 0) == 0) {
    if (s.size() == prefix.size()) return SubexponentialEta{};
    if (s[prefix.size()] != ':') throw InvalidArgument("invalid learning rate '" + s + "'");
    return SubexponentialEta{parse_positive(s.substr(prefix.size() + 1))};
  }
  return FixedEta{parse_positive(s)};
}

struct PgdConfig {
  explicit PgdConfig(ConstraintSpec c) : constraint(std::move(c)) {}

  ConstraintSpec constraint;
  EtaPolicy eta = OneOverFiveN{};
  Index max_iters = 300;
  double tol = 0.0;  // stop once the iterate moves by at most tol
  bool fit_bias = true;
  std::optional<ModelParams> init;  // zeros when absent
};

struct IterateRecord {
  Index iter = 0;
  std::optional<double> est_err;
  std::optional<double> train_err;
  std::optional<double> test_err;
  std::optional<double> corr;
  std::optional<double> displacement;
};

struct IterateTrace {
  std::vector<IterateRecord> records;

  const IterateRecord& final() const { return records.back(); }
  std::size_t size() const { return records.size(); }
};

/// One JSON object per line with exactly the fields
/// iter, est_err, train_err, test_err, corr, displacement.
inline void write_trace_jsonl(std::ostream& os, const IterateTrace& trace) {
  auto field = [](const std::optional<double>& v) -> nlohmann::json {
    if (v && std::isfinite(*v)) return *v;
    return nullptr;
  };
  for (const auto& r : trace.records) {
    nlohmann::ordered_json j;
    j["iter"] = r.iter;
    j["est_err"] = field(r.est_err);
    j["train_err"] = field(r.train_err);
    j["test_err"] = field(r.test_err);
    j["corr"] = field(r.corr);
    j["displacement"] = field(r.displacement);
    os << j.dump() << '\n';
  }
}

/// The iterate left the finite range, or grew past the divergence cap.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(Index iteration, double norm)
      : std::runtime_error("PGD diverged at iteration " + std::to_string(iteration) +
                           " (pre-projection norm " + std::to_string(norm) + ")"),
        iteration_(iteration),
        norm_(norm) {}

  Index iteration() const noexcept { return iteration_; }
  double norm() const noexcept { return norm_; }
  const IterateTrace& trace() const noexcept { return trace_; }
  void attach(IterateTrace trace, Index iteration) {
    trace_ = std::move(trace);
    iteration_ = iteration;
  }

 private:
  Index iteration_;
  double norm_;
  IterateTrace trace_;
};

/// Ground-truth quantities for the oracle metrics; any may be absent.
struct FitOracle {
  std::optional<Vector> theta_star;
  double mu_star = 0.0;
  std::optional<Vector> beta;
};

struct HeldOut {
  Eigen::Ref<const Matrix> X;
  Eigen::Ref<const Vector> y;
};

struct FitResult {
  ModelParams params;
  IterateTrace trace;
};

namespace detail {

inline ModelParams pgd_step_eta(const ModelParams& cur, const Matrix& X, const Vector& y,
                                const PgdConfig& config, double eta) {
  const Vector resid = (y - X * cur.theta).array() - cur.mu;
  const Vector z = cur.theta + eta * (X.transpose() * resid);
  const double mu = config.fit_bias ? cur.mu + eta * resid.sum() : cur.mu;
  if (!z.allFinite() || !std::isfinite(mu)) {
    const double norm = std::sqrt(z.squaredNorm() + mu * mu);
    throw DivergedError(0, norm);
  }
  auto [theta, mu_out] = project_extended(z, mu, config.constraint);
  return {std::move(theta), mu_out};
}

inline void check_shapes(const Matrix& X, const Vector& y, const PgdConfig& config) {
  require(X.rows() == y.size(), "pgd: X has " + std::to_string(X.rows()) + " rows but y has " +
                                    std::to_string(y.size()) + " entries");
  require(X.cols() == config.constraint.dim(), "pgd: X columns do not match constraint dimension");
  require(X.rows() >= 1, "pgd: empty dataset");
  require(config.tol >= 0.0, "pgd: tol must be nonnegative");
  require(config.max_iters >= 0, "pgd: max_iters must be nonnegative");
}

}  // namespace detail

/// One PGD iteration. Without fit_bias, mu stays at its current (initial)
/// value and receives no gradient.
inline ModelParams pgd_step(const ModelParams& current, const Matrix& X, const Vector& y,
                            const PgdConfig& config) {
  detail::check_shapes(X, y, config);
  require(current.theta.size() == X.cols(), "pgd_step: theta dimension mismatch");
  const double eta = resolve_eta(config.eta, X.rows(), X.cols());
  require(eta > 0.0 && std::isfinite(eta), "pgd_step: learning rate must be positive");
  return detail::pgd_step_eta(current, X, y, config, eta);
}

inline IterateRecord make_record(Index iter, const ModelParams& params, const Matrix& X,
                                 const Vector& y, const std::optional<FitOracle>& oracle,
                                 const std::optional<HeldOut>& test) {
  IterateRecord r;
  r.iter = iter;
  if (y.squaredNorm() > 0) r.train_err = train_error(params, X, y);
  if (test && test->y.squaredNorm() > 0) {
    const Vector resid = (test->y - test->X * params.theta).array() - params.mu;
    r.test_err = resid.squaredNorm() / test->y.squaredNorm();
  }
  if (oracle) {
    if (oracle->theta_star) {
      const double dmu = params.mu - oracle->mu_star;
      r.est_err = std::sqrt((params.theta - *oracle->theta_star).squaredNorm() + dmu * dmu);
    }
    if (oracle->beta && params.theta.norm() > 0 && oracle->beta->norm() > 0)
      r.corr = correlation(params.theta, *oracle->beta);
  }
  return r;
}

/// Iterates pgd_step until the displacement drops to tol or max_iters is
/// reached. Record 0 of the trace is the initialization.
inline FitResult pgd_fit(const Matrix& X, const Vector& y, const PgdConfig& config,
                         const std::optional<FitOracle>& oracle = std::nullopt,
                         const std::optional<HeldOut>& test = std::nullopt) {
  detail::check_shapes(X, y, config);
  if (test) require(test->X.cols() == X.cols() && test->X.rows() == test->y.size(),
                    "pgd_fit: test set shape mismatch");
  const double eta = resolve_eta(config.eta, X.rows(), X.cols());
  require(eta > 0.0 && std::isfinite(eta), "pgd_fit: learning rate must be positive");

  ModelParams params = config.init.value_or(ModelParams{Vector::Zero(X.cols()), 0.0});
  require(params.theta.size() == X.cols(), "pgd_fit: init dimension mismatch");

  // Divergence cap 1e8 (1 + scale), scale = ||[theta*; mu*]|| when known,
  // else the label RMS which bounds ||E[y x]|| for isotropic designs.
  double scale = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
  if (oracle && oracle->theta_star)
    scale = std::sqrt(oracle->theta_star->squaredNorm() + oracle->mu_star * oracle->mu_star);
  const double cap = 1e8 * (1.0 + scale + params.theta.norm() + std::abs(params.mu));

  FitResult out;
  out.trace.records.reserve(static_cast<std::size_t>(config.max_iters) + 1);
  out.trace.records.push_back(make_record(0, params, X, y, oracle, test));

  for (Index it = 1; it <= config.max_iters; ++it) {
    ModelParams next;
    try {
      next = detail::pgd_step_eta(params, X, y, config, eta);
    } catch (DivergedError& e) {
      e.attach(out.trace, it);
      throw;
    }
    const double norm = std::sqrt(next.theta.squaredNorm() + next.mu * next.mu);
    if (norm > cap) {
      DivergedError e(it, norm);
      e.attach(out.trace, it);
      throw e;
    }
    const double dmu = next.mu - params.mu;
    const double disp = std::sqrt((next.theta - params.theta).squaredNorm() + dmu * dmu);
    params = std::move(next);
    IterateRecord rec = make_record(it, params, X, y, oracle, test);
    rec.displacement = disp;
    out.trace.records.push_back(rec);
    if (disp <= config.tol) break;
  }
  out.params = std::move(params);
  return out;
}

struct GammaBaseline {
  double gamma;
  double intercept;  // mean(y) - gamma mean(X beta)
  Vector fitted;     // gamma X beta + intercept
};

/// Oracle baseline gamma * beta: least squares of y on X beta with an
/// intercept, so gamma = ybar^T u / ||u||^2 with ybar and u = X beta both
/// centered. A constant shift of y changes only the intercept.
inline GammaBaseline gamma_baseline(const Matrix& X, const Vector& y, const Vector& beta) {
  require(X.rows() == y.size() && X.cols() == beta.size(), "gamma_baseline: dimension mismatch");
  const Vector xb = X * beta;
  const Vector u = xb.array() - xb.mean();
  const double denom = u.squaredNorm();
  if (denom == 0.0) throw UndefinedMetric("gamma_baseline: X beta is constant (degenerate baseline)");
  const Vector centered = y.array() - y.mean();
  const double gamma = centered.dot(u) / denom;
  const double intercept = y.mean() - gamma * xb.mean();
  return {gamma, intercept, (gamma * xb).array() + intercept};
}

}  // namespace blm
