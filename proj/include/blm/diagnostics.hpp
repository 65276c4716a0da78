#pragma once

// Empirical counterparts of the quantities that govern PGD on [X 1]:
// the convergence factor rho, the effective noise nu, the restricted
// singular value, the spectral norm of [X 1]^T [X 1], residual clipping and
// the empirical width of the sample mean. Each check returns a TheoryReport
// comparing the measurement against a calibrated bound.
//
// Calibrations, frozen here: deviation t = 3; C = 3 in the clipping level;
// constant 5 in the spectral, width and noise bounds; 6 in the rho bound;
// 0.25 for the RSV floor.

#include "blm/common.hpp"
#include "blm/metrics.hpp"
#include "blm/model_sets.hpp"
#include "blm/rng.hpp"
#include "blm/synth.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace blm {

inline constexpr double kDeviationT = 3.0;
inline constexpr double kClipC = 3.0;
inline constexpr double kSpectralC = 5.0;
inline constexpr double kWidthC = 5.0;
inline constexpr double kNoiseC = 5.0;
inline constexpr double kRhoC = 6.0;
inline constexpr double kRsvFloor = 0.25;

enum class TheoryQuantity { Rho, Nu, RsvLower, SpectralUpper, ClipFraction, ClipBias, EmpiricalWidth };

inline std::string quantity_name(TheoryQuantity q) {
  switch (q) {
    case TheoryQuantity::Rho: return "rho";
    case TheoryQuantity::Nu: return "nu";
    case TheoryQuantity::RsvLower: return "rsv_lower";
    case TheoryQuantity::SpectralUpper: return "spectral_upper";
    case TheoryQuantity::ClipFraction: return "clip_fraction";
    case TheoryQuantity::ClipBias: return "clip_bias";
    case TheoryQuantity::EmpiricalWidth: return "empirical_width";
  }
  return "unknown";
}

/// Which side of the true (set-wide) value a measurement sits on.
enum class EstimateSide { Exact, LowerEstimate, UpperEstimate };

struct TheoryReport {
  TheoryQuantity quantity = TheoryQuantity::Rho;
  double measured = 0.0;
  double bound = 0.0;
  std::optional<double> floor;  // second, lower bound (spectral check only)
  bool bound_is_lower = false;  // true: satisfied means measured >= bound
  std::string bound_formula;
  bool satisfied = false;
  EstimateSide side = EstimateSide::Exact;
  Index n = 0;
  Index p = 0;
  Index s = 0;
  std::string dist;
  std::uint64_t seed = 0;
  std::string relaxation;
  std::string note;

  void settle() {
    satisfied = bound_is_lower ? measured >= bound : measured <= bound;
    if (floor) satisfied = satisfied && measured >= *floor;
  }
};

/// Summary of one metric across replications; std is the sample standard
/// deviation (0 for a single value).
struct MetricSeries {
  std::string name;
  std::vector<double> values;
  double mean = 0.0;
  double std = 0.0;
};

inline MetricSeries summarize(std::string name, std::vector<double> values) {
  MetricSeries m{std::move(name), std::move(values), 0.0, 0.0};
  if (m.values.empty()) return m;
  const double k = static_cast<double>(m.values.size());
  for (double v : m.values) m.mean += v;
  m.mean /= k;
  if (m.values.size() > 1) {
    double ss = 0.0;
    for (double v : m.values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / (k - 1.0));
  }
  return m;
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

inline Vector residual_vector(const SyntheticDataset& ds, const PopulationBlm& blm) {
  return residual_vector(ds.X, ds.y, blm);
}

/// sup_{v in relaxation} |v^T X^T w| + |1^T w|.
inline double effective_noise_nu(const Matrix& X, const Vector& w, const TangentBallSpec& T) {
  require(X.rows() == w.size() && X.cols() == T.dim(), "effective_noise_nu: dimension mismatch");
  return relaxation_sup(T, X.transpose() * w) + std::abs(w.sum());
}

inline double effective_noise_nu(const SyntheticDataset& ds, const PopulationBlm& blm,
                                 const TangentBallSpec& T) {
  return effective_noise_nu(ds.X, residual_vector(ds, blm), T);
}

namespace detail {

/// A subspace contained in the relaxation: either a coordinate support or
/// the span of an orthonormal basis. The bias coordinate is always added.
struct Piece {
  std::vector<Index> support;
  const Matrix* basis = nullptr;
};

/// [X Q 1] for the piece's orthonormal frame Q.
inline Matrix extended_design(const Matrix& X, const Piece& piece) {
  Matrix Z;
  if (piece.basis) {
    Z.resize(X.rows(), piece.basis->cols() + 1);
    Z.leftCols(piece.basis->cols()) = X * *piece.basis;
  } else {
    const auto d = static_cast<Index>(piece.support.size());
    Z.resize(X.rows(), d + 1);
    for (Index k = 0; k < d; ++k) Z.col(k) = X.col(piece.support[static_cast<std::size_t>(k)]);
  }
  Z.col(Z.cols() - 1).setOnes();
  return Z;
}

/// Q_a^T Q_b for the extended frames (bias coordinate overlaps itself).
inline Matrix frame_overlap(const Piece& a, const Piece& b) {
  if (a.basis || b.basis) {
    require(a.basis && b.basis, "frame_overlap: mixed piece kinds");
    Matrix o = Matrix::Zero(a.basis->cols() + 1, b.basis->cols() + 1);
    o.topLeftCorner(a.basis->cols(), b.basis->cols()) = a.basis->transpose() * *b.basis;
    o(o.rows() - 1, o.cols() - 1) = 1.0;
    return o;
  }
  const auto da = static_cast<Index>(a.support.size());
  const auto db = static_cast<Index>(b.support.size());
  Matrix o = Matrix::Zero(da + 1, db + 1);
  for (Index i = 0; i < da; ++i)
    for (Index j = 0; j < db; ++j)
      if (a.support[static_cast<std::size_t>(i)] == b.support[static_cast<std::size_t>(j)]) o(i, j) = 1.0;
  o(da, db) = 1.0;
  return o;
}

/// Pieces covering the relaxation. FullBall and ExactSubspace are a single
/// exact piece; DoubledSparsity samples `count` supports of size 2s, each
/// containing supp(anchor) and filled uniformly at random.
inline std::vector<Piece> sample_pieces(const TangentBallSpec& T, Index count, std::uint64_t seed) {
  std::vector<Piece> pieces;
  const Index p = T.dim();
  switch (T.relaxation()) {
    case Relaxation::FullBall: {
      Piece all;
      all.support.resize(static_cast<std::size_t>(p));
      std::iota(all.support.begin(), all.support.end(), Index{0});
      pieces.push_back(std::move(all));
      return pieces;
    }
    case Relaxation::ExactSubspace: {
      Piece sub;
      sub.basis = &T.base().as<Subspace>().basis;
      pieces.push_back(std::move(sub));
      return pieces;
    }
    case Relaxation::DoubledSparsity:
      break;
  }
  const Index k = T.doubled_support();
  std::vector<Index> fixed;
  std::vector<Index> pool;
  for (Index j = 0; j < p; ++j) (T.anchor()[j] != 0.0 ? fixed : pool).push_back(j);
  if (static_cast<Index>(fixed.size()) > k) fixed.resize(static_cast<std::size_t>(k));
  const Index fill = k - static_cast<Index>(fixed.size());
  Rng rng = make_rng(seed);
  for (Index c = 0; c < std::max<Index>(count, 1); ++c) {
    for (Index i = 0; i < fill; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
    }
    Piece piece;
    piece.support = fixed;
    piece.support.insert(piece.support.end(), pool.begin(), pool.begin() + fill);
    std::sort(piece.support.begin(), piece.support.end());
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

/// sup over unit u, v in one piece of |u^T (I - eta A^T A) v| = spectral
/// radius of the compressed symmetric matrix.
inline double rho_on_piece(const Matrix& Z, double eta) {
  Matrix M = -eta * (Z.transpose() * Z);
  M.diagonal().array() += 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// sup over unit u in piece a, v in piece b of |u^T (I - eta A^T A) v|.
inline double rho_across_pieces(const Matrix& Za, const Matrix& Zb, const Piece& a, const Piece& b,
                                double eta) {
  const Matrix M = frame_overlap(a, b) - eta * (Za.transpose() * Zb);
  return Eigen::JacobiSVD<Matrix>(M).singularValues()(0);
}

inline double min_gain_on_piece(const Matrix& Z) {
  const Matrix G = Z.transpose() * Z;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()(0));
}

inline Index nnz(const Vector& v) { return (v.array() != 0.0).count(); }

}  // namespace detail

/// Lower estimate of rho = sup_{u, v in C_ext} |u^T (I - eta [X 1]^T [X 1]) v|.
///
/// For every sampled piece (a subspace of the relaxation, lifted by the bias
/// coordinate) the supremum is computed exactly; consecutive pieces are
/// also paired so u and v may come from different supports. Exact for the
/// FullBall and ExactSubspace relaxations.
inline double convergence_rho_estimate(const Matrix& X, const TangentBallSpec& T, double eta,
                                       Index n_dirs, std::uint64_t seed) {
  require(X.cols() == T.dim(), "convergence_rho_estimate: dimension mismatch");
  require(eta >= 0.0 && std::isfinite(eta), "convergence_rho_estimate: bad learning rate");
  const auto pieces = detail::sample_pieces(T, n_dirs, seed);
  std::vector<Matrix> designs;
  designs.reserve(pieces.size());
  for (const auto& pc : pieces) designs.push_back(detail::extended_design(X, pc));
  double best = 0.0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    best = std::max(best, detail::rho_on_piece(designs[i], eta));
    if (i + 1 < pieces.size())
      best = std::max(best, detail::rho_across_pieces(designs[i], designs[i + 1], pieces[i],
                                                      pieces[i + 1], eta));
  }
  return best;
}

/// Upper estimate of min_{v in C_ext, ||v|| = 1} ||[X 1] v||^2 / n over the
/// sampled pieces (exact per piece).
inline double rsv_min_gain(const Matrix& X, const TangentBallSpec& T, Index n_dirs,
                           std::uint64_t seed) {
  require(X.cols() == T.dim(), "rsv: dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pc : detail::sample_pieces(T, n_dirs, seed))
    best = std::min(best, detail::min_gain_on_piece(detail::extended_design(X, pc)));
  return best / static_cast<double>(X.rows());
}

inline TheoryReport rsv_lower_check(const Matrix& X, const TangentBallSpec& T, Index n_dirs,
                                    std::uint64_t seed) {
  TheoryReport r;
  r.quantity = TheoryQuantity::RsvLower;
  r.measured = rsv_min_gain(X, T, n_dirs, seed);
  r.bound = kRsvFloor;
  r.bound_is_lower = true;
  r.bound_formula = "min ||[X 1]v||^2/n >= 0.25";
  r.side = T.relaxation() == Relaxation::DoubledSparsity ? EstimateSide::UpperEstimate
                                                         : EstimateSide::Exact;
  r.n = X.rows();
  r.p = X.cols();
  r.s = T.sparsity();
  r.seed = seed;
  r.relaxation = relaxation_name(T.relaxation());
  if (static_cast<double>(r.n) < 4.0 * T.table_width_sq())
    r.note = "n below 4 * width_table: outside the guaranteed regime";
  r.settle();
  return r;
}

inline TheoryReport rho_check(const Matrix& X, const TangentBallSpec& T, double eta, Index n_dirs,
                              std::uint64_t seed) {
  TheoryReport r;
  r.quantity = TheoryQuantity::Rho;
  r.measured = convergence_rho_estimate(X, T, eta, n_dirs, seed);
  r.n = X.rows();
  r.p = X.cols();
  r.s = T.sparsity();
  r.seed = seed;
  r.relaxation = relaxation_name(T.relaxation());
  r.side = T.relaxation() == Relaxation::DoubledSparsity ? EstimateSide::LowerEstimate
                                                         : EstimateSide::Exact;
  const double n = static_cast<double>(r.n);
  if (std::abs(eta * n - 1.0) < 1e-9) {
    const double scaled = kRhoC * (std::sqrt(T.table_width_sq()) + kDeviationT) / std::sqrt(n);
    r.bound = std::min(1.0, scaled);
    r.bound_formula = "min(1, 6 (w + 3) / sqrt(n))";
  } else {
    r.bound = 1.0;
    r.bound_formula = "1 (contraction)";
  }
  r.settle();
  return r;
}

/// Bound 5 sigma (w + 3) sqrt(n log n) for a = 2, 5 sigma (w + 3) sqrt(n) log n
/// for a = 1, with w = sqrt(width_table).
inline TheoryReport nu_check(const Matrix& X, const Vector& w, const TangentBallSpec& T,
                             double sigma, int a) {
  require(a == 1 || a == 2, "nu_check: a must be 1 or 2");
  TheoryReport r;
  r.quantity = TheoryQuantity::Nu;
  r.measured = effective_noise_nu(X, w, T);
  const double n = static_cast<double>(X.rows());
  const double width = std::sqrt(T.table_width_sq()) + kDeviationT;
  const double logn = std::log(std::max(n, 2.0));
  r.bound = a == 2 ? kNoiseC * sigma * width * std::sqrt(n * logn)
                   : kNoiseC * sigma * width * std::sqrt(n) * logn;
  r.bound_formula = a == 2 ? "5 sigma (w + 3) sqrt(n log n)" : "5 sigma (w + 3) sqrt(n) log n";
  r.side = T.relaxation() == Relaxation::ExactSubspace ? EstimateSide::Exact
                                                       : EstimateSide::UpperEstimate;
  r.n = X.rows();
  r.p = X.cols();
  r.s = T.sparsity();
  r.relaxation = relaxation_name(T.relaxation());
  r.settle();
  return r;
}

struct PowerIterationResult {
  double value;
  Index iterations;
};

/// Largest eigenvalue of [X 1]^T [X 1] by power iteration, without forming
/// the Gram matrix. Stops when successive Rayleigh quotients agree to
/// rel_tol.
inline PowerIterationResult extended_gram_norm(const Matrix& X, double rel_tol = 1e-8,
                                               Index max_iters = 10000,
                                               std::uint64_t seed = 0x5eed) {
  const Index p = X.cols();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Vector v(p + 1);
  for (Index j = 0; j <= p; ++j) v[j] = normal(rng);
  v.normalize();
  double prev = -1.0;
  for (Index it = 1; it <= max_iters; ++it) {
    const Vector Av = X * v.head(p) + Vector::Constant(X.rows(), v[p]);
    Vector w(p + 1);
    w.head(p) = X.transpose() * Av;
    w[p] = Av.sum();
    const double lambda = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return {0.0, it};
    v = w / wn;
    if (prev >= 0.0 && std::abs(lambda - prev) <= rel_tol * std::abs(lambda)) return {lambda, it};
    prev = lambda;
  }
  throw NumericError("power iteration did not converge in " + std::to_string(max_iters) + " steps");
}

/// ||[X 1]^T [X 1]|| against 5 (n + p) ln^3(n + p) above and n below.
inline TheoryReport spectral_chernoff_check(const Matrix& X) {
  TheoryReport r;
  r.quantity = TheoryQuantity::SpectralUpper;
  r.n = X.rows();
  r.p = X.cols();
  r.measured = extended_gram_norm(X).value;
  const double q = static_cast<double>(r.n + r.p);
  r.bound = kSpectralC * q * log_cubed(q);
  r.floor = static_cast<double>(r.n);
  r.bound_formula = "n <= ||[X 1]^T[X 1]|| <= 5 (n+p) ln^3(n+p)";
  r.side = EstimateSide::Exact;
  r.settle();
  return r;
}

/// Clipping level multiplier B: C sqrt(ln n) for subgaussian (a = 2),
/// C ln n for subexponential (a = 1).
inline double clip_level(Index n, int a) {
  require(a == 1 || a == 2, "clip_level: a must be 1 or 2");
  const double logn = std::log(static_cast<double>(std::max<Index>(n, 2)));
  return a == 2 ? kClipC * std::sqrt(logn) : kClipC * logn;
}

inline double clip(double x, double level) { return std::clamp(x, -level, level); }

/// Fraction of residual entries altered by clip(w_i, sigma B).
inline TheoryReport clip_check(const Vector& w, double sigma, int a) {
  require(sigma >= 0.0, "clip_check: sigma must be nonnegative");
  TheoryReport r;
  r.quantity = TheoryQuantity::ClipFraction;
  r.n = w.size();
  const double level = sigma * clip_level(w.size(), a);
  Index clipped = 0;
  for (Index i = 0; i < w.size(); ++i)
    if (clip(w[i], level) != w[i]) ++clipped;
  r.measured = w.size() ? static_cast<double>(clipped) / static_cast<double>(w.size()) : 0.0;
  r.bound = 0.0;
  r.bound_formula = a == 2 ? "fraction clipped at 3 sigma sqrt(ln n) == 0"
                           : "fraction clipped at 3 sigma ln n == 0";
  r.settle();
  return r;
}

/// Monte Carlo ||E[clip(w, sigma B) x]||_2 for fresh samples, against
/// 5 standard errors (the standard error is the l2 norm of the per-coordinate
/// standard errors). Coordinates outside supp(beta) u supp(theta*) have
/// zero mean by independence and are not sampled.
inline TheoryReport clip_bias_check(Distribution dist, const LinkFunction& link, const Vector& beta,
                                    const PopulationBlm& blm, double sigma, double B,
                                    Index mc_samples, std::uint64_t seed) {
  require(beta.size() == blm.theta_star.size(), "clip_bias_check: dimension mismatch");
  require(mc_samples >= 2, "clip_bias_check: need at least 2 samples");
  std::vector<Index> support;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0 || blm.theta_star[j] != 0.0) support.push_back(j);
  const auto s = static_cast<Index>(support.size());
  Vector b(s), th(s);
  for (Index k = 0; k < s; ++k) {
    b[k] = beta[support[static_cast<std::size_t>(k)]];
    th[k] = blm.theta_star[support[static_cast<std::size_t>(k)]];
  }
  Rng rng = make_rng(seed);
  EntrySampler draw(dist);
  std::normal_distribution<double> noise(0.0, link.noise_std > 0 ? link.noise_std : 1.0);
  const double level = sigma * B;
  Vector x(s), sum = Vector::Zero(s), sumsq = Vector::Zero(s);
  for (Index i = 0; i < mc_samples; ++i) {
    for (Index k = 0; k < s; ++k) x[k] = draw(rng);
    double y = apply_link_scalar(link.kind, b.dot(x));
    if (link.noise_std > 0) y += noise(rng);
    const double w = clip(y - th.dot(x) - blm.mu_star, level);
    for (Index k = 0; k < s; ++k) {
      const double z = w * x[k];
      sum[k] += z;
      sumsq[k] += z * z;
    }
  }
  const double N = static_cast<double>(mc_samples);
  const Vector mean = sum / N;
  double se2 = 0.0;
  for (Index k = 0; k < s; ++k) {
    const double var = std::max(0.0, (sumsq[k] - N * mean[k] * mean[k]) / (N - 1.0));
    se2 += var / N;
  }
  TheoryReport r;
  r.quantity = TheoryQuantity::ClipBias;
  r.measured = mean.norm();
  r.bound = 5.0 * std::sqrt(se2);
  r.bound_formula = "||E[clip(w, sigma B) x]|| <= 5 stderr";
  r.side = EstimateSide::Exact;
  r.p = beta.size();
  r.s = detail::nnz(beta);
  r.dist = distribution_name(dist);
  r.seed = seed;
  r.settle();
  return r;
}

/// sup over the relaxation of |u^T xbar| for the mean of n fresh samples,
/// against 5 (sqrt(width_table) + 3) / sqrt(n); one report per replication.
inline std::vector<TheoryReport> empirical_width_check(Distribution dist, const TangentBallSpec& T,
                                                       Index n, Index replications,
                                                       std::uint64_t seed) {
  require(n >= 1 && replications >= 1, "empirical_width_check: n and replications must be positive");
  const Index p = T.dim();
  Rng rng = make_rng(seed);
  EntrySampler draw(dist);
  const double bound =
      kWidthC * (std::sqrt(T.table_width_sq()) + kDeviationT) / std::sqrt(static_cast<double>(n));
  std::vector<TheoryReport> out;
  Vector xbar(p);
  for (Index rep = 0; rep < replications; ++rep) {
    xbar.setZero();
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) xbar[j] += draw(rng);
    xbar /= static_cast<double>(n);
    TheoryReport r;
    r.quantity = TheoryQuantity::EmpiricalWidth;
    r.measured = relaxation_sup(T, xbar);
    r.bound = bound;
    r.bound_formula = "5 (w + 3) / sqrt(n)";
    r.side = T.relaxation() == Relaxation::ExactSubspace ? EstimateSide::Exact
                                                         : EstimateSide::UpperEstimate;
    r.n = n;
    r.p = p;
    r.s = T.sparsity();
    r.dist = distribution_name(dist);
    r.seed = seed;
    r.relaxation = relaxation_name(T.relaxation());
    if (n == 1) r.note = "single sample: no bound asserted";
    r.settle();
    if (n == 1) r.satisfied = true;
    out.push_back(std::move(r));
  }
  return out;
}

/// Fraction of steps with err[t+1] <= kappa (rho err[t] + eta nu).
inline double recursion_consistency(const std::vector<double>& errors, double rho, double nu,
                                    double eta, double kappa) {
  if (errors.size() < 2) return 1.0;
  std::size_t ok = 0;
  for (std::size_t t = 0; t + 1 < errors.size(); ++t)
    if (errors[t + 1] <= kappa * (rho * errors[t] + eta * nu) * (1.0 + 1e-12)) ++ok;
  return static_cast<double>(ok) / static_cast<double>(errors.size() - 1);
}

inline void write_theory_csv_header(std::ostream& os) {
  os << "quantity,n,p,s,dist,seed,measured,bound,satisfied\n";
}

}  // namespace blm
