#pragma once

// Seeded synthetic single-index datasets with isotropic designs, and the
// population best linear model (theta*, mu*) = (E[y x], E[y]).

#include "blm/common.hpp"
#include "blm/rng.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace blm {

/// Entry distribution of the design. Both are zero-mean, unit-variance.
enum class Distribution {
  Gaussian,             // N(0, 1), subgaussian
  CenteredExponential,  // E - 1 with E ~ Exp(1), subexponential
};

enum class LinkKind { Linear, Sign, Relu };

struct LinkFunction {
  LinkKind kind = LinkKind::Linear;
  double noise_std = 0.0;
};

inline std::string distribution_name(Distribution d) {
  return d == Distribution::Gaussian ? "gaussian" : "exponential";
}

inline std::string link_name(LinkKind k) {
  switch (k) {
    case LinkKind::Linear: return "linear";
    case LinkKind::Sign: return "sign";
    case LinkKind::Relu: return "relu";
  }
  return "unknown";
}

inline Distribution parse_distribution(const std::string& s) {
  if (s == "gaussian" || s == "normal") return Distribution::Gaussian;
  if (s == "exponential" || s == "centered_exponential") return Distribution::CenteredExponential;
  throw InvalidArgument("unknown distribution '" + s + "'");
}

inline LinkKind parse_link(const std::string& s) {
  if (s == "linear") return LinkKind::Linear;
  if (s == "sign") return LinkKind::Sign;
  if (s == "relu") return LinkKind::Relu;
  throw InvalidArgument("unknown link '" + s + "'");
}

/// sign(0) is taken as +1 so labels are always +-1.
inline double apply_link_scalar(LinkKind kind, double t) {
  switch (kind) {
    case LinkKind::Linear: return t;
    case LinkKind::Sign: return t >= 0.0 ? 1.0 : -1.0;
    case LinkKind::Relu: return std::max(t, 0.0);
  }
  return t;
}

/// Draws i.i.d. entries of one distribution from an engine it does not own.
class EntrySampler {
 public:
  explicit EntrySampler(Distribution d) : dist_(d) {}
  double operator()(Rng& rng) {
    if (dist_ == Distribution::Gaussian) return normal_(rng);
    return expo_(rng) - 1.0;
  }

 private:
  Distribution dist_;
  std::normal_distribution<double> normal_;
  std::exponential_distribution<double> expo_{1.0};
};

struct SyntheticDataset {
  Matrix X;
  Vector y;
  Vector beta;
  Distribution dist = Distribution::Gaussian;
  LinkFunction link;
  std::uint64_t seed = 0;
  Index sparsity = 0;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

struct PopulationBlm {
  Vector theta_star;
  double mu_star = 0.0;
  Index mc_samples = 0;
  double std_error = 0.0;     // worst coordinate of theta*
  double mu_std_error = 0.0;
  Vector coord_std_error;     // per coordinate of theta*
};

/// n x p design with i.i.d. entries; rows are samples, filled row by row.
inline Matrix sample_design(Index n, Index p, Distribution dist, std::uint64_t seed) {
  require(n >= 1 && p >= 1, "sample_design: n and p must be positive");
  if (static_cast<double>(n) * static_cast<double>(p) >
      static_cast<double>(std::numeric_limits<Index>::max() / static_cast<Index>(sizeof(double)))) {
    throw std::length_error("sample_design: n*p exceeds addressable size");
  }
  Rng rng = make_rng(seed);
  EntrySampler draw(dist);
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = draw(rng);
  return X;
}

/// Unit-norm s-sparse direction with a uniform random support and Gaussian
/// nonzeros.
inline Vector make_ground_truth(Index p, Index s, std::uint64_t seed) {
  require(p >= 1 && s >= 1 && s <= p, "make_ground_truth: need 1 <= s <= p");
  Rng rng = make_rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index k = 0; k < s; ++k) {
    std::uniform_int_distribution<Index> pick(k, p - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::normal_distribution<double> normal;
  Vector beta = Vector::Zero(p);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Index k = 0; k < s; ++k) beta[idx[static_cast<std::size_t>(k)]] = normal(rng);
    norm = beta.norm();
  }
  return beta / norm;
}

inline Vector apply_link(const Matrix& X, const Vector& beta, const LinkFunction& link,
                         std::uint64_t seed) {
  require(X.cols() == beta.size(), "apply_link: dimension mismatch");
  require(X.allFinite() && beta.allFinite(), "apply_link: non-finite input");
  require(link.noise_std >= 0.0 && std::isfinite(link.noise_std), "apply_link: bad noise_std");
  const Vector index = X * beta;
  Vector y(index.size());
  for (Index i = 0; i < y.size(); ++i) y[i] = apply_link_scalar(link.kind, index[i]);
  if (link.noise_std > 0.0) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, link.noise_std);
    for (Index i = 0; i < y.size(); ++i) y[i] += normal(rng);
  }
  return y;
}

/// Fresh samples (X, y) for a fixed beta.
inline SyntheticDataset sample_dataset(const Vector& beta, Index n, Distribution dist,
                                       const LinkFunction& link, std::uint64_t design_seed,
                                       std::uint64_t noise_seed) {
  SyntheticDataset ds;
  ds.X = sample_design(n, beta.size(), dist, design_seed);
  ds.y = apply_link(ds.X, beta, link, noise_seed);
  ds.beta = beta;
  ds.dist = dist;
  ds.link = link;
  ds.sparsity = (beta.array() != 0.0).count();
  return ds;
}

/// Training set: beta, design and label noise each come from their own
/// stream of `seed`.
inline SyntheticDataset make_dataset(Index n, Index p, Index s, Distribution dist,
                                     const LinkFunction& link, std::uint64_t seed) {
  const Vector beta = make_ground_truth(p, s, derive_seed(seed, Stream::Beta));
  SyntheticDataset ds = sample_dataset(beta, n, dist, link, derive_seed(seed, Stream::Design),
                                       derive_seed(seed, Stream::LabelNoise));
  ds.seed = seed;
  ds.sparsity = s;
  return ds;
}

/// Fresh held-out set of size n drawn with the same beta.
inline SyntheticDataset make_test_set(const SyntheticDataset& train, Index n) {
  SyntheticDataset ds = sample_dataset(train.beta, n, train.dist, train.link,
                                       derive_seed(train.seed, Stream::TestDesign),
                                       derive_seed(train.seed, Stream::TestNoise));
  ds.seed = train.seed;
  ds.sparsity = train.sparsity;
  return ds;
}

/// Monte Carlo estimate of (E[y x], E[y]).
///
/// Coordinates outside supp(beta) are exactly zero: x_j is independent of
/// (beta^T x, noise) and has mean zero, so only the support is sampled.
inline PopulationBlm population_blm(const Vector& beta, Distribution dist, const LinkFunction& link,
                                    Index mc_samples, std::uint64_t seed) {
  require(mc_samples >= 10000, "population_blm: need at least 1e4 Monte Carlo samples");
  require(beta.allFinite(), "population_blm: non-finite beta");
  std::vector<Index> support;
  for (Index j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) support.push_back(j);
  const auto s = static_cast<Index>(support.size());

  Vector b(s);
  for (Index k = 0; k < s; ++k) b[k] = beta[support[static_cast<std::size_t>(k)]];

  Rng rng = make_rng(seed);
  EntrySampler draw(dist);
  std::normal_distribution<double> noise(0.0, link.noise_std > 0 ? link.noise_std : 1.0);

  Vector x(s);
  Vector sum = Vector::Zero(s);
  Vector sumsq = Vector::Zero(s);
  double ysum = 0.0;
  double ysumsq = 0.0;
  for (Index i = 0; i < mc_samples; ++i) {
    for (Index k = 0; k < s; ++k) x[k] = draw(rng);
    double y = apply_link_scalar(link.kind, b.dot(x));
    if (link.noise_std > 0) y += noise(rng);
    ysum += y;
    ysumsq += y * y;
    for (Index k = 0; k < s; ++k) {
      const double z = y * x[k];
      sum[k] += z;
      sumsq[k] += z * z;
    }
  }
  const double N = static_cast<double>(mc_samples);
  auto std_err = [N](double total, double total_sq) {
    const double mean = total / N;
    const double var = std::max(0.0, (total_sq - N * mean * mean) / (N - 1.0));
    return std::sqrt(var / N);
  };

  PopulationBlm out;
  out.theta_star = Vector::Zero(beta.size());
  out.coord_std_error = Vector::Zero(beta.size());
  for (Index k = 0; k < s; ++k) {
    const Index j = support[static_cast<std::size_t>(k)];
    out.theta_star[j] = sum[k] / N;
    out.coord_std_error[j] = std_err(sum[k], sumsq[k]);
  }
  out.mu_star = ysum / N;
  out.mu_std_error = std_err(ysum, ysumsq);
  out.std_error = s > 0 ? out.coord_std_error.maxCoeff() : 0.0;
  out.mc_samples = mc_samples;
  return out;
}

/// Empirical Orlicz-a norm: max over m = 1..10 of m^(-1/a) (mean |w|^m)^(1/m).
inline double orlicz_norm_estimate(const Vector& w, int a) {
  require(a == 1 || a == 2, "orlicz_norm_estimate: a must be 1 or 2");
  if (w.size() == 0) return 0.0;
  const Vector absw = w.cwiseAbs();
  const double scale = absw.maxCoeff();
  if (scale == 0.0) return 0.0;
  // Moments of w/scale stay in [0, 1] which keeps |w|^10 from overflowing.
  const Eigen::ArrayXd u = absw.array() / scale;
  double best = 0.0;
  Eigen::ArrayXd power = Eigen::ArrayXd::Ones(u.size());
  for (int m = 1; m <= 10; ++m) {
    power *= u;
    const double moment = std::pow(power.mean(), 1.0 / m) * scale;
    best = std::max(best, std::pow(static_cast<double>(m), -1.0 / a) * moment);
  }
  return best;
}

/// Residual w = y - X theta* - mu* 1 at the population best linear model.
inline Vector residual_vector(const Matrix& X, const Vector& y, const PopulationBlm& blm) {
  require(X.rows() == y.size() && X.cols() == blm.theta_star.size(),
          "residual_vector: dimension mismatch");
  return (y - X * blm.theta_star).array() - blm.mu_star;
}

inline double residual_sigma_estimate(const SyntheticDataset& ds, const PopulationBlm& blm,
                                      int orlicz_a) {
  return orlicz_norm_estimate(residual_vector(ds.X, ds.y, blm), orlicz_a);
}

}  // namespace blm
