#pragma once

// Structured constraint sets K, Euclidean projections onto K and onto the
// bias-extended set K x R, and Gaussian-width formulas/estimators for the
// tangent balls of those sets.

#include "blm/common.hpp"
#include "blm/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace blm {

struct Unconstrained {};
struct Sparsity {
  Index s;
};
struct L1Ball {
  double radius;
};
/// Columns of `basis` are an orthonormal basis of the subspace.
struct Subspace {
  Matrix basis;
};
/// theta in R^p viewed as a rows x cols matrix (column-major), rank <= r.
struct LowRank {
  Index rank;
  Index rows;
  Index cols;
};

class ConstraintSpec {
 public:
  using Kind = std::variant<Unconstrained, Sparsity, L1Ball, Subspace, LowRank>;

  static ConstraintSpec unconstrained(Index p) { return ConstraintSpec(p, Unconstrained{}); }
  static ConstraintSpec sparsity(Index p, Index s) { return ConstraintSpec(p, Sparsity{s}); }
  static ConstraintSpec l1_ball(Index p, double radius) { return ConstraintSpec(p, L1Ball{radius}); }
  static ConstraintSpec subspace(Matrix basis) {
    const Index p = basis.rows();
    return ConstraintSpec(p, Subspace{std::move(basis)});
  }
  static ConstraintSpec low_rank(Index rows, Index cols, Index r) {
    return ConstraintSpec(rows * cols, LowRank{r, rows, cols});
  }

  Index dim() const { return p_; }
  const Kind& kind() const { return kind_; }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(kind_);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(kind_);
  }

  /// Unconstrained, l1 ball and subspace are convex; sparsity and rank are not.
  bool is_convex() const { return is<Unconstrained>() || is<L1Ball>() || is<Subspace>(); }

  std::string describe() const {
    return std::visit(
        [this](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          const std::string p = "p=" + std::to_string(p_);
          if constexpr (std::is_same_v<T, Unconstrained>) {
            return "unconstrained(" + p + ")";
          } else if constexpr (std::is_same_v<T, Sparsity>) {
            return "sparsity(s=" + std::to_string(k.s) + "," + p + ")";
          } else if constexpr (std::is_same_v<T, L1Ball>) {
            return "l1_ball(R=" + std::to_string(k.radius) + "," + p + ")";
          } else if constexpr (std::is_same_v<T, Subspace>) {
            return "subspace(k=" + std::to_string(k.basis.cols()) + "," + p + ")";
          } else {
            return "low_rank(r=" + std::to_string(k.rank) + "," + std::to_string(k.rows) + "x" +
                   std::to_string(k.cols) + ")";
          }
        },
        kind_);
  }

 private:
  ConstraintSpec(Index p, Kind kind) : p_(p), kind_(std::move(kind)) { validate(); }

  void validate() const {
    require(p_ >= 1, "constraint: ambient dimension must be positive");
    std::visit(
        [this](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Sparsity>) {
            require(k.s >= 1 && k.s <= p_, "sparsity: need 1 <= s <= p");
          } else if constexpr (std::is_same_v<T, L1Ball>) {
            require(std::isfinite(k.radius) && k.radius > 0, "l1_ball: radius must be positive");
          } else if constexpr (std::is_same_v<T, Subspace>) {
            require(k.basis.cols() >= 1 && k.basis.cols() <= p_, "subspace: need 1 <= k <= p");
            const Matrix gram = k.basis.transpose() * k.basis;
            const Matrix eye = Matrix::Identity(gram.rows(), gram.cols());
            require((gram - eye).cwiseAbs().maxCoeff() <= 1e-10,
                    "subspace: basis columns are not orthonormal");
          } else if constexpr (std::is_same_v<T, LowRank>) {
            require(k.rows >= 1 && k.cols >= 1 && k.rows * k.cols == p_,
                    "low_rank: rows*cols must equal p");
            require(k.rank >= 1 && k.rank <= std::min(k.rows, k.cols),
                    "low_rank: need 1 <= r <= min(rows, cols)");
          }
        },
        kind_);
  }

  Index p_;
  Kind kind_;
};

namespace detail {

/// Indices of the k largest |v_i|, ties to the lowest index, returned sorted.
inline std::vector<Index> top_k_indices(const Vector& v, Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  k = std::clamp<Index>(k, 0, v.size());
  auto before = [&v](Index a, Index b) {
    const double fa = std::abs(v[a]);
    const double fb = std::abs(v[b]);
    return fa > fb || (fa == fb && a < b);
  };
  std::nth_element(idx.begin(), idx.begin() + k, idx.end(), before);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// l2 norm of the k largest-magnitude entries.
inline double top_k_norm(const Vector& v, Index k) {
  if (k >= v.size()) return v.norm();
  Vector a = v.cwiseAbs();
  std::nth_element(a.data(), a.data() + k, a.data() + a.size(), std::greater<double>());
  return a.head(k).norm();
}

inline Vector project_l1(const Vector& v, double radius) {
  if (v.lpNorm<1>() <= radius) return v;
  std::vector<double> u(v.data(), v.data() + v.size());
  for (auto& x : u) x = std::abs(x);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - radius) / static_cast<double>(j + 1);
    if (u[j] - t > 0) tau = t;
  }
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v[i]) - tau, 0.0);
    out[i] = v[i] < 0 ? -mag : mag;
  }
  return out;
}

inline Vector project_low_rank(const Vector& v, const LowRank& k) {
  Eigen::Map<const Matrix> m(v.data(), k.rows, k.cols);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index r = k.rank;
  const Matrix low = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                     svd.matrixV().leftCols(r).transpose();
  return Eigen::Map<const Vector>(low.data(), v.size());
}

}  // namespace detail

/// Euclidean projection of v onto K.
inline Vector project(const Vector& v, const ConstraintSpec& K) {
  require(v.size() == K.dim(), "project: vector length " + std::to_string(v.size()) +
                                   " does not match constraint dimension " + std::to_string(K.dim()));
  require(all_finite(v), "project: non-finite input");
  return std::visit(
      [&v](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return v;
        } else if constexpr (std::is_same_v<T, Sparsity>) {
          Vector out = Vector::Zero(v.size());
          for (Index i : detail::top_k_indices(v, k.s)) out[i] = v[i];
          return out;
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          return detail::project_l1(v, k.radius);
        } else if constexpr (std::is_same_v<T, Subspace>) {
          return k.basis * (k.basis.transpose() * v);
        } else {
          return detail::project_low_rank(v, k);
        }
      },
      K.kind());
}

/// Projection onto K_ext = K x R: the bias coordinate passes through.
inline std::pair<Vector, double> project_extended(const Vector& theta, double mu,
                                                  const ConstraintSpec& K) {
  require(std::isfinite(mu), "project_extended: non-finite bias");
  return {project(theta, K), mu};
}

/// Membership test with tolerance `tol` (absolute for l0/l1, relative to
/// the vector or its top singular value otherwise).
inline bool is_member(const Vector& v, const ConstraintSpec& K, double tol = 1e-10) {
  if (v.size() != K.dim() || !all_finite(v)) return false;
  return std::visit(
      [&](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return true;
        } else if constexpr (std::is_same_v<T, Sparsity>) {
          return (v.array().abs() > 0.0).count() <= k.s;
        } else if constexpr (std::is_same_v<T, L1Ball>) {
          return v.lpNorm<1>() <= k.radius + tol;
        } else if constexpr (std::is_same_v<T, Subspace>) {
          const Vector resid = v - k.basis * (k.basis.transpose() * v);
          return resid.norm() <= tol * std::max(1.0, v.norm());
        } else {
          Eigen::Map<const Matrix> m(v.data(), k.rows, k.cols);
          const Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
          if (k.rank >= sv.size()) return true;
          return sv[k.rank] <= tol * std::max(1.0, sv[0]);
        }
      },
      K.kind());
}

/// Squared Gaussian width of the tangent ball by the closed-form table
/// (absolute constant taken as 1). `sparsity` is the number of nonzeros of
/// the anchor; required for the l1 ball, defaults to s for Sparsity.
inline double width_table(const ConstraintSpec& K, std::optional<Index> sparsity = std::nullopt) {
  const double p = static_cast<double>(K.dim());
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return p;
        } else if constexpr (std::is_same_v<T, Sparsity> || std::is_same_v<T, L1Ball>) {
          Index s = 0;
          if constexpr (std::is_same_v<T, Sparsity>) s = sparsity.value_or(k.s);
          else {
            require(sparsity.has_value(), "width_table: l1 ball needs the anchor sparsity s");
            s = *sparsity;
          }
          require(s >= 1 && s <= K.dim(), "width_table: need 1 <= s <= p");
          const double sd = static_cast<double>(s);
          return sd * std::log(6.0 * p / sd);
        } else if constexpr (std::is_same_v<T, Subspace>) {
          return static_cast<double>(k.basis.cols());
        } else {
          require(static_cast<double>(k.rank) <= std::sqrt(p),
                  "width_table: rank exceeds sqrt(p) in the matrix view");
          return static_cast<double>(k.rank) * std::sqrt(p);
        }
      },
      K.kind());
}

/// Computable supersets of the tangent ball C used in place of C itself.
enum class Relaxation {
  ExactSubspace,    // the subspace itself (Subspace constraints)
  DoubledSparsity,  // {v : ||v||_0 <= 2s, ||v||_2 <= 1}
  FullBall,         // the unit ball B^p
};

inline std::string relaxation_name(Relaxation r) {
  switch (r) {
    case Relaxation::ExactSubspace: return "exact_subspace";
    case Relaxation::DoubledSparsity: return "doubled_sparsity";
    case Relaxation::FullBall: return "full_ball";
  }
  return "unknown";
}

class TangentBallSpec {
 public:
  TangentBallSpec(ConstraintSpec base, Vector anchor, Relaxation relaxation)
      : base_(std::move(base)), anchor_(std::move(anchor)), relaxation_(relaxation) {
    require(anchor_.size() == base_.dim(), "tangent ball: anchor dimension mismatch");
    require(is_member(anchor_, base_, 1e-10), "tangent ball: anchor is not a member of the base set");
    switch (relaxation_) {
      case Relaxation::ExactSubspace:
        require(base_.is<Subspace>(), "tangent ball: exact_subspace needs a subspace constraint");
        break;
      case Relaxation::DoubledSparsity:
        require(base_.is<Sparsity>() || base_.is<L1Ball>(),
                "tangent ball: doubled_sparsity needs a sparsity or l1 constraint");
        break;
      case Relaxation::FullBall:
        break;
    }
  }

  const ConstraintSpec& base() const { return base_; }
  const Vector& anchor() const { return anchor_; }
  Relaxation relaxation() const { return relaxation_; }
  Index dim() const { return base_.dim(); }

  /// Sparsity level s of the model: s for Sparsity, nnz(anchor) for the l1 ball.
  Index sparsity() const {
    if (base_.is<Sparsity>()) return base_.as<Sparsity>().s;
    return std::max<Index>(1, (anchor_.array() != 0.0).count());
  }

  /// Support size of the DoubledSparsity relaxation, capped at p.
  Index doubled_support() const { return std::min<Index>(2 * sparsity(), dim()); }

  /// Table width (squared) of the underlying model.
  double table_width_sq() const {
    switch (relaxation_) {
      case Relaxation::FullBall: return static_cast<double>(dim());
      case Relaxation::ExactSubspace: return width_table(base_);
      case Relaxation::DoubledSparsity: return width_table(base_, sparsity());
    }
    return static_cast<double>(dim());
  }

 private:
  ConstraintSpec base_;
  Vector anchor_;
  Relaxation relaxation_;
};

/// sup over the relaxation of |v^T g|, in closed form.
inline double relaxation_sup(const TangentBallSpec& T, const Vector& g) {
  switch (T.relaxation()) {
    case Relaxation::FullBall: return g.norm();
    case Relaxation::ExactSubspace: return (T.base().as<Subspace>().basis.transpose() * g).norm();
    case Relaxation::DoubledSparsity: return detail::top_k_norm(g, T.doubled_support());
  }
  return g.norm();
}

struct WidthEstimate {
  double estimate;
  double std_error;
};

/// Monte Carlo Gaussian width of the relaxation set.
inline WidthEstimate width_mc(const TangentBallSpec& T, Index n_mc, std::uint64_t seed) {
  require(n_mc >= 2, "width_mc: need at least 2 draws for a standard error");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Vector g(T.dim());
  double mean = 0.0;
  double m2 = 0.0;
  for (Index i = 0; i < n_mc; ++i) {
    for (Index j = 0; j < g.size(); ++j) g[j] = normal(rng);
    const double x = relaxation_sup(T, g);
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(n_mc - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_mc))};
}

}  // namespace blm
