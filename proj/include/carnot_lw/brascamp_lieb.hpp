#pragma once

// Linear Brascamp-Lieb data (L_j, q_j): validity checks, the closed-form quotient
// for centered Gaussian inputs exp(-pi <A_j t, t>), and estimation of BL(L, q)
// by ascent over positive-definite A_j in log-Cholesky coordinates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "carnot_lw/error.hpp"

namespace carnot_lw {

struct BLDatum {
  int k = 0;
  std::vector<Eigen::MatrixXd> maps;  // k_j x k, full row rank
  std::vector<double> exps;           // q_j >= 0

  std::size_t m() const { return maps.size(); }

  void validate() const {
    require(k >= 1, "datum dimension k must be positive");
    require(!maps.empty(), "datum needs at least one map");
    require(maps.size() == exps.size(), "datum needs one exponent per map");
    for (std::size_t j = 0; j < maps.size(); ++j) {
      const auto& L = maps[j];
      require(L.cols() == k, "map " + std::to_string(j) + " must have k columns");
      require(L.rows() >= 1 && L.rows() <= k, "map " + std::to_string(j) + " has an invalid row count");
      require(std::isfinite(exps[j]) && exps[j] >= 0.0, "exponents must be finite and nonnegative");
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
      const double smax = svd.singularValues()(0);
      require(smax > 0.0 && svd.singularValues()(L.rows() - 1) > 1e-12 * smax,
              "map " + std::to_string(j) + " is not surjective");
    }
  }
};

struct GaussianInput {
  std::vector<Eigen::MatrixXd> mats;  // symmetric positive definite, k_j x k_j
};

inline BLDatum datum_from_json(const nlohmann::json& j) {
  BLDatum d;
  try {
    d.k = j.at("k").get<int>();
    for (const auto& m : j.at("maps")) {
      const auto rows = m.get<std::vector<std::vector<double>>>();
      require(!rows.empty(), "datum map with no rows");
      Eigen::MatrixXd L(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r].size() == rows[0].size(), "datum map rows have unequal length");
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          L(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      d.maps.push_back(std::move(L));
    }
    d.exps = j.at("exps").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed datum: ") + e.what());
  }
  d.validate();
  return d;
}

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json to_json(const BLDatum& d) {
  nlohmann::json maps = nlohmann::json::array();
  for (const auto& L : d.maps) maps.push_back(to_json(L));
  return {{"k", d.k}, {"maps", maps}, {"exps", d.exps}};
}

/// Coordinate-deletion matrix: identity on R^k with the listed rows removed.
inline Eigen::MatrixXd deletion_matrix(int k, std::vector<int> deleted) {
  std::sort(deleted.begin(), deleted.end());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k - static_cast<int>(deleted.size()), k);
  int r = 0;
  for (int c = 0; c < k; ++c)
    if (!std::binary_search(deleted.begin(), deleted.end(), c)) P(r++, c) = 1.0;
  return P;
}

/// Loomis-Whitney datum on R^k: the k coordinate deletions with q = 1/(k-1).
inline BLDatum lw_datum(int k) {
  require(k >= 2, "Loomis-Whitney datum needs k >= 2");
  BLDatum d{k, {}, {}};
  for (int j = 0; j < k; ++j) {
    d.maps.push_back(deletion_matrix(k, {j}));
    d.exps.push_back(1.0 / (k - 1));
  }
  return d;
}

/// On R^{2n}: delete coordinate pair (2j, 2j+1) for each j, q = 1/(n-1).
inline BLDatum pair_deletion_datum(int n) {
  require(n >= 2, "pair-deletion datum needs n >= 2");
  BLDatum d{2 * n, {}, {}};
  for (int j = 0; j < n; ++j) {
    d.maps.push_back(deletion_matrix(2 * n, {2 * j, 2 * j + 1}));
    d.exps.push_back(1.0 / (n - 1));
  }
  return d;
}

/// Differentials at the identity of all d+2n+1 projections of a corank-1 group of
/// topological dimension `topo_dim`: coordinate deletions with q = 1/(topo_dim - 1).
inline BLDatum corank_linearized_datum(int topo_dim) { return lw_datum(topo_dim); }

inline bool check_scaling(const BLDatum& d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d.m(); ++j) s += d.exps[j] * static_cast<double>(d.maps[j].rows());
  return std::abs(s - d.k) <= 1e-12 * std::max(1.0, static_cast<double>(d.k));
}

inline bool check_geometric(const BLDatum& d, double tol = 1e-10) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d.k, d.k);
  for (std::size_t j = 0; j < d.m(); ++j) {
    const auto& L = d.maps[j];
    const Eigen::MatrixXd llt = L * L.transpose();
    if ((llt - Eigen::MatrixXd::Identity(L.rows(), L.rows())).cwiseAbs().maxCoeff() > tol) return false;
    sum += d.exps[j] * L.transpose() * L;
  }
  return (sum - Eigen::MatrixXd::Identity(d.k, d.k)).cwiseAbs().maxCoeff() <= tol;
}

inline int numerical_rank(const Eigen::MatrixXd& m, double tol = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  int r = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

struct DimensionViolation {
  Eigen::MatrixXd basis;  // k x dim V, orthonormal columns
  int dim = 0;
  double weighted_image_dim = 0.0;  // sum q_j dim(L_j V)
};

/// Tests dim V <= sum q_j dim(L_j V) on the supplied subspaces (columns span V) and on
/// `extra_random` random subspaces of random dimension. A sampled necessary check only.
inline std::vector<DimensionViolation> check_dimension_sampled(const BLDatum& d,
                                                               const std::vector<Eigen::MatrixXd>& subspaces,
                                                               int extra_random, std::uint64_t seed) {
  std::vector<DimensionViolation> out;
  auto test = [&](const Eigen::MatrixXd& spanning) {
    require(spanning.rows() == d.k, "subspace basis must have k rows");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(spanning, Eigen::ComputeThinU);
    const int dim = numerical_rank(spanning);
    if (dim == 0) return;
    Eigen::MatrixXd basis = svd.matrixU().leftCols(dim);
    double rhs = 0.0;
    for (std::size_t j = 0; j < d.m(); ++j) rhs += d.exps[j] * numerical_rank(d.maps[j] * basis);
    if (static_cast<double>(dim) > rhs + 1e-12) out.push_back({basis, dim, rhs});
  };
  for (const auto& v : subspaces) test(v);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim_dist(1, d.k);
  std::normal_distribution<double> normal;
  for (int i = 0; i < extra_random; ++i) {
    const int dim = dim_dist(rng);
    Eigen::MatrixXd v(d.k, dim);
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) = normal(rng);
    test(v);
  }
  return out;
}

/// All 2^k - 1 nonzero coordinate subspaces of R^k.
inline std::vector<Eigen::MatrixXd> coordinate_subspaces(int k) {
  std::vector<Eigen::MatrixXd> out;
  for (unsigned mask = 1; mask < (1U << k); ++mask) {
    std::vector<int> axes;
    for (int i = 0; i < k; ++i)
      if (mask & (1U << i)) axes.push_back(i);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(axes.size()));
    for (std::size_t c = 0; c < axes.size(); ++c) b(axes[c], static_cast<Eigen::Index>(c)) = 1.0;
    out.push_back(std::move(b));
  }
  return out;
}

inline constexpr double kMaxConditionNumber = 1e12;

/// ln of prod_j det(A_j)^{q_j/2} / det(sum_j q_j L_j^T A_j L_j)^{1/2}.
/// Throws NumericalError when the accumulated matrix is singular or worse conditioned
/// than 1e12 (the quotient is unbounded along that direction).
inline double log_gaussian_quotient(const BLDatum& d, const GaussianInput& gin) {
  require(gin.mats.size() == d.m(), "need one Gaussian matrix per map");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d.k, d.k);
  double num = 0.0;
  for (std::size_t j = 0; j < d.m(); ++j) {
    const auto& A = gin.mats[j];
    require(A.rows() == d.maps[j].rows() && A.cols() == A.rows(), "Gaussian matrix has the wrong shape");
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    require((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "Gaussian matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    require(es.eigenvalues()(0) > 0.0, "Gaussian matrix must be positive definite");
    num += 0.5 * d.exps[j] * es.eigenvalues().array().log().sum();
    acc += d.exps[j] * d.maps[j].transpose() * A * d.maps[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acc, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(d.k - 1);
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber)
    throw NumericalError("accumulated matrix sum q_j L_j^T A_j L_j is singular");
  return num - 0.5 * es.eigenvalues().array().log().sum();
}

/// Condition number of sum_j q_j L_j^T A_j L_j (infinite when singular).
inline double accumulated_condition(const BLDatum& d, const GaussianInput& gin) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d.k, d.k);
  for (std::size_t j = 0; j < d.m(); ++j) acc += d.exps[j] * d.maps[j].transpose() * gin.mats[j] * d.maps[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acc, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(d.k - 1);
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// An ascent that ends this close to the conditioning guard is heading for the
// degenerate direction along which the quotient is unbounded.
inline constexpr double kDegenerateCondition = 1e10;

inline double gaussian_quotient(const BLDatum& d, const GaussianInput& gin) {
  return std::exp(log_gaussian_quotient(d, gin));
}

struct BLOptions {
  int iters = 400;
  double step = 0.5;  // initial trial step of the line search
  std::uint64_t seed = 0;
  int random_starts = 3;
  bool include_identity_start = true;
  double grad_tol = 1e-10;
};

struct BLResult {
  double estimate = 0.0;  // +inf when the constant is infinite
  bool infinite = false;
  bool converged = false;
  std::string reason;
  GaussianInput argmax;
  std::vector<double> history;  // best-so-far quotient after every iteration, all starts
};

namespace detail {

inline std::vector<Eigen::Index> block_sizes(const BLDatum& d) {
  std::vector<Eigen::Index> s;
  for (const auto& L : d.maps) s.push_back(L.rows());
  return s;
}

// theta packs, per map, the lower triangle of a Cholesky factor with log diagonal.
inline GaussianInput unpack(const BLDatum& d, const Eigen::VectorXd& theta) {
  GaussianInput gin;
  Eigen::Index p = 0;
  for (auto n : block_sizes(d)) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c <= r; ++c) C(r, c) = (r == c) ? std::exp(theta(p++)) : theta(p++);
    Eigen::MatrixXd A = C * C.transpose();
    gin.mats.push_back(0.5 * (A + A.transpose()));
  }
  return gin;
}

inline Eigen::Index num_params(const BLDatum& d) {
  Eigen::Index s = 0;
  for (auto n : block_sizes(d)) s += n * (n + 1) / 2;
  return s;
}

// ln quotient, or -inf when the accumulated matrix is too ill-conditioned.
inline double objective(const BLDatum& d, const Eigen::VectorXd& theta) {
  try {
    return log_gaussian_quotient(d, unpack(d, theta));
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace detail

/// Lower bound on BL(L, q) from ascent over centered Gaussians (exact at convergence
/// by Lieb's theorem). Multi-start: identity inputs first, then seeded random starts.
inline BLResult bl_constant(const BLDatum& d, const BLOptions& opts = {}) {
  d.validate();
  BLResult res;
  if (!check_scaling(d)) {
    res.estimate = std::numeric_limits<double>::infinity();
    res.infinite = true;
    res.reason = "scaling condition k = sum q_j k_j fails";
    return res;
  }
  const Eigen::Index np = detail::num_params(d);
  std::vector<Eigen::VectorXd> starts;
  if (opts.include_identity_start) starts.push_back(Eigen::VectorXd::Zero(np));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  for (int s = 0; s < opts.random_starts; ++s) {
    Eigen::VectorXd th(np);
    for (Eigen::Index i = 0; i < np; ++i) th(i) = normal(rng);
    starts.push_back(th);
  }
  require(!starts.empty(), "bl_constant needs at least one start");

  const double blowup = std::log(1e8);
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = starts.front();
  bool any_converged = false, blocked = false, any_finite_start = false;
  const double h = 1e-6;

  for (const auto& start : starts) {
    Eigen::VectorXd th = start;
    double f = detail::objective(d, th);
    if (!std::isfinite(f)) continue;
    any_finite_start = true;
    auto gradient = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd g(np);
      Eigen::VectorXd y = x;
      for (Eigen::Index i = 0; i < np; ++i) {
        y(i) = x(i) + h;
        const double fp = detail::objective(d, y);
        y(i) = x(i) - h;
        const double fm = detail::objective(d, y);
        y(i) = x(i);
        if (std::isfinite(fp) && std::isfinite(fm))
          g(i) = (fp - fm) / (2 * h);
        else if (std::isfinite(fp))
          g(i) = (fp - f) / h;
        else if (std::isfinite(fm))
          g(i) = (f - fm) / h;
        else
          g(i) = 0.0;
      }
      return g;
    };
    Eigen::VectorXd g = gradient(th);
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(np, np);  // BFGS inverse-Hessian of -f
    bool start_converged = false;
    for (int it = 0; it < opts.iters; ++it) {
      if (f > best) {
        best = f;
        best_theta = th;
      }
      res.history.push_back(std::exp(best));
      if (best > blowup) break;
      if (g.norm() < opts.grad_tol) {
        start_converged = true;
        break;
      }
      Eigen::VectorXd dir = Hinv * g;
      if (dir.dot(g) <= 0.0) {
        Hinv.setIdentity();
        dir = g;
      }
      double step = opts.step;
      if (dir.norm() * step > 2.0) step = 2.0 / dir.norm();
      Eigen::VectorXd th_new;
      double f_new = -std::numeric_limits<double>::infinity();
      bool accepted = false, hit_guard = false;
      for (int ls = 0; ls < 60; ++ls) {
        th_new = th + step * dir;
        f_new = detail::objective(d, th_new);
        if (!std::isfinite(f_new)) hit_guard = true;
        if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * dir.dot(g)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        if (hit_guard && g.norm() > 1e-6) blocked = true;
        start_converged = g.norm() < 1e-6;
        break;
      }
      const Eigen::VectorXd g_new = gradient(th_new);
      // BFGS update for minimizing -f: s = dx, y = -(g_new - g)
      const Eigen::VectorXd s = th_new - th;
      const Eigen::VectorXd y = -(g_new - g);
      const double sy = s.dot(y);
      if (sy > 1e-14) {
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(np, np);
        const double rho = 1.0 / sy;
        Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
      }
      const bool stalled = std::abs(f_new - f) < 1e-15 * std::max(1.0, std::abs(f));
      th = th_new;
      f = f_new;
      g = g_new;
      if (stalled) {
        start_converged = g.norm() < 1e-6;
        if (f > best) {
          best = f;
          best_theta = th;
        }
        res.history.push_back(std::exp(best));
        break;
      }
    }
    if (f > best) {
      best = f;
      best_theta = th;
    }
    any_converged = any_converged || start_converged;
  }

  if (!any_finite_start) {
    res.estimate = std::numeric_limits<double>::infinity();
    res.infinite = true;
    res.reason = "accumulated matrix singular for every start; dimension condition fails";
    return res;
  }
  res.argmax = detail::unpack(d, best_theta);
  if (best > blowup || (blocked && !any_converged) ||
      accumulated_condition(d, res.argmax) > kDegenerateCondition) {
    res.estimate = std::numeric_limits<double>::infinity();
    res.infinite = true;
    res.reason = "quotient grows without bound toward a degenerate direction; dimension condition fails";
    return res;
  }
  res.estimate = std::exp(best);
  res.converged = any_converged;
  return res;
}

}  // namespace carnot_lw
