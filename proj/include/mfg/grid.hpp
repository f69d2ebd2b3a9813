#pragma once

// Periodic grid functions on the unit torus and the elementary finite
// difference operators, norms and semi-norms built on them.
//
// Storage convention: a grid function with n points per axis is an n x n
// row-major Eigen matrix, entry (i, j) approximates the value at
// x_{i,j} = (i h, j h) with h = 1/n. Flattened index is i * n + j (j fastest).

#include <Eigen/Core>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mfg/error.hpp"

namespace mfg {

template <typename Scalar>
using GridMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;

/// Node index on the periodic grid.
struct NodeIndex {
  int i = 0;
  int j = 0;
};

inline int wrap(int k, int n) {
  const int r = k % n;
  return r < 0 ? r + n : r;
}

/// Scalar field on the periodic n x n grid of the unit torus.
template <typename Scalar>
class BasicGridFunction {
 public:
  using scalar_type = Scalar;
  using FlatMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using ConstFlatMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

  static constexpr int kMinPoints = 4;

  BasicGridFunction() = default;

  explicit BasicGridFunction(int n, Scalar fill = Scalar(0)) : n_(check_size(n)), values_(n, n) {
    values_.setConstant(fill);
  }

  explicit BasicGridFunction(GridMatrix<Scalar> values) : n_(check_size(static_cast<int>(values.rows()))), values_(std::move(values)) {
    if (values_.cols() != values_.rows()) throw InvalidArgument("grid function must be square");
  }

  /// Samples f(x1, x2) at the grid nodes.
  template <typename F>
  static BasicGridFunction sample(int n, F&& f) {
    BasicGridFunction out(n);
    const Scalar h = Scalar(1) / Scalar(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.values_(i, j) = static_cast<Scalar>(f(i * h, j * h));
    return out;
  }

  static BasicGridFunction from_flat(int n, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& flat) {
    BasicGridFunction out(n);
    if (flat.size() != Eigen::Index(n) * n) throw InvalidArgument("flat vector size does not match grid");
    out.flat() = flat;
    return out;
  }

  int size() const { return n_; }
  Scalar h() const { return Scalar(1) / Scalar(n_); }
  Eigen::Index node_count() const { return Eigen::Index(n_) * n_; }

  Scalar operator()(int i, int j) const { return values_(wrap(i, n_), wrap(j, n_)); }
  Scalar& operator()(int i, int j) { return values_(wrap(i, n_), wrap(j, n_)); }
  Scalar operator()(NodeIndex x) const { return (*this)(x.i, x.j); }

  const GridMatrix<Scalar>& values() const { return values_; }
  GridMatrix<Scalar>& values() { return values_; }

  FlatMap flat() { return FlatMap(values_.data(), node_count()); }
  ConstFlatMap flat() const { return ConstFlatMap(values_.data(), node_count()); }

  Eigen::Index flat_index(int i, int j) const { return Eigen::Index(wrap(i, n_)) * n_ + wrap(j, n_); }

  BasicGridFunction& operator+=(const BasicGridFunction& o) { check_same(o); values_ += o.values_; return *this; }
  BasicGridFunction& operator-=(const BasicGridFunction& o) { check_same(o); values_ -= o.values_; return *this; }
  BasicGridFunction& operator*=(Scalar a) { values_ *= a; return *this; }

  friend BasicGridFunction operator+(BasicGridFunction a, const BasicGridFunction& b) { return a += b; }
  friend BasicGridFunction operator-(BasicGridFunction a, const BasicGridFunction& b) { return a -= b; }
  friend BasicGridFunction operator*(Scalar s, BasicGridFunction a) { return a *= s; }
  friend BasicGridFunction operator*(BasicGridFunction a, Scalar s) { return a *= s; }

  bool operator==(const BasicGridFunction& o) const { return n_ == o.n_ && values_ == o.values_; }

  void check_same(const BasicGridFunction& o) const {
    if (o.n_ != n_) throw InvalidArgument("grid size mismatch");
  }

 private:
  static int check_size(int n) {
    if (n < kMinPoints) throw InvalidArgument("grid needs at least 4 points per axis");
    return n;
  }

  int n_ = 0;
  GridMatrix<Scalar> values_;
};

/// The four one-sided differences at each node, stored one row per node in
/// flat order: (D1+ v)_{i,j}, (D1+ v)_{i-1,j}, (D2+ v)_{i,j}, (D2+ v)_{i,j-1}.
template <typename Scalar>
class BasicVectorField4 {
 public:
  BasicVectorField4() = default;
  explicit BasicVectorField4(int n) : n_(n), values_(Eigen::Index(n) * n, 4) { values_.setZero(); }

  int size() const { return n_; }
  Vector4<Scalar> operator()(int i, int j) const { return values_.row(Eigen::Index(wrap(i, n_)) * n_ + wrap(j, n_)).transpose(); }
  auto row(int i, int j) { return values_.row(Eigen::Index(wrap(i, n_)) * n_ + wrap(j, n_)); }

  const Eigen::Matrix<Scalar, Eigen::Dynamic, 4>& values() const { return values_; }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 4>& values() { return values_; }

 private:
  int n_ = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 4> values_;
};

/// Time-indexed family of grid functions, slices n = 0..n_t, dt = T / n_t.
template <typename Scalar>
class BasicTrajectory {
 public:
  BasicTrajectory() = default;

  BasicTrajectory(int n_t, Scalar dt, const BasicGridFunction<Scalar>& fill) : n_t_(n_t), dt_(dt), slices_(static_cast<std::size_t>(n_t) + 1, fill) {
    if (n_t < 1) throw InvalidArgument("trajectory needs at least one time step");
    if (!(dt > 0)) throw InvalidArgument("time step must be positive");
  }

  BasicTrajectory(Scalar dt, std::vector<BasicGridFunction<Scalar>> slices) : n_t_(static_cast<int>(slices.size()) - 1), dt_(dt), slices_(std::move(slices)) {
    if (n_t_ < 1) throw InvalidArgument("trajectory needs at least two slices");
    if (!(dt > 0)) throw InvalidArgument("time step must be positive");
    for (const auto& s : slices_) slices_.front().check_same(s);
  }

  int steps() const { return n_t_; }
  Scalar dt() const { return dt_; }
  Scalar horizon() const { return dt_ * Scalar(n_t_); }
  int grid_size() const { return slices_.front().size(); }

  const BasicGridFunction<Scalar>& operator[](int n) const { return slices_.at(static_cast<std::size_t>(n)); }
  BasicGridFunction<Scalar>& operator[](int n) { return slices_.at(static_cast<std::size_t>(n)); }

  const std::vector<BasicGridFunction<Scalar>>& slices() const { return slices_; }

  bool operator==(const BasicTrajectory& o) const { return n_t_ == o.n_t_ && dt_ == o.dt_ && slices_ == o.slices_; }

 private:
  int n_t_ = 0;
  Scalar dt_ = 0;
  std::vector<BasicGridFunction<Scalar>> slices_;
};

using GridFunction = BasicGridFunction<double>;
using VectorField4 = BasicVectorField4<double>;
using Trajectory = BasicTrajectory<double>;
using Vec4 = Vector4<double>;

// ---------------------------------------------------------------------------
// Elementary operators

template <typename Scalar>
BasicGridFunction<Scalar> d1_plus(const BasicGridFunction<Scalar>& v) {
  const int n = v.size();
  const Scalar inv_h = Scalar(n);
  BasicGridFunction<Scalar> out(n);
  for (int i = 0; i < n; ++i) {
    const int ip = wrap(i + 1, n);
    for (int j = 0; j < n; ++j) out.values()(i, j) = (v.values()(ip, j) - v.values()(i, j)) * inv_h;
  }
  return out;
}

template <typename Scalar>
BasicGridFunction<Scalar> d2_plus(const BasicGridFunction<Scalar>& v) {
  const int n = v.size();
  const Scalar inv_h = Scalar(n);
  BasicGridFunction<Scalar> out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.values()(i, j) = (v.values()(i, wrap(j + 1, n)) - v.values()(i, j)) * inv_h;
  return out;
}

template <typename Scalar>
BasicVectorField4<Scalar> nabla_h(const BasicGridFunction<Scalar>& v) {
  const int n = v.size();
  const auto d1 = d1_plus(v);
  const auto d2 = d2_plus(v);
  BasicVectorField4<Scalar> out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.row(i, j) << d1(i, j), d1(i - 1, j), d2(i, j), d2(i, j - 1);
  return out;
}

/// Five-point Laplacian.
template <typename Scalar>
BasicGridFunction<Scalar> laplace_h(const BasicGridFunction<Scalar>& v) {
  const int n = v.size();
  const Scalar inv_h2 = Scalar(n) * Scalar(n);
  BasicGridFunction<Scalar> out(n);
  const auto& a = v.values();
  for (int i = 0; i < n; ++i) {
    const int ip = wrap(i + 1, n), im = wrap(i - 1, n);
    for (int j = 0; j < n; ++j) {
      const int jp = wrap(j + 1, n), jm = wrap(j - 1, n);
      out.values()(i, j) = -(Scalar(4) * a(i, j) - a(ip, j) - a(im, j) - a(i, jp) - a(i, jm)) * inv_h2;
    }
  }
  return out;
}

/// Sparse matrix of the five-point Laplacian in flat ordering.
inline Eigen::SparseMatrix<double, Eigen::RowMajor> laplace_matrix(int n) {
  const double inv_h2 = double(n) * n;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(5) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Index r = Eigen::Index(i) * n + j;
      t.emplace_back(r, r, -4.0 * inv_h2);
      t.emplace_back(r, Eigen::Index(wrap(i + 1, n)) * n + j, inv_h2);
      t.emplace_back(r, Eigen::Index(wrap(i - 1, n)) * n + j, inv_h2);
      t.emplace_back(r, Eigen::Index(i) * n + wrap(j + 1, n), inv_h2);
      t.emplace_back(r, Eigen::Index(i) * n + wrap(j - 1, n), inv_h2);
    }
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(Eigen::Index(n) * n, Eigen::Index(n) * n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

// ---------------------------------------------------------------------------
// Norms. All reductions run in flat row-major order.

/// Discrete L^2 scalar product h^2 sum v w.
template <typename Scalar>
Scalar inner(const BasicGridFunction<Scalar>& v, const BasicGridFunction<Scalar>& w) {
  v.check_same(w);
  const auto a = v.flat();
  const auto b = w.flat();
  Scalar s = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s * v.h() * v.h();
}

/// Compensated (Neumaier) sum, so that mass drift checks measure the scheme
/// rather than the reduction.
template <typename Scalar>
Scalar mass(const BasicGridFunction<Scalar>& v) {
  using std::abs;
  const auto a = v.flat();
  Scalar s = 0, c = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const Scalar t = s + a[k];
    c += abs(s) >= abs(a[k]) ? (s - t) + a[k] : (a[k] - t) + s;
    s = t;
  }
  return (s + c) * v.h() * v.h();
}

inline void check_exponent(double s) {
  if (!(s >= 1.0) || !std::isfinite(s)) throw InvalidArgument("norm exponent must lie in [1, inf)");
}

/// h^2 sum |v|^s, the s-th power of the L^s norm.
template <typename Scalar>
Scalar lp_norm_pow(const BasicGridFunction<Scalar>& v, Scalar s) {
  check_exponent(double(s));
  const auto a = v.flat();
  Scalar acc = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) acc += std::pow(std::abs(a[k]), s);
  return acc * v.h() * v.h();
}

template <typename Scalar>
Scalar lp_norm(const BasicGridFunction<Scalar>& v, Scalar s) {
  return std::pow(lp_norm_pow(v, s), Scalar(1) / s);
}

/// h^2 sum ((D1+ v)^2 + (D2+ v)^2)^{s/2}.
template <typename Scalar>
Scalar w1s_seminorm_pow(const BasicGridFunction<Scalar>& v, Scalar s) {
  check_exponent(double(s));
  const auto d1 = d1_plus(v);
  const auto d2 = d2_plus(v);
  const auto a = d1.flat();
  const auto b = d2.flat();
  Scalar acc = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) acc += std::pow(a[k] * a[k] + b[k] * b[k], s / Scalar(2));
  return acc * v.h() * v.h();
}

template <typename Scalar>
Scalar w1s_seminorm(const BasicGridFunction<Scalar>& v, Scalar s) {
  return std::pow(w1s_seminorm_pow(v, s), Scalar(1) / s);
}

template <typename Scalar>
Scalar h1_seminorm(const BasicGridFunction<Scalar>& v) {
  return w1s_seminorm(v, Scalar(2));
}

/// Result of an inner (I - Delta_h) solve.
struct HelmholtzSolveInfo {
  int iterations = 0;
  double relative_residual = 0;
};

/// Solves (I - Delta_h) w = v by conjugate gradients.
inline GridFunction solve_helmholtz(const GridFunction& v, double tol = 1e-12, HelmholtzSolveInfo* info = nullptr) {
  const int n = v.size();
  Eigen::SparseMatrix<double, Eigen::RowMajor> a = -laplace_matrix(n);
  for (Eigen::Index k = 0; k < a.rows(); ++k) a.coeffRef(k, k) += 1.0;
  const Eigen::VectorXd rhs = v.flat();
  GridFunction w(n);
  if (rhs.squaredNorm() == 0.0) return w;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(static_cast<Eigen::Index>(10) * a.rows() + 100);
  cg.compute(a);
  w.flat() = cg.solve(rhs);
  const double rel = (rhs - a * w.flat()).norm() / rhs.norm();
  if (info) *info = {static_cast<int>(cg.iterations()), rel};
  // CG reports its own estimate; check the true residual with some slack for roundoff.
  if (!(rel <= 10 * tol)) throw LinearSolveFailure("H^-1 inner solve did not converge", rel);
  return w;
}

/// Dual norm of H^1 on the grid: sqrt((v, (I - Delta_h)^{-1} v)).
inline double h_minus1_norm(const GridFunction& v) {
  const GridFunction w = solve_helmholtz(v);
  return std::sqrt(std::max(0.0, inner(v, w)));
}

/// (Delta t sum_{n in [first, last]} ||w^n||_{L^s}^s)^{1/s}.
template <typename Scalar>
Scalar space_time_norm(const BasicTrajectory<Scalar>& traj, Scalar s, int first, int last) {
  check_exponent(double(s));
  if (first < 0 || last > traj.steps() || first > last) throw InvalidArgument("time window outside 0..N_T");
  Scalar acc = 0;
  for (int n = first; n <= last; ++n) acc += lp_norm_pow(traj[n], s);
  return std::pow(traj.dt() * acc, Scalar(1) / s);
}

template <typename Scalar>
Scalar space_time_norm(const BasicTrajectory<Scalar>& traj, Scalar s) {
  return space_time_norm(traj, s, 0, traj.steps());
}

/// Both sides of the discrete Sobolev inequality without its constant:
/// (||v||_{L^s}, ||v||_{L^2} + |v|_{H^1}).
template <typename Scalar>
std::pair<Scalar, Scalar> sobolev_check(const BasicGridFunction<Scalar>& v, Scalar s) {
  return {lp_norm(v, s), lp_norm(v, Scalar(2)) + h1_seminorm(v)};
}

}  // namespace mfg
