#ifndef GBSTRING_GRID_HPP
#define GBSTRING_GRID_HPP

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gbs {

/// Thrown when a grid or field is used with incompatible dimensions.
class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Periodic-sigma x bounded-tau discretization of the worldsheet coordinates.
///
/// Rows index tau (n_tau points including both ends of the window), columns
/// index sigma (n_sigma points on [0, 2pi), the point 2pi wraps to 0).
class WorldsheetGrid {
 public:
  WorldsheetGrid(int n_tau, int n_sigma, double tau_min, double tau_max)
      : n_tau_(n_tau), n_sigma_(n_sigma), tau_min_(tau_min), tau_max_(tau_max) {
    if (n_sigma < 8 || n_sigma % 2 != 0) {
      throw GridError("n_sigma must be even and >= 8, got " +
                      std::to_string(n_sigma));
    }
    if (n_tau < 9) {
      throw GridError("n_tau must be >= 9, got " + std::to_string(n_tau));
    }
    if (!(tau_max > tau_min) || !std::isfinite(tau_min) ||
        !std::isfinite(tau_max)) {
      throw GridError("tau window must satisfy tau_min < tau_max");
    }
    build_sigma_matrix();
  }

  int n_tau() const { return n_tau_; }
  int n_sigma() const { return n_sigma_; }
  double tau_min() const { return tau_min_; }
  double tau_max() const { return tau_max_; }
  double h_tau() const { return (tau_max_ - tau_min_) / (n_tau_ - 1); }
  double h_sigma() const { return 2.0 * std::numbers::pi / n_sigma_; }
  double tau(int i) const { return tau_min_ + i * h_tau(); }
  double sigma(int k) const { return k * h_sigma(); }
  Eigen::Index points() const {
    return static_cast<Eigen::Index>(n_tau_) * n_sigma_;
  }

  /// Periodic spectral differentiation matrix acting on a row of sigma samples.
  const Eigen::MatrixXd& sigma_diff_matrix() const { return d_sigma_; }

  /// Coordinate arrays of shape (n_tau, n_sigma).
  Eigen::ArrayXXd tau_coords() const {
    Eigen::ArrayXXd t(n_tau_, n_sigma_);
    for (int i = 0; i < n_tau_; ++i) t.row(i).setConstant(tau(i));
    return t;
  }
  Eigen::ArrayXXd sigma_coords() const {
    Eigen::ArrayXXd s(n_tau_, n_sigma_);
    for (int k = 0; k < n_sigma_; ++k) s.col(k).setConstant(sigma(k));
    return s;
  }

  bool operator==(const WorldsheetGrid& o) const {
    return n_tau_ == o.n_tau_ && n_sigma_ == o.n_sigma_ &&
           tau_min_ == o.tau_min_ && tau_max_ == o.tau_max_;
  }

 private:
  void build_sigma_matrix() {
    const int n = n_sigma_;
    const double h = h_sigma();
    d_sigma_.setZero(n, n);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (j == k) continue;
        const int d = j - k;
        const double sign = (d % 2 == 0) ? 1.0 : -1.0;
        d_sigma_(j, k) = 0.5 * sign / std::tan(0.5 * d * h);
      }
    }
  }

  int n_tau_;
  int n_sigma_;
  double tau_min_;
  double tau_max_;
  Eigen::MatrixXd d_sigma_;
};

using GridPtr = std::shared_ptr<const WorldsheetGrid>;

inline GridPtr make_grid(int n_tau, int n_sigma, double tau_min,
                         double tau_max) {
  return std::make_shared<const WorldsheetGrid>(n_tau, n_sigma, tau_min,
                                                tau_max);
}

template <typename Scalar>
using GridArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {
template <typename Derived>
void check_shape(const WorldsheetGrid& g, const Eigen::ArrayBase<Derived>& a) {
  if (a.rows() != g.n_tau() || a.cols() != g.n_sigma()) {
    throw GridError("array shape (" + std::to_string(a.rows()) + ", " +
                    std::to_string(a.cols()) + ") does not match grid (" +
                    std::to_string(g.n_tau()) + ", " +
                    std::to_string(g.n_sigma()) + ")");
  }
}
}  // namespace detail

/// Spectral derivative along the periodic sigma direction.
template <typename Derived>
GridArray<typename Derived::Scalar> d_sigma(
    const WorldsheetGrid& g, const Eigen::ArrayBase<Derived>& a) {
  detail::check_shape(g, a);
  using Scalar = typename Derived::Scalar;
  GridArray<Scalar> out =
      (a.matrix() * g.sigma_diff_matrix().template cast<Scalar>().transpose())
          .array();
  return out;
}

/// Fourth-order finite-difference derivative along tau. Central five-point
/// stencil in the interior, one-sided five-point stencils on the two rows
/// closest to each end.
template <typename Derived>
GridArray<typename Derived::Scalar> d_tau(const WorldsheetGrid& g,
                                          const Eigen::ArrayBase<Derived>& a) {
  detail::check_shape(g, a);
  using Scalar = typename Derived::Scalar;
  const int n = g.n_tau();
  const Scalar inv = Scalar(1) / (Scalar(12) * Scalar(g.h_tau()));
  GridArray<Scalar> out(n, g.n_sigma());
  const auto& f = a.derived();
  out.row(0) = (-25 * f.row(0) + 48 * f.row(1) - 36 * f.row(2) +
                16 * f.row(3) - 3 * f.row(4)) * inv;
  out.row(1) = (-3 * f.row(0) - 10 * f.row(1) + 18 * f.row(2) -
                6 * f.row(3) + f.row(4)) * inv;
  for (int i = 2; i < n - 2; ++i) {
    out.row(i) =
        (f.row(i - 2) - 8 * f.row(i - 1) + 8 * f.row(i + 1) - f.row(i + 2)) *
        inv;
  }
  out.row(n - 2) = (3 * f.row(n - 1) + 10 * f.row(n - 2) - 18 * f.row(n - 3) +
                    6 * f.row(n - 4) - f.row(n - 5)) * inv;
  out.row(n - 1) = (25 * f.row(n - 1) - 48 * f.row(n - 2) +
                    36 * f.row(n - 3) - 16 * f.row(n - 4) + 3 * f.row(n - 5)) *
                   inv;
  return out;
}

/// Derivative along worldsheet direction `a` (0 = tau, 1 = sigma).
template <typename Derived>
GridArray<typename Derived::Scalar> d_coord(const WorldsheetGrid& g, int a,
                                            const Eigen::ArrayBase<Derived>& f) {
  return a == 0 ? d_tau(g, f) : d_sigma(g, f);
}

/// Periodic trapezoid rule over the sigma circle at a fixed tau row.
template <typename Derived>
typename Derived::Scalar integrate_sigma_slice(
    const WorldsheetGrid& g, const Eigen::ArrayBase<Derived>& a, int tau_index) {
  detail::check_shape(g, a);
  if (tau_index < 0 || tau_index >= g.n_tau()) {
    throw GridError("tau_index " + std::to_string(tau_index) +
                    " out of range");
  }
  using Scalar = typename Derived::Scalar;
  Scalar sum(0);
  for (int k = 0; k < g.n_sigma(); ++k) sum += a.derived()(tau_index, k);
  return sum * Scalar(g.h_sigma());
}

/// Evaluates the trigonometric interpolant of each row at shifted sigma
/// positions: out(i, k) = f_i(sigma_k + shift(i, k)).
Eigen::ArrayXXd interpolate_sigma(const WorldsheetGrid& g,
                                  const Eigen::ArrayXXd& f,
                                  const Eigen::ArrayXXd& shift);

}  // namespace gbs

#endif  // GBSTRING_GRID_HPP
