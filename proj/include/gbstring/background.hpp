#ifndef GBSTRING_BACKGROUND_HPP
#define GBSTRING_BACKGROUND_HPP

#include "gbstring/field.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gbs {

class BackgroundError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// All-lower Riemann tensor R_{alpha beta gamma nu} at one spacetime point.
class RiemannTensor {
 public:
  explicit RiemannTensor(int dim) : dim_(dim), v_(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}
  int dim() const { return dim_; }
  double& operator()(int a, int b, int c, int d) { return v_[flat(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return v_[flat(a, b, c, d)]; }

 private:
  std::size_t flat(int a, int b, int c, int d) const {
    return static_cast<std::size_t>(((a * dim_ + b) * dim_ + c) * dim_ + d);
  }
  int dim_;
  std::vector<double> v_;
};

/// The ambient spacetime, signature (-, +, ..., +), given by analytic
/// evaluators. Curvature is never obtained by differentiating the metric.
class BackgroundSpacetime {
 public:
  using Point = Eigen::VectorXd;
  using MetricFn = std::function<Eigen::MatrixXd(const Point&)>;
  /// Returns Gamma^lambda_{mu nu} as one (mu, nu) matrix per lambda.
  using ChristoffelFn = std::function<std::vector<Eigen::MatrixXd>(const Point&)>;
  using RiemannFn = std::function<RiemannTensor(const Point&)>;

  /// Validates the evaluators on deterministic sample points: symmetric
  /// Lorentzian metric and the algebraic symmetries of the Riemann tensor.
  BackgroundSpacetime(std::string name, int dim, MetricFn metric,
                      ChristoffelFn christoffel, RiemannFn riemann);

  static std::shared_ptr<const BackgroundSpacetime> minkowski(int n);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  bool is_flat() const { return flat_; }

  Eigen::MatrixXd metric(const Point& x) const { return metric_(x); }
  std::vector<Eigen::MatrixXd> christoffel(const Point& x) const {
    return christoffel_(x);
  }
  RiemannTensor riemann(const Point& x) const { return riemann_(x); }

 private:
  BackgroundSpacetime(std::string name, int dim);

  std::string name_;
  int dim_;
  bool flat_ = false;
  MetricFn metric_;
  ChristoffelFn christoffel_;
  RiemannFn riemann_;
};

using BackgroundPtr = std::shared_ptr<const BackgroundSpacetime>;

inline BackgroundPtr minkowski(int n) { return BackgroundSpacetime::minkowski(n); }

/// Frame components g(R(e_a, n_j) e_b, n_i) = R_{alpha beta gamma nu}
/// n_j^alpha e_a^beta e_b^gamma n_i^nu, with slots (a, b, i, j).
///
/// `X` has slots (spacetime), `e` (ws_lower, spacetime), `n` (normal,
/// spacetime). Flat backgrounds return zeros without evaluating anything.
Field riemann_frame_components(const BackgroundSpacetime& bg, const Field& X,
                               const Field& e, const Field& n);

/// M^i_j = gamma^{ab} g(R(e_a, n_j) e_b, n^i), slots (normal i, normal j).
Field riemann_contract(const BackgroundSpacetime& bg, const Field& X,
                       const Field& e, const Field& n, const Field& gamma_inv);

}  // namespace gbs

#endif  // GBSTRING_BACKGROUND_HPP
