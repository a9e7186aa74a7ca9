#include "gbstring/background.hpp"

#include "gbstring/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace gbs {

BackgroundSpacetime::BackgroundSpacetime(std::string name, int dim)
    : name_(std::move(name)), dim_(dim) {}

BackgroundSpacetime::BackgroundSpacetime(std::string name, int dim,
                                         MetricFn metric,
                                         ChristoffelFn christoffel,
                                         RiemannFn riemann)
    : name_(std::move(name)),
      dim_(dim),
      metric_(std::move(metric)),
      christoffel_(std::move(christoffel)),
      riemann_(std::move(riemann)) {
  if (dim_ < 3) {
    throw BackgroundError("spacetime dimension must be >= 3, got " +
                          std::to_string(dim_));
  }
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int sample = 0; sample < 8; ++sample) {
    Point x(dim_);
    for (int m = 0; m < dim_; ++m) x(m) = u(rng);

    const Eigen::MatrixXd g = metric_(x);
    if (g.rows() != dim_ || g.cols() != dim_) {
      throw BackgroundError("metric evaluator returned wrong shape");
    }
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + g.cwiseAbs().maxCoeff())) {
      throw BackgroundError("metric is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const auto& ev = es.eigenvalues();
    const int negatives = static_cast<int>((ev.array() < 0.0).count());
    if (negatives != 1 || (ev.array().abs() < 1e-14).any()) {
      throw BackgroundError("metric is not Lorentzian at a sampled point");
    }

    const RiemannTensor r = riemann_(x);
    if (r.dim() != dim_) throw BackgroundError("riemann evaluator dimension mismatch");
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b)
        for (int c = 0; c < dim_; ++c)
          for (int d = 0; d < dim_; ++d) {
            const double v = r(a, b, c, d);
            if (std::abs(v + r(b, a, c, d)) > 1e-10 ||
                std::abs(v + r(a, b, d, c)) > 1e-10 ||
                std::abs(v - r(c, d, a, b)) > 1e-10) {
              throw BackgroundError(
                  "riemann evaluator violates the algebraic symmetries");
            }
          }
  }
}

std::shared_ptr<const BackgroundSpacetime> BackgroundSpacetime::minkowski(int n) {
  if (n < 3) {
    throw BackgroundError(
        "minkowski: a string worldsheet needs n >= 3, got " + std::to_string(n));
  }
  auto bg = std::shared_ptr<BackgroundSpacetime>(
      new BackgroundSpacetime("minkowski", n));
  Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(n, n);
  eta(0, 0) = -1.0;
  bg->metric_ = [eta](const Point&) { return eta; };
  bg->christoffel_ = [n](const Point&) {
    return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n),
                                        Eigen::MatrixXd::Zero(n, n));
  };
  bg->riemann_ = [n](const Point&) { return RiemannTensor(n); };
  bg->flat_ = true;
  return bg;
}

Field riemann_frame_components(const BackgroundSpacetime& bg, const Field& X,
                               const Field& e, const Field& n) {
  const int codim = n.dim(0);
  Field out(X.grid_ptr(), {ws_lower(), ws_lower(), normal_index(codim),
                           normal_index(codim)});
  if (bg.is_flat()) return out;

  const int N = bg.dim();
  const auto& g = X.grid();
  BackgroundSpacetime::Point x(N);
  for (int p = 0; p < g.n_tau(); ++p) {
    for (int q = 0; q < g.n_sigma(); ++q) {
      for (int m = 0; m < N; ++m) x(m) = X(m)(p, q);
      const RiemannTensor r = bg.riemann(x);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int i = 0; i < codim; ++i)
            for (int j = 0; j < codim; ++j) {
              double s = 0.0;
              for (int al = 0; al < N; ++al)
                for (int be = 0; be < N; ++be)
                  for (int ga = 0; ga < N; ++ga)
                    for (int nu = 0; nu < N; ++nu) {
                      s += r(al, be, ga, nu) * n(j, al)(p, q) * e(a, be)(p, q) *
                           e(b, ga)(p, q) * n(i, nu)(p, q);
                    }
              out(a, b, i, j)(p, q) = s;
            }
    }
  }
  return out;
}

Field riemann_contract(const BackgroundSpacetime& bg, const Field& X,
                       const Field& e, const Field& n, const Field& gamma_inv) {
  if (e.rank() != 2 || n.rank() != 2 || gamma_inv.rank() != 2 ||
      e.dim(1) != bg.dim() || n.dim(1) != bg.dim() || X.dim(0) != bg.dim()) {
    throw GridError("riemann_contract: index-dimension mismatch");
  }
  const Field frame = riemann_frame_components(bg, X, e, n);
  if (bg.is_flat()) {
    return Field(X.grid_ptr(), {normal_index(n.dim(0)), normal_index(n.dim(0))});
  }
  return einsum("ab,abij->ij", gamma_inv, frame);
}

}  // namespace gbs
