#include "gbstring/grid.hpp"

#include <vector>

namespace gbs {

Eigen::ArrayXXd interpolate_sigma(const WorldsheetGrid& g,
                                  const Eigen::ArrayXXd& f,
                                  const Eigen::ArrayXXd& shift) {
  detail::check_shape(g, f);
  detail::check_shape(g, shift);
  const int n = g.n_sigma();
  const int half = n / 2;
  Eigen::MatrixXd cos_t(half + 1, n);
  Eigen::MatrixXd sin_t(half + 1, n);
  for (int m = 0; m <= half; ++m) {
    for (int k = 0; k < n; ++k) {
      cos_t(m, k) = std::cos(m * g.sigma(k));
      sin_t(m, k) = std::sin(m * g.sigma(k));
    }
  }
  Eigen::ArrayXXd out(g.n_tau(), n);
  std::vector<double> a(static_cast<std::size_t>(half + 1));
  std::vector<double> b(static_cast<std::size_t>(half + 1));
  for (int i = 0; i < g.n_tau(); ++i) {
    for (int m = 0; m <= half; ++m) {
      double ca = 0.0;
      double cb = 0.0;
      for (int k = 0; k < n; ++k) {
        ca += f(i, k) * cos_t(m, k);
        cb += f(i, k) * sin_t(m, k);
      }
      a[static_cast<std::size_t>(m)] = 2.0 * ca / n;
      b[static_cast<std::size_t>(m)] = 2.0 * cb / n;
    }
    for (int k = 0; k < n; ++k) {
      const double x = g.sigma(k) + shift(i, k);
      double v = 0.5 * a[0] + 0.5 * a[static_cast<std::size_t>(half)] *
                                  std::cos(half * x);
      for (int m = 1; m < half; ++m) {
        v += a[static_cast<std::size_t>(m)] * std::cos(m * x) +
             b[static_cast<std::size_t>(m)] * std::sin(m * x);
      }
      out(i, k) = v;
    }
  }
  return out;
}

}  // namespace gbs
