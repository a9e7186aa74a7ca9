#include <doctest.h>

#include "gbstring/background.hpp"
#include "gbstring/tensor.hpp"

#include <cmath>
#include <random>

using namespace gbs;

namespace {

/// Constant-curvature tensor K (g_ac g_bd - g_ad g_bc) over a flat metric.
BackgroundPtr constant_curvature(int n, double K) {
  Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(n, n);
  eta(0, 0) = -1;
  return std::make_shared<const BackgroundSpacetime>(
      "constant_curvature", n, [eta](const Eigen::VectorXd&) { return eta; },
      [n](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
      },
      [eta, n, K](const Eigen::VectorXd&) {
        RiemannTensor r(n);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
              for (int d = 0; d < n; ++d)
                r(a, b, c, d) = K * (eta(a, c) * eta(b, d) - eta(a, d) * eta(b, c));
        return r;
      });
}

struct FlatSheet {
  GridPtr grid = make_grid(9, 8, 0.0, 1.0);
  Field X{grid, {spacetime_index(4)}};
  Field e{grid, {ws_lower(), spacetime_index(4)}};
  Field n{grid, {normal_index(2), spacetime_index(4)}};
  Field gamma_inv{grid, {ws_upper(), ws_upper()}};
  FlatSheet() {
    for (int a = 0; a < 2; ++a) e(a, a).setOnes();
    n(0, 2).setOnes();
    n(1, 3).setOnes();
    gamma_inv(0, 0).setConstant(-1);
    gamma_inv(1, 1).setConstant(1);
  }
};

}  // namespace

TEST_CASE("minkowski metric and flat curvature") {
  CHECK_THROWS_AS(minkowski(2), BackgroundError);
  for (int n : {3, 4}) {
    const auto bg = minkowski(n);
    const Eigen::MatrixXd g = bg->metric(Eigen::VectorXd::Zero(n));
    CHECK(g(0, 0) == -1.0);
    CHECK(g.trace() == n - 2);
    CHECK(bg->is_flat());
  }
}

TEST_CASE("invalid evaluators are rejected") {
  auto christ = [](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>(3, Eigen::MatrixXd::Zero(3, 3));
  };
  auto zero_r = [](const Eigen::VectorXd&) { return RiemannTensor(3); };
  auto riemannian = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(3, 3).eval(); };
  CHECK_THROWS_AS(BackgroundSpacetime("e", 3, riemannian, christ, zero_r), BackgroundError);
  auto lorentz = [](const Eigen::VectorXd&) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Identity(3, 3);
    g(0, 0) = -1;
    return g;
  };
  auto bad_r = [](const Eigen::VectorXd&) {
    RiemannTensor r(3);
    r(0, 1, 0, 1) = 1.0;
    return r;
  };
  CHECK_THROWS_AS(BackgroundSpacetime("b", 3, lorentz, christ, bad_r), BackgroundError);
  CHECK_NOTHROW(BackgroundSpacetime("ok", 3, lorentz, christ, zero_r));
}

TEST_CASE("riemann contraction on a flat sheet") {
  FlatSheet s;
  const Field flat = riemann_contract(*minkowski(4), s.X, s.e, s.n, s.gamma_inv);
  CHECK(flat.max_abs() == 0.0);

  // g(R(e_a, n_j) e^a, n^i) = K (g(e_a,e^a) g(n_j,n^i) - ...) contracted with
  // the stated slot order gives -K D delta^i_j for this curvature form.
  const Field m = riemann_contract(*constant_curvature(4, 1.0), s.X, s.e, s.n, s.gamma_inv);
  CHECK(m(0, 0).maxCoeff() == doctest::Approx(-2.0));
  CHECK(m(1, 1).minCoeff() == doctest::Approx(-2.0));
  CHECK(m(0, 1).abs().maxCoeff() <= 1e-14);
  CHECK(riemann_contract(*constant_curvature(4, 0.0), s.X, s.e, s.n, s.gamma_inv).max_abs() == 0.0);

  Field bad(s.grid, {ws_lower(), spacetime_index(3)});
  CHECK_THROWS_AS(riemann_contract(*minkowski(4), s.X, bad, s.n, s.gamma_inv), GridError);
}

TEST_CASE("riemann contraction is covariant under normal rotations") {
  FlatSheet s;
  // Generic curvature: constant curvature plus a Weyl-like piece built from
  // a fixed antisymmetric 2-form.
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(4, 4);
  F(0, 2) = 0.7; F(2, 0) = -0.7; F(1, 3) = -0.4; F(3, 1) = 0.4; F(2, 3) = 0.9; F(3, 2) = -0.9;
  Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(4, 4);
  eta(0, 0) = -1;
  auto bg = std::make_shared<const BackgroundSpacetime>(
      "generic", 4, [eta](const Eigen::VectorXd&) { return eta; },
      [](const Eigen::VectorXd&) { return std::vector<Eigen::MatrixXd>(4, Eigen::MatrixXd::Zero(4, 4)); },
      [F, eta](const Eigen::VectorXd&) {
        RiemannTensor r(4);
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
              for (int d = 0; d < 4; ++d)
                r(a, b, c, d) = F(a, b) * F(c, d) + 0.3 * (eta(a, c) * eta(b, d) - eta(a, d) * eta(b, c));
        return r;
      });
  const Field m = riemann_contract(*bg, s.X, s.e, s.n, s.gamma_inv);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 6.28);
  for (int trial = 0; trial < 5; ++trial) {
    const double th = u(rng);
    Eigen::Matrix2d rot;
    rot << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
    Field n2 = s.n;
    for (int mu = 0; mu < 4; ++mu) {
      n2(0, mu) = rot(0, 0) * s.n(0, mu) + rot(0, 1) * s.n(1, mu);
      n2(1, mu) = rot(1, 0) * s.n(0, mu) + rot(1, 1) * s.n(1, mu);
    }
    const Field m2 = riemann_contract(*bg, s.X, s.e, n2, s.gamma_inv);
    Eigen::Matrix2d M;
    Eigen::Matrix2d M2;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        M(i, j) = m(i, j)(4, 3);
        M2(i, j) = m2(i, j)(4, 3);
      }
    CHECK((M2 - rot * M * rot.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}
