#include <doctest.h>

#include "gbstring/dynamics.hpp"
#include "gbstring/solutions.hpp"
#include "gbstring/tensor.hpp"

#include <cmath>

using namespace gbs;
using Eigen::ArrayXXd;

namespace {

// Conformal constraints and wave equation by central differences of the
// closed-form map at a handful of points.
void check_conformal(const ExactSolution& s) {
  const double h = 1e-4;
  Eigen::MatrixXd eta = Eigen::MatrixXd::Identity(s.dim, s.dim);
  eta(0, 0) = -1;
  for (double t : {0.2, 0.7, 1.3})
    for (double g : {0.1, 1.0, 2.5, 4.0}) {
      if (s.name == "rotating_folded_string" && std::abs(std::sin(g)) < 0.2) continue;
      const Eigen::VectorXd xt = (s.X(t + h, g) - s.X(t - h, g)) / (2 * h);
      const Eigen::VectorXd xs = (s.X(t, g + h) - s.X(t, g - h)) / (2 * h);
      const double scale = xt.squaredNorm();
      CHECK(std::abs(xt.dot(eta * xs)) <= 1e-8 * scale);
      CHECK(std::abs(xt.dot(eta * xt) + xs.dot(eta * xs)) <= 1e-8 * scale);
      const Eigen::VectorXd wave = (s.X(t + h, g) + s.X(t - h, g) - s.X(t, g + h) - s.X(t, g - h)) / (h * h);
      CHECK(wave.norm() <= 1e-5);
    }
}

}  // namespace

TEST_CASE("registry") {
  CHECK(list_solutions().size() == 4);
  CHECK(make_solution("pulsating_circular_string", {{"R", 2.0}}).params.at("R") == 2.0);
  CHECK_THROWS_AS(make_solution("nope", {}), SolutionError);
  CHECK_THROWS_AS(make_solution("pulsating_circular_string", {}), SolutionError);
  CHECK_THROWS_AS(make_solution("pulsating_circular_string", {{"R", 1.0}, {"A", 1.0}}), SolutionError);
  CHECK_THROWS_AS(pulsating_circular_string(0.0), SolutionError);
  CHECK_THROWS_AS(rotating_folded_string(-1.0), SolutionError);
  CHECK_THROWS_AS(spinning_string(0.0), SolutionError);
  CHECK_FALSE(static_cylinder(1.0).on_shell);
}

TEST_CASE("closed-form maps are conformal solutions") {
  check_conformal(pulsating_circular_string(1.3));
  check_conformal(rotating_folded_string(0.8));
  check_conformal(spinning_string(1.1));
}

TEST_CASE("induced metrics") {
  const auto g = make_grid(65, 32, -0.5, 0.5);
  const auto geo = build_geometry(embed(pulsating_circular_string(2.0), g));
  CHECK(geo.gamma(1, 1)(32, 5) == doctest::Approx(4.0).epsilon(1e-10));

  const auto spin = solution_geometry(spinning_string(1.5), g);
  const Mask in = interior_mask(spin, interior_rows(*g));
  Field eta(g, {ws_lower(), ws_lower()});
  eta(0, 0).setConstant(-1);
  eta(1, 1).setConstant(1);
  // Limited by the 4th-order tau stencil at 65 rows.
  CHECK(max_abs(spin.gamma - 2.25 * eta, in) <= 1e-7);
}

TEST_CASE("closed-form frame of the spinning string") {
  const auto g = make_grid(65, 32, 0.0, 1.0);
  const auto s = spinning_string(1.0);
  const auto geo = solution_geometry(s, g);
  const Mask in = interior_mask(geo, interior_rows(*g));
  const Field nn = einsum("im,jm->ij", geo.n_lower, geo.n);
  const Field ne = einsum("im,am->ia", geo.n_lower, geo.e);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK((nn(i, j) - (i == j ? 1.0 : 0.0)).abs().maxCoeff() <= 1e-12);
    for (int a = 0; a < 2; ++a) CHECK(max_abs(Field(ne), in) <= 1e-10);
  }
  CHECK(max_abs(geo.K_mean, geo.mask) <= 1e-5);
  // Constant curvature: K_tt^0 = K_ss^0 = 1, K_ts^2 = -1 (in units of 1/R).
  CHECK((geo.K(0, 0, 0) - 1.0).abs().maxCoeff() <= 1e-6);
  CHECK((geo.K(0, 1, 2) + 1.0).abs().maxCoeff() <= 1e-6);

  // Padding to a higher dimension adds a flat normal.
  const auto padded = solution_geometry(s, g, 6);
  CHECK(padded.codim() == 4);
  CHECK(max_abs(padded.K_mean, padded.mask) <= 1e-5);
}

TEST_CASE("equations of motion on active points") {
  const auto g = make_grid(129, 32, 0.1, 0.9);
  for (const auto& s : {pulsating_circular_string(1.0), spinning_string(1.0)}) {
    const auto geo = solution_geometry(s, g);
    CHECK(max_abs(eom_residual(geo, {1.0, 0.0, 2}), geo.mask) <= 5e-5);
  }
  const auto fg = make_grid(129, 64, 0.0, 1.0);
  const auto folded = build_geometry(embed(rotating_folded_string(1.0), fg));
  CHECK(max_abs(eom_residual(folded, {1.0, 0.0, 2}), folded.mask) <= 5e-5);
}

TEST_CASE("sigma shift is a pure reparametrization") {
  const auto g = make_grid(65, 32, 0.1, 0.9);
  for (const auto& s : {pulsating_circular_string(1.0), spinning_string(1.0)}) {
    const auto geo = solution_geometry(s, g);
    CHECK(max_abs(jacobi_from_family(geo, s, "sigma_shift"), geo.mask) <= 1e-10);
  }
  const auto fg = make_grid(65, 64, 0.0, 1.0);
  const auto f = rotating_folded_string(1.0);
  const auto fgeo = build_geometry(embed(f, fg));
  CHECK(max_abs(jacobi_from_family(fgeo, f, "sigma_shift"), fgeo.mask) <= 1e-10);
}

TEST_CASE("family derivatives") {
  const auto g = make_grid(17, 16, 0.1, 0.9);
  const auto s = pulsating_circular_string(1.0);
  CHECK_THROWS_AS(family_derivative(s, g, "bogus", 3), SolutionError);
  CHECK_THROWS_AS(family_derivative(s, g, "z", 3), SolutionError);
  const Field z = family_derivative(s, g, "z", 4);
  CHECK((z(3) == 1.0).all());
  // dX/dR = X / R.
  const Field dR = family_derivative(s, g, "R", 3);
  const auto emb = embed(pulsating_circular_string(2.0), g);
  for (int m = 0; m < 3; ++m) CHECK((2.0 * dR(m) - emb.X(m)).abs().maxCoeff() <= 1e-14);
}

TEST_CASE("Jacobi fields of the spinning string") {
  const auto g = make_grid(129, 32, 0.1, 0.9);
  const auto s = spinning_string(1.0);
  const auto geo = solution_geometry(s, g);
  const Mask in = interior_mask(geo, interior_rows(*g));
  for (const auto& which : s.family_names()) {
    if (which == "sigma_shift") continue;
    const Field phi = jacobi_from_family(geo, s, which);
    for (double beta : {0.0, 0.3}) {
      const ActionParams p{1.0, beta, 2};
      CAPTURE(which);
      CHECK(max_abs(p_operator_apply(geo, phi, p), in) <=
            5e-4 * phi.max_abs() * p_operator_coefficients(geo, p).scale(in));
    }
  }
}
