#include <doctest.h>

#include "gbstring/dynamics.hpp"
#include "gbstring/random_field.hpp"
#include "gbstring/solutions.hpp"
#include "gbstring/tensor.hpp"

#include <cmath>
#include <numbers>

using namespace gbs;
using Eigen::ArrayXXd;
using std::numbers::pi;

namespace {

struct Sheet {
  GridPtr grid;
  Embedding emb;
  GeometryBundle geo;
  Mask in;
  Sheet(const ExactSolution& sol, GridPtr g, int dim = 0)
      : grid(std::move(g)),
        emb(embed(sol, grid, dim)),
        geo(build_geometry(emb)),
        in(interior_mask(geo, interior_rows(*grid))) {}
};

Sheet pulsating(int dim = 0, int n_tau = 129) {
  return Sheet(pulsating_circular_string(1.0), make_grid(n_tau, 32, 0.1, 0.9), dim);
}

Field random_normal(const GeometryBundle& geo, std::uint64_t seed) {
  return random_smooth_field(geo.grid_ptr(), {normal_index(geo.codim())}, seed);
}

// Equation-of-motion residual at X + eps phi n, expressed in the original frame.
Field transported_eom(const Sheet& s, const Field& phi, double eps, const ActionParams& p) {
  const auto moved = build_geometry(deform_embedding(s.emb, s.geo, DeformationField::normal(phi), eps));
  return einsum("im,jm,j->i", s.geo.n_lower, moved.n, eom_residual(moved, p));
}

}  // namespace

TEST_CASE("action parameters") {
  CHECK_NOTHROW(ActionParams{1.0, 0.0, 2}.validate());
  CHECK_NOTHROW(ActionParams{0.0, 0.5, 2}.validate());
  CHECK_THROWS_AS(ActionParams({0.0, 0.0, 2}).validate(), DynamicsError);
  CHECK_THROWS_AS(ActionParams({-1.0, 0.0, 2}).validate(), DynamicsError);
  CHECK_THROWS_AS(ActionParams({1.0, 0.0, 3}).validate(), DynamicsError);
  CHECK_THROWS_AS(ActionParams({1.0, NAN, 2}).validate(), DynamicsError);
}

TEST_CASE("action value") {
  const Sheet cyl(static_cylinder(1.0), make_grid(33, 16, 0.0, 1.0), 3);
  CHECK(action_value(cyl.geo, {1.0, 0.0, 2}, cyl.geo.mask) == doctest::Approx(-2 * pi).epsilon(1e-12));
  CHECK(action_value(cyl.geo, {1.0, 1.0, 2}, cyl.geo.mask) == doctest::Approx(-2 * pi).epsilon(1e-10));

  const Sheet p = pulsating();
  const auto F = [](double t) { return t / 2 + std::sin(2 * t) / 4; };
  const double exact = -2 * pi * (F(0.9) - F(0.1));
  CHECK(action_value(p.geo, {1.0, 0.0, 2}, p.geo.mask) == doctest::Approx(exact).epsilon(1e-5));
  CHECK_THROWS(action_value(p.geo, {1.0, 0.0, 2}, Mask(p.grid, BoolArray::Constant(129, 32, false))));
}

TEST_CASE("equations of motion") {
  const Sheet cyl(static_cylinder(1.0), make_grid(33, 16, 0.0, 1.0), 3);
  const Field r = eom_residual(cyl.geo, {2.0, 0.0, 2});
  CHECK(r.max_abs() == doctest::Approx(2.0).epsilon(1e-10));

  const Sheet p = pulsating();
  const Sheet f(rotating_folded_string(1.0), make_grid(129, 64, 0.0, 1.0));
  for (const Sheet* s : {&p, &f}) {
    const Field r0 = eom_residual(s->geo, {1.0, 0.0, 2});
    CHECK(max_abs(r0, s->geo.mask) <= 5e-5);
    for (double beta : {0.5, 1.0}) {
      CHECK(max_abs(eom_residual(s->geo, {1.0, beta, 2}) - r0, s->geo.mask) <= 1e-6);
    }
  }
  CHECK(max_abs(eom_residual(p.geo, {1.0, 0.0, 2}), p.geo.mask) <= 1e-5);
}

TEST_CASE("action variation is the equation of motion") {
  // Normal bump deformation vanishing to high order at the tau ends, so that
  // the topological term contributes no boundary flux. Its discrete
  // integral converges at 5th order in tau and needs the finer grid.
  const Sheet cyl(static_cylinder(1.0), make_grid(257, 32, 0.0, 1.0), 3);
  Field phi(cyl.grid, {normal_index(1)});
  const auto& g = *cyl.grid;
  for (int i = 0; i < g.n_tau(); ++i)
    for (int j = 0; j < g.n_sigma(); ++j) {
      phi(0)(i, j) = std::pow(std::sin(pi * g.tau(i)), 4) * (1 + 0.5 * std::cos(g.sigma(j)));
    }
  for (double beta : {0.0, 0.3}) {
    const ActionParams p{1.0, beta, 2};
    const double eps = 1e-4;
    const auto d = DeformationField::normal(phi);
    const auto plus = build_geometry(deform_embedding(cyl.emb, cyl.geo, d, eps));
    const auto minus = build_geometry(deform_embedding(cyl.emb, cyl.geo, d, -eps));
    const double fd = (action_value(plus, p, plus.mask) - action_value(minus, p, minus.mask)) / (2 * eps);
    Field density = einsum("i,i->", eom_residual(cyl.geo, p), phi);
    density[0] *= -cyl.geo.vol[0];
    const double exact = integrate_patch(density, cyl.geo.mask);
    CHECK(std::abs(fd - exact) <= 1e-5 * std::abs(exact));
  }
}

TEST_CASE("symplectic potential") {
  const Sheet p = pulsating();
  const auto zero = DeformationField::zero(p.geo);
  CHECK(symplectic_potential(p.geo, zero, {1.0, 0.7, 2}).max_abs() == 0.0);

  const auto normal = DeformationField::normal(random_normal(p.geo, 2));
  CHECK(symplectic_potential(p.geo, normal, {1.0, 0.0, 2}).max_abs() == 0.0);

  DeformationField d = normal;
  d.phi_tangent = random_smooth_field(p.grid, {ws_upper()}, 3);
  const ActionParams a{1.0, 0.5, 2};
  const Field brane = symplectic_potential(p.geo, d, a, PotentialForm::brane);
  const Field string = symplectic_potential(p.geo, d, a, PotentialForm::string);
  CHECK(max_abs(brane - string, p.in) <= 1e-6 * max_abs(brane, p.in));

  // Unlike the equations of motion, the potential depends on beta.
  const Field dng = symplectic_potential(p.geo, d, {1.0, 0.0, 2});
  for (double beta : {0.5, 1.0}) {
    const Field psi = symplectic_potential(p.geo, d, {1.0, beta, 2});
    CHECK(max_abs(psi - dng, p.in) >= 1e-2 * max_abs(psi, p.in));
  }
}

TEST_CASE("coefficient and index-loop linearizations agree") {
  for (int dim : {3, 4}) {
    const Sheet p = pulsating(dim);
    const Field phi = random_normal(p.geo, 5);
    for (double beta : {0.0, 0.3}) {
      const ActionParams a{1.0, beta, 2};
      const auto r = linearized_residual(p.geo, phi, a);
      const Field loops = linearized_residual_string(p.geo, phi, a);
      CHECK(max_abs(r.total - loops, p.in) <= 1e-10 * (1 + max_abs(r.total, p.in)));
      CHECK(max_abs(r.g_blocks, p.in) <= 1e-6);
    }
  }
  const Sheet p = pulsating();
  CHECK(linearized_residual(p.geo, Field(p.grid, {normal_index(1)}), {1.0, 0.3, 2}).total.max_abs() == 0.0);
  CHECK_THROWS_AS(linearized_residual(p.geo, random_smooth_field(p.grid, {ws_upper()}, 1), {1.0, 0.0, 2}),
                  DynamicsError);
  CHECK_THROWS_AS(linearized_residual(p.geo, random_smooth_field(p.grid, {normal_index(2)}, 1), {1.0, 0.0, 2}),
                  DynamicsError);
}

TEST_CASE("cylinder linearization is the hand Jacobi operator") {
  // Flat metric diag(-1, 1), K_sigma sigma = -1: L phi = -(-phi_tt + phi_ss) - phi.
  const Sheet cyl(static_cylinder(1.0), make_grid(129, 32, 0.0, 1.0), 3);
  const auto& g = *cyl.grid;
  Field phi(cyl.grid, {normal_index(1)});
  ArrayXXd expected(g.n_tau(), g.n_sigma());
  for (int i = 0; i < g.n_tau(); ++i)
    for (int j = 0; j < g.n_sigma(); ++j) {
      const double t = g.tau(i), s = std::sin(2 * g.sigma(j));
      phi(0)(i, j) = t * t * s;
      expected(i, j) = (2 + 3 * t * t) * s;
    }
  const Field r = linearized_residual(cyl.geo, phi, {1.0, 0.0, 2}).total;
  CHECK((r(0) - expected).abs().maxCoeff() <= 1e-8);
}

TEST_CASE("linearization matches finite differences of the EOM") {
  for (int dim : {3, 4}) {
    const Sheet base = pulsating(dim);
    // Start from an off-shell neighbour so that the mean-curvature terms matter.
    const auto bent = deform_embedding(base.emb, base.geo,
                                       DeformationField::normal(random_normal(base.geo, 11)), 1e-2);
    Sheet s = base;
    s.emb = bent;
    s.geo = build_geometry(bent);
    const Field phi = random_normal(s.geo, 3);
    for (double beta : {0.0, 0.3}) {
      const ActionParams a{1.0, beta, 2};
      const double eps = 1e-4;
      const Field fd = (0.5 / eps) * (transported_eom(s, phi, eps, a) - transported_eom(s, phi, -eps, a));
      const Field lin = linearized_residual(s.geo, phi, a).total;
      CHECK(max_abs(fd - lin, s.in) <= 1e-4 * max_abs(fd, s.in));
    }
  }
}

TEST_CASE("beta terms of the linearization cancel at D = 2") {
  // The equations of motion do not depend on beta, so neither does their
  // linearization: the beta groups are individually large but sum to zero.
  const Sheet base = pulsating(4);
  const auto bent = deform_embedding(base.emb, base.geo,
                                     DeformationField::normal(random_normal(base.geo, 11)), 1e-2);
  const auto geo = build_geometry(bent);
  const Field phi = random_normal(geo, 3);
  const auto c = linearized_coefficients(geo, {1.0, 0.3, 2});
  const auto r = linearized_residual(geo, phi, c);
  const double size = max_abs(r.gb_onshell, base.in);
  CHECK(size >= 1.0);
  CHECK(max_abs(r.gb_onshell + r.gb_mean + r.g_blocks, base.in) <= 1e-6 * size);
}

TEST_CASE("operator P") {
  const Sheet cyl(static_cylinder(1.0), make_grid(33, 16, 0.0, 1.0), 3);
  CHECK_THROWS_AS(p_operator_apply(cyl.geo, random_normal(cyl.geo, 1), {1.0, 0.0, 2}), DynamicsError);

  const Sheet p = pulsating();
  const Field phi = random_normal(p.geo, 7);
  CHECK(p_operator_apply(p.geo, Field(p.grid, {normal_index(1)}), {1.0, 0.3, 2}).max_abs() == 0.0);
  const ActionParams a{1.0, 0.3, 2};
  const Field P = p_operator_apply(p.geo, phi, a);
  const Field full = linearized_residual(p.geo, phi, a).total;
  const double km = max_abs(p.geo.K_mean, p.geo.mask);
  const double scale = p_operator_coefficients(p.geo, a).scale(p.in);
  CHECK(max_abs(P - full, p.in) <= 1e-6 + 10 * km * scale * phi.max_abs());

  // At beta = 0, P is the Jacobi operator -~Delta - K_ab K^ab.
  const Field jac = p_operator_apply(p.geo, phi, {1.0, 0.0, 2});
  const Field kk = einsum("abi,abi->", p.geo.K, raise(p.geo, raise(p.geo, p.geo.K, 0), 1));
  const Field hand = -1.0 * tilde_laplacian(p.geo, phi) - times(phi, kk);
  CHECK(max_abs(jac - hand, p.in) <= 1e-10 * max_abs(hand, p.in));

  // Codimension 2: the transpose swaps the normal indices.
  const Sheet q = pulsating(4);
  const auto c = p_operator_coefficients(q.geo, a);
  const auto t = c.transposed();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK((t.C(i, j) == c.C(j, i)).all());
      CHECK((t.Lap(i, j) == c.Lap(j, i)).all());
      for (int b = 0; b < 2; ++b) {
        CHECK((t.B(b, i, j) == c.B(b, j, i)).all());
        CHECK((t.A(b, 1 - b, i, j) == c.A(b, 1 - b, j, i)).all());
      }
    }
  const Field psi = random_normal(q.geo, 8);
  const Field lhs = einsum("i,i->", psi, p_operator_apply(q.geo, random_normal(q.geo, 9), a, true));
  CHECK(lhs.max_abs() > 0.0);
}

TEST_CASE("Jacobi fields of the pulsating string") {
  const Sheet p = pulsating();
  const auto sol = pulsating_circular_string(1.0);
  for (const char* which : {"t", "x", "y", "R", "boost_x"}) {
    const Field phi = jacobi_from_family(p.geo, sol, which);
    for (double beta : {0.0, 0.3}) {
      const ActionParams a{1.0, beta, 2};
      const double scale = p_operator_coefficients(p.geo, a).scale(p.in);
      CAPTURE(which);
      CAPTURE(beta);
      CHECK(max_abs(p_operator_apply(p.geo, phi, a), p.in) <= 5e-4 * phi.max_abs() * scale);
      CHECK(max_abs(linearized_residual(p.geo, phi, a).total, p.in) <= 5e-4 * phi.max_abs() * scale);
    }
  }
  // On the exact solution the beta part of P annihilates generic fields too.
  const Field phi = random_normal(p.geo, 4);
  const auto c = linearized_coefficients(p.geo, {1.0, 0.5, 2});
  CHECK(max_abs(apply(p.geo, c.gb_onshell, phi), p.in) <= 1e-4);
  CHECK(c.gb_onshell.scale(p.in) >= 1.0);
}

TEST_CASE("Jacobi residuals converge under refinement") {
  const auto sol = pulsating_circular_string(1.0);
  double prev = 0.0;
  for (int n : {65, 129}) {
    const Sheet p = pulsating(0, n);
    const double r = max_abs(p_operator_apply(p.geo, jacobi_from_family(p.geo, sol, "x"), {1.0, 0.0, 2}), p.in);
    if (prev > 0.0) CHECK(r < prev / 4);
    prev = r;
  }
}
