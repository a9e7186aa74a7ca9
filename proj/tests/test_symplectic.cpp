#include <doctest.h>

#include "gbstring/random_field.hpp"
#include "gbstring/solutions.hpp"
#include "gbstring/symplectic.hpp"
#include "gbstring/tensor.hpp"

#include <cmath>
#include <numbers>

using namespace gbs;
using Eigen::ArrayXXd;
using std::numbers::pi;

namespace {

struct Sheet {
  ExactSolution sol;
  GridPtr grid;
  Embedding emb;
  GeometryBundle geo;
  Mask in;
  Sheet(ExactSolution s, GridPtr g)
      : sol(std::move(s)),
        grid(std::move(g)),
        emb(embed(sol, grid)),
        geo(solution_geometry(sol, grid)),
        in(interior_mask(geo, interior_rows(*grid))) {}
  Field jacobi(const std::string& which) const { return jacobi_from_family(geo, sol, which); }
  Field random(std::uint64_t seed) const {
    return random_smooth_field(grid, {normal_index(geo.codim())}, seed);
  }
};

Sheet pulsating(int n_tau = 129) {
  return Sheet(pulsating_circular_string(1.0), make_grid(n_tau, 32, 0.1, 0.9));
}

Sheet spinning(int n_tau = 129) { return Sheet(spinning_string(1.0), make_grid(n_tau, 32, 0.1, 0.9)); }

double norm(const Field& f, const Mask& m) { return max_abs(f, m); }

const ActionParams kPlain{1.0, 0.0, 2};
const ActionParams kGB{1.0, 0.3, 2};

}  // namespace

TEST_CASE("current pieces: trivial cases") {
  const Sheet s = pulsating(65);
  const Field a = s.random(1), zero = 0.0 * a;
  for (const auto& p : {kPlain, kGB}) {
    CHECK(bilinear_current(s.geo, zero, a, p).j.max_abs() == 0.0);
    CHECK(bilinear_current(s.geo, a, zero, p).pieces_sum.max_abs() == 0.0);
  }
  const auto pieces = current_pieces(s.geo, a, s.random(2), kPlain);
  for (int k = 1; k < 6; ++k) CHECK(pieces.j[k].max_abs() == 0.0);
  CHECK(pieces.j[0].max_abs() > 0.1);
}

TEST_CASE("current on the flat cylinder") {
  const Sheet cyl(static_cylinder(1.0), make_grid(33, 32, 0.0, 1.0));
  Field a(cyl.grid, {normal_index(1)}), b(cyl.grid, {normal_index(1)});
  for (int k = 0; k < cyl.grid->n_sigma(); ++k) {
    a(0).col(k).setConstant(std::sin(cyl.grid->sigma(k)));
    b(0).col(k).setConstant(std::cos(cyl.grid->sigma(k)));
  }
  const Field j1 = current_pieces(cyl.geo, a, b, kPlain).j[0];
  CHECK((j1(1) - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(j1(0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("closed form agrees with the sum of pieces") {
  for (const Sheet& s : {pulsating(), spinning()}) {
    const Field a = s.random(3), b = s.random(4);
    for (const auto& p : {kPlain, kGB, ActionParams{0.0, 1.0, 2}}) {
      const auto c = bilinear_current(s.geo, a, b, p);
      CHECK(c.simplification_gap(s.geo.mask) <= 1e-9 * (1 + norm(c.j, s.geo.mask)));
    }
  }
}

TEST_CASE("current is bilinear") {
  const Sheet s = pulsating(65);
  const Field a = s.random(5), b = s.random(6), c = s.random(7);
  const double al = 1.7, be = -0.4;
  const Field lhs = bilinear_current(s.geo, al * a + be * c, b, kGB).j;
  const Field rhs = al * bilinear_current(s.geo, a, b, kGB).j + be * bilinear_current(s.geo, c, b, kGB).j;
  CHECK(norm(lhs - rhs, s.geo.mask) <= 1e-10 * (1 + norm(lhs, s.geo.mask)));
  const Field lhs2 = bilinear_current(s.geo, a, al * b + be * c, kGB).j;
  const Field rhs2 = al * bilinear_current(s.geo, a, b, kGB).j + be * bilinear_current(s.geo, a, c, kGB).j;
  CHECK(norm(lhs2 - rhs2, s.geo.mask) <= 1e-10 * (1 + norm(lhs2, s.geo.mask)));
}

TEST_CASE("self-adjointness on the pulsating string") {
  const Sheet s = pulsating();
  const Field a = s.random(8), b = s.random(9);
  for (const auto& p : {kPlain, kGB}) {
    const double scale = p_operator_coefficients(s.geo, p).scale(s.in);
    const double bound = 1e-4 * scale * norm(a, s.in) * norm(b, s.in);
    CHECK(norm(self_adjointness_residual(s.geo, a, b, p), s.in) <= bound);
    CHECK(self_adjointness_residual(s.geo, a, 0.0 * b, p).max_abs() == 0.0);
  }
  const Sheet cyl(static_cylinder(1.0), make_grid(33, 16, 0.0, 1.0));
  CHECK_THROWS_AS(self_adjointness_residual(cyl.geo, cyl.random(1), cyl.random(2), kPlain),
                  DynamicsError);
}

TEST_CASE("self-adjointness in codimension 3 without Gauss-Bonnet") {
  const Sheet s = spinning();
  const Field a = s.random(10), b = s.random(11);
  const double scale = p_operator_coefficients(s.geo, kPlain).scale(s.in);
  CHECK(norm(self_adjointness_residual(s.geo, a, b, kPlain), s.in) <=
        1e-4 * scale * norm(a, s.in) * norm(b, s.in));
}

TEST_CASE("self-adjointness with a twisted frame over a flat normal bundle") {
  const auto grid = make_grid(129, 32, 0.1, 0.9);
  ArrayXXd theta(grid->n_tau(), grid->n_sigma());
  for (int i = 0; i < grid->n_tau(); ++i)
    for (int k = 0; k < grid->n_sigma(); ++k)
      theta(i, k) = 0.7 * std::sin(grid->sigma(k)) * (1 + grid->tau(i)) + 0.3 * std::cos(2 * grid->sigma(k));
  const auto geo = rotate_normal_frame(solution_geometry(pulsating_circular_string(1.0), grid, 4), theta);
  const Mask in = interior_mask(geo, interior_rows(*grid));
  REQUIRE(max_abs(geo.normal_conn, in) > 1.0);
  const Field a = random_smooth_field(grid, {normal_index(2)}, 3);
  const Field b = random_smooth_field(grid, {normal_index(2)}, 4);
  const double scale = p_operator_coefficients(geo, kGB).scale(in);
  CHECK(norm(self_adjointness_residual(geo, a, b, kGB), in) <= 1e-4 * scale * norm(a, in) * norm(b, in));
}

TEST_CASE("curved normal bundle breaks only the symmetric part of the identity") {
  const Sheet s = spinning();
  const Field a = s.random(3), b = s.random(4);
  const auto beta_part = [&](const Field& x, const Field& y) {
    return self_adjointness_residual(s.geo, x, y, kGB) - self_adjointness_residual(s.geo, x, y, kPlain);
  };
  const Field ab = beta_part(a, b), ba = beta_part(b, a);
  const double scale = p_operator_coefficients(s.geo, kGB).scale(s.in);
  CHECK(norm(ab - ba, s.in) <= 1e-4 * scale * norm(a, s.in) * norm(b, s.in));
  CHECK(norm(ab + ba, s.in) > 1e-2 * scale * norm(a, s.in) * norm(b, s.in));
}

TEST_CASE("current is conserved for Jacobi fields") {
  const Sheet s = pulsating();
  const std::vector<std::string> fields = {"t", "x", "y", "R", "boost_x"};
  for (const auto& p : {kPlain, kGB}) {
    const double scale = p_operator_coefficients(s.geo, p).scale(s.in);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      for (std::size_t k = i + 1; k < fields.size(); ++k) {
        const Field a = s.jacobi(fields[i]), b = s.jacobi(fields[k]);
        CAPTURE(fields[i]);
        CAPTURE(fields[k]);
        CHECK(norm(conservation_residual(s.geo, a, b, p), s.in) <=
              5e-4 * scale * norm(a, s.in) * norm(b, s.in));
      }
    }
    // Negative control: generic fields do not solve the linearized equations.
    const Field a = s.random(12), b = s.random(13);
    CHECK(norm(conservation_residual(s.geo, a, b, p), s.in) >
          1e-2 * scale * norm(a, s.in) * norm(b, s.in));
  }
}

TEST_CASE("symplectic form") {
  const Sheet s = pulsating();
  const int mid = s.grid->n_tau() / 2;
  const Field t = s.jacobi("t"), R = s.jacobi("R");
  for (const auto& p : {kPlain, kGB}) {
    const double w = symplectic_form(s.geo, t, R, p, mid).value;
    CHECK(w == doctest::Approx(-2 * pi).epsilon(1e-6));
    CHECK(symplectic_form(s.geo, R, t, p, mid).value == -w);
    CHECK(symplectic_form(s.geo, 3.0 * t, -2.0 * R, p, mid).value ==
          doctest::Approx(-6.0 * w).epsilon(1e-12));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CHECK(std::abs(symplectic_form(s.geo, s.random(seed), s.random(seed), p, mid).value) <= 1e-12);
    }
    const int q = s.grid->n_tau() / 4, r = 3 * s.grid->n_tau() / 4;
    for (int i : {q, r}) {
      CHECK(std::abs(symplectic_form(s.geo, t, R, p, i).value - w) <= 1e-3 * std::abs(w));
    }
  }
  CHECK_THROWS_AS(symplectic_form(s.geo, t, R, kPlain, s.grid->n_tau()), SymplecticError);
  CHECK_THROWS_AS(symplectic_form(s.geo, t, R, kPlain, -1), SymplecticError);

  const Sheet f(rotating_folded_string(1.0), make_grid(33, 64, 0.0, 1.0));
  CHECK_THROWS_AS(symplectic_form(f.geo, f.random(1), f.random(2), kPlain, 16), SymplecticError);
}

TEST_CASE("spinning string symplectic form") {
  const Sheet s = spinning();
  const int mid = s.grid->n_tau() / 2;
  const Field R = s.jacobi("R"), rot = s.jacobi("rotation_xz");
  const double w0 = symplectic_form(s.geo, R, rot, kPlain, mid).value;
  CHECK(w0 == doctest::Approx(-2 * pi).epsilon(1e-6));
  CHECK(symplectic_form(s.geo, R, rot, kGB, mid).value == doctest::Approx(w0).epsilon(1e-6));
}

TEST_CASE("variation of the potential reproduces the current") {
  for (const Sheet& s : {pulsating(), spinning()}) {
    const Field a = s.jacobi("R"), b = s.jacobi("t");
    for (const auto& p : {kPlain, kGB}) {
      const Field pvc = potential_variation_current(s.emb, s.geo, a, b, p);
      const Field ref = times(antisymmetric_current(s.geo, a, b, p), s.geo.vol);
      CHECK(norm(pvc - ref, s.in) <= 1e-3 * (1 + norm(ref, s.in)));
    }
    CHECK(potential_variation_current(s.emb, s.geo, a, 0.0 * b, kGB).max_abs() <= 1e-10);
  }
  const Sheet s = pulsating(65);
  const Field a = s.random(1), b = s.random(2);
  CHECK_THROWS_AS(potential_variation_current(s.emb, s.geo, a, b, kPlain, 1e-8), SymplecticError);
  CHECK_THROWS_AS(potential_variation_current(s.emb, s.geo, a, b, kPlain, 1e-2), SymplecticError);
}

TEST_CASE("symplectic form is reparametrization invariant") {
  const Sheet s = pulsating();
  const int mid = s.grid->n_tau() / 2;
  const Field t = s.jacobi("t"), R = s.jacobi("R");
  const auto sine = [](double x) { return std::sin(x); };
  CHECK(gauge_invariance_check(s.emb, s.geo, t, R, kPlain, mid, {sine, 0.0}) <= 1e-12);
  CHECK(gauge_invariance_check(s.emb, s.geo, t, R, kGB, mid, {sine, 1e-2}) <= 1e-3);
  const double h = s.grid->h_sigma();
  CHECK(gauge_invariance_check(s.emb, s.geo, t, R, kGB, mid, {[h](double) { return 100 * h; }, 1e-2}) <= 1e-10);

  const Sheet sp = spinning();
  CHECK(gauge_invariance_check(sp.emb, sp.geo, sp.jacobi("R"), sp.jacobi("rotation_xz"), kGB, mid,
                               {[](double x) { return std::cos(2 * x); }, 1e-2}) <= 1e-3);

  CHECK_THROWS_AS(gauge_invariance_check(s.emb, s.geo, t, R, kPlain, mid,
                                         {[](double x) { return 200 * std::sin(x); }, 1e-2}),
                  SymplecticError);
  CHECK_THROWS_AS(gauge_invariance_check(s.emb, s.geo, t, R, kPlain, mid, {sine, 0.1}),
                  SymplecticError);
  CHECK_THROWS_AS(gauge_invariance_check(s.emb, s.geo, t, s.jacobi("x"), kPlain, mid, {sine, 1e-2}),
                  SymplecticError);
}

TEST_CASE("rank probe") {
  const Sheet s = pulsating(65);
  std::vector<Field> basis;
  for (const char* name : {"t", "x", "y", "R", "rotation", "boost_x", "boost_y"}) {
    basis.push_back(s.jacobi(name));
  }
  const auto probe = rank_probe(s.geo, basis, kGB, 32);
  CHECK(probe.omega.rows() == 7);
  CHECK((probe.omega + probe.omega.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(probe.singular_values.size() == 7);
  CHECK(probe.numerical_rank % 2 == 0);
  CHECK(probe.numerical_rank >= 2);
}
