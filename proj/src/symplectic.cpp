#include "gbstring/symplectic.hpp"

#include "gbstring/tensor.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace gbs {

namespace {

void check_pair(const GeometryBundle& geo, const Field& phi1, const Field& phi2) {
  try {
    check_normal_field(geo, phi1);
    check_normal_field(geo, phi2);
  } catch (const DynamicsError& e) {
    throw SymplecticError(e.what());
  }
}

// Derived fields shared by the piecewise and closed forms.
struct CurrentInputs {
  Field K_up;     // K^{ab i}
  Field K_mixed;  // K_a^{c i}      (ws_, ws^, n)
  Field DK;       // ~nabla_c K_ab^j (ws_, ws_, ws_, n)
  Field DK_up;    // ~nabla^c K_ab^j (ws^, ws_, ws_, n)
  Field divK;     // ~nabla_b K_c^{b j} (ws_, n)
  Field dphi1_up, dphi2_up;  // ~nabla^a phi_i (ws^, n)
  Field dphi1, dphi2;        // ~nabla_a phi_i (ws_, n)
};

CurrentInputs current_inputs(const GeometryBundle& geo, const Field& phi1, const Field& phi2) {
  CurrentInputs in;
  in.K_up = raise(geo, raise(geo, geo.K, 0), 1);
  in.K_mixed = raise(geo, geo.K, 1);
  in.DK = covariant_derivative(geo, geo.K);
  in.DK_up = raise(geo, in.DK, 0);
  in.divK = einsum("bcdj,bd->cj", in.DK, geo.gamma_inv);
  in.dphi1 = tilde_grad(geo, phi1);
  in.dphi2 = tilde_grad(geo, phi2);
  in.dphi1_up = raise(geo, in.dphi1, 0);
  in.dphi2_up = raise(geo, in.dphi2, 0);
  return in;
}

}  // namespace

Field CurrentPieces::sum() const {
  Field s = j[0];
  for (std::size_t k = 1; k < j.size(); ++k) s += j[k];
  return s;
}

CurrentPieces current_pieces(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                             const ActionParams& p) {
  p.validate();
  check_pair(geo, phi1, phi2);
  const double s = p.tension;
  const double b = p.gb_coupling;
  const auto in = current_inputs(geo, phi1, phi2);
  // ~nabla_b K_c^{a j}
  const Field DK_mixed = raise(geo, in.DK, 2);
  // ~nabla_b K^{c a i}
  const Field DK_raised = raise(geo, raise(geo, in.DK, 1), 2);

  CurrentPieces out;
  out.j[0] = s * (einsum("ai,i->a", in.dphi1_up, phi2) - einsum("i,ai->a", phi1, in.dphi2_up));
  out.j[1] = (4 * b) * einsum("bci,bcaj,i,j->a", in.K_up, DK_mixed, phi1, phi2);
  out.j[2] = (4 * b) * einsum("abi,bj,i,j->a", in.K_up, in.divK, phi1, phi2);
  Field j4 = einsum("cbi,caj,i,bj->a", in.K_up, in.K_mixed, phi1, in.dphi2);
  j4 -= einsum("bcai,cbj,i,j->a", DK_raised, in.K_mixed, phi1, phi2);
  j4 -= einsum("cai,cj,i,j->a", in.K_up, in.divK, phi1, phi2);
  j4 -= einsum("cai,cbj,bi,j->a", in.K_up, in.K_mixed, in.dphi1, phi2);
  out.j[3] = (4 * b) * j4;
  out.j[4] = (-4 * b) * einsum("cdi,acdj,i,j->a", in.K_up, in.DK_up, phi1, phi2);
  const Field KK = einsum("cdi,cdj->ij", in.K_up, geo.K);
  Field j6 = -1.0 * einsum("ij,i,aj->a", KK, phi1, in.dphi2_up);
  j6 += einsum("acdi,cdj,i,j->a", in.DK_up, in.K_up, phi1, phi2);
  j6 += einsum("cdi,acdj,i,j->a", in.K_up, in.DK_up, phi1, phi2);
  j6 += einsum("ij,ai,j->a", KK, in.dphi1_up, phi2);
  out.j[5] = (2 * b) * j6;
  return out;
}

namespace {

// The closed form, written as a single sum of contributions per grid point.
Field closed_form_current(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                          const ActionParams& p) {
  const int nc = geo.codim();
  const double s = p.tension;
  const double b = p.gb_coupling;
  const auto in = current_inputs(geo, phi1, phi2);
  const Field DK_mixed = raise(geo, in.DK, 2);                // ~nabla_c K_d^{a j}
  const Field DK_raised = raise(geo, raise(geo, in.DK, 1), 2);  // ~nabla_d K^{c a i}
  Field j(geo.grid_ptr(), {ws_upper()});
  for (int a = 0; a < 2; ++a) {
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(geo.grid().n_tau(), geo.grid().n_sigma());
    for (int i = 0; i < nc; ++i) {
      acc += s * (in.dphi1_up(a, i) * phi2(i) - phi1(i) * in.dphi2_up(a, i));
      if (b == 0.0) continue;
      for (int jj = 0; jj < nc; ++jj) {
        const Eigen::ArrayXXd pp = phi1(i) * phi2(jj);
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) {
            // 4 beta K^{cdi} ~nabla_c K_d^{aj} phi1 phi2
            acc += 4 * b * in.K_up(c, d, i) * DK_mixed(c, d, a, jj) * pp;
            // -4 beta K^{cdi} ~nabla^a K_cd^j phi1 phi2
            acc -= 4 * b * in.K_up(c, d, i) * in.DK_up(a, c, d, jj) * pp;
            // 4 beta K^{cdi} K_c^{aj} phi1 ~nabla_d phi2
            acc += 4 * b * in.K_up(c, d, i) * in.K_mixed(c, a, jj) * phi1(i) * in.dphi2(d, jj);
            // -4 beta ~nabla_d K^{cai} K_c^{dj} phi1 phi2
            acc -= 4 * b * DK_raised(d, c, a, i) * in.K_mixed(c, d, jj) * pp;
            // -4 beta K^{cai} K_c^{dj} ~nabla_d phi1 phi2
            acc -= 4 * b * in.K_up(c, a, i) * in.K_mixed(c, d, jj) * in.dphi1(d, i) * phi2(jj);
            // 2 beta K^{cdi} K_cd^j (~nabla^a phi1 phi2 - phi1 ~nabla^a phi2)
            acc += 2 * b * in.K_up(c, d, i) * geo.K(c, d, jj) *
                   (in.dphi1_up(a, i) * phi2(jj) - phi1(i) * in.dphi2_up(a, jj));
            // 2 beta (~nabla^a K^{cdi} K_cd^j + K^{cdi} ~nabla^a K_cd^j) phi1 phi2
            acc += 2 * b * (in.DK_up(a, c, d, i) * in.K_up(c, d, jj) +
                            in.K_up(c, d, i) * in.DK_up(a, c, d, jj)) * pp;
          }
      }
    }
    j(a) = acc;
  }
  return j;
}

}  // namespace

double BilinearCurrent::simplification_gap(const Mask& mask) const {
  return max_abs(j - pieces_sum, mask);
}

BilinearCurrent bilinear_current(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                                 const ActionParams& p) {
  BilinearCurrent c;
  c.pieces_sum = current_pieces(geo, phi1, phi2, p).sum();
  c.j = closed_form_current(geo, phi1, phi2, p);
  c.params = p;
  return c;
}

Field antisymmetric_current(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                            const ActionParams& p) {
  return 0.5 * (bilinear_current(geo, phi1, phi2, p).j - bilinear_current(geo, phi2, phi1, p).j);
}

Field self_adjointness_residual(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                                const ActionParams& p) {
  check_pair(geo, phi1, phi2);
  require_on_shell(geo);
  const CoefficientSet c = p_operator_coefficients(geo, p);
  Field r = einsum("i,i->", phi1, apply(geo, c, phi2));
  r -= einsum("i,i->", apply(geo, c.transposed(), phi1), phi2);
  r -= divergence(geo, bilinear_current(geo, phi1, phi2, p).j);
  return r;
}

Field conservation_residual(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                            const ActionParams& p) {
  return divergence(geo, bilinear_current(geo, phi1, phi2, p).j);
}

SymplecticForm symplectic_form(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                               const ActionParams& p, int tau_index) {
  const auto& g = geo.grid();
  if (tau_index < 0 || tau_index >= g.n_tau()) {
    throw SymplecticError("tau_index " + std::to_string(tau_index) + " outside [0, " +
                          std::to_string(g.n_tau()) + ")");
  }
  if (!geo.mask.row_active(tau_index)) {
    throw SymplecticError("slice tau_index " + std::to_string(tau_index) +
                          " contains masked points");
  }
  const auto slice = [&](const Field& a, const Field& b) {
    const Field j = bilinear_current(geo, a, b, p).j;
    return integrate_sigma_slice(g, Eigen::ArrayXXd(geo.vol[0] * j(0)), tau_index);
  };
  SymplecticForm w;
  w.raw12 = slice(phi1, phi2);
  w.raw21 = slice(phi2, phi1);
  w.value = 0.5 * (w.raw12 - w.raw21);
  w.tau_index = tau_index;
  w.params = p;
  return w;
}

namespace {

// Psi^a on the sheet X + eps phi_move n for the fixed displacement phi_fixed n.
Field moved_potential(const Embedding& emb, const GeometryBundle& geo, const Field& phi_fixed,
                      const Field& phi_move, const ActionParams& p, double eps) {
  const Embedding moved_emb = deform_embedding(emb, geo, DeformationField::normal(phi_move), eps);
  GeometryOptions opts;
  opts.reference_normals = geo.n;
  const GeometryBundle moved = build_geometry(moved_emb, opts);
  const Field V = einsum("im,i->m", geo.n, phi_fixed);
  DeformationField d = DeformationField::normal(einsum("im,m->i", moved.n_lower, V));
  const Field e_lower = einsum("bm,mn->bn", moved.e, moved.g);
  d.phi_tangent = einsum("ab,bm,m->a", moved.gamma_inv, e_lower, V);
  return symplectic_potential(moved, d, p, PotentialForm::string);
}

}  // namespace

Field potential_variation_current(const Embedding& emb, const GeometryBundle& geo,
                                  const Field& phi1, const Field& phi2, const ActionParams& p,
                                  double eps) {
  p.validate();
  check_pair(geo, phi1, phi2);
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw SymplecticError("eps must lie in [1e-6, 1e-3], got " + std::to_string(eps));
  }
  const auto d = [&](const Field& fixed, const Field& move) {
    return (0.5 / eps) *
           (moved_potential(emb, geo, fixed, move, p, eps) - moved_potential(emb, geo, fixed, move, p, -eps));
  };
  return d(phi1, phi2) - d(phi2, phi1);
}

double gauge_invariance_check(const Embedding& emb, const GeometryBundle& geo, const Field& phi1,
                              const Field& phi2, const ActionParams& p, int tau_index,
                              const Reparametrization& r) {
  if (!(std::abs(r.eps) <= 1e-2)) {
    throw SymplecticError("reparametrization eps must satisfy |eps| <= 1e-2");
  }
  const auto& g = emb.X.grid();
  Eigen::ArrayXXd shift(g.n_tau(), g.n_sigma());
  for (int k = 0; k < g.n_sigma(); ++k) shift.col(k).setConstant(r.eps * r.f(g.sigma(k)));
  const Eigen::ArrayXXd slope = 1.0 + d_sigma(g, shift);
  if (!(slope.minCoeff() > 0.0)) {
    throw SymplecticError("reparametrization is not invertible on the grid");
  }
  const auto pull = [&](const Field& f) {
    Field out = f;
    for (int c = 0; c < f.size(); ++c) out[c] = interpolate_sigma(g, f[c], shift);
    return out;
  };
  const Embedding moved_emb(emb.background, pull(emb.X), emb.declared_mask);
  GeometryOptions opts;
  opts.reference_normals = pull(geo.n);
  const GeometryBundle moved = build_geometry(moved_emb, opts);
  const SymplecticForm f0 = symplectic_form(geo, phi1, phi2, p, tau_index);
  const double w0 = f0.value;
  // Relative change is meaningless for omega at the roundoff level.
  const double size = std::abs(f0.raw12) + std::abs(f0.raw21) + phi1.max_abs() * phi2.max_abs();
  if (!(std::abs(w0) > 1e-10 * size)) {
    throw SymplecticError("omega vanishes on the reference slice");
  }
  const double w1 = symplectic_form(moved, pull(phi1), pull(phi2), p, tau_index).value;
  return std::abs(w1 - w0) / std::abs(w0);
}

RankProbe rank_probe(const GeometryBundle& geo, const std::vector<Field>& basis,
                     const ActionParams& p, int tau_index, double rel_tol) {
  const int n = static_cast<int>(basis.size());
  RankProbe out;
  out.omega = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      const double w = symplectic_form(geo, basis[i], basis[k], p, tau_index).value;
      out.omega(i, k) = w;
      out.omega(k, i) = -w;
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.omega);
  out.singular_values = svd.singularValues();
  const double top = n > 0 ? out.singular_values(0) : 0.0;
  for (int i = 0; i < n; ++i) {
    if (out.singular_values(i) > rel_tol * top) ++out.numerical_rank;
  }
  return out;
}

}  // namespace gbs
