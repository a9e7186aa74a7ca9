#include "gbstring/dynamics.hpp"

#include "gbstring/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace gbs {

void ActionParams::validate() const {
  if (!std::isfinite(tension) || !std::isfinite(gb_coupling)) {
    throw DynamicsError("action parameters must be finite");
  }
  if (tension < 0.0) {
    throw DynamicsError("tension must be >= 0, got " + std::to_string(tension));
  }
  if (worldsheet_dim != 2) {
    throw DynamicsError("only string worldsheets (D = 2) are supported, got D = " +
                        std::to_string(worldsheet_dim));
  }
  if (tension == 0.0 && gb_coupling == 0.0) {
    throw DynamicsError("tension and Gauss-Bonnet coupling cannot both vanish");
  }
}

double action_value(const GeometryBundle& geo, const ActionParams& p, const Mask& mask) {
  p.validate();
  Field density = geo.vol;
  density[0] *= p.gb_coupling * geo.scalar[0] - p.tension;
  return integrate_patch(density, mask);
}

Field eom_residual(const GeometryBundle& geo, const ActionParams& p) {
  p.validate();
  const Field K_up = raise(geo, raise(geo, geo.K, 0), 1);
  Field r = p.tension * geo.K_mean;
  r += (2.0 * p.gb_coupling) * einsum("ab,abi->i", geo.einstein, K_up);
  return r;
}

Field symplectic_potential(const GeometryBundle& geo, const DeformationField& d,
                           const ActionParams& p, PotentialForm form) {
  p.validate();
  check_deformation(geo, d);
  const double beta = p.gb_coupling;
  Field psi = -p.tension * d.phi_tangent;
  if (beta != 0.0) {
    const Field dconn = vary_connection(geo, d);
    if (form == PotentialForm::brane) {
      const Field G_up = raise(geo, raise(geo, geo.einstein, 0), 1);
      psi -= (2.0 * beta) * einsum("ab,b->a", G_up, lowered_tangent(geo, d));
    }
    psi += beta * einsum("cd,acd->a", geo.gamma_inv, dconn);
    psi -= beta * einsum("ab,b->a", geo.gamma_inv, trace(dconn, 0, 1));
  }
  for (int a = 0; a < 2; ++a) psi(a) *= geo.vol[0];
  return psi;
}

CoefficientSet::CoefficientSet(const GridPtr& grid, int codim)
    : C(grid, {normal_index(codim), normal_index(codim)}),
      B(grid, {ws_upper(), normal_index(codim), normal_index(codim)}),
      A(grid, {ws_upper(), ws_upper(), normal_index(codim), normal_index(codim)}),
      Lap(grid, {normal_index(codim), normal_index(codim)}) {}

CoefficientSet& CoefficientSet::operator+=(const CoefficientSet& o) {
  C += o.C;
  B += o.B;
  A += o.A;
  Lap += o.Lap;
  return *this;
}

CoefficientSet CoefficientSet::transposed() const {
  CoefficientSet t = *this;
  const std::array<int, 2> p2{1, 0};
  const std::array<int, 3> p3{0, 2, 1};
  const std::array<int, 4> p4{0, 1, 3, 2};
  t.C = permute(C, p2);
  t.B = permute(B, p3);
  t.A = permute(A, p4);
  t.Lap = permute(Lap, p2);
  return t;
}

double CoefficientSet::scale(const Mask& mask) const {
  return std::max({max_abs(C, mask), max_abs(B, mask), max_abs(A, mask), max_abs(Lap, mask)});
}

CurvatureFields curvature_fields(const GeometryBundle& geo) {
  CurvatureFields cf;
  cf.K_up = raise(geo, raise(geo, geo.K, 0), 1);
  cf.K_mixed = raise(geo, geo.K, 1);
  cf.DK = covariant_derivative(geo, geo.K);
  cf.DDK = covariant_derivative(geo, cf.DK);
  cf.LapK = tensor_laplacian(geo, geo.K);
  cf.DKm = covariant_derivative(geo, geo.K_mean);
  cf.DDKm = covariant_derivative(geo, cf.DKm);
  cf.LapKm = tilde_laplacian(geo, geo.K_mean);
  cf.frame_riem = riemann_frame_components(*geo.background, geo.X, geo.e, geo.n);
  cf.M = einsum("ab,abij->ij", geo.gamma_inv, cf.frame_riem);
  cf.G_up = raise(geo, raise(geo, geo.einstein, 0), 1);
  return cf;
}

namespace {

Field identity_normal(const GridPtr& grid, int codim) {
  Field id(grid, {normal_index(codim), normal_index(codim)});
  for (int i = 0; i < codim; ++i) id(i, i).setOnes();
  return id;
}

}  // namespace

LinearizedCoefficients linearized_coefficients(const GeometryBundle& geo, const ActionParams& p,
                                               const CurvatureFields& cf) {
  p.validate();
  const auto grid = geo.grid_ptr();
  const int nc = geo.codim();
  const double s = p.tension;
  const double b = p.gb_coupling;
  const Field& gi = geo.gamma_inv;
  LinearizedCoefficients out{CoefficientSet(grid, nc), CoefficientSet(grid, nc),
                             CoefficientSet(grid, nc), CoefficientSet(grid, nc)};

  auto& dng = out.dng;
  dng.C = s * (cf.M - einsum("abi,abj->ij", geo.K, cf.K_up));
  dng.Lap = -s * identity_normal(grid, nc);
  if (b == 0.0) return out;

  const Field KK = einsum("abi,abj->ij", cf.K_up, geo.K);

  auto& on = out.gb_onshell;
  on.C = (4 * b) * einsum("abi,ce,cbaej->ij", cf.K_up, gi, cf.DDK);
  on.C -= (2 * b) * einsum("abi,abj->ij", cf.K_up, cf.LapK);
  on.C -= (2 * b) * times(KK, geo.scalar);
  on.B = (4 * b) * einsum("abi,ce,baej->cij", cf.K_up, gi, cf.DK);
  on.B += (4 * b) * einsum("abi,ce,caej->bij", cf.K_up, gi, cf.DK);
  on.B -= (4 * b) * einsum("abi,cabj,cd->dij", cf.K_up, cf.DK, gi);
  on.A = (4 * b) * einsum("abi,ce,aej->cbij", cf.K_up, gi, geo.K);
  on.Lap = (-2 * b) * KK;

  auto& mean = out.gb_mean;
  mean.C = (-2 * b) * einsum("abi,baj->ij", cf.K_up, cf.DDKm);
  mean.C += (2 * b) * einsum("cd,cdj,i->ij", geo.ricci, cf.K_up, geo.K_mean);
  mean.C += (2 * b) * einsum("i,j->ij", geo.K_mean, cf.LapKm);
  mean.C -= (2 * b) * einsum("i,ge,cf,cgefj->ij", geo.K_mean, gi, gi, cf.DDK);
  mean.B = (-4 * b) * einsum("abi,aj->bij", cf.K_up, cf.DKm);
  mean.B += (4 * b) * einsum("i,cj,cd->dij", geo.K_mean, cf.DKm, gi);
  mean.B -= (4 * b) * einsum("i,ge,cf,gefj->cij", geo.K_mean, gi, gi, cf.DK);
  mean.A = (-2 * b) * einsum("abi,j->baij", cf.K_up, geo.K_mean);
  mean.A -= (2 * b) * einsum("i,cgj->cgij", geo.K_mean, cf.K_up);
  mean.Lap = (2 * b) * einsum("i,j->ij", geo.K_mean, geo.K_mean);

  auto& gb = out.g_blocks;
  gb.A = (-2 * b) * einsum("ab,ij->abij", cf.G_up, identity_normal(grid, nc));
  gb.C = (2 * b) * einsum("ab,adi,bdj->ij", cf.G_up, geo.K, cf.K_mixed);
  gb.C += (2 * b) * einsum("ab,abij->ij", cf.G_up, cf.frame_riem);
  gb.C -= (8 * b) * einsum("dbi,adj,ab->ij", cf.K_mixed, cf.K_up, geo.einstein);
  return out;
}

LinearizedCoefficients linearized_coefficients(const GeometryBundle& geo, const ActionParams& p) {
  return linearized_coefficients(geo, p, curvature_fields(geo));
}

void check_normal_field(const GeometryBundle& geo, const Field& phi) {
  if (phi.rank() != 1 || phi.slots()[0].kind != Slot::normal || phi.dim(0) != geo.codim()) {
    throw DynamicsError("expected a normal field with " + std::to_string(geo.codim()) +
                        " components, got " + describe(phi.slots()));
  }
  if (!(phi.grid() == geo.grid())) throw DynamicsError("field lives on a different grid");
}

Field apply(const GeometryBundle& geo, const CoefficientSet& c, const Field& phi) {
  check_normal_field(geo, phi);
  Field out = einsum("ij,j->i", c.C, phi);
  const bool first = c.B.max_abs() != 0.0;
  const bool second = c.A.max_abs() != 0.0;
  if (first || second) {
    const Field dphi = tilde_grad(geo, phi);
    if (first) out += einsum("cij,cj->i", c.B, dphi);
    if (second) out += einsum("cbij,cbj->i", c.A, covariant_derivative(geo, dphi));
  }
  if (c.Lap.max_abs() != 0.0) out += einsum("ij,j->i", c.Lap, tilde_laplacian(geo, phi));
  return out;
}

Field LinearizedResidual::without_g_blocks() const { return dng + gb_onshell + gb_mean; }

LinearizedResidual linearized_residual(const GeometryBundle& geo, const Field& phi,
                                       const LinearizedCoefficients& c) {
  LinearizedResidual r;
  r.dng = apply(geo, c.dng, phi);
  r.gb_onshell = apply(geo, c.gb_onshell, phi);
  r.gb_mean = apply(geo, c.gb_mean, phi);
  r.g_blocks = apply(geo, c.g_blocks, phi);
  r.total = r.dng + r.gb_onshell + r.gb_mean + r.g_blocks;
  return r;
}

LinearizedResidual linearized_residual(const GeometryBundle& geo, const Field& phi,
                                       const ActionParams& p) {
  check_normal_field(geo, phi);
  return linearized_residual(geo, phi, linearized_coefficients(geo, p));
}

void require_on_shell(const GeometryBundle& geo) {
  const double k = max_abs(geo.K_mean, geo.mask);
  if (!(k <= kOnShellThreshold)) {
    throw DynamicsError("geometry is off shell: max |K^i| = " + std::to_string(k) +
                        " exceeds " + std::to_string(kOnShellThreshold));
  }
}

CoefficientSet p_operator_coefficients(const GeometryBundle& geo, const ActionParams& p) {
  auto c = linearized_coefficients(geo, p);
  c.dng += c.gb_onshell;
  return c.dng;
}

Field p_operator_apply(const GeometryBundle& geo, const Field& phi, const ActionParams& p,
                       bool transpose) {
  check_normal_field(geo, phi);
  require_on_shell(geo);
  const CoefficientSet c = p_operator_coefficients(geo, p);
  return apply(geo, transpose ? c.transposed() : c, phi);
}

// ---------------------------------------------------------------------------
// String form of the linearization, written out index by index.

namespace {

using Arr = Eigen::ArrayXXd;

struct Tensor {
  std::vector<int> dims;
  std::vector<Arr> v;
  Tensor(std::vector<int> d, const Arr& zero) : dims(std::move(d)) {
    int n = 1;
    for (int x : dims) n *= x;
    v.assign(static_cast<std::size_t>(n), zero);
  }
  std::size_t at(std::initializer_list<int> idx) const {
    std::size_t f = 0;
    auto d = dims.begin();
    for (int i : idx) f = f * static_cast<std::size_t>(*d++) + static_cast<std::size_t>(i);
    return f;
  }
  Arr& operator()(std::initializer_list<int> idx) { return v[at(idx)]; }
  const Arr& operator()(std::initializer_list<int> idx) const { return v[at(idx)]; }
};

Tensor from_field(const Field& f) {
  std::vector<int> dims;
  for (const auto& s : f.slots()) dims.push_back(s.dim);
  Tensor t(dims, f[0]);
  for (int c = 0; c < f.size(); ++c) t.v[static_cast<std::size_t>(c)] = f[c];
  return t;
}

}  // namespace

Field linearized_residual_string(const GeometryBundle& geo, const Field& phi,
                                 const ActionParams& p) {
  p.validate();
  check_normal_field(geo, phi);
  const int nc = geo.codim();
  const double s = p.tension;
  const double b = p.gb_coupling;
  const Arr zero = Arr::Zero(geo.grid().n_tau(), geo.grid().n_sigma());

  const Tensor gi = from_field(geo.gamma_inv);
  const Tensor K = from_field(geo.K);
  const Tensor Km = from_field(geo.K_mean);
  const Tensor ric = from_field(geo.ricci);
  const Arr& R = geo.scalar[0];

  Tensor Kup({2, 2, nc}, zero);   // K^{ab i}
  Tensor Kmix({2, 2, nc}, zero);  // K_a^{c i}
  for (int i = 0; i < nc; ++i)
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c)
        for (int e = 0; e < 2; ++e) {
          Kmix({a, c, i}) += gi({c, e}) * K({a, e, i});
          for (int f = 0; f < 2; ++f) Kup({a, c, i}) += gi({a, e}) * gi({c, f}) * K({e, f, i});
        }

  const Tensor DK = from_field(covariant_derivative(geo, geo.K));        // (c, a, b, j)
  const Tensor DDK = from_field(covariant_derivative(geo, covariant_derivative(geo, geo.K)));
  const Tensor LapK = from_field(tensor_laplacian(geo, geo.K));          // (a, b, j)
  const Tensor DKm = from_field(covariant_derivative(geo, geo.K_mean));  // (c, j)
  const Tensor DDKm = from_field(covariant_derivative(geo, covariant_derivative(geo, geo.K_mean)));
  const Tensor LapKm = from_field(tilde_laplacian(geo, geo.K_mean));
  const Tensor M = from_field(riemann_contract(*geo.background, geo.X, geo.e, geo.n, geo.gamma_inv));

  const Tensor ph = from_field(phi);
  const Field dphi_f = tilde_grad(geo, phi);
  const Tensor dphi = from_field(dphi_f);                                 // (c, j)
  const Tensor ddphi = from_field(covariant_derivative(geo, dphi_f));     // (c, b, j)
  const Tensor lapphi = from_field(tilde_laplacian(geo, phi));
  Tensor dphi_up({2, nc}, zero);                                          // ~nabla^c phi_j
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d)
      for (int j = 0; j < nc; ++j) dphi_up({c, j}) += gi({c, d}) * dphi({d, j});

  Field out(geo.grid_ptr(), {normal_index(nc)});
  for (int i = 0; i < nc; ++i) {
    Arr r = zero;
    for (int j = 0; j < nc; ++j) {
      // sigma [-~Delta^i_j - K_ab^i K^ab_j + g(R(e_a, n_j) e^a, n^i)] phi^j
      Arr kk = zero;
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) kk += K({a, c, i}) * Kup({a, c, j});
      r += s * (-(i == j ? lapphi({j}) : zero) - kk * ph({j}) + M({i, j}) * ph({j}));
      if (b == 0.0) continue;

      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb) {
          const Arr& kab = Kup({a, bb, i});
          for (int c = 0; c < 2; ++c) {
            for (int e = 0; e < 2; ++e) {
              // 4 beta K^abi ~nabla_c ~nabla_b K_a^cj phi_j
              r += 4 * b * kab * gi({c, e}) * DDK.v[DDK.at({c, bb, a, e, j})] * ph({j});
              // 4 beta K^abi ~nabla_b K_a^cj ~nabla_c phi_j
              r += 4 * b * kab * gi({c, e}) * DK({bb, a, e, j}) * dphi({c, j});
              // 4 beta K^abi ~nabla_c K_a^cj ~nabla_b phi_j
              r += 4 * b * kab * gi({c, e}) * DK({c, a, e, j}) * dphi({bb, j});
            }
            // 4 beta K^abi K_a^cj ~nabla_c ~nabla_b phi_j
            r += 4 * b * kab * Kmix({a, c, j}) * ddphi({c, bb, j});
            // -4 beta K^abi ~nabla_c K_ab^j ~nabla^c phi_j
            r -= 4 * b * kab * DK({c, a, bb, j}) * dphi_up({c, j});
          }
          // -2 beta K^abi ~Delta K_ab^j phi_j
          r -= 2 * b * kab * LapK({a, bb, j}) * ph({j});
          // -2 beta K^abi K_ab^j ~Delta phi_j
          r -= 2 * b * kab * K({a, bb, j}) * lapphi({j});
          // -2 beta K^abi ~nabla_b ~nabla_a K^j phi_j
          r -= 2 * b * kab * DDKm({bb, a, j}) * ph({j});
          // -4 beta K^abi ~nabla_a K^j ~nabla_b phi_j
          r -= 4 * b * kab * DKm({a, j}) * dphi({bb, j});
          // -2 beta K^abi K^j ~nabla_b ~nabla_a phi_j
          r -= 2 * b * kab * Km({j}) * ddphi({bb, a, j});
          // -2 beta K^abi K_ab^j phi^j R
          r -= 2 * b * kab * K({a, bb, j}) * ph({j}) * R;
          // 2 beta R_cd K^cd_j phi^j K^i
          r += 2 * b * ric({a, bb}) * Kup({a, bb, j}) * ph({j}) * Km({i});
        }
      // 2 beta K^i ~Delta K^j phi_j
      r += 2 * b * Km({i}) * LapKm({j}) * ph({j});
      // 2 beta K^i K^j ~Delta phi_j
      r += 2 * b * Km({i}) * Km({j}) * lapphi({j});
      for (int c = 0; c < 2; ++c) {
        // 4 beta K^i ~nabla_c K^j ~nabla^c phi_j
        r += 4 * b * Km({i}) * DKm({c, j}) * dphi_up({c, j});
        for (int g = 0; g < 2; ++g) {
          Arr ddk = zero;  // ~nabla_c ~nabla_g K^{gcj}
          Arr dk = zero;   // ~nabla_g K^{gcj}
          for (int e = 0; e < 2; ++e)
            for (int f = 0; f < 2; ++f) {
              ddk += gi({g, e}) * gi({c, f}) * DDK.v[DDK.at({c, g, e, f, j})];
              dk += gi({g, e}) * gi({c, f}) * DK({g, e, f, j});
            }
          // -2 beta K^i ~nabla_c ~nabla_g K^gcj phi_j
          r -= 2 * b * Km({i}) * ddk * ph({j});
          // -4 beta K^i ~nabla_g K^gcj ~nabla_c phi_j
          r -= 4 * b * Km({i}) * dk * dphi({c, j});
          // -2 beta K^i K^cgj ~nabla_c ~nabla_g phi_j
          r -= 2 * b * Km({i}) * Kup({c, g, j}) * ddphi({c, g, j});
        }
      }
    }
    out(i) = r;
  }
  return out;
}

}  // namespace gbs
