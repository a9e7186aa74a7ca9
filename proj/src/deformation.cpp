#include "gbstring/deformation.hpp"

#include "gbstring/tensor.hpp"

#include <cmath>

namespace gbs {

DeformationField DeformationField::normal(const Field& phi) {
  return {phi, Field(phi.grid_ptr(), {ws_upper()})};
}

DeformationField DeformationField::zero(const GeometryBundle& geo) {
  return {Field(geo.grid_ptr(), {normal_index(geo.codim())}), Field(geo.grid_ptr(), {ws_upper()})};
}

void check_deformation(const GeometryBundle& geo, const DeformationField& d) {
  const auto& pn = d.phi_normal;
  const auto& pt = d.phi_tangent;
  if (pn.rank() != 1 || pn.slots()[0].kind != Slot::normal || pn.dim(0) != geo.codim()) {
    throw DeformationError("phi_normal must carry one normal index of dimension " +
                           std::to_string(geo.codim()) + ", got " + describe(pn.slots()));
  }
  if (pt.rank() != 1 || pt.slots()[0].kind != Slot::ws_upper) {
    throw DeformationError("phi_tangent must carry one upper worldsheet index, got " +
                           describe(pt.slots()));
  }
  if (!(pn.grid() == geo.grid()) || !(pt.grid() == geo.grid())) {
    throw DeformationError("deformation lives on a different grid");
  }
  if (!pn.all_finite() || !pt.all_finite()) {
    throw DeformationError("deformation has non-finite values");
  }
}

Field displacement(const GeometryBundle& geo, const DeformationField& d) {
  check_deformation(geo, d);
  Field dx = einsum("am,a->m", geo.e, d.phi_tangent);
  dx += einsum("im,i->m", geo.n, d.phi_normal);
  return dx;
}

Embedding deform_embedding(const Embedding& emb, const GeometryBundle& geo,
                           const DeformationField& d, double eps) {
  if (!(std::abs(eps) <= 1e-2)) {
    throw DeformationError("deformation parameter must satisfy |eps| <= 1e-2, got " +
                           std::to_string(eps));
  }
  if (eps == 0.0) return emb;
  Field X = emb.X;
  X += eps * displacement(geo, d);
  return Embedding(emb.background, std::move(X), emb.declared_mask);
}

Embedding deform_embedding(const Embedding& emb, const DeformationField& d, double eps) {
  return deform_embedding(emb, build_geometry(emb), d, eps);
}

Field lowered_tangent(const GeometryBundle& geo, const DeformationField& d) {
  return einsum("ab,b->a", geo.gamma, d.phi_tangent);
}

Field curvature_along(const GeometryBundle& geo, const Field& phi_normal) {
  return einsum("abj,j->ab", geo.K, phi_normal);
}

Field trace(const Field& T, int upper, int lower) {
  const auto& slots = T.slots();
  const auto uu = static_cast<std::size_t>(upper);
  const auto ul = static_cast<std::size_t>(lower);
  if (slots.at(uu).kind != Slot::ws_upper || slots.at(ul).kind != Slot::ws_lower) {
    throw std::logic_error("trace: needs one upper and one lower worldsheet slot");
  }
  std::vector<IndexSlot> rest;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (s != uu && s != ul) rest.push_back(slots[s]);
  }
  Field out(T.grid_ptr(), rest);
  std::vector<int> idx(slots.size());
  for (int comp = 0; comp < out.size(); ++comp) {
    const auto r = out.unflatten(comp);
    std::size_t k = 0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (s != uu && s != ul) idx[s] = r[k++];
    }
    for (int c = 0; c < 2; ++c) {
      idx[uu] = c;
      idx[ul] = c;
      out[comp] += T[T.flat_index(idx)];
    }
  }
  return out;
}

std::pair<Field, Field> vary_metric(const GeometryBundle& geo, const DeformationField& d) {
  check_deformation(geo, d);
  const Field S = curvature_along(geo, d.phi_normal);
  const Field dphi = covariant_derivative(geo, lowered_tangent(geo, d));
  Field lower_var(geo.grid_ptr(), {ws_lower(), ws_lower()});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) lower_var(a, b) = 2.0 * S(a, b) + dphi(a, b) + dphi(b, a);
  Field upper_var = -einsum("ac,bd,cd->ab", geo.gamma_inv, geo.gamma_inv, lower_var);
  return {std::move(lower_var), std::move(upper_var)};
}

Field vary_volume(const GeometryBundle& geo, const DeformationField& d) {
  check_deformation(geo, d);
  const Field div = trace(covariant_derivative(geo, d.phi_tangent), 1, 0);
  Field out = div + einsum("i,i->", geo.K_mean, d.phi_normal);
  out[0] *= geo.vol[0];
  return out;
}

Field vary_connection(const GeometryBundle& geo, const DeformationField& d) {
  check_deformation(geo, d);
  const Field dS = covariant_derivative(geo, curvature_along(geo, d.phi_normal));  // (c, a, b)
  const Field phi_low = lowered_tangent(geo, d);
  const Field H = covariant_derivative(geo, covariant_derivative(geo, phi_low));  // (g, f, d)
  const Field A = einsum("efdg,e->fdg", geo.riem, phi_low);                        // R^e_{fdg} phi_e

  Field T(geo.grid_ptr(), {ws_lower(), ws_lower(), ws_lower()});  // (d, g, f)
  for (int dd = 0; dd < 2; ++dd)
    for (int g = 0; g < 2; ++g)
      for (int f = 0; f < 2; ++f) {
        T(dd, g, f) = dS(f, g, dd) + dS(g, f, dd) - dS(dd, g, f) +
                      0.5 * (H(g, f, dd) + H(f, g, dd)) +
                      0.5 * (A(f, dd, g) + A(g, dd, f));
      }
  return einsum("ad,dgf->agf", geo.gamma_inv, T);
}

std::pair<Field, Field> vary_ricci_scalar(const GeometryBundle& geo, const DeformationField& d,
                                          const Field& d_connection) {
  const Field grad = covariant_derivative(geo, d_connection);  // (c, c', a, b)
  const Field first = trace(grad, 1, 0);                        // nabla_c D Gamma^c_ab
  const Field v = trace(d_connection, 0, 2);                    // D Gamma^c_ac, slot a
  const Field grad_v = covariant_derivative(geo, v);            // (b, a)
  Field d_ricci(geo.grid_ptr(), {ws_lower(), ws_lower()});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) d_ricci(a, b) = first(a, b) - grad_v(b, a);
  const Field d_inv = vary_metric(geo, d).second;
  Field d_scalar = einsum("ab,ab->", d_inv, geo.ricci);
  d_scalar += einsum("ab,ab->", geo.gamma_inv, d_ricci);
  return {std::move(d_ricci), std::move(d_scalar)};
}

std::pair<Field, Field> vary_ricci_scalar(const GeometryBundle& geo, const DeformationField& d) {
  return vary_ricci_scalar(geo, d, vary_connection(geo, d));
}

Quantity parse_quantity(const std::string& tag) {
  if (tag == "metric") return Quantity::metric;
  if (tag == "inverse_metric") return Quantity::inverse_metric;
  if (tag == "volume") return Quantity::volume;
  if (tag == "connection") return Quantity::connection;
  if (tag == "ricci") return Quantity::ricci;
  if (tag == "scalar_curvature") return Quantity::scalar_curvature;
  throw DeformationError("unknown quantity tag '" + tag + "'");
}

std::string quantity_tag(Quantity q) {
  switch (q) {
    case Quantity::metric: return "metric";
    case Quantity::inverse_metric: return "inverse_metric";
    case Quantity::volume: return "volume";
    case Quantity::connection: return "connection";
    case Quantity::ricci: return "ricci";
    case Quantity::scalar_curvature: return "scalar_curvature";
  }
  return {};
}

Field quantity_of(const GeometryBundle& geo, Quantity q) {
  switch (q) {
    case Quantity::metric: return geo.gamma;
    case Quantity::inverse_metric: return geo.gamma_inv;
    case Quantity::volume: return geo.vol;
    case Quantity::connection: return geo.conn;
    case Quantity::ricci: return geo.ricci;
    case Quantity::scalar_curvature: return geo.scalar;
  }
  throw DeformationError("unknown quantity");
}

Field fd_oracle(const Embedding& emb, const DeformationField& d, Quantity q, double eps,
                const GeometryOptions& opts) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw DeformationError("oracle step must lie in [1e-6, 1e-3], got " + std::to_string(eps));
  }
  const GeometryBundle geo = build_geometry(emb, opts);
  const Field plus = quantity_of(build_geometry(deform_embedding(emb, geo, d, eps), opts), q);
  const Field minus = quantity_of(build_geometry(deform_embedding(emb, geo, d, -eps), opts), q);
  Field out = plus - minus;
  out *= 1.0 / (2.0 * eps);
  return out;
}

Field fd_oracle(const Embedding& emb, const DeformationField& d, const std::string& tag,
                double eps, const GeometryOptions& opts) {
  return fd_oracle(emb, d, parse_quantity(tag), eps, opts);
}

Field analytic_variation(const GeometryBundle& geo, const DeformationField& d, Quantity q) {
  switch (q) {
    case Quantity::metric: return vary_metric(geo, d).first;
    case Quantity::inverse_metric: return vary_metric(geo, d).second;
    case Quantity::volume: return vary_volume(geo, d);
    case Quantity::connection: return vary_connection(geo, d);
    case Quantity::ricci: return vary_ricci_scalar(geo, d).first;
    case Quantity::scalar_curvature: return vary_ricci_scalar(geo, d).second;
  }
  throw DeformationError("unknown quantity");
}

}  // namespace gbs
