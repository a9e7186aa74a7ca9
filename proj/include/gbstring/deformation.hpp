#ifndef GBSTRING_DEFORMATION_HPP
#define GBSTRING_DEFORMATION_HPP

#include "gbstring/geometry.hpp"

#include <string>
#include <utility>

namespace gbs {

class DeformationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// delta X^mu = e_a^mu phi^a + n_i^mu phi^i.
struct DeformationField {
  Field phi_normal;   // phi^i (normal)
  Field phi_tangent;  // phi^a (ws_upper)

  /// Purely normal deformation; the tangential part is zero.
  static DeformationField normal(const Field& phi);
  static DeformationField zero(const GeometryBundle& geo);
};

/// Checks slot layouts against the geometry.
void check_deformation(const GeometryBundle& geo, const DeformationField& d);

/// The spacetime displacement e_a phi^a + n_i phi^i, slots (st).
Field displacement(const GeometryBundle& geo, const DeformationField& d);

/// X -> X + eps delta X with frames taken from `geo`; |eps| <= 1e-2.
Embedding deform_embedding(const Embedding& emb, const GeometryBundle& geo,
                           const DeformationField& d, double eps);
Embedding deform_embedding(const Embedding& emb, const DeformationField& d, double eps);

/// phi_a = gamma_ab phi^b.
Field lowered_tangent(const GeometryBundle& geo, const DeformationField& d);

/// Normal-contracted curvature S_ab = K_ab^j phi_j.
Field curvature_along(const GeometryBundle& geo, const Field& phi_normal);

/// D gamma_ab = 2 K_ab^j phi_j + nabla_a phi_b + nabla_b phi_a and
/// D gamma^ab = -2 K^abj phi_j - nabla^a phi^b - nabla^b phi^a.
std::pair<Field, Field> vary_metric(const GeometryBundle& geo, const DeformationField& d);

/// D sqrt(-gamma) = sqrt(-gamma) (nabla_a phi^a + K^i phi_i).
Field vary_volume(const GeometryBundle& geo, const DeformationField& d);

/// D Gamma^a_{gf}, slots (ws^a, ws_g, ws_f):
///   gamma^ad [nabla_f S_gd + nabla_g S_fd - nabla_d S_gf]
/// + 1/2 gamma^ad [2 nabla_(g nabla_f) phi_d + R^e_{fdg} phi_e + R^e_{gdf} phi_e]
/// with S_ab = K_ab^j phi_j and R in the convention R_ab = R^c_{acb}. The
/// Riemann terms enter with + here; see README for the sign convention.
Field vary_connection(const GeometryBundle& geo, const DeformationField& d);

/// D R_ab = nabla_c(D Gamma^c_ab) - nabla_b(D Gamma^c_ac) and
/// D R = (D gamma^ab) R_ab + gamma^ab D R_ab.
std::pair<Field, Field> vary_ricci_scalar(const GeometryBundle& geo, const DeformationField& d);

/// Same as above, reusing an already computed D Gamma.
std::pair<Field, Field> vary_ricci_scalar(const GeometryBundle& geo, const DeformationField& d,
                                          const Field& d_connection);

/// Contracts slot `upper` (ws^) with slot `lower` (ws_) of a field.
Field trace(const Field& T, int upper, int lower);

/// Quantities the finite-difference oracle can differentiate.
enum class Quantity { metric, inverse_metric, volume, connection, ricci, scalar_curvature };
Quantity parse_quantity(const std::string& tag);
std::string quantity_tag(Quantity q);

/// The quantity read off a geometry bundle.
Field quantity_of(const GeometryBundle& geo, Quantity q);

/// Central difference (Q[X + eps dX] - Q[X - eps dX]) / (2 eps), geometry
/// rebuilt from scratch on both deformed embeddings. eps in [1e-6, 1e-3].
Field fd_oracle(const Embedding& emb, const DeformationField& d, Quantity q, double eps = 1e-4,
                const GeometryOptions& opts = {});
Field fd_oracle(const Embedding& emb, const DeformationField& d, const std::string& tag,
                double eps = 1e-4, const GeometryOptions& opts = {});

/// Analytic variation matching the oracle's quantity.
Field analytic_variation(const GeometryBundle& geo, const DeformationField& d, Quantity q);

}  // namespace gbs

#endif  // GBSTRING_DEFORMATION_HPP
