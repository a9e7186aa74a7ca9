#ifndef GBSTRING_GEOMETRY_HPP
#define GBSTRING_GEOMETRY_HPP

#include "gbstring/background.hpp"
#include "gbstring/field.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace gbs {

/// Geometry construction failure at a specific grid point.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(const std::string& what, int tau_index, int sigma_index)
      : std::runtime_error(what + " at grid point (" +
                           std::to_string(tau_index) + ", " +
                           std::to_string(sigma_index) + ")"),
        tau_index_(tau_index),
        sigma_index_(sigma_index) {}
  int tau_index() const { return tau_index_; }
  int sigma_index() const { return sigma_index_; }

 private:
  int tau_index_;
  int sigma_index_;
};

/// The map X^mu(tau, sigma) into a background, with the region declared
/// singular by whoever produced it.
struct Embedding {
  BackgroundPtr background;
  Field X;  // (spacetime)
  Mask declared_mask;

  Embedding(BackgroundPtr bg, Field x);
  Embedding(BackgroundPtr bg, Field x, Mask declared);
  const GridPtr& grid_ptr() const { return X.grid_ptr(); }
};

struct GeometryOptions {
  /// Tangent Gram determinant below which a point is degenerate.
  double degeneracy_threshold = 1e-10;
  /// Degenerate points are masked together with this many neighbours in each
  /// direction; when false a degenerate point is an error.
  bool mask_degenerate = true;
  int mask_radius = 1;
  /// Coordinate seed order used to build the first codim-1 normals. Empty
  /// means 0, 1, ..., N-1.
  std::vector<int> seed_order;
  /// Seeds whose projection drops below this norm somewhere are rejected.
  double seed_threshold = 1e-8;
  /// When set (slots (n, st)), the frame is aligned_normal_frame of these
  /// instead of the seed construction.
  std::optional<Field> reference_normals;
};

/// Every geometric object derived from an embedding. Immutable once built.
struct GeometryBundle {
  BackgroundPtr background;
  Field X;            // (st)
  Mask mask;          // active points (declared and detected degeneracies)
  BoolArray degenerate;

  Field e;            // e_a^mu            (ws_, st)
  Field de;           // d_a e_b^mu        (ws_, ws_, st)
  Field g;            // g_{mu nu} along X (st, st)
  Field gamma;        // gamma_ab          (ws_, ws_)
  Field gamma_inv;    // gamma^ab          (ws^, ws^)
  Field vol;          // sqrt(-gamma)      ()
  Field conn_lower;   // Gamma_{d bc}      (ws_, ws_, ws_)
  Field conn;         // Gamma^a_{bc}      (ws^, ws_, ws_)
  Field riem_lower;   // R_{abcd}          (ws_, ws_, ws_, ws_)
  Field riem;         // R^a_{bcd}         (ws^, ws_, ws_, ws_)
  Field ricci;        // R_ab = R^c_{acb}  (ws_, ws_)
  Field scalar;       // R                 ()
  Field einstein;     // G_ab              (ws_, ws_)
  Field n;            // n_i^mu            (n, st)
  Field n_lower;      // n_{i mu}          (n, st)
  Field K;            // K_ab^i            (ws_, ws_, n)
  Field K_mean;       // K^i               (n)
  Field normal_conn;  // omega_a^{ij}      (ws_, n, n)

  const WorldsheetGrid& grid() const { return X.grid(); }
  const GridPtr& grid_ptr() const { return X.grid_ptr(); }
  int codim() const { return n.dim(0); }
  int spacetime_dim() const { return X.dim(0); }
  Eigen::ArrayXXd inv_vol() const;
};

/// Builds frames, metric, intrinsic and extrinsic curvature and the normal
/// connection. Extrinsic curvature is K_ab^i = -n^i_mu (d_a e_b^mu +
/// Gamma^mu_{nu lambda} e_a^nu e_b^lambda), symmetrized in (a, b).
GeometryBundle build_geometry(const Embedding& emb,
                              const GeometryOptions& opts = {});

/// Replaces the normal frame (slots (n, st)) and recomputes everything that
/// depends on it: K, K^i and the normal connection.
GeometryBundle with_normal_frame(const GeometryBundle& geo, const Field& normals);

/// The orthonormal normal frame of geo closest to `reference` (same layout):
/// each reference normal is projected off the tangent plane and off the
/// earlier normals, then normalized. Smooth whenever the reference is and the
/// sheets are close, e.g. to compare a deformed sheet with the original.
Field aligned_normal_frame(const GeometryBundle& geo, const Field& reference);
GeometryBundle with_aligned_frame(const GeometryBundle& geo, const Field& reference);

/// Rotates a codimension-2 normal frame by the pointwise angle `theta`:
/// n'_1 = cos n_1 + sin n_2, n'_2 = -sin n_1 + cos n_2.
GeometryBundle rotate_normal_frame(const GeometryBundle& geo,
                                   const Eigen::ArrayXXd& theta);

/// Worldsheet and normal-bundle covariant derivative of a tensor whose slots
/// are ws_lower, ws_upper or normal. Prepends a ws_lower slot.
Field covariant_derivative(const GeometryBundle& geo, const Field& T);

/// (~nabla_a phi)^i = d_a phi^i + omega_a^i_j phi^j. Slots (ws_, n).
Field tilde_grad(const GeometryBundle& geo, const Field& phi);

/// Normal-bundle Laplacian in divergence form:
/// (1/sqrt(-gamma)) d_a(sqrt(-gamma) gamma^ab ~nabla_b phi) + omega terms.
Field tilde_laplacian(const GeometryBundle& geo, const Field& phi);

/// Same operator as the trace gamma^ab ~nabla_a ~nabla_b phi, used to
/// cross-check the divergence form.
Field tilde_laplacian_trace(const GeometryBundle& geo, const Field& phi);

/// Tensor Laplacian gamma^{cd} ~nabla_c ~nabla_d T for any supported slots.
Field tensor_laplacian(const GeometryBundle& geo, const Field& T);

/// Covariant divergence (1/sqrt(-gamma)) d_a(sqrt(-gamma) J^a) of a vector
/// whose first slot is ws_upper; remaining slots must be normal indices and
/// pick up the normal connection.
Field divergence(const GeometryBundle& geo, const Field& J);

/// Raises (or lowers) the worldsheet index at `slot` with gamma.
Field raise(const GeometryBundle& geo, const Field& T, int slot);
Field lower(const GeometryBundle& geo, const Field& T, int slot);

/// Scalar curvature from the Gauss relation in a flat background,
/// K^i K_i - K_ab^i K^ab_i.
Field gauss_scalar_curvature(const GeometryBundle& geo);

/// Active points minus `rows` tau rows at each end of the window.
Mask interior_mask(const GeometryBundle& geo, int rows);

/// Rows to exclude so that roughly `fraction` of the tau window at each end
/// is dropped; used for residuals of deeply nested derivatives.
int interior_rows(const WorldsheetGrid& grid, double fraction = 0.125);

}  // namespace gbs

#endif  // GBSTRING_GEOMETRY_HPP
