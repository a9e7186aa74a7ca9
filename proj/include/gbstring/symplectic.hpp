#ifndef GBSTRING_SYMPLECTIC_HPP
#define GBSTRING_SYMPLECTIC_HPP

#include "gbstring/dynamics.hpp"

#include <array>
#include <functional>

namespace gbs {

class SymplecticError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The six pieces j_1^a .. j_6^a of the bilinear current for (phi1, phi2).
struct CurrentPieces {
  std::array<Field, 6> j;  // each (ws^)
  Field sum() const;
};
CurrentPieces current_pieces(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                             const ActionParams& p);

/// Bilinear current j^a(phi1, phi2) in its simplified closed form, with the
/// sum of the pieces kept alongside for comparison.
struct BilinearCurrent {
  Field j;            // closed form (ws^)
  Field pieces_sum;   // j_1 + ... + j_6
  ActionParams params;
  /// max |j - pieces_sum| over active points.
  double simplification_gap(const Mask& mask) const;
};
BilinearCurrent bilinear_current(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                                 const ActionParams& p);

/// (j(phi1, phi2) - j(phi2, phi1)) / 2.
Field antisymmetric_current(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                            const ActionParams& p);

/// phi1 . P phi2 - (P^T phi1) . phi2 - nabla_a j^a. Requires an on-shell geometry.
Field self_adjointness_residual(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                                const ActionParams& p);

/// nabla_a j^a(phi1, phi2) = (1/sqrt(-gamma)) d_a(sqrt(-gamma) j^a).
Field conservation_residual(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                            const ActionParams& p);

struct SymplecticForm {
  double value = 0.0;   // (raw12 - raw21) / 2
  double raw12 = 0.0;   // int sqrt(-gamma) j^tau(phi1, phi2) dsigma
  double raw21 = 0.0;
  int tau_index = 0;
  ActionParams params;
};

/// omega on the constant-tau slice `tau_index`, which must be fully active.
SymplecticForm symplectic_form(const GeometryBundle& geo, const Field& phi1, const Field& phi2,
                               const ActionParams& p, int tau_index);

/// Antisymmetrized central difference of the symplectic potential:
///   d/deps Psi^a[X + eps phi2 n; phi1 n] - (1 <-> 2),
/// where the fixed spacetime displacement phi1 n is re-decomposed into normal
/// and tangential parts on the deformed sheet, whose frame is aligned with geo's. Compare with sqrt(-gamma) times
/// the antisymmetric current.
Field potential_variation_current(const Embedding& emb, const GeometryBundle& geo,
                                  const Field& phi1, const Field& phi2, const ActionParams& p,
                                  double eps = 1e-4);

/// Circle reparametrization sigma -> sigma + eps f(sigma).
struct Reparametrization {
  std::function<double(double)> f;
  double eps = 0.0;
};

/// Rebuilds the sheet, its normal frame and the normal fields under the
/// reparametrization (spectral interpolation in sigma) and returns
/// |omega' - omega| / |omega| on the slice `tau_index`. geo is the geometry
/// of emb in the frame the fields refer to. Throws SymplecticError when omega
/// is at the roundoff level, where a relative change means nothing.
double gauge_invariance_check(const Embedding& emb, const GeometryBundle& geo, const Field& phi1,
                              const Field& phi2, const ActionParams& p, int tau_index,
                              const Reparametrization& r);

/// omega(phi_i, phi_j) on one slice for a basis of fields, and its singular
/// values. Diagnostic only.
struct RankProbe {
  Eigen::MatrixXd omega;
  Eigen::VectorXd singular_values;
  int numerical_rank = 0;
};
RankProbe rank_probe(const GeometryBundle& geo, const std::vector<Field>& basis,
                     const ActionParams& p, int tau_index, double rel_tol = 1e-8);

}  // namespace gbs

#endif  // GBSTRING_SYMPLECTIC_HPP
