#ifndef GBSTRING_DYNAMICS_HPP
#define GBSTRING_DYNAMICS_HPP

#include "gbstring/deformation.hpp"

namespace gbs {

class DynamicsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Tension sigma, Gauss-Bonnet coupling beta and worldsheet dimension D.
struct ActionParams {
  double tension = 1.0;
  double gb_coupling = 0.0;
  int worldsheet_dim = 2;

  /// Throws DynamicsError unless sigma >= 0, D = 2 and (sigma, beta) != 0.
  void validate() const;
};

/// S = -sigma int sqrt(-gamma) + beta int sqrt(-gamma) R over the active patch.
double action_value(const GeometryBundle& geo, const ActionParams& p, const Mask& mask);

/// sigma K^i + 2 beta G_ab K^abi.
Field eom_residual(const GeometryBundle& geo, const ActionParams& p);

enum class PotentialForm {
  brane,   // with the -2 beta G^ab phi_b term
  string,  // that term dropped
};

/// Psi^a = sqrt(-gamma) [-sigma phi^a - 2 beta G^ab phi_b
///                       + beta gamma^cd D Gamma^a_cd - beta gamma^ab D Gamma^c_cb].
Field symplectic_potential(const GeometryBundle& geo, const DeformationField& d,
                           const ActionParams& p, PotentialForm form = PotentialForm::brane);

/// Coefficients of a linear operator on normal fields,
///   (L phi)^i = C^ij phi_j + B^{c ij} ~nabla_c phi_j
///             + A^{cb ij} ~nabla_c ~nabla_b phi_j + L^ij ~Delta phi_j,
/// with ~Delta in divergence form.
struct CoefficientSet {
  Field C;    // (n, n)
  Field B;    // (ws^, n, n)
  Field A;    // (ws^, ws^, n, n)
  Field Lap;  // (n, n)

  CoefficientSet() = default;
  CoefficientSet(const GridPtr& grid, int codim);
  CoefficientSet& operator+=(const CoefficientSet& o);
  /// Swaps the two normal indices of every coefficient.
  CoefficientSet transposed() const;
  /// Largest coefficient magnitude over the masked points.
  double scale(const Mask& mask) const;
};

/// Undifferentiated background fields shared by every operator application.
struct CurvatureFields {
  Field K_up;        // K^{ab i}
  Field K_mixed;     // K_a^{c i}           (ws_, ws^, n)
  Field DK;          // ~nabla_c K_ab^j     (ws_, ws_, ws_, n)
  Field DDK;         // ~nabla_d ~nabla_c K_ab^j
  Field LapK;        // gamma^cd ~nabla_c ~nabla_d K_ab^j
  Field DKm;         // ~nabla_c K^j
  Field DDKm;        // ~nabla_d ~nabla_c K^j
  Field LapKm;       // ~Delta K^j (divergence form)
  Field M;           // g(R(e_a, n_j) e^a, n^i), (n, n)
  Field frame_riem;  // g(R(e_a, n_j) e_b, n_i), (ws_, ws_, n, n)
  Field G_up;        // G^ab
};
CurvatureFields curvature_fields(const GeometryBundle& geo);

/// The p-brane linearization split into its groups. `dng` is the sigma bracket, `gb_onshell`
/// the beta terms kept in the on-shell operator P, `gb_mean` the beta terms
/// proportional to K^i, `g_blocks` those proportional to G_ab.
struct LinearizedCoefficients {
  CoefficientSet dng;
  CoefficientSet gb_onshell;
  CoefficientSet gb_mean;
  CoefficientSet g_blocks;
};
LinearizedCoefficients linearized_coefficients(const GeometryBundle& geo, const ActionParams& p);
LinearizedCoefficients linearized_coefficients(const GeometryBundle& geo, const ActionParams& p,
                                               const CurvatureFields& cf);

/// Applies a coefficient set to phi.
Field apply(const GeometryBundle& geo, const CoefficientSet& c, const Field& phi);

struct LinearizedResidual {
  Field total;
  Field dng;
  Field gb_onshell;
  Field gb_mean;
  Field g_blocks;
  /// Everything except the G_ab-proportional blocks.
  Field without_g_blocks() const;
};

/// Linearization of the equations of motion around geo along normal phi.
LinearizedResidual linearized_residual(const GeometryBundle& geo, const Field& phi,
                                       const ActionParams& p);
LinearizedResidual linearized_residual(const GeometryBundle& geo, const Field& phi,
                                       const LinearizedCoefficients& c);

/// The D = 2 string form of the same linearization, coded term by term,
/// independently of the coefficient machinery.
Field linearized_residual_string(const GeometryBundle& geo, const Field& phi,
                                 const ActionParams& p);

/// On-shell threshold for the operator P: max |K^i| over active points.
inline constexpr double kOnShellThreshold = 1e-3;

/// On-shell operator P (K^i terms dropped) applied to phi; `transpose` applies P^{ji}.
/// Rejects geometries whose mean curvature exceeds kOnShellThreshold.
Field p_operator_apply(const GeometryBundle& geo, const Field& phi, const ActionParams& p,
                       bool transpose = false);

/// Coefficients of P (dng + gb_onshell); no on-shell check.
CoefficientSet p_operator_coefficients(const GeometryBundle& geo, const ActionParams& p);

/// Throws DynamicsError when max |K^i| over active points exceeds the threshold.
void require_on_shell(const GeometryBundle& geo);

/// Normal-field argument check shared by the operators.
void check_normal_field(const GeometryBundle& geo, const Field& phi);

}  // namespace gbs

#endif  // GBSTRING_DYNAMICS_HPP
