#ifndef GBSTRING_SOLUTIONS_HPP
#define GBSTRING_SOLUTIONS_HPP

#include "gbstring/geometry.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace gbs {

class SolutionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A closed-string worldsheet known in closed form, in conformal gauge.
struct ExactSolution {
  using PointFn = std::function<Eigen::VectorXd(double tau, double sigma)>;

  std::string name;
  std::map<std::string, double> params;
  int dim = 3;          // smallest Minkowski dimension that holds it
  bool on_shell = true; // false for reference surfaces used as controls
  PointFn X;
  /// dX/dlambda for moduli, translations (t, x, y, z, ...), rotations,
  /// boosts and the sigma shift. Components beyond `dim` are only non-zero
  /// for translations along them.
  std::map<std::string, PointFn> family;
  /// Points the solution itself declares singular on a grid.
  std::function<Mask(const GridPtr&)> declared_mask;
  /// Optional closed-form normal frame, one row n_i^mu per normal in the
  /// native dimension. Used where the generic frame is poorly resolved.
  std::function<Eigen::MatrixXd(double tau, double sigma)> normal_frame;

  std::vector<std::string> family_names() const;
};

/// X = (R tau, R cos tau cos sigma, R cos tau sin sigma); collapses at
/// cos tau = 0, where the declared mask drops rows with |cos tau| < 0.05.
ExactSolution pulsating_circular_string(double R);

/// X = (A tau, A cos sigma cos tau, A cos sigma sin tau); folds at sigma = 0, pi.
ExactSolution rotating_folded_string(double A);

/// X = R (sqrt2 tau, cos tau cos sigma, cos tau sin sigma, sin tau cos sigma,
/// sin tau sin sigma): a circle spinning in two planes of minkowski(5), flat
/// induced metric R^2 diag(-1, 1), codimension 3 with a closed-form frame.
ExactSolution spinning_string(double R);

/// X = (tau, R cos sigma, R sin sigma): a static circle, not a solution.
ExactSolution static_cylinder(double R);

/// Registry lookup. Unknown names or parameters are rejected.
ExactSolution make_solution(const std::string& name,
                            const std::map<std::string, double>& params);

struct SolutionInfo {
  std::string name;
  std::vector<std::string> params;
  bool on_shell;
  std::string description;
};
std::vector<SolutionInfo> list_solutions();

/// Samples the solution into minkowski(dim); dim = 0 means the native one.
Embedding embed(const ExactSolution& sol, const GridPtr& grid, int dim = 0);

/// build_geometry(embed(sol, grid, dim)) with the solution's closed-form
/// frame when it has one; extra dimensions add coordinate unit normals.
GeometryBundle solution_geometry(const ExactSolution& sol, const GridPtr& grid, int dim = 0);

/// dX/dlambda sampled on the grid, padded with zeros up to `dim`.
Field family_derivative(const ExactSolution& sol, const GridPtr& grid,
                        const std::string& which, int dim);

/// phi^i = n^i_mu dX^mu/dlambda with the geometry's normal frame.
Field jacobi_from_family(const GeometryBundle& geo, const ExactSolution& sol,
                         const std::string& which);

/// Normal projection of an arbitrary spacetime displacement field (st).
Field normal_projection(const GeometryBundle& geo, const Field& dX);

}  // namespace gbs

#endif  // GBSTRING_SOLUTIONS_HPP
