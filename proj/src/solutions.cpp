#include "gbstring/solutions.hpp"

#include "gbstring/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace gbs {

std::vector<std::string> ExactSolution::family_names() const {
  std::vector<std::string> names;
  for (const auto& [k, v] : family) names.push_back(k);
  return names;
}

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// Spacetime isometries shared by every solution in 2+1 (plus z translation).
void add_isometries(ExactSolution& s) {
  const auto X = s.X;
  s.family["t"] = [](double, double) { return vec({1, 0, 0}); };
  s.family["x"] = [](double, double) { return vec({0, 1, 0}); };
  s.family["y"] = [](double, double) { return vec({0, 0, 1}); };
  s.family["z"] = [](double, double) { return vec({0, 0, 0, 1}); };
  s.family["rotation"] = [X](double t, double sg) {
    const Eigen::VectorXd p = X(t, sg);
    return vec({0, -p(2), p(1)});
  };
  s.family["boost_x"] = [X](double t, double sg) {
    const Eigen::VectorXd p = X(t, sg);
    return vec({p(1), p(0), 0});
  };
  s.family["boost_y"] = [X](double t, double sg) {
    const Eigen::VectorXd p = X(t, sg);
    return vec({p(2), 0, p(0)});
  };
}

void require_positive(const std::string& what, double v) {
  if (!(v > 0.0)) {
    throw SolutionError(what + " must be positive, got " + std::to_string(v));
  }
}

}  // namespace

ExactSolution pulsating_circular_string(double R) {
  require_positive("pulsating_circular_string: R", R);
  ExactSolution s;
  s.name = "pulsating_circular_string";
  s.params = {{"R", R}};
  s.X = [R](double t, double sg) {
    return vec({R * t, R * std::cos(t) * std::cos(sg), R * std::cos(t) * std::sin(sg)});
  };
  s.family["R"] = [](double t, double sg) {
    return vec({t, std::cos(t) * std::cos(sg), std::cos(t) * std::sin(sg)});
  };
  s.family["sigma_shift"] = [R](double t, double sg) {
    return vec({0, -R * std::cos(t) * std::sin(sg), R * std::cos(t) * std::cos(sg)});
  };
  add_isometries(s);
  s.declared_mask = [](const GridPtr& g) {
    Mask m(g);
    for (int i = 0; i < g->n_tau(); ++i) {
      if (std::abs(std::cos(g->tau(i))) < 0.05) m.exclude(i, i, 0, g->n_sigma() - 1);
    }
    return m;
  };
  return s;
}

ExactSolution rotating_folded_string(double A) {
  require_positive("rotating_folded_string: A", A);
  ExactSolution s;
  s.name = "rotating_folded_string";
  s.params = {{"A", A}};
  s.X = [A](double t, double sg) {
    return vec({A * t, A * std::cos(sg) * std::cos(t), A * std::cos(sg) * std::sin(t)});
  };
  s.family["A"] = [](double t, double sg) {
    return vec({t, std::cos(sg) * std::cos(t), std::cos(sg) * std::sin(t)});
  };
  s.family["sigma_shift"] = [A](double t, double sg) {
    return vec({0, -A * std::sin(sg) * std::cos(t), -A * std::sin(sg) * std::sin(t)});
  };
  add_isometries(s);
  s.declared_mask = [](const GridPtr& g) {
    Mask m(g);
    const int n = g->n_sigma();
    m.exclude(0, g->n_tau() - 1, -1, 1);
    m.exclude(0, g->n_tau() - 1, n / 2 - 1, n / 2 + 1);
    return m;
  };
  return s;
}

ExactSolution spinning_string(double R) {
  require_positive("spinning_string: R", R);
  const double k = std::sqrt(2.0);
  ExactSolution s;
  s.name = "spinning_string";
  s.params = {{"R", R}};
  s.dim = 5;
  s.X = [R, k](double t, double sg) {
    return vec({R * k * t, R * std::cos(t) * std::cos(sg), R * std::cos(t) * std::sin(sg),
                R * std::sin(t) * std::cos(sg), R * std::sin(t) * std::sin(sg)});
  };
  s.family["R"] = [X = s.X, R](double t, double sg) { return Eigen::VectorXd(X(t, sg) / R); };
  s.family["sigma_shift"] = [R](double t, double sg) {
    return vec({0, -R * std::cos(t) * std::sin(sg), R * std::cos(t) * std::cos(sg),
                -R * std::sin(t) * std::sin(sg), R * std::sin(t) * std::cos(sg)});
  };
  const char* axes = "txyzw";
  for (int m = 0; m < 5; ++m) {
    s.family[std::string(1, axes[m])] = [m](double, double) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(5);
      v(m) = 1;
      return v;
    };
  }
  for (int p = 1; p < 5; ++p) {
    s.family[std::string("boost_") + axes[p]] = [X = s.X, p](double t, double sg) {
      const Eigen::VectorXd x = X(t, sg);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(5);
      v(0) = x(p);
      v(p) = x(0);
      return v;
    };
    for (int q = p + 1; q < 5; ++q) {
      s.family[std::string("rotation_") + axes[p] + axes[q]] = [X = s.X, p, q](double t, double sg) {
        const Eigen::VectorXd x = X(t, sg);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(5);
        v(p) = -x(q);
        v(q) = x(p);
        return v;
      };
    }
  }
  // Radial, time-like-tilted and the remaining spatial normal.
  s.normal_frame = [k](double t, double sg) {
    const double ct = std::cos(t), st = std::sin(t), cs = std::cos(sg), ss = std::sin(sg);
    Eigen::MatrixXd n(3, 5);
    n.row(0) << 0, ct * cs, ct * ss, st * cs, st * ss;
    n.row(1) << 1, -k * st * cs, -k * st * ss, k * ct * cs, k * ct * ss;
    n.row(2) << 0, st * ss, -st * cs, -ct * ss, ct * cs;
    return n;
  };
  s.declared_mask = [](const GridPtr& g) { return Mask(g); };
  return s;
}

ExactSolution static_cylinder(double R) {
  require_positive("static_cylinder: R", R);
  ExactSolution s;
  s.name = "static_cylinder";
  s.params = {{"R", R}};
  s.on_shell = false;
  s.X = [R](double t, double sg) {
    return vec({t, R * std::cos(sg), R * std::sin(sg)});
  };
  s.family["R"] = [](double, double sg) { return vec({0, std::cos(sg), std::sin(sg)}); };
  s.family["sigma_shift"] = [R](double, double sg) {
    return vec({0, -R * std::sin(sg), R * std::cos(sg)});
  };
  add_isometries(s);
  s.declared_mask = [](const GridPtr& g) { return Mask(g); };
  return s;
}

std::vector<SolutionInfo> list_solutions() {
  return {
      {"pulsating_circular_string", {"R"}, true,
       "X = (R tau, R cos tau cos sigma, R cos tau sin sigma)"},
      {"rotating_folded_string", {"A"}, true,
       "X = (A tau, A cos sigma cos tau, A cos sigma sin tau), folds at sigma = 0, pi"},
      {"spinning_string", {"R"}, true,
       "X = R (sqrt2 tau, cos tau cos sigma, cos tau sin sigma, sin tau cos sigma, sin tau sin sigma)"},
      {"static_cylinder", {"R"}, false,
       "X = (tau, R cos sigma, R sin sigma), not a solution (mean curvature -1/R)"},
  };
}

ExactSolution make_solution(const std::string& name,
                            const std::map<std::string, double>& params) {
  for (const auto& info : list_solutions()) {
    if (info.name != name) continue;
    for (const auto& [k, v] : params) {
      if (std::find(info.params.begin(), info.params.end(), k) == info.params.end()) {
        throw SolutionError("solution '" + name + "' has no parameter '" + k + "'");
      }
    }
    for (const auto& p : info.params) {
      if (!params.count(p)) {
        throw SolutionError("solution '" + name + "' requires parameter '" + p + "'");
      }
    }
    if (name == "pulsating_circular_string") return pulsating_circular_string(params.at("R"));
    if (name == "rotating_folded_string") return rotating_folded_string(params.at("A"));
    if (name == "spinning_string") return spinning_string(params.at("R"));
    return static_cylinder(params.at("R"));
  }
  throw SolutionError("unknown solution '" + name + "'");
}

Field family_derivative(const ExactSolution& sol, const GridPtr& grid,
                        const std::string& which, int dim) {
  const auto it = sol.family.find(which);
  if (it == sol.family.end()) {
    throw SolutionError("solution '" + sol.name + "' has no family derivative '" + which + "'");
  }
  Field out(grid, {spacetime_index(dim)});
  for (int i = 0; i < grid->n_tau(); ++i) {
    for (int k = 0; k < grid->n_sigma(); ++k) {
      const Eigen::VectorXd v = it->second(grid->tau(i), grid->sigma(k));
      if (v.size() > dim) {
        throw SolutionError("family derivative '" + which + "' needs spacetime dimension " +
                            std::to_string(v.size()));
      }
      for (int m = 0; m < v.size(); ++m) out(m)(i, k) = v(m);
    }
  }
  return out;
}

Embedding embed(const ExactSolution& sol, const GridPtr& grid, int dim) {
  if (dim == 0) dim = sol.dim;
  if (dim < sol.dim) {
    throw SolutionError(sol.name + " needs spacetime dimension >= " + std::to_string(sol.dim));
  }
  Field X(grid, {spacetime_index(dim)});
  for (int i = 0; i < grid->n_tau(); ++i) {
    for (int k = 0; k < grid->n_sigma(); ++k) {
      const Eigen::VectorXd v = sol.X(grid->tau(i), grid->sigma(k));
      for (int m = 0; m < v.size(); ++m) X(m)(i, k) = v(m);
    }
  }
  return Embedding(minkowski(dim), std::move(X), sol.declared_mask(grid));
}

GeometryBundle solution_geometry(const ExactSolution& sol, const GridPtr& grid, int dim) {
  if (dim == 0) dim = sol.dim;
  if (!sol.normal_frame) return build_geometry(embed(sol, grid, dim));
  Field n(grid, {normal_index(dim - 2), spacetime_index(dim)});
  for (int i = 0; i < grid->n_tau(); ++i) {
    for (int k = 0; k < grid->n_sigma(); ++k) {
      const Eigen::MatrixXd f = sol.normal_frame(grid->tau(i), grid->sigma(k));
      for (int r = 0; r < f.rows(); ++r)
        for (int m = 0; m < f.cols(); ++m) n(r, m)(i, k) = f(r, m);
    }
  }
  for (int extra = sol.dim; extra < dim; ++extra) n(extra - 2, extra).setOnes();
  GeometryOptions opts;
  opts.reference_normals = std::move(n);
  return build_geometry(embed(sol, grid, dim), opts);
}

Field normal_projection(const GeometryBundle& geo, const Field& dX) {
  if (dX.rank() != 1 || dX.dim(0) != geo.spacetime_dim()) {
    throw GridError("normal_projection: expected a spacetime vector field");
  }
  return einsum("im,m->i", geo.n_lower, dX);
}

Field jacobi_from_family(const GeometryBundle& geo, const ExactSolution& sol,
                         const std::string& which) {
  return normal_projection(geo, family_derivative(sol, geo.grid_ptr(), which, geo.spacetime_dim()));
}

}  // namespace gbs
