#include "experiment.hpp"

#include "gbstring/random_field.hpp"
#include "gbstring/symplectic.hpp"
#include "gbstring/tensor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

namespace gbs::tools {

namespace {

/// Reads an object and rejects keys that were never asked for.
class Reader {
 public:
  Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing key '" + path(key) + "'");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> def = {}) {
    if (!has(key)) return required(key, def);
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(key) + " must be finite");
    return x;
  }

  long long integer(const std::string& key, std::optional<long long> def = {}) {
    if (!has(key)) return required(key, def);
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = {}) {
    if (!has(key)) return required(key, def);
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key) + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_array() || v.empty()) throw ConfigError(path(key) + " must be a non-empty array");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw ConfigError(path(key) + " must contain finite numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const std::string& key, std::vector<int> def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_array() || v.empty()) throw ConfigError(path(key) + " must be a non-empty array");
    std::vector<int> out;
    for (const auto& x : v) {
      if (!x.is_number_integer()) throw ConfigError(path(key) + " must contain integers");
      out.push_back(x.get<int>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key, std::vector<std::string> def) {
    if (!has(key)) return def;
    const Json& v = raw(key);
    if (!v.is_array()) throw ConfigError(path(key) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError(path(key) + " must be an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown key '" + path(k) + "'");
    }
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  template <typename T>
  T required(const std::string& key, const std::optional<T>& def) {
    if (!def) throw ConfigError("missing key '" + path(key) + "'");
    return *def;
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

const std::vector<std::string>& kinds() {
  static const std::vector<std::string> k = {"geometry", "deform-check", "eom", "linearize",
                                             "self-adjoint", "conserve", "omega", "gauge-check",
                                             "convergence"};
  return k;
}

void check_selector(const ExactSolution& sol, const std::string& which, const std::string& where) {
  if (which == "random" || sol.family.count(which)) return;
  throw ConfigError(where + ": '" + which + "' is neither 'random' nor a family of " + sol.name);
}

std::vector<std::string> pair_of(Reader& r, const std::string& key, const ExactSolution& sol,
                                 std::vector<std::string> def) {
  auto p = r.strings(key, std::move(def));
  if (p.size() != 2) throw ConfigError(r.path(key) + " must name exactly two fields");
  for (const auto& s : p) check_selector(sol, s, r.path(key));
  return p;
}

/// The solution's size modulus, used in default field pairs.
std::string modulus(const ExactSolution& sol) { return sol.params.begin()->first; }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

Json resolve_options(const std::string& kind, const Json& raw, const ExactSolution& sol,
                     const GridConfig& grid) {
  Reader r(raw, "experiment");
  r.string("kind");
  Json o;
  if (kind == "deform-check") {
    std::vector<std::string> all;
    for (auto q : {Quantity::metric, Quantity::inverse_metric, Quantity::volume,
                   Quantity::connection, Quantity::ricci, Quantity::scalar_curvature}) {
      all.push_back(quantity_tag(q));
    }
    const auto qs = r.strings("quantities", all);
    require(!qs.empty(), "experiment.quantities must not be empty");
    for (const auto& q : qs) {
      try {
        parse_quantity(q);
      } catch (const std::exception& e) {
        throw ConfigError("experiment.quantities: " + std::string(e.what()));
      }
    }
    o["quantities"] = qs;
    o["seeds"] = r.integer("seeds", 3);
    require(o["seeds"].get<long long>() >= 1, "experiment.seeds must be >= 1");
    o["eps"] = r.number("eps", 1e-4);
    require(o["eps"] >= 1e-6 && o["eps"] <= 1e-3, "experiment.eps must lie in [1e-6, 1e-3]");
    o["tangential"] = r.boolean("tangential", true);
  } else if (kind == "eom") {
    o["betas"] = r.numbers("betas", {0.0, 0.5, 1.0});
  } else if (kind == "linearize") {
    const auto f = r.string("field", "random");
    check_selector(sol, f, "experiment.field");
    o["field"] = f;
    o["eps"] = r.number("eps", 1e-4);
    require(o["eps"] >= 1e-6 && o["eps"] <= 1e-2, "experiment.eps must lie in [1e-6, 1e-2]");
    o["betas"] = r.numbers("betas", {0.0, 0.3});
  } else if (kind == "self-adjoint") {
    o["fields"] = pair_of(r, "fields", sol, {"random", "random"});
  } else if (kind == "conserve") {
    Json pairs = Json::array();
    if (r.has("pairs")) {
      const Json& v = r.raw("pairs");
      require(v.is_array() && !v.empty(), "experiment.pairs must be a non-empty array");
      for (const auto& p : v) {
        require(p.is_array() && p.size() == 2 && p[0].is_string() && p[1].is_string(),
                "experiment.pairs entries must be two field names");
        for (const auto& s : p) check_selector(sol, s.get<std::string>(), "experiment.pairs");
        pairs.push_back(p);
      }
    } else {
      pairs = Json::array({{"t", "x"}, {"t", "y"}, {"x", "y"}});
    }
    o["pairs"] = pairs;
    o["negative_control"] = r.boolean("negative_control", true);
  } else if (kind == "omega") {
    o["pair"] = pair_of(r, "pair", sol, {"t", modulus(sol)});
    const int n = grid.n_tau;
    o["slices"] = r.integers("slices", {n / 4, n / 2, 3 * n / 4});
    for (int i : o["slices"]) require(i >= 0 && i < n, "experiment.slices out of range");
    o["betas"] = r.numbers("betas", {});
    if (r.has("min_beta_change")) o["min_beta_change"] = r.number("min_beta_change");
  } else if (kind == "gauge-check") {
    o["pair"] = pair_of(r, "pair", sol, {"t", modulus(sol)});
    o["slice"] = r.integer("slice", grid.n_tau / 2);
    require(o["slice"] >= 0 && o["slice"] < grid.n_tau, "experiment.slice out of range");
    Json maps = Json::array();
    if (r.has("maps")) {
      const Json& v = r.raw("maps");
      require(v.is_array() && !v.empty(), "experiment.maps must be a non-empty array");
      for (std::size_t k = 0; k < v.size(); ++k) {
        Reader m(v[k], "experiment.maps[" + std::to_string(k) + "]");
        Json e;
        e["mode"] = m.integer("mode");
        require(e["mode"] >= 0, m.path("mode") + " must be >= 0");
        e["phase"] = m.string("phase", "sin");
        require(e["phase"] == "sin" || e["phase"] == "cos", m.path("phase") + " must be sin or cos");
        e["eps"] = m.number("eps", 1e-2);
        m.finish();
        maps.push_back(e);
      }
    } else {
      maps = Json::array({{{"mode", 1}, {"phase", "sin"}, {"eps", 1e-2}},
                          {{"mode", 2}, {"phase", "cos"}, {"eps", 1e-2}},
                          {{"mode", 3}, {"phase", "sin"}, {"eps", 5e-3}}});
    }
    o["maps"] = maps;
  } else if (kind == "convergence") {
    const auto q = r.string("quantity", "self-adjoint");
    static const std::map<std::string, double> floors = {
        {"einstein", 1e-11}, {"gauss", 1e-12}, {"eom", 1e-12},
        {"self-adjoint", 1e-9}, {"conserve", 1e-9}};
    require(floors.count(q) > 0,
            "experiment.quantity must be one of einstein, gauss, eom, self-adjoint, conserve");
    o["quantity"] = q;
    o["n_tau"] = r.integers("n_tau", {65, 129, 257});
    require(o["n_tau"].size() >= 2, "experiment.n_tau needs at least two levels");
    for (std::size_t k = 1; k < o["n_tau"].size(); ++k) {
      require(o["n_tau"][k] > o["n_tau"][k - 1], "experiment.n_tau must increase");
    }
    const std::vector<std::string> def =
        q == "conserve" ? std::vector<std::string>{"t", modulus(sol)} : std::vector<std::string>{"random", "random"};
    o["pair"] = pair_of(r, "pair", sol, def);
    o["min_order"] = r.number("min_order", 3.5);
    o["roundoff_floor"] = r.number("roundoff_floor", floors.at(q));
  }
  r.finish();
  return o;
}

}  // namespace

std::vector<std::string> experiment_kinds() { return kinds(); }

ExperimentConfig parse_config(const Json& j) {
  Reader top(j, "config");
  ExperimentConfig c;
  const long long version = top.integer("schema_version");
  if (version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }

  Reader sol(top.raw("solution"), "solution");
  c.solution = sol.string("name");
  if (sol.has("params")) {
    const Json& p = sol.raw("params");
    require(p.is_object(), "solution.params must be an object");
    for (const auto& [k, v] : p.items()) {
      require(v.is_number(), "solution.params." + k + " must be a number");
      c.solution_params[k] = v.get<double>();
    }
  }
  sol.finish();
  ExactSolution instance;
  try {
    instance = make_solution(c.solution, c.solution_params);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  c.spacetime_dim = static_cast<int>(top.integer("spacetime_dim", 0));
  require(c.spacetime_dim == 0 || c.spacetime_dim >= instance.dim,
          "spacetime_dim must be 0 or at least " + std::to_string(instance.dim));
  require(c.spacetime_dim <= 11, "spacetime_dim must be at most 11");

  if (top.has("grid")) {
    Reader g(top.raw("grid"), "grid");
    c.grid.n_tau = static_cast<int>(g.integer("n_tau", c.grid.n_tau));
    c.grid.n_sigma = static_cast<int>(g.integer("n_sigma", c.grid.n_sigma));
    c.grid.tau_min = g.number("tau_min", c.grid.tau_min);
    c.grid.tau_max = g.number("tau_max", c.grid.tau_max);
    g.finish();
  }
  require(c.grid.n_tau <= 4097 && c.grid.n_sigma <= 1024, "grid is larger than desk scale");
  try {
    make_grid(c.grid.n_tau, c.grid.n_sigma, c.grid.tau_min, c.grid.tau_max);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }

  if (top.has("action")) {
    Reader a(top.raw("action"), "action");
    c.action.tension = a.number("tension", c.action.tension);
    c.action.gb_coupling = a.number("gb_coupling", c.action.gb_coupling);
    c.action.worldsheet_dim = static_cast<int>(a.integer("worldsheet_dim", c.action.worldsheet_dim));
    a.finish();
  }
  try {
    c.action.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("action: ") + e.what());
  }

  const Json& exp = top.raw("experiment");
  {
    Reader k(exp, "experiment");
    c.kind = k.string("kind");
  }
  if (std::find(kinds().begin(), kinds().end(), c.kind) == kinds().end()) {
    throw ConfigError("unknown experiment kind '" + c.kind + "'");
  }
  c.options = resolve_options(c.kind, exp, instance, c.grid);
  if (c.kind == "omega") {
    for (double b : c.options["betas"].get<std::vector<double>>()) {
      try {
        ActionParams{c.action.tension, b, c.action.worldsheet_dim}.validate();
      } catch (const std::exception& e) {
        throw ConfigError(std::string("experiment.betas: ") + e.what());
      }
    }
    if (c.options["betas"].empty()) c.options["betas"] = Json::array({c.action.gb_coupling});
  }

  if (top.has("output")) {
    Reader o(top.raw("output"), "output");
    c.report_path = o.string("report", "");
    c.csv_path = o.string("csv", "");
    o.finish();
  }
  const long long seed = top.integer("seed", 0);
  require(seed >= 0, "seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["solution"] = {{"name", c.solution}, {"params", c.solution_params}};
  j["spacetime_dim"] = c.spacetime_dim;
  j["grid"] = {{"n_tau", c.grid.n_tau},
               {"n_sigma", c.grid.n_sigma},
               {"tau_min", c.grid.tau_min},
               {"tau_max", c.grid.tau_max}};
  j["action"] = {{"tension", c.action.tension},
                 {"gb_coupling", c.action.gb_coupling},
                 {"worldsheet_dim", c.action.worldsheet_dim}};
  Json exp = {{"kind", c.kind}};
  for (const auto& [k, v] : c.options.items()) exp[k] = v;
  j["experiment"] = exp;
  j["output"] = {{"report", c.report_path}, {"csv", c.csv_path}};
  j["seed"] = c.seed;
  return j;
}

std::string CsvTable::render() const {
  std::string out = "tau,sigma";
  for (const auto& c : columns) out += "," + c;
  out += "\n";
  char buf[32];
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      if (k) out += ",";
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string Report::render() const { return json.dump(2) + "\n"; }

namespace {

struct Setup {
  ExactSolution sol;
  GridPtr grid;
  Embedding emb;
  GeometryBundle geo;
  Mask in;

  Setup(const ExperimentConfig& c, int n_tau)
      : sol(make_solution(c.solution, c.solution_params)),
        grid(make_grid(n_tau, c.grid.n_sigma, c.grid.tau_min, c.grid.tau_max)),
        emb(embed(sol, grid, c.spacetime_dim)),
        geo(solution_geometry(sol, grid, c.spacetime_dim)),
        in(interior_mask(geo, interior_rows(*grid))) {}

  /// Geometry options that keep a deformed sheet's frame aligned with this one.
  GeometryOptions aligned() const {
    GeometryOptions o;
    o.reference_normals = geo.n;
    return o;
  }

  Field field(const std::string& which, std::uint64_t seed) const {
    if (which == "random") return random_smooth_field(grid, {normal_index(geo.codim())}, seed);
    return jacobi_from_family(geo, sol, which);
  }
};

/// Seeds of the k-th random field of a run.
std::uint64_t seed_of(const ExperimentConfig& c, int k) { return c.seed * 1000 + static_cast<std::uint64_t>(k); }

ActionParams with_beta(const ExperimentConfig& c, double beta) {
  return {c.action.tension, beta, c.action.worldsheet_dim};
}

std::string column_name(const std::string& base, const Field& f, int flat) {
  if (f.rank() == 0) return base;
  const auto idx = f.unflatten(flat);
  std::string s = base + "[";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(idx[k]);
  }
  return s + "]";
}

CsvTable dump(const GeometryBundle& geo, const std::vector<std::pair<std::string, const Field*>>& fields) {
  CsvTable t;
  for (const auto& [name, f] : fields)
    for (int c = 0; c < f->size(); ++c) t.columns.push_back(column_name(name, *f, c));
  const auto& g = geo.grid();
  for (int i = 0; i < g.n_tau(); ++i) {
    for (int k = 0; k < g.n_sigma(); ++k) {
      if (!geo.mask(i, k)) continue;
      std::vector<double> row = {g.tau(i), g.sigma(k)};
      for (const auto& [name, f] : fields)
        for (int c = 0; c < f->size(); ++c) row.push_back((*f)[c](i, k));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

struct Outcome {
  Json results = Json::object();
  Json tolerances = Json::object();
  bool pass = true;
  CsvTable csv;

  /// Records an asserted comparison value <= bound.
  bool check(bool ok) {
    pass = pass && ok;
    return ok;
  }
};

double slice_norm(const Field& f, const Mask& m) { return max_abs(f, m); }

Outcome run_geometry(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const Field gauss = gauss_scalar_curvature(s.geo);
  const double G = max_abs(s.geo.einstein, s.geo.mask);
  const double dR = max_abs(s.geo.scalar - gauss, s.in);
  o.tolerances = {{"max_einstein", 1e-6}, {"gauss_discrepancy", 5e-6}};
  o.results["active_points"] = s.geo.mask.count();
  o.results["masked_points"] = s.geo.mask.active().size() - s.geo.mask.count();
  o.results["codimension"] = s.geo.codim();
  o.results["max_einstein"] = G;
  o.results["gauss_discrepancy"] = dR;
  o.results["max_mean_curvature"] = max_abs(s.geo.K_mean, s.geo.mask);
  o.results["max_scalar_curvature"] = max_abs(s.geo.scalar, s.geo.mask);
  double vmin = INFINITY;
  for (int i = 0; i < s.grid->n_tau(); ++i)
    for (int k = 0; k < s.grid->n_sigma(); ++k)
      if (s.geo.mask(i, k)) vmin = std::min(vmin, s.geo.vol[0](i, k));
  o.results["min_volume"] = vmin;
  o.check(G <= 1e-6);
  o.check(dR <= 5e-6);
  o.csv = dump(s.geo, {{"volume", &s.geo.vol}, {"scalar_curvature", &s.geo.scalar},
                       {"mean_curvature", &s.geo.K_mean}});
  return o;
}

Outcome run_deform_check(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const double eps = c.options["eps"];
  const double tol = 1e-6;
  o.tolerances = {{"relative_error", tol}};
  Json rows = Json::array();
  for (const auto& tag : c.options["quantities"]) {
    const Quantity q = parse_quantity(tag);
    for (int k = 0; k < c.options["seeds"].get<int>(); ++k) {
      DeformationField d = DeformationField::normal(s.field("random", seed_of(c, k)));
      if (c.options["tangential"]) {
        d.phi_tangent = random_smooth_field(s.grid, {ws_upper()}, seed_of(c, 500 + k));
      }
      const Field oracle = fd_oracle(s.emb, d, q, eps, s.aligned());
      const Field analytic = analytic_variation(s.geo, d, q);
      const double scale = 1.0 + std::max(quantity_of(s.geo, q).max_abs(), oracle.max_abs());
      const double err = max_abs(analytic - oracle, s.in);
      rows.push_back({{"quantity", tag}, {"seed", seed_of(c, k)}, {"error", err}, {"scale", scale},
                      {"relative_error", err / scale}, {"pass", o.check(err <= tol * scale)}});
    }
  }
  o.results["checks"] = rows;
  return o;
}

Outcome run_eom(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const double bound = 5e-5 * c.action.tension;
  o.tolerances = {{"max_residual", bound}, {"max_beta_change", 1e-6}};
  o.results["residual_asserted"] = s.sol.on_shell;
  Json rows = Json::array();
  Field first;
  double change = 0.0;
  for (double beta : c.options["betas"]) {
    const Field r = eom_residual(s.geo, with_beta(c, beta));
    const double m = max_abs(r, s.geo.mask);
    if (first.empty()) {
      first = r;
      o.csv = dump(s.geo, {{"eom_residual", &first}});
    }
    change = std::max(change, max_abs(r - first, s.geo.mask));
    const bool ok = !s.sol.on_shell || m <= bound;
    rows.push_back({{"beta", beta}, {"max_residual", m}, {"pass", o.check(ok)}});
  }
  o.results["residuals"] = rows;
  o.results["max_beta_change"] = change;
  o.check(change <= 1e-6);
  return o;
}

Field transported_eom(const Setup& s, const Field& phi, double eps, const ActionParams& p) {
  const auto moved =
      build_geometry(deform_embedding(s.emb, s.geo, DeformationField::normal(phi), eps), s.aligned());
  return einsum("im,jm,j->i", s.geo.n_lower, moved.n, eom_residual(moved, p));
}

Outcome run_linearize(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const double eps = c.options["eps"];
  o.tolerances = {{"fd_relative", 1e-4}, {"loops_relative", 1e-10}};
  const Field phi = s.field(c.options["field"], seed_of(c, 0));
  Json rows = Json::array();
  for (double beta : c.options["betas"]) {
    const ActionParams p = with_beta(c, beta);
    const LinearizedResidual lin = linearized_residual(s.geo, phi, p);
    const Field fd = (1.0 / (2 * eps)) * (transported_eom(s, phi, eps, p) - transported_eom(s, phi, -eps, p));
    const double fd_size = max_abs(fd, s.in);
    const double fd_rel = max_abs(lin.total - fd, s.in) / fd_size;
    Json row = {{"beta", beta}, {"fd_size", fd_size}, {"fd_relative", fd_rel}};
    const Field loops = linearized_residual_string(s.geo, phi, p);
    const double lr = max_abs(lin.total - loops, s.in) / (1 + max_abs(lin.total, s.in));
    row["loops_relative"] = lr;
    row["pass"] = o.check(fd_rel <= 1e-4 && lr <= 1e-10);
    rows.push_back(row);
  }
  o.results["checks"] = rows;
  return o;
}

struct SaMeasure {
  double residual, scale, norm1, norm2, bound, gap, current_size;
  Field pointwise;
};

SaMeasure measure_self_adjoint(const Setup& s, const Field& a, const Field& b, const ActionParams& p) {
  SaMeasure m;
  m.pointwise = self_adjointness_residual(s.geo, a, b, p);
  m.residual = max_abs(m.pointwise, s.in);
  m.scale = p_operator_coefficients(s.geo, p).scale(s.in);
  m.norm1 = slice_norm(a, s.in);
  m.norm2 = slice_norm(b, s.in);
  m.bound = 1e-4 * m.scale * m.norm1 * m.norm2;
  const auto j = bilinear_current(s.geo, a, b, p);
  m.current_size = max_abs(j.j, s.geo.mask);
  m.gap = j.simplification_gap(s.geo.mask);
  return m;
}

Outcome run_self_adjoint(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const auto names = c.options["fields"].get<std::vector<std::string>>();
  const Field a = s.field(names[0], seed_of(c, 0)), b = s.field(names[1], seed_of(c, 1));
  const SaMeasure m = measure_self_adjoint(s, a, b, c.action);
  o.tolerances = {{"residual_over_scale", 1e-4}, {"simplification_relative", 1e-9}};
  o.results = {{"max_residual", m.residual}, {"coefficient_scale", m.scale},
               {"norm_phi1", m.norm1},       {"norm_phi2", m.norm2},
               {"bound", m.bound},           {"simplification_gap", m.gap},
               {"current_size", m.current_size}};
  o.results["residual_pass"] = o.check(m.residual <= m.bound);
  o.results["simplification_pass"] = o.check(m.gap <= 1e-9 * (1 + m.current_size));
  o.csv = dump(s.geo, {{"self_adjointness_residual", &m.pointwise}});
  return o;
}

Outcome run_conserve(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const double scale = p_operator_coefficients(s.geo, c.action).scale(s.in);
  o.tolerances = {{"residual_over_scale", 5e-4}, {"negative_control_factor", 10.0}};
  o.results["coefficient_scale"] = scale;
  Json rows = Json::array();
  for (const auto& pr : c.options["pairs"]) {
    const Field a = s.field(pr[0], seed_of(c, 0)), b = s.field(pr[1], seed_of(c, 1));
    const double r = max_abs(conservation_residual(s.geo, a, b, c.action), s.in);
    const double bound = 5e-4 * scale * slice_norm(a, s.in) * slice_norm(b, s.in);
    rows.push_back({{"pair", pr}, {"max_residual", r}, {"bound", bound}, {"pass", o.check(r <= bound)}});
  }
  o.results["pairs"] = rows;
  if (c.options["negative_control"]) {
    const Field a = s.field("random", seed_of(c, 10)), b = s.field("random", seed_of(c, 11));
    const double r = max_abs(conservation_residual(s.geo, a, b, c.action), s.in);
    const double bound = 5e-4 * scale * slice_norm(a, s.in) * slice_norm(b, s.in);
    o.results["negative_control"] = {
        {"max_residual", r}, {"bound", bound}, {"pass", o.check(r > 10 * bound)}};
  }
  return o;
}

Outcome run_omega(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const auto names = c.options["pair"].get<std::vector<std::string>>();
  const Field a = s.field(names[0], seed_of(c, 0)), b = s.field(names[1], seed_of(c, 1));
  const auto slices = c.options["slices"].get<std::vector<int>>();
  const Json mbc = c.options.contains("min_beta_change") ? c.options["min_beta_change"] : Json();
  o.tolerances = {{"slice_spread", 1e-3}, {"self_pairing", 0.0}, {"bilinearity", 1e-10}};
  if (!mbc.is_null()) o.tolerances["min_beta_change"] = mbc;
  const double zero_level = 1e-10 * 2 * std::numbers::pi * slice_norm(a, s.geo.mask) * slice_norm(b, s.geo.mask);
  Json rows = Json::array();
  double w_first = 0.0;
  bool first = true;
  const Field r = s.field("random", seed_of(c, 2));
  for (double beta : c.options["betas"]) {
    const ActionParams p = with_beta(c, beta);
    std::vector<double> w;
    for (int i : slices) w.push_back(symplectic_form(s.geo, a, b, p, i).value);
    const double ref = w[w.size() / 2];
    double spread = 0.0;
    for (double x : w)
      for (double y : w) spread = std::max(spread, std::abs(x - y));
    const bool vanishes = std::abs(ref) <= zero_level;
    const double rel = vanishes ? spread : spread / std::abs(ref);
    if (first) w_first = ref;
    const double delta = ref - w_first;
    Json row = {{"beta", beta}, {"omega", w}, {"omega_vanishes", vanishes}, {"slice_spread", rel},
                {"delta_vs_first_beta", delta},
                {"relative_delta", w_first != 0.0 ? std::abs(delta) / std::abs(w_first) : 0.0}};
    bool ok = vanishes ? spread <= zero_level : rel <= 1e-3;
    const int mid = slices[slices.size() / 2];
    const double self = symplectic_form(s.geo, a, a, p, mid).value;
    const double lhs = symplectic_form(s.geo, 2.0 * a + 3.0 * r, b, p, mid).value;
    const double rhs = 2.0 * ref + 3.0 * symplectic_form(s.geo, r, b, p, mid).value;
    const double bil = std::abs(lhs - rhs) / (1 + std::abs(lhs));
    row["self_pairing"] = self;
    row["bilinearity"] = bil;
    ok = ok && self == 0.0 && bil <= 1e-10;
    if (!first && !mbc.is_null()) ok = ok && std::abs(delta) >= mbc.get<double>() * std::abs(w_first);
    row["pass"] = o.check(ok);
    rows.push_back(row);
    first = false;
  }
  o.results["pair"] = names;
  o.results["slices"] = slices;
  o.results["sweep"] = rows;
  return o;
}

Outcome run_gauge(const ExperimentConfig& c) {
  const Setup s(c, c.grid.n_tau);
  Outcome o;
  const auto names = c.options["pair"].get<std::vector<std::string>>();
  const Field a = s.field(names[0], seed_of(c, 0)), b = s.field(names[1], seed_of(c, 1));
  const int slice = c.options["slice"];
  o.tolerances = {{"relative_change", 1e-3}};
  o.results["omega"] = symplectic_form(s.geo, a, b, c.action, slice).value;
  Json rows = Json::array();
  for (const auto& m : c.options["maps"]) {
    const int mode = m["mode"];
    const bool sine = m["phase"] == "sin";
    Reparametrization rp{[mode, sine](double x) { return sine ? std::sin(mode * x) : std::cos(mode * x); },
                         m["eps"].get<double>()};
    const double rel = gauge_invariance_check(s.emb, s.geo, a, b, c.action, slice, rp);
    rows.push_back({{"map", m}, {"relative_change", rel}, {"pass", o.check(rel <= 1e-3)}});
  }
  o.results["maps"] = rows;
  return o;
}

Outcome run_convergence(const ExperimentConfig& c) {
  Outcome o;
  const std::string q = c.options["quantity"];
  const auto levels = c.options["n_tau"].get<std::vector<int>>();
  const auto names = c.options["pair"].get<std::vector<std::string>>();
  const double min_order = c.options["min_order"], floor = c.options["roundoff_floor"];
  o.tolerances = {{"min_order", min_order}, {"roundoff_floor", floor}};
  std::vector<double> errors, h;
  for (int n : levels) {
    const Setup s(c, n);
    double e = 0.0;
    if (q == "einstein") {
      e = max_abs(s.geo.einstein, s.geo.mask);
    } else if (q == "gauss") {
      e = max_abs(s.geo.scalar - gauss_scalar_curvature(s.geo), s.in);
    } else if (q == "eom") {
      e = max_abs(eom_residual(s.geo, c.action), s.in);
    } else {
      const Field a = s.field(names[0], seed_of(c, 0)), b = s.field(names[1], seed_of(c, 1));
      const double scale = p_operator_coefficients(s.geo, c.action).scale(s.in);
      const Field r = q == "self-adjoint" ? self_adjointness_residual(s.geo, a, b, c.action)
                                          : conservation_residual(s.geo, a, b, c.action);
      e = max_abs(r, s.in) / (scale * slice_norm(a, s.in) * slice_norm(b, s.in));
    }
    errors.push_back(e);
    h.push_back(s.grid->h_tau());
  }
  std::vector<double> orders;
  for (std::size_t k = 1; k < errors.size(); ++k) {
    orders.push_back(std::log(errors[k - 1] / errors[k]) / std::log(h[k - 1] / h[k]));
  }
  const bool at_floor = std::all_of(errors.begin(), errors.end(), [&](double e) { return e <= floor; });
  const double worst = *std::min_element(orders.begin(), orders.end());
  o.results = {{"quantity", q}, {"n_tau", levels}, {"errors", errors}, {"observed_orders", orders},
               {"min_observed_order", worst}, {"all_at_roundoff_floor", at_floor}};
  o.results["order_measurable"] = !at_floor;
  o.check(at_floor || worst >= min_order);
  return o;
}

}  // namespace

Report run_experiment(const ExperimentConfig& c, bool timings) {
  const auto start = std::chrono::steady_clock::now();
  static const std::map<std::string, std::function<Outcome(const ExperimentConfig&)>> runners = {
      {"geometry", run_geometry},         {"deform-check", run_deform_check},
      {"eom", run_eom},                   {"linearize", run_linearize},
      {"self-adjoint", run_self_adjoint}, {"conserve", run_conserve},
      {"omega", run_omega},               {"gauge-check", run_gauge},
      {"convergence", run_convergence}};
  Outcome out = runners.at(c.kind)(c);
  Report r;
  r.pass = out.pass;
  r.csv = std::move(out.csv);
  r.json["schema_version"] = kSchemaVersion;
  r.json["config"] = to_json(c);
  r.json["results"] = std::move(out.results);
  r.json["tolerances"] = std::move(out.tolerances);
  r.json["pass"] = r.pass;
  r.json["timings_ms"] = Json::object();
  if (timings) {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    r.json["timings_ms"]["total"] = ms.count();
  }
  return r;
}

}  // namespace gbs::tools
