#include "gbstring/geometry.hpp"

#include "gbstring/tensor.hpp"

#include <cmath>
#include <numeric>

namespace gbs {

Embedding::Embedding(BackgroundPtr bg, Field x)
    : background(std::move(bg)), X(std::move(x)), declared_mask(X.grid_ptr()) {
  if (!background) throw GridError("embedding requires a background");
  if (X.rank() != 1 || X.slots()[0].kind != Slot::spacetime ||
      X.dim(0) != background->dim()) {
    throw GridError("embedding field must carry one spacetime index of dim " +
                    std::to_string(background->dim()));
  }
}

Embedding::Embedding(BackgroundPtr bg, Field x, Mask declared)
    : Embedding(std::move(bg), std::move(x)) {
  if (!(declared.grid() == X.grid())) throw GridError("declared mask grid mismatch");
  declared_mask = std::move(declared);
}

Eigen::ArrayXXd GeometryBundle::inv_vol() const { return safe_reciprocal(vol[0]); }

namespace {

/// Gamma^mu_{nu lambda} of the background along X, slots (st, st, st).
Field background_christoffel(const BackgroundSpacetime& bg, const Field& X) {
  const int N = bg.dim();
  Field out(X.grid_ptr(), {spacetime_index(N), spacetime_index(N), spacetime_index(N)});
  if (bg.is_flat()) return out;
  const auto& grid = X.grid();
  BackgroundSpacetime::Point x(N);
  for (int p = 0; p < grid.n_tau(); ++p) {
    for (int q = 0; q < grid.n_sigma(); ++q) {
      for (int m = 0; m < N; ++m) x(m) = X(m)(p, q);
      const auto chr = bg.christoffel(x);
      for (int l = 0; l < N; ++l)
        for (int m = 0; m < N; ++m)
          for (int k = 0; k < N; ++k) out(l, m, k)(p, q) = chr[static_cast<std::size_t>(l)](m, k);
    }
  }
  return out;
}

Field metric_along(const BackgroundSpacetime& bg, const Field& X) {
  const int N = bg.dim();
  Field g(X.grid_ptr(), {spacetime_index(N), spacetime_index(N)});
  if (bg.is_flat()) {
    const Eigen::MatrixXd eta = bg.metric(Eigen::VectorXd::Zero(N));
    for (int m = 0; m < N; ++m)
      for (int k = 0; k < N; ++k) g(m, k).setConstant(eta(m, k));
    return g;
  }
  const auto& grid = X.grid();
  BackgroundSpacetime::Point x(N);
  for (int p = 0; p < grid.n_tau(); ++p) {
    for (int q = 0; q < grid.n_sigma(); ++q) {
      for (int m = 0; m < N; ++m) x(m) = X(m)(p, q);
      const Eigen::MatrixXd gm = bg.metric(x);
      for (int m = 0; m < N; ++m)
        for (int k = 0; k < N; ++k) g(m, k)(p, q) = gm(m, k);
    }
  }
  return g;
}

/// g(u, v) for two spacetime vectors stored as one array per component.
Eigen::ArrayXXd inner(const Field& g, const std::vector<Eigen::ArrayXXd>& u,
                      const std::vector<Eigen::ArrayXXd>& v) {
  const int N = g.dim(0);
  Eigen::ArrayXXd s = Eigen::ArrayXXd::Zero(u[0].rows(), u[0].cols());
  for (int m = 0; m < N; ++m)
    for (int k = 0; k < N; ++k) s += g(m, k) * u[static_cast<std::size_t>(m)] * v[static_cast<std::size_t>(k)];
  return s;
}

std::vector<Eigen::ArrayXXd> component_vector(const Field& f, int leading) {
  std::vector<Eigen::ArrayXXd> v;
  const int N = f.dim(f.rank() - 1);
  for (int m = 0; m < N; ++m) v.push_back(f(leading, m));
  return v;
}

void compute_normal_dependent(GeometryBundle& geo) {
  const auto grid = geo.grid_ptr();
  const int N = geo.spacetime_dim();
  const int codim = geo.n.dim(0);

  geo.n_lower = Field(grid, {normal_index(codim), spacetime_index(N)});
  for (int i = 0; i < codim; ++i)
    for (int m = 0; m < N; ++m)
      for (int k = 0; k < N; ++k) geo.n_lower(i, m) += geo.g(m, k) * geo.n(i, k);

  const Field chr = background_christoffel(*geo.background, geo.X);
  geo.K = Field(grid, {ws_lower(), ws_lower(), normal_index(codim)});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < codim; ++i) {
        Eigen::ArrayXXd s = Eigen::ArrayXXd::Zero(grid->n_tau(), grid->n_sigma());
        for (int m = 0; m < N; ++m) {
          Eigen::ArrayXXd acc = geo.de(a, b, m);
          if (!geo.background->is_flat()) {
            for (int p = 0; p < N; ++p)
              for (int q = 0; q < N; ++q) acc += chr(m, p, q) * geo.e(a, p) * geo.e(b, q);
          }
          s -= geo.n_lower(i, m) * acc;
        }
        geo.K(a, b, i) = s;
      }
  geo.K = symmetrize(geo.K, 0, 1);
  geo.K_mean = einsum("ab,abi->i", geo.gamma_inv, geo.K);

  geo.normal_conn = Field(grid, {ws_lower(), normal_index(codim), normal_index(codim)});
  if (codim > 1) {
    for (int a = 0; a < 2; ++a)
      for (int j = 0; j < codim; ++j) {
        std::vector<Eigen::ArrayXXd> dn;
        for (int m = 0; m < N; ++m) {
          Eigen::ArrayXXd d = d_coord(*grid, a, geo.n(j, m));
          if (!geo.background->is_flat()) {
            for (int p = 0; p < N; ++p)
              for (int q = 0; q < N; ++q) d += chr(m, p, q) * geo.e(a, p) * geo.n(j, q);
          }
          dn.push_back(std::move(d));
        }
        for (int i = 0; i < codim; ++i) {
          Eigen::ArrayXXd s = Eigen::ArrayXXd::Zero(grid->n_tau(), grid->n_sigma());
          for (int m = 0; m < N; ++m) s += geo.n_lower(i, m) * dn[static_cast<std::size_t>(m)];
          geo.normal_conn(a, i, j) = s;
        }
      }
    geo.normal_conn = antisymmetrize(geo.normal_conn, 1, 2);
  }
}

}  // namespace

GeometryBundle build_geometry(const Embedding& emb, const GeometryOptions& opts) {
  GeometryBundle geo;
  geo.background = emb.background;
  geo.X = emb.X;
  const auto grid = emb.grid_ptr();
  const auto& G = *grid;
  const int N = emb.background->dim();
  const int codim = N - 2;
  const int nt = G.n_tau();
  const int ns = G.n_sigma();

  geo.e = Field(grid, {ws_lower(), spacetime_index(N)});
  for (int m = 0; m < N; ++m) {
    geo.e(0, m) = d_tau(G, emb.X(m));
    geo.e(1, m) = d_sigma(G, emb.X(m));
  }
  geo.de = Field(grid, {ws_lower(), ws_lower(), spacetime_index(N)});
  for (int m = 0; m < N; ++m) {
    geo.de(0, 0, m) = d_tau(G, geo.e(0, m));
    geo.de(1, 1, m) = d_sigma(G, geo.e(1, m));
    geo.de(0, 1, m) = 0.5 * (d_tau(G, geo.e(1, m)) + d_sigma(G, geo.e(0, m)));
    geo.de(1, 0, m) = geo.de(0, 1, m);
  }

  geo.g = metric_along(*emb.background, emb.X);
  const auto e0 = component_vector(geo.e, 0);
  const auto e1 = component_vector(geo.e, 1);
  geo.gamma = Field(grid, {ws_lower(), ws_lower()});
  geo.gamma(0, 0) = inner(geo.g, e0, e0);
  geo.gamma(1, 1) = inner(geo.g, e1, e1);
  geo.gamma(0, 1) = inner(geo.g, e0, e1);
  geo.gamma(1, 0) = geo.gamma(0, 1);
  const Eigen::ArrayXXd det =
      geo.gamma(0, 0) * geo.gamma(1, 1) - geo.gamma(0, 1) * geo.gamma(0, 1);

  geo.degenerate = det.abs() < opts.degeneracy_threshold;
  geo.mask = emb.declared_mask;
  for (int p = 0; p < nt; ++p) {
    for (int q = 0; q < ns; ++q) {
      if (geo.degenerate(p, q)) {
        if (!opts.mask_degenerate) {
          throw GeometryError("degenerate tangent vectors", p, q);
        }
        geo.mask.exclude(p - opts.mask_radius, p + opts.mask_radius,
                         q - opts.mask_radius, q + opts.mask_radius);
      } else if (det(p, q) > 0.0 && geo.mask(p, q)) {
        throw GeometryError("induced metric is not Lorentzian", p, q);
      }
    }
  }
  geo.mask.require_majority();

  const Eigen::ArrayXXd inv_det =
      geo.degenerate.select(Eigen::ArrayXXd::Zero(nt, ns), det.inverse());
  geo.gamma_inv = Field(grid, {ws_upper(), ws_upper()});
  geo.gamma_inv(0, 0) = geo.gamma(1, 1) * inv_det;
  geo.gamma_inv(1, 1) = geo.gamma(0, 0) * inv_det;
  geo.gamma_inv(0, 1) = -geo.gamma(0, 1) * inv_det;
  geo.gamma_inv(1, 0) = geo.gamma_inv(0, 1);
  geo.vol = Field::scalar(grid, (-det).max(0.0).sqrt());
  geo.vol[0] = geo.degenerate.select(0.0, geo.vol[0]);

  if (opts.reference_normals) {
    geo.n = aligned_normal_frame(geo, *opts.reference_normals);
  } else {
    // Normal frame: best-conditioned coordinate seeds for the first codim-1
    // normals, then the oriented dual of (e_tau, e_sigma, n_1, ...).
    std::vector<int> order = opts.seed_order;
    if (order.empty()) {
      order.resize(static_cast<std::size_t>(N));
      std::iota(order.begin(), order.end(), 0);
    }
    if (static_cast<int>(order.size()) != N) {
      throw GridError("seed_order must list every spacetime index once");
    }
    geo.n = Field(grid, {normal_index(codim), spacetime_index(N)});
    std::vector<std::vector<Eigen::ArrayXXd>> normals;
    std::vector<int> remaining = order;
    const Eigen::ArrayXXd zero = Eigen::ArrayXXd::Zero(nt, ns);
    auto project = [&](int seed) {
      std::vector<Eigen::ArrayXXd> v(static_cast<std::size_t>(N), zero);
      v[static_cast<std::size_t>(seed)].setOnes();
      const Eigen::ArrayXXd p0 = inner(geo.g, e0, v);
      const Eigen::ArrayXXd p1 = inner(geo.g, e1, v);
      const Eigen::ArrayXXd c0 = geo.gamma_inv(0, 0) * p0 + geo.gamma_inv(0, 1) * p1;
      const Eigen::ArrayXXd c1 = geo.gamma_inv(1, 0) * p0 + geo.gamma_inv(1, 1) * p1;
      std::vector<Eigen::ArrayXXd> out = v;
      for (int m = 0; m < N; ++m) {
        out[static_cast<std::size_t>(m)] -= c0 * e0[static_cast<std::size_t>(m)] + c1 * e1[static_cast<std::size_t>(m)];
      }
      for (const auto& nk : normals) {
        const Eigen::ArrayXXd c = inner(geo.g, nk, v);
        for (int m = 0; m < N; ++m) out[static_cast<std::size_t>(m)] -= c * nk[static_cast<std::size_t>(m)];
      }
      return out;
    };
    for (int s = 0; s < codim - 1; ++s) {
      double best = -1.0;
      std::size_t best_pos = 0;
      std::vector<Eigen::ArrayXXd> best_vec;
      Eigen::Index worst_p = 0;
      Eigen::Index worst_q = 0;
      for (std::size_t c = 0; c < remaining.size(); ++c) {
        auto v = project(remaining[c]);
        const Eigen::ArrayXXd norm2 = inner(geo.g, v, v);
        const Eigen::ArrayXXd considered = geo.degenerate.select(
            Eigen::ArrayXXd::Constant(nt, ns, std::numeric_limits<double>::infinity()),
            norm2.max(0.0).sqrt());
        Eigen::Index p = 0;
        Eigen::Index q = 0;
        const double m = considered.minCoeff(&p, &q);
        if (m > best) {
          best = m;
          best_pos = c;
          best_vec = std::move(v);
          worst_p = p;
          worst_q = q;
        }
      }
      if (best < opts.seed_threshold) {
        throw GeometryError("normal seed parallel to tangent span",
                            static_cast<int>(worst_p), static_cast<int>(worst_q));
      }
      const Eigen::ArrayXXd inv_norm =
          geo.degenerate.select(zero, inner(geo.g, best_vec, best_vec).sqrt().inverse());
      for (auto& c : best_vec) c *= inv_norm;
      normals.push_back(std::move(best_vec));
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_pos));
    }
    {
      // Dual covector n_mu = eps_{mu a1 ... a_{N-1}} v1^a1 ... v_{N-1}^a_{N-1}.
      std::vector<const std::vector<Eigen::ArrayXXd>*> rows{&e0, &e1};
      for (const auto& nk : normals) rows.push_back(&nk);
      std::vector<Eigen::ArrayXXd> dual(static_cast<std::size_t>(N), zero);
      Eigen::MatrixXd M(N, N);
      for (int p = 0; p < nt; ++p) {
        for (int q = 0; q < ns; ++q) {
          double sqrt_det = 1.0;
          if (!emb.background->is_flat()) {
            Eigen::MatrixXd gm(N, N);
            for (int m = 0; m < N; ++m)
              for (int k = 0; k < N; ++k) gm(m, k) = geo.g(m, k)(p, q);
            sqrt_det = std::sqrt(std::abs(gm.determinant()));
          }
          for (int r = 1; r < N; ++r)
            for (int m = 0; m < N; ++m) M(r, m) = (*rows[static_cast<std::size_t>(r - 1)])[static_cast<std::size_t>(m)](p, q);
          for (int mu = 0; mu < N; ++mu) {
            M.row(0).setZero();
            M(0, mu) = 1.0;
            dual[static_cast<std::size_t>(mu)](p, q) = sqrt_det * M.determinant();
          }
        }
      }
      // Raise with the inverse metric.
      std::vector<Eigen::ArrayXXd> up(static_cast<std::size_t>(N), zero);
      for (int p = 0; p < nt; ++p) {
        for (int q = 0; q < ns; ++q) {
          Eigen::MatrixXd gm(N, N);
          Eigen::VectorXd lowv(N);
          for (int m = 0; m < N; ++m) {
            lowv(m) = dual[static_cast<std::size_t>(m)](p, q);
            for (int k = 0; k < N; ++k) gm(m, k) = geo.g(m, k)(p, q);
          }
          const Eigen::VectorXd upv = gm.ldlt().solve(lowv);
          for (int m = 0; m < N; ++m) up[static_cast<std::size_t>(m)](p, q) = upv(m);
        }
      }
      const Eigen::ArrayXXd norm2 = inner(geo.g, up, up);
      for (int p = 0; p < nt; ++p) {
        for (int q = 0; q < ns; ++q) {
          if (!geo.degenerate(p, q) && geo.mask(p, q) && !(norm2(p, q) > 0.0)) {
            throw GeometryError("normal frame construction broke down", p, q);
          }
        }
      }
      const Eigen::ArrayXXd inv_norm = (geo.degenerate || norm2 <= 0.0).select(zero, norm2.max(0.0).sqrt().inverse());
      for (auto& c : up) c *= inv_norm;
      normals.push_back(std::move(up));
    }
    for (int i = 0; i < codim; ++i)
      for (int m = 0; m < N; ++m) geo.n(i, m) = normals[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
  }

  compute_normal_dependent(geo);

  // Intrinsic curvature from the lowered Christoffel symbols.
  Field dgamma(grid, {ws_lower(), ws_lower(), ws_lower()});
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) dgamma(c, a, b) = d_coord(G, c, geo.gamma(a, b));
  geo.conn_lower = Field(grid, {ws_lower(), ws_lower(), ws_lower()});
  for (int d = 0; d < 2; ++d)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        geo.conn_lower(d, b, c) = 0.5 * (dgamma(b, d, c) + dgamma(c, d, b) - dgamma(d, b, c));
  geo.conn = einsum("ad,dbc->abc", geo.gamma_inv, geo.conn_lower);

  Field dconn(grid, {ws_lower(), ws_lower(), ws_lower(), ws_lower()});
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a)
      for (int d = 0; d < 2; ++d)
        for (int b = 0; b < 2; ++b) dconn(c, a, d, b) = d_coord(G, c, geo.conn_lower(a, d, b));
  geo.riem_lower = Field(grid, {ws_lower(), ws_lower(), ws_lower(), ws_lower()});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          Eigen::ArrayXXd r = dconn(c, a, d, b) - dconn(d, a, c, b);
          for (int f = 0; f < 2; ++f)
            for (int h = 0; h < 2; ++h) {
              r += geo.gamma_inv(f, h) * (geo.conn_lower(f, d, a) * geo.conn_lower(h, c, b) -
                                          geo.conn_lower(f, c, a) * geo.conn_lower(h, d, b));
            }
          geo.riem_lower(a, b, c, d) = r;
        }
  geo.riem = einsum("ae,ebcd->abcd", geo.gamma_inv, geo.riem_lower);
  geo.ricci = Field(grid, {ws_lower(), ws_lower()});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) geo.ricci(a, b) += geo.riem(c, a, c, b);
  geo.scalar = einsum("ab,ab->", geo.gamma_inv, geo.ricci);
  geo.einstein = geo.ricci;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) geo.einstein(a, b) -= 0.5 * geo.gamma(a, b) * geo.scalar[0];
  return geo;
}

GeometryBundle with_normal_frame(const GeometryBundle& geo, const Field& normals) {
  if (!normals.same_layout(geo.n)) {
    throw GridError("with_normal_frame: normal frame layout mismatch");
  }
  GeometryBundle out = geo;
  out.n = normals;
  compute_normal_dependent(out);
  return out;
}

Field aligned_normal_frame(const GeometryBundle& geo, const Field& reference) {
  const int N = geo.spacetime_dim();
  const Field expected(geo.grid_ptr(), {normal_index(N - 2), spacetime_index(N)});
  if (!reference.same_layout(expected)) {
    throw GridError("aligned_normal_frame: reference frame layout mismatch");
  }
  const Field e_lower = einsum("am,mk->ak", geo.e, geo.g);
  Field n = reference;
  for (int i = 0; i < N - 2; ++i) {
    // Remove the tangential part, then the earlier normals.
    Field ni(geo.grid_ptr(), {spacetime_index(N)});
    for (int m = 0; m < N; ++m) ni(m) = n(i, m);
    const Field t = einsum("ab,bm,m->a", geo.gamma_inv, e_lower, ni);
    for (int m = 0; m < N; ++m)
      for (int a = 0; a < 2; ++a) n(i, m) -= t(a) * geo.e(a, m);
    auto v = component_vector(n, i);
    for (int k = 0; k < i; ++k) {
      const Eigen::ArrayXXd c = inner(geo.g, component_vector(n, k), v);
      for (int m = 0; m < N; ++m) n(i, m) -= c * n(k, m);
    }
    v = component_vector(n, i);
    const Eigen::ArrayXXd inv = safe_reciprocal(inner(geo.g, v, v).max(0.0).sqrt());
    for (int m = 0; m < N; ++m) n(i, m) *= inv;
  }
  return n;
}

GeometryBundle with_aligned_frame(const GeometryBundle& geo, const Field& reference) {
  return with_normal_frame(geo, aligned_normal_frame(geo, reference));
}

GeometryBundle rotate_normal_frame(const GeometryBundle& geo, const Eigen::ArrayXXd& theta) {
  if (geo.codim() != 2) throw GridError("rotate_normal_frame needs codimension 2");
  Field n = geo.n;
  const Eigen::ArrayXXd c = theta.cos();
  const Eigen::ArrayXXd s = theta.sin();
  for (int m = 0; m < geo.spacetime_dim(); ++m) {
    n(0, m) = c * geo.n(0, m) + s * geo.n(1, m);
    n(1, m) = -s * geo.n(0, m) + c * geo.n(1, m);
  }
  return with_normal_frame(geo, n);
}

Field covariant_derivative(const GeometryBundle& geo, const Field& T) {
  std::vector<IndexSlot> slots{ws_lower()};
  slots.insert(slots.end(), T.slots().begin(), T.slots().end());
  Field out(T.grid_ptr(), slots);
  const auto& G = T.grid();
  std::vector<int> idx(slots.size());
  std::vector<int> src;
  for (int c = 0; c < 2; ++c) {
    for (int comp = 0; comp < T.size(); ++comp) {
      src = T.unflatten(comp);
      Eigen::ArrayXXd acc = d_coord(G, c, T[comp]);
      for (int s = 0; s < T.rank(); ++s) {
        const auto us = static_cast<std::size_t>(s);
        const int v = src[us];
        std::vector<int> other = src;
        switch (T.slots()[us].kind) {
          case Slot::ws_lower:
            for (int d = 0; d < 2; ++d) {
              other[us] = d;
              acc -= geo.conn(d, c, v) * T[T.flat_index(other)];
            }
            break;
          case Slot::ws_upper:
            for (int d = 0; d < 2; ++d) {
              other[us] = d;
              acc += geo.conn(v, c, d) * T[T.flat_index(other)];
            }
            break;
          case Slot::normal:
            if (geo.codim() > 1) {
              for (int k = 0; k < geo.codim(); ++k) {
                other[us] = k;
                acc += geo.normal_conn(c, v, k) * T[T.flat_index(other)];
              }
            }
            break;
          case Slot::spacetime:
            throw std::logic_error("covariant_derivative: spacetime slots unsupported");
        }
      }
      idx[0] = c;
      std::copy(src.begin(), src.end(), idx.begin() + 1);
      out[out.flat_index(idx)] = std::move(acc);
    }
  }
  return out;
}

Field tilde_grad(const GeometryBundle& geo, const Field& phi) {
  if (phi.rank() != 1 || phi.slots()[0].kind != Slot::normal ||
      phi.dim(0) != geo.codim()) {
    throw GridError("tilde_grad: expected a normal-vector field with " +
                    std::to_string(geo.codim()) + " components");
  }
  return covariant_derivative(geo, phi);
}

Field raise(const GeometryBundle& geo, const Field& T, int slot) {
  const auto us = static_cast<std::size_t>(slot);
  if (T.slots().at(us).kind != Slot::ws_lower) {
    throw std::logic_error("raise: slot is not a lower worldsheet index");
  }
  auto slots = T.slots();
  slots[us] = ws_upper();
  Field out(T.grid_ptr(), slots);
  for (int comp = 0; comp < out.size(); ++comp) {
    auto idx = out.unflatten(comp);
    const int a = idx[us];
    for (int b = 0; b < 2; ++b) {
      idx[us] = b;
      out[comp] += geo.gamma_inv(a, b) * T[T.flat_index(idx)];
    }
  }
  return out;
}

Field lower(const GeometryBundle& geo, const Field& T, int slot) {
  const auto us = static_cast<std::size_t>(slot);
  if (T.slots().at(us).kind != Slot::ws_upper) {
    throw std::logic_error("lower: slot is not an upper worldsheet index");
  }
  auto slots = T.slots();
  slots[us] = ws_lower();
  Field out(T.grid_ptr(), slots);
  for (int comp = 0; comp < out.size(); ++comp) {
    auto idx = out.unflatten(comp);
    const int a = idx[us];
    for (int b = 0; b < 2; ++b) {
      idx[us] = b;
      out[comp] += geo.gamma(a, b) * T[T.flat_index(idx)];
    }
  }
  return out;
}

Field divergence(const GeometryBundle& geo, const Field& J) {
  if (J.rank() < 1 || J.slots()[0].kind != Slot::ws_upper) {
    throw std::logic_error("divergence: first slot must be an upper worldsheet index");
  }
  std::vector<IndexSlot> rest(J.slots().begin() + 1, J.slots().end());
  for (const auto& s : rest) {
    if (s.kind != Slot::normal) throw std::logic_error("divergence: trailing slots must be normal");
  }
  Field out(J.grid_ptr(), rest);
  const auto& G = J.grid();
  const Eigen::ArrayXXd iv = geo.inv_vol();
  std::vector<int> idx(static_cast<std::size_t>(J.rank()));
  for (int comp = 0; comp < out.size(); ++comp) {
    const auto r = out.unflatten(comp);
    std::copy(r.begin(), r.end(), idx.begin() + 1);
    Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(G.n_tau(), G.n_sigma());
    for (int a = 0; a < 2; ++a) {
      idx[0] = a;
      acc += d_coord(G, a, (geo.vol[0] * J[J.flat_index(idx)]).eval());
    }
    acc *= iv;
    if (geo.codim() > 1) {
      for (std::size_t s = 0; s < r.size(); ++s) {
        for (int a = 0; a < 2; ++a) {
          idx[0] = a;
          std::copy(r.begin(), r.end(), idx.begin() + 1);
          for (int k = 0; k < geo.codim(); ++k) {
            idx[s + 1] = k;
            acc += geo.normal_conn(a, r[s], k) * J[J.flat_index(idx)];
          }
        }
      }
    }
    out[comp] = std::move(acc);
  }
  return out;
}

Field tilde_laplacian(const GeometryBundle& geo, const Field& phi) {
  return divergence(geo, raise(geo, tilde_grad(geo, phi), 0));
}

Field tilde_laplacian_trace(const GeometryBundle& geo, const Field& phi) {
  return tensor_laplacian(geo, phi);
}

Field tensor_laplacian(const GeometryBundle& geo, const Field& T) {
  const Field H = covariant_derivative(geo, covariant_derivative(geo, T));
  Field out(T.grid_ptr(), T.slots());
  std::vector<int> idx(static_cast<std::size_t>(H.rank()));
  for (int comp = 0; comp < out.size(); ++comp) {
    const auto r = out.unflatten(comp);
    std::copy(r.begin(), r.end(), idx.begin() + 2);
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < 2; ++d) {
        idx[0] = c;
        idx[1] = d;
        out[comp] += geo.gamma_inv(c, d) * H[H.flat_index(idx)];
      }
  }
  return out;
}

Field gauss_scalar_curvature(const GeometryBundle& geo) {
  const Field K_up = raise(geo, raise(geo, geo.K, 0), 1);
  Field r = einsum("i,i->", geo.K_mean, geo.K_mean);
  r -= einsum("abi,abi->", geo.K, K_up);
  return r;
}

Mask interior_mask(const GeometryBundle& geo, int rows) { return geo.mask.interior(rows); }

int interior_rows(const WorldsheetGrid& grid, double fraction) {
  return static_cast<int>(std::lround(fraction * (grid.n_tau() - 1)));
}

}  // namespace gbs
