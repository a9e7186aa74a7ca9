#ifndef GBSTRING_FIELD_HPP
#define GBSTRING_FIELD_HPP

#include "gbstring/grid.hpp"

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gbs {

/// Kind of a tensor index carried by a field.
enum class Slot : std::uint8_t {
  ws_lower,   // worldsheet covariant index (a, b, ...)
  ws_upper,   // worldsheet contravariant index
  normal,     // orthonormal normal-frame index (i, j, ...)
  spacetime,  // background coordinate index (mu, nu, ...)
};

struct IndexSlot {
  Slot kind;
  int dim;
  bool operator==(const IndexSlot&) const = default;
};

inline IndexSlot ws_lower() { return {Slot::ws_lower, 2}; }
inline IndexSlot ws_upper() { return {Slot::ws_upper, 2}; }
inline IndexSlot normal_index(int codim) { return {Slot::normal, codim}; }
inline IndexSlot spacetime_index(int dim) { return {Slot::spacetime, dim}; }

std::string describe(const std::vector<IndexSlot>& slots);

/// A tensor field on the worldsheet grid: one (n_tau x n_sigma) array per
/// index component, components stored in row-major index order.
template <typename Scalar>
class BasicField {
 public:
  using Array = GridArray<Scalar>;

  BasicField() = default;

  BasicField(GridPtr grid, std::vector<IndexSlot> slots)
      : grid_(std::move(grid)), slots_(std::move(slots)) {
    if (!grid_) throw GridError("field requires a grid");
    int count = 1;
    for (const auto& s : slots_) {
      if (s.dim <= 0) throw GridError("index dimension must be positive");
      count *= s.dim;
    }
    comps_.assign(static_cast<std::size_t>(count),
                  Array::Zero(grid_->n_tau(), grid_->n_sigma()));
  }

  static BasicField scalar(GridPtr grid, const Array& values) {
    BasicField f(std::move(grid), {});
    detail::check_shape(*f.grid_, values);
    f.comps_[0] = values;
    return f;
  }

  static BasicField constant(GridPtr grid, Scalar value) {
    BasicField f(std::move(grid), {});
    f.comps_[0].setConstant(value);
    return f;
  }

  const WorldsheetGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<IndexSlot>& slots() const { return slots_; }
  int rank() const { return static_cast<int>(slots_.size()); }
  int size() const { return static_cast<int>(comps_.size()); }
  int dim(int slot) const { return slots_.at(static_cast<std::size_t>(slot)).dim; }
  bool empty() const { return comps_.empty(); }

  Array& operator[](int flat) { return comps_[static_cast<std::size_t>(flat)]; }
  const Array& operator[](int flat) const {
    return comps_[static_cast<std::size_t>(flat)];
  }

  template <typename... I>
  Array& operator()(I... idx) {
    return comps_[static_cast<std::size_t>(flat_of({static_cast<int>(idx)...}))];
  }
  template <typename... I>
  const Array& operator()(I... idx) const {
    return comps_[static_cast<std::size_t>(flat_of({static_cast<int>(idx)...}))];
  }

  int flat_index(std::span<const int> idx) const {
    if (idx.size() != slots_.size()) {
      throw GridError("index count does not match field rank");
    }
    int flat = 0;
    for (std::size_t s = 0; s < slots_.size(); ++s) {
      flat = flat * slots_[s].dim + idx[s];
    }
    return flat;
  }

  /// Unpacks a flat component number into per-slot indices.
  std::vector<int> unflatten(int flat) const {
    std::vector<int> idx(slots_.size());
    for (std::size_t s = slots_.size(); s-- > 0;) {
      idx[s] = flat % slots_[s].dim;
      flat /= slots_[s].dim;
    }
    return idx;
  }

  bool same_layout(const BasicField& o) const {
    return grid_ && o.grid_ && *grid_ == *o.grid_ && slots_ == o.slots_;
  }

  BasicField& operator+=(const BasicField& o) {
    require_layout(o);
    for (std::size_t c = 0; c < comps_.size(); ++c) comps_[c] += o.comps_[c];
    return *this;
  }
  BasicField& operator-=(const BasicField& o) {
    require_layout(o);
    for (std::size_t c = 0; c < comps_.size(); ++c) comps_[c] -= o.comps_[c];
    return *this;
  }
  BasicField& operator*=(Scalar s) {
    for (auto& c : comps_) c *= s;
    return *this;
  }
  /// Pointwise multiplication of every component by a scalar field.
  BasicField& operator*=(const Array& w) {
    for (auto& c : comps_) c *= w;
    return *this;
  }

  /// Largest absolute component value, optionally restricted to `active`.
  Scalar max_abs() const {
    Scalar m(0);
    for (const auto& c : comps_) m = std::max(m, c.abs().maxCoeff());
    return m;
  }
  Scalar max_abs(const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>&
                     active) const {
    Scalar m(0);
    for (const auto& c : comps_) {
      m = std::max(m, active.select(c.abs(), Scalar(0)).maxCoeff());
    }
    return m;
  }

  bool all_finite() const {
    return std::all_of(comps_.begin(), comps_.end(),
                       [](const Array& c) { return c.allFinite(); });
  }

 private:
  int flat_of(std::initializer_list<int> idx) const {
    return flat_index(std::span<const int>(idx.begin(), idx.size()));
  }
  void require_layout(const BasicField& o) const {
    if (!same_layout(o)) {
      throw GridError("field layout mismatch: " + describe(slots_) + " vs " +
                      describe(o.slots_));
    }
  }

  GridPtr grid_;
  std::vector<IndexSlot> slots_;
  std::vector<Array> comps_;
};

using Field = BasicField<double>;

template <typename Scalar>
BasicField<Scalar> operator+(BasicField<Scalar> a, const BasicField<Scalar>& b) {
  a += b;
  return a;
}
template <typename Scalar>
BasicField<Scalar> operator-(BasicField<Scalar> a, const BasicField<Scalar>& b) {
  a -= b;
  return a;
}
template <typename Scalar>
BasicField<Scalar> operator*(Scalar s, BasicField<Scalar> a) {
  a *= s;
  return a;
}
template <typename Scalar>
BasicField<Scalar> operator-(BasicField<Scalar> a) {
  a *= Scalar(-1);
  return a;
}

/// Component-wise spectral sigma derivative.
template <typename Scalar>
BasicField<Scalar> d_sigma(const BasicField<Scalar>& f) {
  BasicField<Scalar> out(f.grid_ptr(), f.slots());
  for (int c = 0; c < f.size(); ++c) out[c] = d_sigma(f.grid(), f[c]);
  return out;
}

/// Component-wise fourth-order tau derivative.
template <typename Scalar>
BasicField<Scalar> d_tau(const BasicField<Scalar>& f) {
  BasicField<Scalar> out(f.grid_ptr(), f.slots());
  for (int c = 0; c < f.size(); ++c) out[c] = d_tau(f.grid(), f[c]);
  return out;
}

using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Points that participate in norms and integrals.
class Mask {
 public:
  Mask() = default;
  explicit Mask(GridPtr grid)
      : grid_(std::move(grid)),
        active_(BoolArray::Constant(grid_->n_tau(), grid_->n_sigma(), true)) {}
  Mask(GridPtr grid, BoolArray active)
      : grid_(std::move(grid)), active_(std::move(active)) {
    detail::check_shape(*grid_, active_.cast<int>());
  }

  const WorldsheetGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const BoolArray& active() const { return active_; }
  bool operator()(int i, int k) const { return active_(i, k); }

  Eigen::Index count() const { return active_.count(); }
  double active_fraction() const {
    return static_cast<double>(count()) / static_cast<double>(active_.size());
  }

  /// Marks the rectangle [i0, i1] x [k0, k1] (sigma indices wrap) inactive.
  void exclude(int i0, int i1, int k0, int k1) {
    for (int i = std::max(i0, 0); i <= std::min(i1, grid_->n_tau() - 1); ++i) {
      for (int k = k0; k <= k1; ++k) {
        const int n = grid_->n_sigma();
        active_(i, ((k % n) + n) % n) = false;
      }
    }
  }

  /// Excludes `rows` tau rows at each end of the window.
  Mask interior(int rows) const {
    Mask m = *this;
    m.exclude(0, rows - 1, 0, grid_->n_sigma() - 1);
    m.exclude(grid_->n_tau() - rows, grid_->n_tau() - 1, 0,
              grid_->n_sigma() - 1);
    return m;
  }

  Mask operator&&(const Mask& o) const {
    return Mask(grid_, active_ && o.active_);
  }

  /// Rejects masks that leave fewer than half of the points active.
  void require_majority() const {
    if (active_fraction() < 0.5) {
      throw GridError("mask leaves only " +
                      std::to_string(100.0 * active_fraction()) +
                      "% of points active (minimum 50%)");
    }
  }

  /// True when every point of the tau row is active.
  bool row_active(int i) const { return active_.row(i).all(); }

 private:
  GridPtr grid_;
  BoolArray active_;
};

/// Trapezoid rule in tau times the periodic rule in sigma over active points.
template <typename Scalar>
Scalar integrate_patch(const BasicField<Scalar>& f, const Mask& mask) {
  if (f.rank() != 0) throw GridError("integrate_patch expects a scalar field");
  if (!(f.grid() == mask.grid())) throw GridError("mask grid mismatch");
  if (mask.count() == 0) throw GridError("integrate_patch: empty mask");
  const auto& g = f.grid();
  Scalar sum(0);
  for (int i = 0; i < g.n_tau(); ++i) {
    const Scalar w = (i == 0 || i == g.n_tau() - 1) ? Scalar(0.5) : Scalar(1);
    Scalar row(0);
    for (int k = 0; k < g.n_sigma(); ++k) {
      if (mask(i, k)) row += f[0](i, k);
    }
    sum += w * row;
  }
  return sum * Scalar(g.h_tau() * g.h_sigma());
}

template <typename Scalar>
Scalar integrate_sigma_slice(const BasicField<Scalar>& f, int tau_index) {
  if (f.rank() != 0) {
    throw GridError("integrate_sigma_slice expects a scalar field");
  }
  return integrate_sigma_slice(f.grid(), f[0], tau_index);
}

}  // namespace gbs

#endif  // GBSTRING_FIELD_HPP
