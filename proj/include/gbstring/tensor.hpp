#ifndef GBSTRING_TENSOR_HPP
#define GBSTRING_TENSOR_HPP

#include "gbstring/field.hpp"

#include <array>
#include <string_view>

namespace gbs {

/// Pointwise index contraction in numpy einsum notation, e.g.
/// `einsum("ab,abi->i", gamma_inv, K)`. Letters repeated across operands and
/// absent from the output are summed. A summed worldsheet letter must appear
/// exactly once as an upper and once as a lower index.
Field einsum(std::string_view expr, std::span<const Field* const> operands);

template <typename... F>
Field einsum(std::string_view expr, const F&... operands) {
  const std::array<const Field*, sizeof...(F)> ptrs{&operands...};
  return einsum(expr, std::span<const Field* const>(ptrs));
}

/// Reorders the slots of `f`; `perm[k]` is the source slot of output slot k.
Field permute(const Field& f, std::span<const int> perm);

/// Symmetrizes a field over two slots of equal shape: (T_ab + T_ba) / 2.
Field symmetrize(const Field& f, int slot_a, int slot_b);

/// Antisymmetrizes over two slots: (T_ab - T_ba) / 2.
Field antisymmetrize(const Field& f, int slot_a, int slot_b);

/// Pointwise product of a field with a scalar field.
Field times(const Field& f, const Field& scalar);

/// Replaces entries outside `mask` with zero.
Field restrict_to(const Field& f, const Mask& mask);

/// Largest absolute component over active points.
double max_abs(const Field& f, const Mask& mask);

/// Pointwise reciprocal that maps zeros (degenerate points) to zero.
Eigen::ArrayXXd safe_reciprocal(const Eigen::ArrayXXd& a);

}  // namespace gbs

#endif  // GBSTRING_TENSOR_HPP
