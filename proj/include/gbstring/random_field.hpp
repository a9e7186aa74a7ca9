#ifndef GBSTRING_RANDOM_FIELD_HPP
#define GBSTRING_RANDOM_FIELD_HPP

#include "gbstring/field.hpp"

#include <cstdint>

namespace gbs {

/// Smooth random test field: each component is a sum of sigma harmonics up
/// to n_sigma/4 with amplitudes decaying like exp(-k), each multiplied by a
/// cubic in the normalized tau coordinate. Scaled so max |value| = 1.
Field random_smooth_field(const GridPtr& grid, const std::vector<IndexSlot>& slots,
                          std::uint64_t seed);

}  // namespace gbs

#endif  // GBSTRING_RANDOM_FIELD_HPP
