#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pagpass {

// Largest-remainder (Hamilton) apportionment of `total` units over
// non-negative `weights`, which need not be normalized. Every unit is
// assigned: the result sums to `total` exactly. Remaining units after the
// floor step go to the largest fractional parts; ties prefer the larger
// weight, then the lower index. Zero-weight entries receive nothing.
//
// Throws InvalidArgument if a weight is negative or non-finite, or if all
// weights are zero while total > 0.
std::vector<std::uint64_t> apportion(std::uint64_t total, std::span<const double> weights);

// As apportion(), but no entry may exceed its cap. Entries whose share would
// exceed the cap are pinned to it and the excess is re-apportioned among the
// rest by weight, repeating until every share fits. Requires total to be at
// most the sum of caps over positive-weight entries.
std::vector<std::uint64_t> apportion_capped(std::uint64_t total, std::span<const double> weights,
                                            std::span<const std::uint64_t> caps);

}  // namespace pagpass
