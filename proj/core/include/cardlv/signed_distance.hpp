#pragma once

#include "cardlv/image.hpp"

namespace cardlv {

/// Exact Euclidean signed distance: negative inside the foreground, positive
/// outside. Magnitude at a pixel is the distance to the nearest pixel of the
/// opposite set, so 4-adjacent boundary pixels carry |value| = 1.
/// Throws DegenerateError for an all-zero or all-one mask.
LevelSetField signed_distance(const BinaryMask& mask);

} // namespace cardlv
