#pragma once

#include "cardlv/geometry.hpp"
#include "cardlv/image.hpp"

namespace cardlv {

/// Traces the zero level set of the field as an ordered closed polyline using
/// marching squares with linear interpolation. Regions touching the frame are
/// closed along the frame edge; when several loops exist the one enclosing the
/// largest area is returned. Throws NoContourError when the field has no sign
/// change.
Contour extract_zero_contour(const LevelSetField& field, double pixel_spacing = 1.0);

/// All zero-level loops, largest enclosed area first.
std::vector<Contour> extract_zero_contours(const LevelSetField& field,
                                           double pixel_spacing = 1.0);

} // namespace cardlv
