#pragma once

#include "cardlv/geometry.hpp"
#include "cardlv/image.hpp"

namespace cardlv {

/// Fills the closed polygon: a pixel is foreground when its center lies inside
/// (even-odd rule, scanline).
BinaryMask rasterize_polygon(const Contour& contour, int height, int width);

/// Burns the polyline into a 1-px-wide trace by rounding densely resampled
/// points to the nearest pixel.
BinaryMask rasterize_contour_line(const Contour& contour, int height, int width);

/// 3x3 (8-neighborhood) morphological dilation / erosion.
BinaryMask dilate3x3(const BinaryMask& mask);
BinaryMask erode3x3(const BinaryMask& mask);

/// Dilation followed by erosion.
BinaryMask close3x3(const BinaryMask& mask);

/// Background pixels not reachable from the frame (4-connectivity) become
/// foreground.
BinaryMask fill_holes(const BinaryMask& mask);

/// Keeps only the largest 4-connected foreground component; empty mask allowed.
BinaryMask largest_component(const BinaryMask& mask);

} // namespace cardlv
