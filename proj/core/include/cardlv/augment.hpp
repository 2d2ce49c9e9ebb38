#pragma once

#include <cstdint>
#include <vector>

#include "cardlv/geometry.hpp"
#include "cardlv/image.hpp"

namespace cardlv {

struct AugmentConfig {
    int factor = 10;               ///< output size = factor x input size
    double max_translate_px = 10.0;
    double max_rotate_deg = 15.0;
    double pca_intensity_scale = 0.1;  ///< coefficient variance = scale * eigenvalue
    std::uint64_t seed = 7;
};

/// One labeled training slice: full image plus its reference contour.
struct TrainingSlice {
    Image image;
    Contour contour;
};

/// Each sample yields factor-1 additional copies: rotation and translation
/// applied jointly to pixels (bilinear, replicate border) and contour points,
/// plus an intensity perturbation along the top-3 eigenimages of the training
/// pixel covariance (estimated at 32x32), clipped to [0,1].
std::vector<TrainingSlice> augment_dataset(const std::vector<TrainingSlice>& input,
                                           const AugmentConfig& cfg);

/// Rotation about the image center followed by translation; exposed for the
/// label-consistency tests.
Image warp_affine(const Image& img, double angle_rad, double tx, double ty);
Contour transform_contour(const Contour& contour, double angle_rad, double tx, double ty,
                          double center_x, double center_y);

} // namespace cardlv
