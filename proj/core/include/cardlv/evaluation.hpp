#pragma once

#include <vector>

#include "cardlv/geometry.hpp"
#include "cardlv/image.hpp"

namespace cardlv {

/// Dice overlap 2|A n M| / (|A| + |M|) by pixel counting.
double dice(const BinaryMask& auto_mask, const BinaryMask& manual_mask);

/// Average perpendicular distance in millimetres: mean over the (densified)
/// automatic contour points of the distance to the manual polyline. Direction
/// is auto -> manual; the symmetric variant averages both directions.
double apd(const Contour& auto_contour, const Contour& manual_contour, bool symmetric = false,
           int min_samples = 200);

/// Symmetric Hausdorff distance in millimetres.
double hausdorff(const Contour& auto_contour, const Contour& manual_contour,
                 int min_samples = 200);

/// Conformity coefficient (3 DM - 2) / DM; undefined for DM = 0.
double conformity(double dice_value);

/// A contour counts as good when APD < 5 mm (strict).
bool classify_good(double apd_mm);

struct SliceMetrics {
    double dice = 0.0;
    double apd_mm = 0.0;
    double hausdorff_mm = 0.0;
    double conformity = 0.0;
    bool good = false;
};

/// All per-slice metrics for one auto/manual contour pair; masks rasterized on
/// the given grid.
SliceMetrics slice_metrics(const Contour& auto_contour, const Contour& manual_contour,
                           int height, int width);

struct StudyMetrics {
    double dice_mean = 0, dice_sd = 0;
    double apd_mean = 0, apd_sd = 0;
    double hausdorff_mean = 0, hausdorff_sd = 0;
    double conformity_mean = 0, conformity_sd = 0;
    double good_pct = 0;
    int n_slices = 0;
};

/// Per-metric mean and population standard deviation plus the good-contour
/// percentage.
StudyMetrics study_metrics(const std::vector<SliceMetrics>& per_slice);

struct ClinicalIndices {
    double edv_ml = 0;  ///< end-diastolic volume, cm^3
    double esv_ml = 0;  ///< end-systolic volume, cm^3
    double ef_pct = 0;  ///< ejection fraction, percent
};

/// Disc-summation volumes from per-slice cavity areas in px^2:
/// V = sum(area) * spacing^2 * thickness, reported in cm^3.
ClinicalIndices clinical_indices(const std::vector<double>& ed_areas_px,
                                 const std::vector<double>& es_areas_px, double thickness_mm,
                                 double spacing_mm);

/// Convenience overload computing the areas from the contours.
ClinicalIndices clinical_indices(const std::vector<Contour>& ed_stack,
                                 const std::vector<Contour>& es_stack, double thickness_mm,
                                 double spacing_mm);

struct AgreementStats {
    double pearson_r = 0;
    double slope = 0;      ///< auto ~ slope * manual + intercept
    double intercept = 0;
    double bias = 0;       ///< mean(auto - manual)
    double loa_low = 0;    ///< bias - 1.96 SD
    double loa_high = 0;   ///< bias + 1.96 SD
    double cv_pct = 0;     ///< SD of differences / mean of all values * 100
    double rpc = 0;        ///< 1.96 * SD of differences
    int n = 0;
};

/// Pearson correlation, regression line and Bland-Altman statistics for paired
/// automatic/manual values. SD of differences is the sample (n-1) form.
AgreementStats agreement(const std::vector<double>& auto_vals,
                         const std::vector<double>& manual_vals);

} // namespace cardlv
