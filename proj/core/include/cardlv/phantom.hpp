#pragma once

#include <cstdint>
#include <vector>

#include "cardlv/config.hpp"
#include "cardlv/study.hpp"

namespace cardlv {

/// Synthetic short-axis phantom generator: bright blood pool, darker
/// myocardial ring, noisy background, optional papillary blobs, per-slice
/// centers following a random quadratic curve plus Gaussian jitter.
struct PhantomConfig {
    int count = 10;            ///< patients; each yields an ED (and optionally ES) study
    bool paired_phases = true; ///< emit <id>_ED and <id>_ES studies
    int image_size = 256;
    int min_slices = 5;
    int max_slices = 5;

    double base_radius_min = 18.0;  ///< basal cavity radius, px
    double base_radius_max = 26.0;
    double apex_shrink = 0.5;       ///< apical radius = base * (1 - shrink)
    double ring_thickness_min = 5.0;
    double ring_thickness_max = 8.0;
    double es_scale = 0.72;         ///< ES cavity radius multiplier

    double cavity_intensity = 0.8;
    double ring_intensity = 0.4;
    double background_intensity = 0.2;
    double edge_softness = 0.7;     ///< px scale of the sigmoid edge blend
    double noise_sd = 0.02;

    double papillary_prob = 0.5;    ///< per-slice probability of blobs
    int papillary_max_count = 2;
    double papillary_radius_min = 2.0;
    double papillary_radius_max = 4.0;

    double center_jitter_sd = 2.0;  ///< slice misalignment, px
    double quad_a_max = 0.25;       ///< |a| bound of the center curve
    double quad_b_max = 1.5;        ///< |b| bound

    double spacing_mm = 1.0;
    double thickness_mm = 8.0;
    std::uint64_t seed = 1;

    static PhantomConfig from_key_values(const KeyValues& kv);
};

/// Ground-truth geometry of one generated slice.
struct PhantomSliceTruth {
    Point center;
    double cavity_radius = 0.0;
};

struct PhantomStudy {
    StudyRecord study;                     ///< includes analytic truth contours
    std::vector<PhantomSliceTruth> truth;  ///< per-slice center/radius
};

/// Deterministic in `cfg.seed`; patient k derives an independent stream, so
/// regenerating any subset reproduces identical studies.
std::vector<PhantomStudy> generate_phantoms(const PhantomConfig& cfg);

/// Pixel mask of the analytic cavity disk (distance <= radius).
BinaryMask truth_mask(const PhantomSliceTruth& truth, int height, int width);

} // namespace cardlv
