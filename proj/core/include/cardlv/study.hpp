#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cardlv/geometry.hpp"
#include "cardlv/image.hpp"

namespace cardlv {

struct StudySlice {
    Image image;                       ///< 256x256 short-axis slice
    std::optional<Contour> reference;  ///< expert contour when available
};

/// One patient dataset at one cardiac phase, slices ordered base -> apex.
struct StudyRecord {
    std::string id;
    std::vector<StudySlice> slices;
    double thickness_mm = 8.0;
    double spacing_mm = 1.0;
    std::string phase;      ///< "ED" or "ES"
    std::string pathology;  ///< free text, e.g. "SC-HF-I"
};

/// Directory layout: metadata.txt (spacing_mm, thickness_mm, phase, pathology),
/// slice_<i>.pgm for i = 1..n, optional contour_<i>.csv with one "x,y" line
/// per point. Missing metadata keys, malformed CSV rows or non-256x256 images
/// raise LoadError naming the offending file.
StudyRecord load_study(const std::filesystem::path& dir);

void save_study(const StudyRecord& study, const std::filesystem::path& dir);

/// Subpixel contour CSV helpers shared by studies and segmentation output.
Contour load_contour_csv(const std::filesystem::path& path, double pixel_spacing);
void save_contour_csv(const Contour& contour, const std::filesystem::path& path);

/// True when the directory looks like a single study (has metadata.txt).
bool is_study_dir(const std::filesystem::path& dir);

/// The directory itself when it is a study, otherwise its study subdirectories
/// sorted by name.
std::vector<std::filesystem::path> find_study_dirs(const std::filesystem::path& root);

} // namespace cardlv
