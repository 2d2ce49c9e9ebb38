#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cardlv/geometry.hpp"

namespace cardlv {

/// Row-major 2D grid of real-valued intensities. Used for slices, sub-images,
/// feature maps and kernels alike; only data loaded from files is required to
/// lie in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, double fill = 0.0);

    /// Validates that d has h*w finite entries.
    static Image from_data(int h, int w, std::vector<double> d);

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

/// Grid of {0,1} values.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0);

    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }
    long count_foreground() const;
    bool same_shape(const BinaryMask& o) const { return height == o.height && width == o.width; }
};

/// Signed scalar field over a grid; negative inside the represented region.
struct LevelSetField {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    LevelSetField() = default;
    LevelSetField(int h, int w, double fill = 0.0);

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const LevelSetField& o) const {
        return height == o.height && width == o.width;
    }
};

// ---- PGM (P5, 8-bit) I/O ---------------------------------------------------

/// Loads an 8-bit P5 PGM and normalizes intensities by 1/255.
Image load_pgm(const std::string& path);

/// Stores intensities clamped to [0,1] and scaled by 255.
void save_pgm(const Image& img, const std::string& path);

/// Loads a PGM whose pixels must all be 0 or 255.
BinaryMask load_mask_pgm(const std::string& path);

void save_mask_pgm(const BinaryMask& mask, const std::string& path);

// ---- Grid operations ---------------------------------------------------------

/// Valid-mode 2D correlation: out[i,j] = sum_k kernel[k1,k2]*image[i+k1,j+k2] + bias.
/// No activation is applied.
Image conv2d_valid(const Image& image, const Image& kernel, double bias);

/// Non-overlapping block mean with a window x window block. Dimensions must be
/// divisible by the window.
Image avg_pool(const Image& map, int window);

double sigmoid(double x);
Image sigmoid(const Image& img);

enum class Interp { nearest, bilinear };

/// Resamples to new_h x new_w. Output pixel centers map to input coordinates
/// via in = (out + 0.5) * (in_size / out_size) - 0.5, clamped at the frame.
Image resample(const Image& img, int new_h, int new_w, Interp method);

/// Mean coordinate (x=column, y=row) of foreground pixels.
Point centroid(const BinaryMask& mask);

struct CropResult {
    Image image;
    int x0 = 0;           ///< source column of the crop's left edge
    int y0 = 0;           ///< source row of the crop's top edge
    bool padded = false;  ///< true when part of the window fell outside the source
};

/// size x size window centered at (cx, cy); out-of-bounds regions zero-padded.
CropResult crop(const Image& img, double cx, double cy, int size);

} // namespace cardlv
