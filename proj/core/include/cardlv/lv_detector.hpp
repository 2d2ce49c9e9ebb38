#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "cardlv/descent.hpp"
#include "cardlv/image.hpp"
#include "cardlv/sparse_autoencoder.hpp"

namespace cardlv {

/// Layer sizes of the localization network. The production configuration is
/// 64 -> 100x54x54 -> 100x9x9 -> 8100 -> 1024; reduced sizes are used in tests.
struct DetectorArch {
    int input_side = 64;
    int filter_side = 11;
    int n_filters = 100;
    int pool_window = 6;
    int label_side = 32;

    int conv_side() const { return input_side - filter_side + 1; }
    int pooled_side() const { return conv_side() / pool_window; }
    int feature_dim() const { return n_filters * pooled_side() * pooled_side(); }
    int output_dim() const { return label_side * label_side; }
    void validate() const;
};

struct DetectorParams {
    DetectorArch arch;
    Eigen::MatrixXd filters;  ///< n_filters x filter_side^2, each row one filter, row-major
    Eigen::VectorXd b0;       ///< n_filters
    Eigen::MatrixXd W1;       ///< output_dim x feature_dim
    Eigen::VectorXd b1;       ///< output_dim

    /// Filters/b0 from the pretraining autoencoder, Glorot W1, zero b1.
    static DetectorParams from_filter_bank(const DetectorArch& arch, const FilterBank& bank,
                                           std::uint64_t seed);
    static DetectorParams init_random(const DetectorArch& arch, std::uint64_t seed);

    Image filter_image(int l) const;
};

/// Pooled feature vector p: for each filter in order, its pooled map unrolled
/// row-major. This ordering is a serialization contract.
Eigen::VectorXd detector_features(const DetectorParams& params, const Image& image);

/// Full forward pass y_c = sigmoid(W1 p + b1), entries in (0,1).
Eigen::VectorXd detector_forward(const DetectorParams& params, const Image& image);

struct RoiLabel {
    BinaryMask mask;     ///< label_side x label_side square label
    Point center;        ///< LV center in full-image coordinates
    Eigen::VectorXd unrolled() const;
};

/// Square label of side round(roi_side * out_side / full_side) centered at the
/// scaled LV center, clipped at the borders.
RoiLabel make_roi_label(Point center_full, int roi_side = 100, int out_side = 32,
                        int full_side = 256);

struct DetectorDataset {
    std::vector<Image> images;  ///< network inputs, input_side x input_side
    Eigen::MatrixXd labels;     ///< output_dim x N
};

/// Trains W1/b1 only (filters frozen) on |y_c - l_roi|^2 / 2N + lambda/2 |W1|^2.
DescentResult pretrain_output_layer(DetectorParams& params, const DetectorDataset& data,
                                    double lambda, const TrainControl& ctl,
                                    TrainingCurve* curve = nullptr);

/// Joint optimization of filters, b0, W1, b1 with decay on W1 and the filters.
DescentResult finetune_detector(DetectorParams& params, const DetectorDataset& data,
                                double lambda, const TrainControl& ctl,
                                TrainingCurve* curve = nullptr);

struct RoiDetection {
    Image sub_image;        ///< roi_side x roi_side crop
    Point center;           ///< detected LV center in full-image coordinates
    int x0 = 0, y0 = 0;     ///< crop origin in full-image coordinates
    bool fallback = false;  ///< threshold produced an empty mask; argmax used
};

/// Thresholds y_c at 0.5, takes the mask centroid (computed at label scale and
/// mapped to full-image coordinates) and crops a roi_side square around it.
RoiDetection detect_roi(const DetectorParams& params, const Image& full_image,
                        int roi_side = 100);

} // namespace cardlv
