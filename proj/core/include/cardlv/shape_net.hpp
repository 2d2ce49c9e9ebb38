#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "cardlv/descent.hpp"
#include "cardlv/image.hpp"
#include "cardlv/sparse_autoencoder.hpp"

namespace cardlv {

/// Stacked autoencoder sizes; production is 4096 -> 100 -> 100 -> 4096 over
/// 64x64 sub-images.
struct ShapeNetArch {
    int input_dim = 4096;
    int hidden1 = 100;
    int hidden2 = 100;

    int side() const;  ///< sqrt(input_dim); the square sub-image side
    void validate() const;
};

struct StackedAEParams {
    ShapeNetArch arch;
    Eigen::MatrixXd W4;  ///< hidden1 x input_dim
    Eigen::VectorXd b4;
    Eigen::MatrixXd W5;  ///< hidden2 x hidden1
    Eigen::VectorXd b5;
    Eigen::MatrixXd W6;  ///< input_dim x hidden2
    Eigen::VectorXd b6;

    static StackedAEParams init_random(const ShapeNetArch& arch, std::uint64_t seed);
};

/// y_s = f(W6 f(W5 f(W4 x + b4) + b5) + b6).
Eigen::VectorXd sae_forward(const StackedAEParams& params, const Eigen::VectorXd& x_s);

/// Second hidden layer activations for a batch (columns = samples).
Eigen::MatrixXd sae_hidden2(const StackedAEParams& params, const Eigen::MatrixXd& X);

/// Greedy unsupervised pretraining: a sparse AE on the inputs yields W4/b4, a
/// second sparse AE on the first hidden activations yields W5/b5. Output
/// layers of both are discarded; W6/b6 are left untouched.
void layerwise_pretrain(StackedAEParams& params, const Eigen::MatrixXd& inputs,
                        const SparsityConfig& cfg, std::uint64_t seed,
                        TrainingCurve* curve = nullptr);

/// Supervised training of W6/b6 with W4/W5 frozen:
/// |y_s - l_lv|^2 / 2N + lambda/2 |W6|^2.
DescentResult train_output_layer(StackedAEParams& params, const Eigen::MatrixXd& inputs,
                                 const Eigen::MatrixXd& labels, double lambda,
                                 const TrainControl& ctl, TrainingCurve* curve = nullptr);

/// Joint fine-tuning of all six blocks with decay on W4, W5, W6.
DescentResult finetune_sae(StackedAEParams& params, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& labels, double lambda, const TrainControl& ctl,
                           TrainingCurve* curve = nullptr);

/// Unrolls a side x side image row-major into a network input vector.
Eigen::VectorXd unroll_image(const Image& img);

/// Network output thresholded into a side x side mask (strictly greater).
BinaryMask threshold_mask(const Eigen::VectorXd& y, int side, double threshold = 0.5);

struct ShapeInference {
    BinaryMask ring;    ///< thresholded boundary output
    BinaryMask filled;  ///< ring closed morphologically and hole-filled
};

/// Resamples the sub-image to the network side, runs the forward pass and
/// thresholds at 0.5. Throws ShapeInferenceError when the mask comes out
/// empty; callers may fall back to fallback_disk_mask.
ShapeInference infer_shape(const StackedAEParams& params, const Image& sub_image);

/// Centered disk prior used when shape inference fails.
BinaryMask fallback_disk_mask(int side = 64, double radius = 12.0);

} // namespace cardlv
