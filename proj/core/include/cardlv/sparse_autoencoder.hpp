#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "cardlv/descent.hpp"
#include "cardlv/image.hpp"

namespace cardlv {

/// Single-hidden-layer autoencoder weights. The production configuration is
/// 121 visible / 100 hidden; reduced sizes are used for gradient checks.
struct AEParams {
    Eigen::MatrixXd W2;  ///< hidden x visible
    Eigen::VectorXd b2;  ///< hidden
    Eigen::MatrixXd W3;  ///< visible x hidden
    Eigen::VectorXd b3;  ///< visible

    int hidden() const { return static_cast<int>(W2.rows()); }
    int visible() const { return static_cast<int>(W2.cols()); }

    /// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
    static AEParams init_random(int hidden, int visible, std::uint64_t seed);
};

struct SparsityConfig {
    double rho = 0.1;      ///< target mean hidden activation
    double beta = 3.0;     ///< sparsity penalty weight
    double lambda = 1e-4;  ///< weight decay on W2, W3 (biases excluded)
    int batch_size = 0;    ///< 0 = full batch; otherwise fixed-order minibatches
    TrainControl control;
};

/// Patches drawn uniformly over images and valid top-left positions, unrolled
/// row-major into the columns of the result (patch_size^2 x count).
Eigen::MatrixXd sample_patches(const std::vector<Image>& images, int count, int patch_size,
                               std::uint64_t seed);

struct AEForward {
    Eigen::VectorXd a2;  ///< hidden activations
    Eigen::VectorXd y;   ///< reconstruction
};

AEForward ae_forward(const AEParams& params, const Eigen::VectorXd& x);

struct AECostGrad {
    double cost = 0.0;
    AEParams grad;
    bool rho_clamped = false;  ///< a mean activation hit the [1e-8, 1-1e-8] clamp
};

/// Mean squared reconstruction error + weight decay + KL sparsity penalty, with
/// exact analytic gradients (KL term backpropagated through the batch mean).
AECostGrad ae_cost_grad(const AEParams& params, const Eigen::MatrixXd& batch,
                        const SparsityConfig& cfg);

/// Full-batch descent from a Glorot init derived from `seed`.
AEParams train_ae(const Eigen::MatrixXd& patches, int hidden, const SparsityConfig& cfg,
                  std::uint64_t seed, TrainingCurve* curve = nullptr);

/// Same, continuing from explicit initial parameters.
AEParams train_ae(const Eigen::MatrixXd& patches, const AEParams& init,
                  const SparsityConfig& cfg, TrainingCurve* curve = nullptr);

struct FilterBank {
    std::vector<Image> filters;  ///< one side x side grid per hidden unit
    Eigen::VectorXd b0;
};

/// Rows of W2 reshaped row-major into side x side filters; b0 = b2.
FilterBank export_filters(const AEParams& params, int side = 11);

/// Mean hidden activation per unit over the batch columns.
Eigen::VectorXd mean_hidden_activation(const AEParams& params, const Eigen::MatrixXd& batch);

} // namespace cardlv
