#include "cardlv/sparse_autoencoder.hpp"

#include <cmath>
#include <random>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

constexpr double kRhoClamp = 1e-8;

Eigen::MatrixXd glorot(int rows, int cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

inline Eigen::MatrixXd sigmoid_mat(const Eigen::MatrixXd& z) {
    return 1.0 / (1.0 + (-z.array()).exp());
}

// Flat layout: W2, b2, W3, b3.
Eigen::VectorXd pack(const AEParams& p) {
    Eigen::VectorXd x(p.W2.size() + p.b2.size() + p.W3.size() + p.b3.size());
    Eigen::Index off = 0;
    x.segment(off, p.W2.size()) = Eigen::Map<const Eigen::VectorXd>(p.W2.data(), p.W2.size());
    off += p.W2.size();
    x.segment(off, p.b2.size()) = p.b2;
    off += p.b2.size();
    x.segment(off, p.W3.size()) = Eigen::Map<const Eigen::VectorXd>(p.W3.data(), p.W3.size());
    off += p.W3.size();
    x.segment(off, p.b3.size()) = p.b3;
    return x;
}

AEParams unpack(const Eigen::VectorXd& x, int hidden, int visible) {
    AEParams p;
    Eigen::Index off = 0;
    p.W2 = Eigen::Map<const Eigen::MatrixXd>(x.data() + off, hidden, visible);
    off += static_cast<Eigen::Index>(hidden) * visible;
    p.b2 = x.segment(off, hidden);
    off += hidden;
    p.W3 = Eigen::Map<const Eigen::MatrixXd>(x.data() + off, visible, hidden);
    off += static_cast<Eigen::Index>(visible) * hidden;
    p.b3 = x.segment(off, visible);
    return p;
}

} // namespace

AEParams AEParams::init_random(int hidden, int visible, std::uint64_t seed) {
    if (hidden < 1 || visible < 1) throw DimensionError("ae: layer sizes must be positive");
    std::mt19937_64 rng(seed);
    AEParams p;
    p.W2 = glorot(hidden, visible, rng);
    p.b2 = Eigen::VectorXd::Zero(hidden);
    p.W3 = glorot(visible, hidden, rng);
    p.b3 = Eigen::VectorXd::Zero(visible);
    return p;
}

Eigen::MatrixXd sample_patches(const std::vector<Image>& images, int count, int patch_size,
                               std::uint64_t seed) {
    if (images.empty()) throw InputError("sample_patches: empty image list");
    if (count < 1) throw InputError("sample_patches: count must be >= 1");
    for (const Image& img : images)
        if (img.height < patch_size || img.width < patch_size)
            throw DimensionError("sample_patches: image smaller than patch size");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_image(0, static_cast<int>(images.size()) - 1);
    Eigen::MatrixXd out(patch_size * patch_size, count);
    for (int k = 0; k < count; ++k) {
        const Image& img = images[pick_image(rng)];
        std::uniform_int_distribution<int> pick_y(0, img.height - patch_size);
        std::uniform_int_distribution<int> pick_x(0, img.width - patch_size);
        const int y0 = pick_y(rng);
        const int x0 = pick_x(rng);
        int i = 0;
        for (int r = 0; r < patch_size; ++r)
            for (int c = 0; c < patch_size; ++c) out(i++, k) = img.at(y0 + r, x0 + c);
    }
    return out;
}

AEForward ae_forward(const AEParams& params, const Eigen::VectorXd& x) {
    if (x.size() != params.visible())
        throw DimensionError("ae_forward: input length " + std::to_string(x.size()) +
                             " != visible size " + std::to_string(params.visible()));
    AEForward f;
    f.a2 = sigmoid_mat(params.W2 * x + params.b2);
    f.y = sigmoid_mat(params.W3 * f.a2 + params.b3);
    return f;
}

AECostGrad ae_cost_grad(const AEParams& params, const Eigen::MatrixXd& batch,
                        const SparsityConfig& cfg) {
    if (batch.cols() < 1) throw InputError("ae_cost_grad: empty batch");
    if (batch.rows() != params.visible())
        throw DimensionError("ae_cost_grad: batch row count != visible size");
    const double n = static_cast<double>(batch.cols());

    const Eigen::MatrixXd a2 =
        sigmoid_mat((params.W2 * batch).colwise() + params.b2);
    const Eigen::MatrixXd y = sigmoid_mat((params.W3 * a2).colwise() + params.b3);
    const Eigen::MatrixXd resid = y - batch;

    AECostGrad out;
    double cost = resid.squaredNorm() / (2.0 * n);
    cost += 0.5 * cfg.lambda * (params.W2.squaredNorm() + params.W3.squaredNorm());

    Eigen::VectorXd rho_hat = a2.rowwise().mean();
    for (Eigen::Index j = 0; j < rho_hat.size(); ++j) {
        if (rho_hat[j] < kRhoClamp || rho_hat[j] > 1.0 - kRhoClamp) {
            rho_hat[j] = std::clamp(rho_hat[j], kRhoClamp, 1.0 - kRhoClamp);
            out.rho_clamped = true;
        }
    }
    if (cfg.beta != 0.0) {
        const double rho = cfg.rho;
        for (Eigen::Index j = 0; j < rho_hat.size(); ++j) {
            cost += cfg.beta * (rho * std::log(rho / rho_hat[j]) +
                                (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat[j])));
        }
    }
    out.cost = cost;

    // Backprop. The KL term reaches the samples through the batch mean.
    const Eigen::MatrixXd delta3 = (resid.array() * y.array() * (1.0 - y.array())) / n;
    out.grad.W3 = delta3 * a2.transpose() + cfg.lambda * params.W3;
    out.grad.b3 = delta3.rowwise().sum();

    Eigen::MatrixXd back = params.W3.transpose() * delta3;
    if (cfg.beta != 0.0) {
        const Eigen::VectorXd sparse_grad =
            (cfg.beta / n) *
            (-(cfg.rho / rho_hat.array()) + (1.0 - cfg.rho) / (1.0 - rho_hat.array())).matrix();
        back.colwise() += sparse_grad;
    }
    const Eigen::MatrixXd delta2 = back.array() * a2.array() * (1.0 - a2.array());
    out.grad.W2 = delta2 * batch.transpose() + cfg.lambda * params.W2;
    out.grad.b2 = delta2.rowwise().sum();
    return out;
}

AEParams train_ae(const Eigen::MatrixXd& patches, const AEParams& init,
                  const SparsityConfig& cfg, TrainingCurve* curve) {
    if (patches.cols() < 1) throw InputError("train_ae: empty patch set");
    const int hidden = init.hidden();
    const int visible = init.visible();

    if (cfg.batch_size > 0 && cfg.batch_size < patches.cols()) {
        // Fixed-order minibatch schedule, fixed step. Kept for speed runs; the
        // default full-batch path is the one with the monotone-cost guarantee.
        AEParams p = init;
        const Eigen::Index bs = cfg.batch_size;
        double last = 0.0;
        for (int iter = 0; iter < cfg.control.max_iters; ++iter) {
            for (Eigen::Index start = 0; start < patches.cols(); start += bs) {
                const Eigen::Index len = std::min<Eigen::Index>(bs, patches.cols() - start);
                const AECostGrad cg = ae_cost_grad(p, patches.middleCols(start, len), cfg);
                if (!std::isfinite(cg.cost))
                    throw TrainingError("train_ae: diverged in minibatch pass");
                p.W2 -= cfg.control.step * cg.grad.W2;
                p.b2 -= cfg.control.step * cg.grad.b2;
                p.W3 -= cfg.control.step * cg.grad.W3;
                p.b3 -= cfg.control.step * cg.grad.b3;
                last = cg.cost;
            }
            if (curve) curve->push_back(last);
        }
        return p;
    }

    Eigen::VectorXd x = pack(init);
    CostFunction f;
    f.cost = [&](const Eigen::VectorXd& v) {
        return ae_cost_grad(unpack(v, hidden, visible), patches, cfg).cost;
    };
    f.cost_grad = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
        const AECostGrad cg = ae_cost_grad(unpack(v, hidden, visible), patches, cfg);
        g = pack(cg.grad);
        return cg.cost;
    };
    minimize(x, f, cfg.control, "train_ae", curve);
    return unpack(x, hidden, visible);
}

AEParams train_ae(const Eigen::MatrixXd& patches, int hidden, const SparsityConfig& cfg,
                  std::uint64_t seed, TrainingCurve* curve) {
    if (patches.cols() < 100)
        throw InputError("train_ae: need at least 100 patches, got " +
                         std::to_string(patches.cols()));
    const AEParams init = AEParams::init_random(hidden, static_cast<int>(patches.rows()), seed);
    return train_ae(patches, init, cfg, curve);
}

FilterBank export_filters(const AEParams& params, int side) {
    if (params.visible() != side * side)
        throw DimensionError("export_filters: visible size " + std::to_string(params.visible()) +
                             " != " + std::to_string(side) + "^2");
    FilterBank bank;
    bank.filters.reserve(params.hidden());
    for (int l = 0; l < params.hidden(); ++l) {
        Image f(side, side);
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c) f.at(r, c) = params.W2(l, r * side + c);
        bank.filters.push_back(std::move(f));
    }
    bank.b0 = params.b2;
    return bank;
}

Eigen::VectorXd mean_hidden_activation(const AEParams& params, const Eigen::MatrixXd& batch) {
    const Eigen::MatrixXd a2 = sigmoid_mat((params.W2 * batch).colwise() + params.b2);
    return a2.rowwise().mean();
}

} // namespace cardlv
