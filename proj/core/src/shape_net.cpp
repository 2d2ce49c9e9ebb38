#include "cardlv/shape_net.hpp"

#include <cmath>
#include <random>

#include "cardlv/errors.hpp"
#include "cardlv/mask_ops.hpp"

namespace cardlv {

namespace {

inline Eigen::MatrixXd sigmoid_mat(const Eigen::MatrixXd& z) {
    return 1.0 / (1.0 + (-z.array()).exp());
}

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

// Flat layout for joint fine-tuning: W4, b4, W5, b5, W6, b6.
Eigen::VectorXd pack_all(const StackedAEParams& p) {
    Eigen::VectorXd x(p.W4.size() + p.b4.size() + p.W5.size() + p.b5.size() + p.W6.size() +
                      p.b6.size());
    Eigen::Index off = 0;
    const auto put_mat = [&](const Eigen::MatrixXd& m) {
        x.segment(off, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
        off += m.size();
    };
    const auto put_vec = [&](const Eigen::VectorXd& v) {
        x.segment(off, v.size()) = v;
        off += v.size();
    };
    put_mat(p.W4);
    put_vec(p.b4);
    put_mat(p.W5);
    put_vec(p.b5);
    put_mat(p.W6);
    put_vec(p.b6);
    return x;
}

void unpack_all(const Eigen::VectorXd& x, StackedAEParams& p) {
    Eigen::Index off = 0;
    const auto take_mat = [&](Eigen::MatrixXd& m) {
        m = Eigen::Map<const Eigen::MatrixXd>(x.data() + off, m.rows(), m.cols());
        off += m.size();
    };
    const auto take_vec = [&](Eigen::VectorXd& v) {
        v = x.segment(off, v.size());
        off += v.size();
    };
    take_mat(p.W4);
    take_vec(p.b4);
    take_mat(p.W5);
    take_vec(p.b5);
    take_mat(p.W6);
    take_vec(p.b6);
}

} // namespace

int ShapeNetArch::side() const {
    const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(input_dim))));
    return s;
}

void ShapeNetArch::validate() const {
    if (hidden1 < 1 || hidden2 < 1 || input_dim < 1)
        throw DimensionError("shape net arch: layer sizes must be positive");
    const int s = side();
    if (s * s != input_dim)
        throw DimensionError("shape net arch: input_dim must be a perfect square");
}

StackedAEParams StackedAEParams::init_random(const ShapeNetArch& arch, std::uint64_t seed) {
    arch.validate();
    std::mt19937_64 rng(seed);
    StackedAEParams p;
    p.arch = arch;
    p.W4 = glorot(arch.hidden1, arch.input_dim, rng);
    p.b4 = Eigen::VectorXd::Zero(arch.hidden1);
    p.W5 = glorot(arch.hidden2, arch.hidden1, rng);
    p.b5 = Eigen::VectorXd::Zero(arch.hidden2);
    p.W6 = glorot(arch.input_dim, arch.hidden2, rng);
    p.b6 = Eigen::VectorXd::Zero(arch.input_dim);
    return p;
}

Eigen::VectorXd sae_forward(const StackedAEParams& params, const Eigen::VectorXd& x_s) {
    if (x_s.size() != params.arch.input_dim)
        throw DimensionError("sae_forward: input length " + std::to_string(x_s.size()) +
                             " != " + std::to_string(params.arch.input_dim));
    const Eigen::VectorXd h1 = sigmoid_mat(params.W4 * x_s + params.b4);
    const Eigen::VectorXd h2 = sigmoid_mat(params.W5 * h1 + params.b5);
    return sigmoid_mat(params.W6 * h2 + params.b6);
}

Eigen::MatrixXd sae_hidden2(const StackedAEParams& params, const Eigen::MatrixXd& X) {
    const Eigen::MatrixXd h1 = sigmoid_mat((params.W4 * X).colwise() + params.b4);
    return sigmoid_mat((params.W5 * h1).colwise() + params.b5);
}

void layerwise_pretrain(StackedAEParams& params, const Eigen::MatrixXd& inputs,
                        const SparsityConfig& cfg, std::uint64_t seed, TrainingCurve* curve) {
    if (inputs.cols() < 1) throw InputError("layerwise_pretrain: empty training set");
    if (inputs.rows() != params.arch.input_dim)
        throw DimensionError("layerwise_pretrain: input rows != arch input_dim");

    // Stage 1: sparse AE input_dim -> hidden1; keep the encoder, drop the decoder.
    const AEParams ae1_init =
        AEParams::init_random(params.arch.hidden1, params.arch.input_dim, seed);
    const AEParams ae1 = train_ae(inputs, ae1_init, cfg, curve);
    params.W4 = ae1.W2;
    params.b4 = ae1.b2;

    // Stage 2: the hidden activations become the next training set.
    const Eigen::MatrixXd h1 = sigmoid_mat((params.W4 * inputs).colwise() + params.b4);
    const AEParams ae2_init =
        AEParams::init_random(params.arch.hidden2, params.arch.hidden1, seed + 1);
    const AEParams ae2 = train_ae(h1, ae2_init, cfg, curve);
    params.W5 = ae2.W2;
    params.b5 = ae2.b2;
}

DescentResult train_output_layer(StackedAEParams& params, const Eigen::MatrixXd& inputs,
                                 const Eigen::MatrixXd& labels, double lambda,
                                 const TrainControl& ctl, TrainingCurve* curve) {
    const Eigen::Index n = inputs.cols();
    if (n < 1) throw InputError("train_output_layer: empty dataset");
    if (labels.cols() != n || labels.rows() != params.arch.input_dim)
        throw DimensionError("train_output_layer: label matrix shape mismatch");

    // W4/W5 frozen: the second hidden activations are constant.
    const Eigen::MatrixXd H2 = sae_hidden2(params, inputs);

    const Eigen::Index rows = params.W6.rows(), cols = params.W6.cols();
    const Eigen::Index wsize = params.W6.size();
    Eigen::VectorXd x(wsize + params.b6.size());
    x.segment(0, wsize) = Eigen::Map<const Eigen::VectorXd>(params.W6.data(), wsize);
    x.segment(wsize, params.b6.size()) = params.b6;

    const auto evaluate = [&, lambda](const Eigen::VectorXd& v, Eigen::VectorXd* g) {
        const Eigen::Map<const Eigen::MatrixXd> W6(v.data(), rows, cols);
        const Eigen::Map<const Eigen::VectorXd> b6(v.data() + wsize, rows);
        const Eigen::MatrixXd y = sigmoid_mat((W6 * H2).colwise() + b6);
        const Eigen::MatrixXd resid = y - labels;
        const double cost =
            resid.squaredNorm() / (2.0 * n) + 0.5 * lambda * W6.squaredNorm();
        if (g) {
            const Eigen::MatrixXd delta =
                (resid.array() * y.array() * (1.0 - y.array())) / static_cast<double>(n);
            const Eigen::MatrixXd gW6 = delta * H2.transpose() + lambda * W6;
            g->resize(v.size());
            g->segment(0, wsize) = Eigen::Map<const Eigen::VectorXd>(gW6.data(), wsize);
            g->segment(wsize, rows) = delta.rowwise().sum();
        }
        return cost;
    };
    CostFunction f;
    f.cost = [&](const Eigen::VectorXd& v) { return evaluate(v, nullptr); };
    f.cost_grad = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) { return evaluate(v, &g); };

    const DescentResult res = minimize(x, f, ctl, "train_output_layer", curve);
    params.W6 = Eigen::Map<const Eigen::MatrixXd>(x.data(), rows, cols);
    params.b6 = x.segment(wsize, rows);
    return res;
}

DescentResult finetune_sae(StackedAEParams& params, const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& labels, double lambda, const TrainControl& ctl,
                           TrainingCurve* curve) {
    const Eigen::Index n = inputs.cols();
    if (n < 1) throw InputError("finetune_sae: empty dataset");
    if (labels.cols() != n || labels.rows() != params.arch.input_dim)
        throw DimensionError("finetune_sae: label matrix shape mismatch");

    StackedAEParams work = params;
    const auto evaluate = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad) -> double {
        unpack_all(v, work);
        const Eigen::MatrixXd h1 = sigmoid_mat((work.W4 * inputs).colwise() + work.b4);
        const Eigen::MatrixXd h2 = sigmoid_mat((work.W5 * h1).colwise() + work.b5);
        const Eigen::MatrixXd y = sigmoid_mat((work.W6 * h2).colwise() + work.b6);
        const Eigen::MatrixXd resid = y - labels;
        const double cost =
            resid.squaredNorm() / (2.0 * n) +
            0.5 * lambda *
                (work.W4.squaredNorm() + work.W5.squaredNorm() + work.W6.squaredNorm());
        if (!grad) return cost;

        const Eigen::MatrixXd d3 =
            (resid.array() * y.array() * (1.0 - y.array())) / static_cast<double>(n);
        const Eigen::MatrixXd d2 =
            ((work.W6.transpose() * d3).array() * h2.array() * (1.0 - h2.array())).matrix();
        const Eigen::MatrixXd d1 =
            ((work.W5.transpose() * d2).array() * h1.array() * (1.0 - h1.array())).matrix();

        StackedAEParams g = work;
        g.W6 = d3 * h2.transpose() + lambda * work.W6;
        g.b6 = d3.rowwise().sum();
        g.W5 = d2 * h1.transpose() + lambda * work.W5;
        g.b5 = d2.rowwise().sum();
        g.W4 = d1 * inputs.transpose() + lambda * work.W4;
        g.b4 = d1.rowwise().sum();
        *grad = pack_all(g);
        return cost;
    };

    Eigen::VectorXd x = pack_all(params);
    CostFunction f;
    f.cost = [&](const Eigen::VectorXd& v) { return evaluate(v, nullptr); };
    f.cost_grad = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) { return evaluate(v, &g); };
    const DescentResult res = minimize(x, f, ctl, "finetune_sae", curve);
    unpack_all(x, params);
    return res;
}

Eigen::VectorXd unroll_image(const Image& img) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(img.height) * img.width);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = img.data[static_cast<std::size_t>(i)];
    return v;
}

BinaryMask threshold_mask(const Eigen::VectorXd& y, int side, double threshold) {
    if (y.size() != static_cast<Eigen::Index>(side) * side)
        throw DimensionError("threshold_mask: vector length != side^2");
    BinaryMask mask(side, side);
    for (Eigen::Index i = 0; i < y.size(); ++i)
        mask.data[static_cast<std::size_t>(i)] = y[i] > threshold ? 1 : 0;
    return mask;
}

ShapeInference infer_shape(const StackedAEParams& params, const Image& sub_image) {
    const int side = params.arch.side();
    const Image resized = (sub_image.height == side && sub_image.width == side)
                              ? sub_image
                              : resample(sub_image, side, side, Interp::bilinear);
    const Eigen::VectorXd y = sae_forward(params, unroll_image(resized));

    ShapeInference inf;
    inf.ring = threshold_mask(y, side, 0.5);
    if (inf.ring.count_foreground() == 0)
        throw ShapeInferenceError("infer_shape: thresholded output is empty");
    inf.filled = fill_holes(close3x3(inf.ring));
    return inf;
}

BinaryMask fallback_disk_mask(int side, double radius) {
    BinaryMask mask(side, side);
    const double c = (side - 1) / 2.0;
    for (int r = 0; r < side; ++r)
        for (int x = 0; x < side; ++x)
            if (std::hypot(r - c, x - c) <= radius) mask.at(r, x) = 1;
    return mask;
}

} // namespace cardlv
