#include "cardlv/lv_detector.hpp"

#include <cmath>
#include <random>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

inline Eigen::MatrixXd sigmoid_mat(const Eigen::MatrixXd& z) {
    return 1.0 / (1.0 + (-z.array()).exp());
}

// Patch matrix: column q holds the filter-sized patch at output position
// q = i*conv_side + j, unrolled row-major to match the filter row layout.
Eigen::MatrixXd im2col(const Image& img, int filter_side) {
    const int conv = img.height - filter_side + 1;
    Eigen::MatrixXd X(filter_side * filter_side, static_cast<Eigen::Index>(conv) * conv);
    for (int i = 0; i < conv; ++i) {
        for (int j = 0; j < conv; ++j) {
            const Eigen::Index q = static_cast<Eigen::Index>(i) * conv + j;
            int row = 0;
            for (int k1 = 0; k1 < filter_side; ++k1) {
                const double* src = img.data.data() + static_cast<std::size_t>(i + k1) * img.width + j;
                for (int k2 = 0; k2 < filter_side; ++k2) X(row++, q) = src[k2];
            }
        }
    }
    return X;
}

// Average pooling over the position axis of an n_filters x conv^2 map matrix;
// result is n_filters x pooled^2 with row-major pooled positions.
Eigen::MatrixXd pool_rows(const Eigen::MatrixXd& C, int conv, int window) {
    const int pooled = conv / window;
    const double inv = 1.0 / (static_cast<double>(window) * window);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(C.rows(), static_cast<Eigen::Index>(pooled) * pooled);
    for (int pi = 0; pi < pooled; ++pi)
        for (int pj = 0; pj < pooled; ++pj) {
            const Eigen::Index out_q = static_cast<Eigen::Index>(pi) * pooled + pj;
            for (int r = pi * window; r < (pi + 1) * window; ++r)
                for (int c = pj * window; c < (pj + 1) * window; ++c)
                    P.col(out_q) += C.col(static_cast<Eigen::Index>(r) * conv + c);
        }
    return P * inv;
}

// Adjoint of pool_rows: distributes 1/window^2 of each pooled gradient to every
// position in its window.
Eigen::MatrixXd unpool_rows(const Eigen::MatrixXd& dP, int conv, int window) {
    const int pooled = conv / window;
    const double inv = 1.0 / (static_cast<double>(window) * window);
    Eigen::MatrixXd dC(dP.rows(), static_cast<Eigen::Index>(conv) * conv);
    for (int pi = 0; pi < pooled; ++pi)
        for (int pj = 0; pj < pooled; ++pj) {
            const Eigen::Index in_q = static_cast<Eigen::Index>(pi) * pooled + pj;
            for (int r = pi * window; r < (pi + 1) * window; ++r)
                for (int c = pj * window; c < (pj + 1) * window; ++c)
                    dC.col(static_cast<Eigen::Index>(r) * conv + c) = dP.col(in_q) * inv;
        }
    return dC;
}

// Unrolls the pooled map matrix to the feature vector: filter-major, each
// filter's pooled map row-major.
Eigen::VectorXd unroll_features(const Eigen::MatrixXd& P) {
    Eigen::VectorXd p(P.size());
    Eigen::Index k = 0;
    for (Eigen::Index l = 0; l < P.rows(); ++l)
        for (Eigen::Index q = 0; q < P.cols(); ++q) p[k++] = P(l, q);
    return p;
}

Eigen::MatrixXd roll_features(const Eigen::VectorXd& p, Eigen::Index n_filters,
                              Eigen::Index positions) {
    Eigen::MatrixXd P(n_filters, positions);
    Eigen::Index k = 0;
    for (Eigen::Index l = 0; l < n_filters; ++l)
        for (Eigen::Index q = 0; q < positions; ++q) P(l, q) = p[k++];
    return P;
}

void check_input(const DetectorParams& params, const Image& image) {
    if (image.height != params.arch.input_side || image.width != params.arch.input_side)
        throw DimensionError("detector: input must be " + std::to_string(params.arch.input_side) +
                             "x" + std::to_string(params.arch.input_side) + ", got " +
                             std::to_string(image.height) + "x" + std::to_string(image.width));
}

// Flat parameter layout for joint fine-tuning: filters, b0, W1, b1.
Eigen::VectorXd pack_all(const DetectorParams& p) {
    Eigen::VectorXd x(p.filters.size() + p.b0.size() + p.W1.size() + p.b1.size());
    Eigen::Index off = 0;
    x.segment(off, p.filters.size()) =
        Eigen::Map<const Eigen::VectorXd>(p.filters.data(), p.filters.size());
    off += p.filters.size();
    x.segment(off, p.b0.size()) = p.b0;
    off += p.b0.size();
    x.segment(off, p.W1.size()) = Eigen::Map<const Eigen::VectorXd>(p.W1.data(), p.W1.size());
    off += p.W1.size();
    x.segment(off, p.b1.size()) = p.b1;
    return x;
}

void unpack_all(const Eigen::VectorXd& x, DetectorParams& p) {
    Eigen::Index off = 0;
    p.filters = Eigen::Map<const Eigen::MatrixXd>(x.data() + off, p.filters.rows(), p.filters.cols());
    off += p.filters.size();
    p.b0 = x.segment(off, p.b0.size());
    off += p.b0.size();
    p.W1 = Eigen::Map<const Eigen::MatrixXd>(x.data() + off, p.W1.rows(), p.W1.cols());
    off += p.W1.size();
    p.b1 = x.segment(off, p.b1.size());
}

} // namespace

void DetectorArch::validate() const {
    if (input_side < filter_side) throw DimensionError("detector arch: filter larger than input");
    if (n_filters < 1) throw DimensionError("detector arch: need at least one filter");
    if (conv_side() % pool_window != 0)
        throw DimensionError("detector arch: conv side " + std::to_string(conv_side()) +
                             " not divisible by pool window " + std::to_string(pool_window));
    if (label_side < 1) throw DimensionError("detector arch: label side must be positive");
}

DetectorParams DetectorParams::from_filter_bank(const DetectorArch& arch, const FilterBank& bank,
                                                std::uint64_t seed) {
    arch.validate();
    if (static_cast<int>(bank.filters.size()) != arch.n_filters)
        throw DimensionError("detector: filter bank size mismatch");
    DetectorParams p = init_random(arch, seed);
    for (int l = 0; l < arch.n_filters; ++l) {
        const Image& f = bank.filters[l];
        if (f.height != arch.filter_side || f.width != arch.filter_side)
            throw DimensionError("detector: filter bank shape mismatch");
        for (int r = 0; r < arch.filter_side; ++r)
            for (int c = 0; c < arch.filter_side; ++c)
                p.filters(l, r * arch.filter_side + c) = f.at(r, c);
    }
    p.b0 = bank.b0;
    return p;
}

DetectorParams DetectorParams::init_random(const DetectorArch& arch, std::uint64_t seed) {
    arch.validate();
    std::mt19937_64 rng(seed);
    const auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
        return m;
    };
    DetectorParams p;
    p.arch = arch;
    p.filters = glorot(arch.n_filters, arch.filter_side * arch.filter_side);
    p.b0 = Eigen::VectorXd::Zero(arch.n_filters);
    p.W1 = glorot(arch.output_dim(), arch.feature_dim());
    p.b1 = Eigen::VectorXd::Zero(arch.output_dim());
    return p;
}

Image DetectorParams::filter_image(int l) const {
    Image f(arch.filter_side, arch.filter_side);
    for (int r = 0; r < arch.filter_side; ++r)
        for (int c = 0; c < arch.filter_side; ++c) f.at(r, c) = filters(l, r * arch.filter_side + c);
    return f;
}

Eigen::VectorXd detector_features(const DetectorParams& params, const Image& image) {
    check_input(params, image);
    const Eigen::MatrixXd X = im2col(image, params.arch.filter_side);
    Eigen::MatrixXd Z = params.filters * X;
    Z.colwise() += params.b0;
    const Eigen::MatrixXd C = sigmoid_mat(Z);
    const Eigen::MatrixXd P = pool_rows(C, params.arch.conv_side(), params.arch.pool_window);
    return unroll_features(P);
}

Eigen::VectorXd detector_forward(const DetectorParams& params, const Image& image) {
    const Eigen::VectorXd p = detector_features(params, image);
    return sigmoid_mat(params.W1 * p + params.b1);
}

RoiLabel make_roi_label(Point center_full, int roi_side, int out_side, int full_side) {
    if (center_full.x < 0 || center_full.x > full_side - 1 || center_full.y < 0 ||
        center_full.y > full_side - 1)
        throw InputError("make_roi_label: center outside image bounds");
    const double scale = static_cast<double>(out_side) / full_side;
    const int square = static_cast<int>(std::lround(roi_side * scale));
    const int cx = static_cast<int>(std::lround(center_full.x * scale));
    const int cy = static_cast<int>(std::lround(center_full.y * scale));
    const int half = square / 2;
    RoiLabel label;
    label.mask = BinaryMask(out_side, out_side);
    label.center = center_full;
    for (int r = cy - half; r <= cy + half; ++r) {
        if (r < 0 || r >= out_side) continue;
        for (int c = cx - half; c <= cx + half; ++c) {
            if (c < 0 || c >= out_side) continue;
            label.mask.at(r, c) = 1;
        }
    }
    return label;
}

Eigen::VectorXd RoiLabel::unrolled() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(mask.height) * mask.width);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = mask.data[static_cast<std::size_t>(i)];
    return v;
}

DescentResult pretrain_output_layer(DetectorParams& params, const DetectorDataset& data,
                                    double lambda, const TrainControl& ctl,
                                    TrainingCurve* curve) {
    const Eigen::Index n = static_cast<Eigen::Index>(data.images.size());
    if (n < 1) throw InputError("pretrain_output_layer: empty dataset");
    if (data.labels.cols() != n || data.labels.rows() != params.arch.output_dim())
        throw DimensionError("pretrain_output_layer: label matrix shape mismatch");

    // Filters are frozen, so the pooled features are constant.
    Eigen::MatrixXd P(params.arch.feature_dim(), n);
    for (Eigen::Index i = 0; i < n; ++i) P.col(i) = detector_features(params, data.images[i]);

    const Eigen::Index wsize = params.W1.size();
    Eigen::VectorXd x(wsize + params.b1.size());
    x.segment(0, wsize) = Eigen::Map<const Eigen::VectorXd>(params.W1.data(), wsize);
    x.segment(wsize, params.b1.size()) = params.b1;

    const Eigen::Index rows = params.W1.rows(), cols = params.W1.cols();
    const auto forward = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
        const Eigen::Map<const Eigen::MatrixXd> W1(v.data(), rows, cols);
        const Eigen::Map<const Eigen::VectorXd> b1(v.data() + wsize, rows);
        return sigmoid_mat((W1 * P).colwise() + b1);
    };
    CostFunction f;
    f.cost = [&, lambda](const Eigen::VectorXd& v) {
        const Eigen::Map<const Eigen::MatrixXd> W1(v.data(), rows, cols);
        const Eigen::MatrixXd y = forward(v);
        return (y - data.labels).squaredNorm() / (2.0 * n) + 0.5 * lambda * W1.squaredNorm();
    };
    f.cost_grad = [&, lambda](const Eigen::VectorXd& v, Eigen::VectorXd& g) {
        const Eigen::Map<const Eigen::MatrixXd> W1(v.data(), rows, cols);
        const Eigen::MatrixXd y = forward(v);
        const Eigen::MatrixXd resid = y - data.labels;
        const Eigen::MatrixXd delta =
            (resid.array() * y.array() * (1.0 - y.array())) / static_cast<double>(n);
        const Eigen::MatrixXd gW1 = delta * P.transpose() + lambda * W1;
        g.resize(v.size());
        g.segment(0, wsize) = Eigen::Map<const Eigen::VectorXd>(gW1.data(), wsize);
        g.segment(wsize, rows) = delta.rowwise().sum();
        return resid.squaredNorm() / (2.0 * n) + 0.5 * lambda * W1.squaredNorm();
    };

    const DescentResult res = minimize(x, f, ctl, "pretrain_output_layer", curve);
    params.W1 = Eigen::Map<const Eigen::MatrixXd>(x.data(), rows, cols);
    params.b1 = x.segment(wsize, rows);
    return res;
}

DescentResult finetune_detector(DetectorParams& params, const DetectorDataset& data,
                                double lambda, const TrainControl& ctl, TrainingCurve* curve) {
    const Eigen::Index n = static_cast<Eigen::Index>(data.images.size());
    if (n < 1) throw InputError("finetune_detector: empty dataset");
    if (data.labels.cols() != n || data.labels.rows() != params.arch.output_dim())
        throw DimensionError("finetune_detector: label matrix shape mismatch");

    const DetectorArch arch = params.arch;
    const int conv = arch.conv_side();

    // Shared scratch for the cost/grad evaluations.
    DetectorParams work = params;

    // Per-image forward maps are recomputed in the backward pass instead of
    // cached; keeps memory at O(feature_dim * n) for any dataset size.
    const auto evaluate = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad) -> double {
        unpack_all(v, work);

        Eigen::MatrixXd P(arch.feature_dim(), n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::MatrixXd X = im2col(data.images[i], arch.filter_side);
            Eigen::MatrixXd Z = work.filters * X;
            Z.colwise() += work.b0;
            P.col(i) = unroll_features(pool_rows(sigmoid_mat(Z), conv, arch.pool_window));
        }

        const Eigen::MatrixXd y = sigmoid_mat((work.W1 * P).colwise() + work.b1);
        const Eigen::MatrixXd resid = y - data.labels;
        const double cost = resid.squaredNorm() / (2.0 * n) +
                            0.5 * lambda * (work.W1.squaredNorm() + work.filters.squaredNorm());
        if (!grad) return cost;

        const Eigen::MatrixXd delta =
            (resid.array() * y.array() * (1.0 - y.array())) / static_cast<double>(n);
        DetectorParams g = work;
        g.W1 = delta * P.transpose() + lambda * work.W1;
        g.b1 = delta.rowwise().sum();
        g.filters = lambda * work.filters;
        g.b0 = Eigen::VectorXd::Zero(arch.n_filters);

        const Eigen::MatrixXd dP_all = work.W1.transpose() * delta;  // feature_dim x n
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::MatrixXd X = im2col(data.images[i], arch.filter_side);
            Eigen::MatrixXd Z = work.filters * X;
            Z.colwise() += work.b0;
            const Eigen::MatrixXd C = sigmoid_mat(Z);
            const Eigen::MatrixXd dPooled =
                roll_features(dP_all.col(i), arch.n_filters,
                              static_cast<Eigen::Index>(arch.pooled_side()) * arch.pooled_side());
            const Eigen::MatrixXd dC = unpool_rows(dPooled, conv, arch.pool_window);
            const Eigen::MatrixXd dZ = dC.array() * C.array() * (1.0 - C.array());
            g.filters += dZ * X.transpose();
            g.b0 += dZ.rowwise().sum();
        }
        *grad = pack_all(g);
        return cost;
    };

    Eigen::VectorXd x = pack_all(params);
    CostFunction f;
    f.cost = [&](const Eigen::VectorXd& v) { return evaluate(v, nullptr); };
    f.cost_grad = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) { return evaluate(v, &g); };
    const DescentResult res = minimize(x, f, ctl, "finetune_detector", curve);
    unpack_all(x, params);
    return res;
}

RoiDetection detect_roi(const DetectorParams& params, const Image& full_image, int roi_side) {
    const Image input = resample(full_image, params.arch.input_side, params.arch.input_side,
                                 Interp::bilinear);
    const Eigen::VectorXd y = detector_forward(params, input);

    const int side = params.arch.label_side;
    BinaryMask mask(side, side);
    long fg = 0;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            const bool on = y[static_cast<Eigen::Index>(r) * side + c] > 0.5;
            mask.at(r, c) = on ? 1 : 0;
            fg += on;
        }

    RoiDetection det;
    Point c_label;
    if (fg > 0) {
        c_label = centroid(mask);
    } else {
        Eigen::Index arg = 0;
        y.maxCoeff(&arg);
        c_label = {static_cast<double>(arg % side), static_cast<double>(arg / side)};
        det.fallback = true;
    }
    // Centroid of the nearest-upsampled mask equals the label-scale centroid
    // mapped through the block centers: full = scale*c + (scale-1)/2.
    const double scale = static_cast<double>(full_image.width) / side;
    const double scale_y = static_cast<double>(full_image.height) / side;
    det.center = {scale * c_label.x + (scale - 1.0) / 2.0,
                  scale_y * c_label.y + (scale_y - 1.0) / 2.0};
    CropResult crop_res = crop(full_image, det.center.x, det.center.y, roi_side);
    det.sub_image = std::move(crop_res.image);
    det.x0 = crop_res.x0;
    det.y0 = crop_res.y0;
    return det;
}

} // namespace cardlv
