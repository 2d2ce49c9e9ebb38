#include "cardlv/augment.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

constexpr int kPcaSide = 32;

// Bilinear sample with replicate border.
double sample(const Image& img, double y, double x) {
    const double fy = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const double fx = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const double ty = fy - y0, tx = fx - x0;
    return (1 - ty) * ((1 - tx) * img.at(y0, x0) + tx * img.at(y0, x1)) +
           ty * ((1 - tx) * img.at(y1, x0) + tx * img.at(y1, x1));
}

// Top eigenpairs of the 32x32-downsampled training pixel covariance.
struct PcaBasis {
    std::vector<Image> eigenimages;  ///< upsampled to full resolution
    std::vector<double> eigenvalues;
};

PcaBasis build_pca(const std::vector<TrainingSlice>& input, int full_h, int full_w) {
    PcaBasis basis;
    if (input.size() < 2) return basis;
    const int d = kPcaSide * kPcaSide;
    Eigen::MatrixXd X(d, static_cast<Eigen::Index>(input.size()));
    for (std::size_t i = 0; i < input.size(); ++i) {
        const Image small = resample(input[i].image, kPcaSide, kPcaSide, Interp::bilinear);
        for (int k = 0; k < d; ++k) X(k, static_cast<Eigen::Index>(i)) = small.data[k];
    }
    const Eigen::VectorXd mean = X.rowwise().mean();
    X.colwise() -= mean;
    const Eigen::MatrixXd cov = X * X.transpose() / static_cast<double>(input.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // Eigenvalues come back ascending; take the top three.
    for (int k = 0; k < 3 && k < d; ++k) {
        const int idx = d - 1 - k;
        Image eig(kPcaSide, kPcaSide);
        for (int j = 0; j < d; ++j) eig.data[j] = solver.eigenvectors()(j, idx);
        basis.eigenimages.push_back(resample(eig, full_h, full_w, Interp::bilinear));
        basis.eigenvalues.push_back(std::max(solver.eigenvalues()(idx), 0.0));
    }
    return basis;
}

} // namespace

Image warp_affine(const Image& img, double angle_rad, double tx, double ty) {
    // Forward transform: rotate about the image center, then translate.
    // Pixels are filled by the inverse map.
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    const double ca = std::cos(angle_rad), sa = std::sin(angle_rad);
    Image out(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double dx = c - tx - cx;
            const double dy = r - ty - cy;
            const double sx = ca * dx + sa * dy + cx;
            const double sy = -sa * dx + ca * dy + cy;
            out.at(r, c) = sample(img, sy, sx);
        }
    }
    return out;
}

Contour transform_contour(const Contour& contour, double angle_rad, double tx, double ty,
                          double center_x, double center_y) {
    const double ca = std::cos(angle_rad), sa = std::sin(angle_rad);
    Contour out = contour;
    for (Point& p : out.points) {
        const double dx = p.x - center_x;
        const double dy = p.y - center_y;
        p.x = ca * dx - sa * dy + center_x + tx;
        p.y = sa * dx + ca * dy + center_y + ty;
    }
    return out;
}

std::vector<TrainingSlice> augment_dataset(const std::vector<TrainingSlice>& input,
                                           const AugmentConfig& cfg) {
    if (input.empty()) throw InputError("augment_dataset: empty input");
    if (cfg.factor < 1) throw InputError("augment_dataset: factor must be >= 1");

    std::vector<TrainingSlice> out = input;
    if (cfg.factor == 1) return out;
    out.reserve(input.size() * static_cast<std::size_t>(cfg.factor));

    const PcaBasis pca = build_pca(input, input[0].image.height, input[0].image.width);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double max_angle = cfg.max_rotate_deg * M_PI / 180.0;
    for (const TrainingSlice& slice : input) {
        const double cx = (slice.image.width - 1) / 2.0;
        const double cy = (slice.image.height - 1) / 2.0;
        for (int k = 1; k < cfg.factor; ++k) {
            const double angle = unit(rng) * max_angle;
            const double tx = unit(rng) * cfg.max_translate_px;
            const double ty = unit(rng) * cfg.max_translate_px;
            TrainingSlice aug;
            aug.image = warp_affine(slice.image, angle, tx, ty);
            aug.contour = transform_contour(slice.contour, angle, tx, ty, cx, cy);
            for (std::size_t e = 0; e < pca.eigenimages.size(); ++e) {
                const double coeff =
                    gauss(rng) * std::sqrt(cfg.pca_intensity_scale * pca.eigenvalues[e]);
                for (std::size_t i = 0; i < aug.image.size(); ++i)
                    aug.image.data[i] += coeff * pca.eigenimages[e].data[i];
            }
            for (double& v : aug.image.data) v = std::clamp(v, 0.0, 1.0);
            out.push_back(std::move(aug));
        }
    }
    return out;
}

} // namespace cardlv
