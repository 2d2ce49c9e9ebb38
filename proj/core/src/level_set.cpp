#include "cardlv/level_set.hpp"

#include <cmath>
#include <fstream>

#include "cardlv/contour_extraction.hpp"
#include "cardlv/errors.hpp"
#include "cardlv/signed_distance.hpp"

namespace cardlv {

namespace {

// Replicate-boundary accessor (Neumann boundary conditions).
inline double at_r(const LevelSetField& f, int r, int c) {
    r = std::clamp(r, 0, f.height - 1);
    c = std::clamp(c, 0, f.width - 1);
    return f.at(r, c);
}

void check_shapes(const LevelSetField& phi, const Image& image, const LevelSetField& shape) {
    if (image.height != phi.height || image.width != phi.width)
        throw DimensionError("level_set: image and field shapes differ");
    if (!phi.same_shape(shape))
        throw DimensionError("level_set: phi and phi_shape shapes differ");
}

} // namespace

double heaviside_eps(double z, double epsilon) {
    return 0.5 * (1.0 + (2.0 / M_PI) * std::atan(z / epsilon));
}

double delta_eps(double z, double epsilon) {
    return epsilon / (M_PI * (epsilon * epsilon + z * z));
}

RegionMeans region_means(const Image& image, const LevelSetField& phi, double epsilon) {
    if (image.height != phi.height || image.width != phi.width)
        throw DimensionError("region_means: image and field shapes differ");
    double h_sum = 0.0, h_weighted = 0.0, inv_sum = 0.0, inv_weighted = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double h = heaviside_eps(phi.data[i], epsilon);
        h_sum += h;
        h_weighted += h * image.data[i];
        inv_sum += 1.0 - h;
        inv_weighted += (1.0 - h) * image.data[i];
    }
    if (h_sum < 1e-9 || inv_sum < 1e-9)
        throw DegenerateError("region_means: a region has vanishing measure");
    return {h_weighted / h_sum, inv_weighted / inv_sum};
}

double energy(const LevelSetField& phi, const Image& image, const LevelSetField& phi_shape,
              const EnergyWeights& weights, double epsilon) {
    check_shapes(phi, image, phi_shape);
    const RegionMeans means = region_means(image, phi, epsilon);
    double e_len = 0.0, e_reg = 0.0, e_shape = 0.0;
    for (int r = 0; r < phi.height; ++r) {
        for (int c = 0; c < phi.width; ++c) {
            const double v = phi.at(r, c);
            const double gx = (at_r(phi, r, c + 1) - at_r(phi, r, c - 1)) / 2.0;
            const double gy = (at_r(phi, r + 1, c) - at_r(phi, r - 1, c)) / 2.0;
            e_len += delta_eps(v, epsilon) * std::sqrt(gx * gx + gy * gy);
            const double h = heaviside_eps(v, epsilon);
            const double i_val = image.at(r, c);
            const double d1 = i_val - means.c1;
            const double d2 = i_val - means.c2;
            e_reg += d1 * d1 * h + d2 * d2 * (1.0 - h);
            const double ds = v - phi_shape.at(r, c);
            e_shape += ds * ds;
        }
    }
    return weights.alpha1 * e_len + weights.alpha2 * e_reg + weights.alpha3 * e_shape;
}

LevelSetField evolve_step(const LevelSetField& phi, const Image& image,
                          const LevelSetField& phi_shape, const EnergyWeights& weights,
                          const EvolutionConfig& cfg) {
    check_shapes(phi, image, phi_shape);
    const double eps = cfg.epsilon;
    const RegionMeans means = region_means(image, phi, eps);

    // dphi/dt of every pixel under the current field.
    LevelSetField rate(phi.height, phi.width);
    for (int r = 0; r < phi.height; ++r) {
        for (int c = 0; c < phi.width; ++c) {
            const double v = phi.at(r, c);
            const double px = (at_r(phi, r, c + 1) - at_r(phi, r, c - 1)) / 2.0;
            const double py = (at_r(phi, r + 1, c) - at_r(phi, r - 1, c)) / 2.0;
            const double pxx = at_r(phi, r, c + 1) - 2.0 * v + at_r(phi, r, c - 1);
            const double pyy = at_r(phi, r + 1, c) - 2.0 * v + at_r(phi, r - 1, c);
            const double pxy = (at_r(phi, r + 1, c + 1) + at_r(phi, r - 1, c - 1) -
                                at_r(phi, r - 1, c + 1) - at_r(phi, r + 1, c - 1)) /
                               4.0;
            const double grad = std::max(std::sqrt(px * px + py * py), 1e-8);
            const double curvature =
                (pxx * py * py - 2.0 * px * py * pxy + pyy * px * px) / (grad * grad * grad);
            const double i_val = image.at(r, c);
            const double d1 = i_val - means.c1;
            const double d2 = i_val - means.c2;
            const double force = weights.alpha1 * curvature + weights.alpha2 * d2 * d2 -
                                 weights.alpha2 * d1 * d1 -
                                 2.0 * weights.alpha3 * (v - phi_shape.at(r, c));
            rate.at(r, c) = delta_eps(v, eps) * force;
        }
    }

    const auto step_with = [&](double gamma) {
        LevelSetField next(phi.height, phi.width);
        for (std::size_t i = 0; i < phi.size(); ++i)
            next.data[i] = phi.data[i] + gamma * rate.data[i];
        return next;
    };

    if (!cfg.backtracking) {
        LevelSetField next = step_with(cfg.gamma);
        for (double v : next.data)
            if (!std::isfinite(v)) throw NumericError("evolve_step: non-finite update");
        return next;
    }

    const double e0 = energy(phi, image, phi_shape, weights, eps);
    double gamma = cfg.gamma;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
        LevelSetField next = step_with(gamma);
        bool finite = true;
        for (double v : next.data)
            if (!std::isfinite(v)) { finite = false; break; }
        if (finite) {
            const double e1 = energy(next, image, phi_shape, weights, eps);
            if (e1 <= e0 + 1e-9) return next;
        }
        gamma *= 0.5;
    }
    return phi;  // no admissible step: stationary
}

SegmentResult segment(const Image& image, const BinaryMask& shape_mask,
                      const EnergyWeights& weights, const EvolutionConfig& cfg) {
    const LevelSetField phi_shape = signed_distance(shape_mask);
    const Image img = (image.height == shape_mask.height && image.width == shape_mask.width)
                          ? image
                          : resample(image, shape_mask.height, shape_mask.width, Interp::bilinear);

    std::ofstream trace;
    if (!cfg.trace_csv.empty()) {
        trace.open(cfg.trace_csv);
        if (!trace) throw LoadError("segment: cannot write trace " + cfg.trace_csv);
        trace << "iteration,energy,contour_length\n";
    }

    LevelSetField phi = phi_shape;
    double prev_len = contour_length(extract_zero_contour(phi));
    int quiet = 0;
    SegmentResult res;

    int k = 1;
    for (; k <= cfg.max_iters; ++k) {
        phi = evolve_step(phi, img, phi_shape, weights, cfg);
        for (double v : phi.data)
            if (!std::isfinite(v))
                throw NumericError("segment: non-finite field at iteration " + std::to_string(k));

        if (trace.is_open()) {
            double len = 0.0;
            try {
                len = contour_length(extract_zero_contour(phi));
            } catch (const NoContourError&) {
                len = 0.0;
            }
            trace << k << ',' << energy(phi, img, phi_shape, weights, cfg.epsilon) << ',' << len
                  << '\n';
        }

        if (cfg.check_every > 0 && k % cfg.check_every == 0) {
            double len = 0.0;
            try {
                len = contour_length(extract_zero_contour(phi));
            } catch (const NoContourError&) {
                throw NoContourError("segment: contour vanished at iteration " +
                                     std::to_string(k));
            }
            if (std::abs(len - prev_len) < cfg.length_tol)
                ++quiet;
            else
                quiet = 0;
            prev_len = len;
            if (quiet >= cfg.stable_checks) {
                res.converged = true;
                break;
            }
        }

        if (cfg.reinit_every > 0 && k % cfg.reinit_every == 0) {
            BinaryMask inside(phi.height, phi.width);
            long fg = 0;
            for (std::size_t i = 0; i < phi.size(); ++i) {
                inside.data[i] = phi.data[i] < 0.0 ? 1 : 0;
                fg += inside.data[i];
            }
            if (fg == 0 || fg == static_cast<long>(phi.size()))
                throw NoContourError("segment: contour vanished at iteration " +
                                     std::to_string(k));
            phi = signed_distance(inside);
        }
    }

    res.iterations = std::min(k, cfg.max_iters);
    res.contour = extract_zero_contour(phi);
    res.phi = std::move(phi);
    return res;
}

} // namespace cardlv
