#pragma once

#include <string>

#include "cardlv/geometry.hpp"
#include "cardlv/image.hpp"

namespace cardlv {

/// Energy term weights; the defaults are the trained values reused across
/// studies.
struct EnergyWeights {
    double alpha1 = 1.0;   ///< contour length
    double alpha2 = 0.5;   ///< region fit
    double alpha3 = 0.25;  ///< shape prior
};

struct EvolutionConfig {
    double gamma = 0.1;      ///< step size
    double epsilon = 1.5;    ///< Heaviside/delta smoothing width in pixels
    int max_iters = 1000;
    double length_tol = 0.5; ///< stop threshold on contour-length change
    int check_every = 10;    ///< iterations between length checks
    int stable_checks = 3;   ///< consecutive quiet checks required to stop
    int reinit_every = 50;   ///< iterations between signed-distance resets
    bool backtracking = false;
    int max_halvings = 20;
    std::string trace_csv;   ///< per-iteration (iter, energy, length) CSV; empty = off
};

/// c1: mean intensity where H(phi) ~ 1 (outside); c2: inside mean.
struct RegionMeans {
    double c1 = 0.0;
    double c2 = 0.0;
};

/// Smoothed Heaviside H_eps(z) = (1 + (2/pi) atan(z/eps)) / 2 and its
/// derivative delta_eps(z) = eps / (pi (eps^2 + z^2)).
double heaviside_eps(double z, double epsilon);
double delta_eps(double z, double epsilon);

RegionMeans region_means(const Image& image, const LevelSetField& phi, double epsilon);

double energy(const LevelSetField& phi, const Image& image, const LevelSetField& phi_shape,
              const EnergyWeights& weights, double epsilon);

/// One gradient-flow update. With cfg.backtracking the step size is halved
/// until the energy does not increase (tolerance 1e-9); when no such step
/// exists the field is returned unchanged.
LevelSetField evolve_step(const LevelSetField& phi, const Image& image,
                          const LevelSetField& phi_shape, const EnergyWeights& weights,
                          const EvolutionConfig& cfg);

struct SegmentResult {
    Contour contour;
    LevelSetField phi;
    int iterations = 0;
    bool converged = false;  ///< stopped on the length criterion (vs max_iters)
};

/// Full evolution from the shape prior: phi(0) = phi_shape = the signed
/// distance of shape_mask, periodic reinitialization, length-based stopping.
/// The image is resampled to the mask grid when their shapes differ; the
/// returned contour lives in mask-grid coordinates.
SegmentResult segment(const Image& image, const BinaryMask& shape_mask,
                      const EnergyWeights& weights, const EvolutionConfig& cfg);

} // namespace cardlv
