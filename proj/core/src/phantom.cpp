#include "cardlv/phantom.hpp"

#include <cmath>
#include <random>

#include "cardlv/errors.hpp"

namespace cardlv {

namespace {

// splitmix64: decorrelates per-patient streams from the master seed.
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct Blob {
    Point center;
    double radius;
};

// Smooth indicator: ~1 inside the disk, ~0 outside, sigmoid edge.
inline double soft_disk(double dist_to_center, double radius, double softness) {
    return 1.0 / (1.0 + std::exp((dist_to_center - radius) / softness));
}

Image render_slice(const PhantomConfig& cfg, Point center, double cavity_r, double ring_thick,
                   const std::vector<Blob>& blobs, std::mt19937_64& rng) {
    const int n = cfg.image_size;
    Image img(n, n, cfg.background_intensity);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double d = std::hypot(x - center.x, y - center.y);
            double v = cfg.background_intensity;
            // Myocardial ring over the background, cavity over the ring.
            const double ring_w = soft_disk(d, cavity_r + ring_thick, cfg.edge_softness);
            v = v + (cfg.ring_intensity - v) * ring_w;
            const double cav_w = soft_disk(d, cavity_r, cfg.edge_softness);
            v = v + (cfg.cavity_intensity - v) * cav_w;
            // Papillary blobs sit inside the cavity at ring intensity.
            for (const Blob& b : blobs) {
                const double bd = std::hypot(x - b.center.x, y - b.center.y);
                const double bw = soft_disk(bd, b.radius, cfg.edge_softness) * cav_w;
                v = v + (cfg.ring_intensity - v) * bw;
            }
            img.at(y, x) = v;
        }
    }
    std::normal_distribution<double> noise(0.0, cfg.noise_sd);
    for (double& v : img.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
    return img;
}

Contour truth_contour(Point center, double radius, double spacing) {
    std::vector<Point> pts;
    const int n = 96;
    pts.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * M_PI * k / n;
        pts.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return make_contour(std::move(pts), spacing, true);
}

} // namespace

PhantomConfig PhantomConfig::from_key_values(const KeyValues& kv) {
    PhantomConfig c;
    c.count = static_cast<int>(kv.get_int("count", c.count));
    c.paired_phases = kv.get_bool("paired_phases", c.paired_phases);
    c.image_size = static_cast<int>(kv.get_int("image_size", c.image_size));
    c.min_slices = static_cast<int>(kv.get_int("min_slices", c.min_slices));
    c.max_slices = static_cast<int>(kv.get_int("max_slices", c.max_slices));
    c.base_radius_min = kv.get_double("base_radius_min", c.base_radius_min);
    c.base_radius_max = kv.get_double("base_radius_max", c.base_radius_max);
    c.apex_shrink = kv.get_double("apex_shrink", c.apex_shrink);
    c.ring_thickness_min = kv.get_double("ring_thickness_min", c.ring_thickness_min);
    c.ring_thickness_max = kv.get_double("ring_thickness_max", c.ring_thickness_max);
    c.es_scale = kv.get_double("es_scale", c.es_scale);
    c.cavity_intensity = kv.get_double("cavity_intensity", c.cavity_intensity);
    c.ring_intensity = kv.get_double("ring_intensity", c.ring_intensity);
    c.background_intensity = kv.get_double("background_intensity", c.background_intensity);
    c.edge_softness = kv.get_double("edge_softness", c.edge_softness);
    c.noise_sd = kv.get_double("noise_sd", c.noise_sd);
    c.papillary_prob = kv.get_double("papillary_prob", c.papillary_prob);
    c.papillary_max_count = static_cast<int>(kv.get_int("papillary_max_count", c.papillary_max_count));
    c.papillary_radius_min = kv.get_double("papillary_radius_min", c.papillary_radius_min);
    c.papillary_radius_max = kv.get_double("papillary_radius_max", c.papillary_radius_max);
    c.center_jitter_sd = kv.get_double("center_jitter_sd", c.center_jitter_sd);
    c.quad_a_max = kv.get_double("quad_a_max", c.quad_a_max);
    c.quad_b_max = kv.get_double("quad_b_max", c.quad_b_max);
    c.spacing_mm = kv.get_double("spacing_mm", c.spacing_mm);
    c.thickness_mm = kv.get_double("thickness_mm", c.thickness_mm);
    c.seed = kv.get_u64("seed", c.seed);
    return c;
}

std::vector<PhantomStudy> generate_phantoms(const PhantomConfig& cfg) {
    if (cfg.count < 1) throw InputError("phantom: count must be >= 1");
    if (cfg.base_radius_min <= 0 || cfg.base_radius_max < cfg.base_radius_min)
        throw InputError("phantom: invalid cavity radius range");
    if (cfg.apex_shrink < 0.0 || cfg.apex_shrink >= 1.0)
        throw InputError("phantom: apex_shrink must lie in [0, 1)");

    static const char* kPathologies[] = {"SC-N", "SC-HF-I", "SC-HF-NI", "SC-HYP"};
    std::vector<PhantomStudy> out;
    for (int patient = 0; patient < cfg.count; ++patient) {
        std::mt19937_64 rng(mix(cfg.seed ^ (0x5eedull + patient)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const int n_slices = cfg.min_slices +
                             (cfg.max_slices > cfg.min_slices
                                  ? static_cast<int>(unit(rng) * (cfg.max_slices - cfg.min_slices + 1))
                                  : 0);
        const double mid = cfg.image_size / 2.0;
        const double base_r =
            cfg.base_radius_min + unit(rng) * (cfg.base_radius_max - cfg.base_radius_min);
        const double ring_t = cfg.ring_thickness_min +
                              unit(rng) * (cfg.ring_thickness_max - cfg.ring_thickness_min);
        // Center trajectory x(i) = ax i^2 + bx i + cx, anchored near the middle.
        const double ax = (2.0 * unit(rng) - 1.0) * cfg.quad_a_max;
        const double bx = (2.0 * unit(rng) - 1.0) * cfg.quad_b_max;
        const double ay = (2.0 * unit(rng) - 1.0) * cfg.quad_a_max;
        const double by = (2.0 * unit(rng) - 1.0) * cfg.quad_b_max;
        const double cx = mid + (2.0 * unit(rng) - 1.0) * 12.0;
        const double cy = mid + (2.0 * unit(rng) - 1.0) * 12.0;
        const std::string pathology = kPathologies[patient % 4];

        std::normal_distribution<double> jitter(0.0, cfg.center_jitter_sd);
        const int phases = cfg.paired_phases ? 2 : 1;
        for (int phase = 0; phase < phases; ++phase) {
            const bool es = phase == 1;
            PhantomStudy ps;
            ps.study.id = "phantom_" + std::to_string(patient + 1) + (es ? "_ES" : "_ED");
            ps.study.spacing_mm = cfg.spacing_mm;
            ps.study.thickness_mm = cfg.thickness_mm;
            ps.study.phase = es ? "ES" : "ED";
            ps.study.pathology = pathology;

            for (int i = 1; i <= n_slices; ++i) {
                const double shrink =
                    n_slices > 1 ? 1.0 - cfg.apex_shrink * (i - 1.0) / (n_slices - 1.0) : 1.0;
                double radius = base_r * shrink * (es ? cfg.es_scale : 1.0);
                radius = std::max(radius, 4.0);
                Point center{ax * i * i + bx * i + cx + jitter(rng),
                             ay * i * i + by * i + cy + jitter(rng)};

                std::vector<Blob> blobs;
                if (unit(rng) < cfg.papillary_prob) {
                    const int count = 1 + static_cast<int>(unit(rng) * cfg.papillary_max_count);
                    for (int b = 0; b < count && b < cfg.papillary_max_count; ++b) {
                        const double br =
                            cfg.papillary_radius_min +
                            unit(rng) * (cfg.papillary_radius_max - cfg.papillary_radius_min);
                        const double ang = 2.0 * M_PI * unit(rng);
                        const double dist = (0.55 + 0.3 * unit(rng)) * radius;
                        blobs.push_back({{center.x + dist * std::cos(ang),
                                          center.y + dist * std::sin(ang)},
                                         br});
                    }
                }

                StudySlice slice;
                slice.image = render_slice(cfg, center, radius, ring_t, blobs, rng);
                slice.reference = truth_contour(center, radius, cfg.spacing_mm);
                ps.study.slices.push_back(std::move(slice));
                ps.truth.push_back({center, radius});
            }
            out.push_back(std::move(ps));
        }
    }
    return out;
}

BinaryMask truth_mask(const PhantomSliceTruth& truth, int height, int width) {
    BinaryMask mask(height, width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            if (std::hypot(c - truth.center.x, r - truth.center.y) <= truth.cavity_radius)
                mask.at(r, c) = 1;
    return mask;
}

} // namespace cardlv
