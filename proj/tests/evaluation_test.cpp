#include <doctest.h>

#include <cmath>
#include <random>

#include "cardlv/errors.hpp"
#include "cardlv/evaluation.hpp"
#include "cardlv/geometry.hpp"
#include "cardlv/mask_ops.hpp"
#include "test_util.hpp"

using namespace cardlv;

namespace {

BinaryMask square_mask(int n, int r0, int c0, int side) {
    BinaryMask m(n, n);
    for (int r = r0; r < r0 + side; ++r)
        for (int c = c0; c < c0 + side; ++c) m.at(r, c) = 1;
    return m;
}

// Exhaustive all-pairs point-to-segment oracles over the same densified point
// sets the implementation uses.
double oracle_directed_mean(const Contour& from, const Contour& to, int min_samples) {
    const Contour pts = (static_cast<int>(from.points.size()) >= min_samples)
                            ? from
                            : resample_arclength(from, min_samples);
    double acc = 0.0;
    for (const Point& p : pts.points) {
        double best = 1e300;
        for (std::size_t i = 0; i < to.points.size(); ++i) {
            const Point& a = to.points[i];
            const Point& b = to.points[(i + 1) % to.points.size()];
            best = std::min(best, point_segment_distance(p, a, b));
        }
        acc += best;
    }
    return acc / static_cast<double>(pts.points.size());
}

double oracle_directed_max(const Contour& from, const Contour& to, int min_samples) {
    const Contour pts = (static_cast<int>(from.points.size()) >= min_samples)
                            ? from
                            : resample_arclength(from, min_samples);
    double best = 0.0;
    for (const Point& p : pts.points) {
        double d = 1e300;
        for (std::size_t i = 0; i < to.points.size(); ++i) {
            const Point& a = to.points[i];
            const Point& b = to.points[(i + 1) % to.points.size()];
            d = std::min(d, point_segment_distance(p, a, b));
        }
        best = std::max(best, d);
    }
    return best;
}

Contour blob_contour(double cx, double cy, double base_r, int n, std::uint64_t seed,
                     double spacing = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> bump(-0.2, 0.2);
    std::vector<Point> pts;
    const double w1 = bump(rng), w2 = bump(rng);
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * M_PI * k / n;
        const double r = base_r * (1.0 + w1 * std::sin(2.0 * a) + w2 * std::cos(3.0 * a));
        pts.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    return make_contour(std::move(pts), spacing, true);
}

} // namespace

TEST_CASE("dice: identity, disjoint, shifted square") {
    BinaryMask a = square_mask(64, 10, 10, 10);
    CHECK(dice(a, a) == doctest::Approx(1.0));

    BinaryMask b = square_mask(64, 40, 40, 10);
    CHECK(dice(a, b) == doctest::Approx(0.0));

    BinaryMask shifted = square_mask(64, 10, 15, 10);  // 5 px shift: overlap 50
    CHECK(dice(a, shifted) == doctest::Approx(0.5));

    BinaryMask empty(64, 64);
    CHECK_THROWS_AS(dice(empty, empty), MetricError);
    CHECK_THROWS_AS(dice(a, BinaryMask(32, 32)), DimensionError);
}

TEST_CASE("dice: symmetric and translation invariant") {
    std::mt19937_64 rng(3);
    BinaryMask a = testutil::disk_mask(64, 64, 30, 30, 9);
    BinaryMask b = testutil::disk_mask(64, 64, 33, 28, 11);
    CHECK(dice(a, b) == dice(b, a));

    BinaryMask a2 = testutil::disk_mask(64, 64, 36, 37, 9);
    BinaryMask b2 = testutil::disk_mask(64, 64, 39, 35, 11);
    CHECK(dice(a2, b2) == doctest::Approx(dice(a, b)).epsilon(1e-12));
}

TEST_CASE("apd: identity and concentric circles") {
    Contour c = testutil::circle_contour(50, 50, 20, 256, 1.25);
    CHECK(apd(c, c) == doctest::Approx(0.0).epsilon(1e-12));

    Contour outer = testutil::circle_contour(50, 50, 22, 256, 1.25);
    CHECK(std::abs(apd(outer, c) - 2.0 * 1.25) <= 0.05);

    Contour other = testutil::circle_contour(50, 50, 22, 256, 2.0);
    CHECK_THROWS_AS(apd(c, other), InputError);
}

TEST_CASE("apd and hausdorff: match the all-pairs oracles") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Contour a = blob_contour(48, 52, 15, 60, seed);
        Contour m = blob_contour(50, 50, 17, 47, seed + 10);
        CHECK(std::abs(apd(a, m) - oracle_directed_mean(a, m, 200)) <= 1e-9);
        const double sym = 0.5 * (oracle_directed_mean(a, m, 200) + oracle_directed_mean(m, a, 200));
        CHECK(std::abs(apd(a, m, true) - sym) <= 1e-9);
        const double hd = std::max(oracle_directed_max(a, m, 200), oracle_directed_max(m, a, 200));
        CHECK(std::abs(hausdorff(a, m) - hd) <= 1e-9);
    }
}

TEST_CASE("apd and hausdorff: scale linearly with pixel spacing") {
    Contour a1 = blob_contour(40, 40, 12, 80, 5, 1.0);
    Contour m1 = blob_contour(41, 39, 13, 64, 6, 1.0);
    Contour a2 = a1, m2 = m1;
    a2.pixel_spacing = m2.pixel_spacing = 1.7;
    CHECK(apd(a2, m2) == doctest::Approx(1.7 * apd(a1, m1)).epsilon(1e-12));
    CHECK(hausdorff(a2, m2) == doctest::Approx(1.7 * hausdorff(a1, m1)).epsilon(1e-12));
}

TEST_CASE("hausdorff: identity, concentric, symmetric") {
    Contour c = testutil::circle_contour(50, 50, 20, 256, 1.0);
    CHECK(hausdorff(c, c) == doctest::Approx(0.0).epsilon(1e-12));
    Contour outer = testutil::circle_contour(50, 50, 22, 256, 1.0);
    CHECK(std::abs(hausdorff(outer, c) - 2.0) <= 0.05);
    CHECK(hausdorff(outer, c) == hausdorff(c, outer));
}

TEST_CASE("conformity: fixed points and monotonicity") {
    CHECK(conformity(1.0) == doctest::Approx(1.0));
    CHECK(conformity(2.0 / 3.0) == doctest::Approx(0.0).epsilon(1e-12));
    // Mean conformity differs from conformity of the mean; the paper's Table 1
    // pairing (0.94, 0.86) is a property of per-slice averaging, not of this
    // pointwise formula: conformity(0.94) = 0.8723...
    CHECK(conformity(0.94) == doctest::Approx((3.0 * 0.94 - 2.0) / 0.94).epsilon(1e-12));
    double prev = conformity(0.05);
    for (double d = 0.1; d <= 1.0; d += 0.05) {
        const double cur = conformity(d);
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK_THROWS_AS(conformity(0.0), MetricError);
}

TEST_CASE("classify_good: strict 5 mm threshold") {
    CHECK(classify_good(4.9));
    CHECK_FALSE(classify_good(5.0));
    CHECK(classify_good(0.0));
    CHECK_THROWS_AS(classify_good(-1.0), InputError);
}

TEST_CASE("classify_good holds for any contour against itself") {
    Contour c = blob_contour(30, 30, 10, 40, 9);
    CHECK(classify_good(apd(c, c)));
}

TEST_CASE("study_metrics: aggregation against a hand-computed oracle") {
    std::vector<SliceMetrics> slices;
    slices.push_back({0.9, 1.0, 2.0, 0.8, true});
    slices.push_back({0.8, 6.0, 8.0, 0.5, false});
    slices.push_back({1.0, 0.0, 0.0, 1.0, true});
    StudyMetrics sm = study_metrics(slices);
    CHECK(sm.n_slices == 3);
    CHECK(sm.dice_mean == doctest::Approx(0.9));
    CHECK(sm.dice_sd == doctest::Approx(std::sqrt((0.01 + 0.01 + 0.0) / 3.0)));
    CHECK(sm.apd_mean == doctest::Approx(7.0 / 3.0));
    CHECK(sm.good_pct == doctest::Approx(200.0 / 3.0));

    StudyMetrics single = study_metrics({slices[0]});
    CHECK(single.dice_sd == doctest::Approx(0.0));
    CHECK(single.good_pct == doctest::Approx(100.0));

    StudyMetrics all_good = study_metrics({slices[0], slices[2]});
    CHECK(all_good.good_pct == doctest::Approx(100.0));
}

TEST_CASE("clinical_indices: EF arithmetic and the cylinder phantom") {
    // Areas chosen so EDV = 120 cm^3 and ESV = 48 cm^3 exactly.
    std::vector<double> ed(10, 120.0 * 1000.0 / (8.0 * 10.0));
    std::vector<double> es(10, 48.0 * 1000.0 / (8.0 * 10.0));
    ClinicalIndices ci = clinical_indices(ed, es, 8.0, 1.0);
    CHECK(ci.edv_ml == doctest::Approx(120.0).epsilon(1e-12));
    CHECK(ci.esv_ml == doctest::Approx(48.0).epsilon(1e-12));
    CHECK(ci.ef_pct == doctest::Approx(60.0).epsilon(1e-12));

    // Rasterized cylinder: 10 disk slices of radius 20 px, spacing 1 mm,
    // thickness 8 mm -> analytic 10 * pi * 400 * 8 / 1000 cm^3.
    BinaryMask disk = testutil::disk_mask(64, 64, 32, 32, 20);
    std::vector<double> areas(10, static_cast<double>(disk.count_foreground()));
    ClinicalIndices cyl = clinical_indices(areas, areas, 8.0, 1.0);
    const double analytic = 10.0 * M_PI * 400.0 * 8.0 / 1000.0;
    CHECK(std::abs(cyl.edv_ml - analytic) / analytic <= 0.02);

    CHECK_THROWS_AS(clinical_indices(std::vector<double>{}, es, 8.0, 1.0), InputError);
}

TEST_CASE("agreement: identity and constant offset") {
    std::vector<double> m = {100.0, 120.0, 95.0, 140.0, 110.0};
    AgreementStats same = agreement(m, m);
    CHECK(same.pearson_r == doctest::Approx(1.0));
    CHECK(same.bias == doctest::Approx(0.0));
    CHECK(same.rpc == doctest::Approx(0.0));
    CHECK(same.slope == doctest::Approx(1.0));

    std::vector<double> shifted;
    for (double v : m) shifted.push_back(v + 5.0);
    AgreementStats off = agreement(shifted, m);
    CHECK(off.pearson_r == doctest::Approx(1.0));
    CHECK(off.bias == doctest::Approx(5.0));
    CHECK(off.rpc == doctest::Approx(0.0));
    CHECK(off.loa_low == doctest::Approx(5.0));
    CHECK(off.loa_high == doctest::Approx(5.0));
}

TEST_CASE("agreement: matches textbook formulas on random data") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> base(120.0, 25.0), err(0.0, 6.0);
    std::vector<double> manual, autov;
    const int n = 40;
    for (int i = 0; i < n; ++i) {
        const double m = base(rng);
        manual.push_back(m);
        autov.push_back(0.9 * m + 8.0 + err(rng));
    }
    AgreementStats st = agreement(autov, manual);

    // Direct-formula oracle.
    double sm = 0, sa = 0;
    for (int i = 0; i < n; ++i) {
        sm += manual[i];
        sa += autov[i];
    }
    sm /= n;
    sa /= n;
    double cov = 0, vm = 0, va = 0;
    for (int i = 0; i < n; ++i) {
        cov += (manual[i] - sm) * (autov[i] - sa);
        vm += (manual[i] - sm) * (manual[i] - sm);
        va += (autov[i] - sa) * (autov[i] - sa);
    }
    CHECK(std::abs(st.pearson_r - cov / std::sqrt(vm * va)) <= 1e-10);
    CHECK(std::abs(st.slope - cov / vm) <= 1e-10);
    CHECK(std::abs(st.intercept - (sa - (cov / vm) * sm)) <= 1e-10);

    double bias = 0;
    for (int i = 0; i < n; ++i) bias += autov[i] - manual[i];
    bias /= n;
    double ss = 0;
    for (int i = 0; i < n; ++i) {
        const double d = autov[i] - manual[i] - bias;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1));
    CHECK(std::abs(st.bias - bias) <= 1e-10);
    CHECK(std::abs(st.rpc - 1.96 * sd) <= 1e-10);
    CHECK(std::abs(st.loa_low - (bias - 1.96 * sd)) <= 1e-10);
    CHECK(std::abs(st.loa_high - (bias + 1.96 * sd)) <= 1e-10);
    CHECK(std::abs(st.cv_pct - 100.0 * sd / ((sm + sa) / 2.0)) <= 1e-10);

    CHECK_THROWS_AS(agreement({1.0, 2.0}, {1.0, 2.0}), InputError);
    CHECK_THROWS_AS(agreement({1.0, 2.0, 3.0}, {5.0, 5.0, 5.0}), MetricError);
}

TEST_CASE("slice_metrics: composes the primitive operations") {
    Contour manual = testutil::circle_contour(128, 128, 40, 220, 1.0);
    Contour autoc = testutil::circle_contour(129, 127, 41, 200, 1.0);
    SliceMetrics sm = slice_metrics(autoc, manual, 256, 256);
    CHECK(sm.dice == dice(rasterize_polygon(autoc, 256, 256), rasterize_polygon(manual, 256, 256)));
    CHECK(sm.apd_mm == apd(autoc, manual));
    CHECK(sm.hausdorff_mm == hausdorff(autoc, manual));
    CHECK(sm.conformity == conformity(sm.dice));
    CHECK(sm.good == classify_good(sm.apd_mm));
    CHECK(sm.dice > 0.9);
    CHECK(sm.good);
}
