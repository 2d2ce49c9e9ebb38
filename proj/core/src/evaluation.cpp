#include "cardlv/evaluation.hpp"

#include <cmath>

#include "cardlv/errors.hpp"
#include "cardlv/mask_ops.hpp"

namespace cardlv {

namespace {

// Densify to at least min_samples points; contours already that dense are used
// as-is so that small-contour oracle comparisons stay exact.
Contour densified(const Contour& c, int min_samples) {
    if (static_cast<int>(c.points.size()) >= min_samples) return c;
    return resample_arclength(c, min_samples);
}

double directed_mean_distance(const Contour& from, const Contour& to, int min_samples) {
    const Contour pts = densified(from, min_samples);
    double acc = 0.0;
    for (const Point& p : pts.points) acc += point_contour_distance(p, to);
    return acc / static_cast<double>(pts.points.size());
}

double directed_max_distance(const Contour& from, const Contour& to, int min_samples) {
    const Contour pts = densified(from, min_samples);
    double best = 0.0;
    for (const Point& p : pts.points) best = std::max(best, point_contour_distance(p, to));
    return best;
}

void check_pair(const Contour& a, const Contour& m) {
    if (a.points.empty() || m.points.empty()) throw InputError("metric: empty contour");
    if (a.pixel_spacing != m.pixel_spacing)
        throw InputError("metric: contours carry different pixel spacings");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double population_sd(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

double dice(const BinaryMask& auto_mask, const BinaryMask& manual_mask) {
    if (!auto_mask.same_shape(manual_mask))
        throw DimensionError("dice: mask dimensions differ");
    long a = 0, m = 0, both = 0;
    for (std::size_t i = 0; i < auto_mask.size(); ++i) {
        a += auto_mask.data[i];
        m += manual_mask.data[i];
        both += auto_mask.data[i] & manual_mask.data[i];
    }
    if (a + m == 0) throw MetricError("dice: both masks empty");
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + m);
}

double apd(const Contour& auto_contour, const Contour& manual_contour, bool symmetric,
           int min_samples) {
    check_pair(auto_contour, manual_contour);
    const double fwd = directed_mean_distance(auto_contour, manual_contour, min_samples);
    if (!symmetric) return fwd * auto_contour.pixel_spacing;
    const double bwd = directed_mean_distance(manual_contour, auto_contour, min_samples);
    return 0.5 * (fwd + bwd) * auto_contour.pixel_spacing;
}

double hausdorff(const Contour& auto_contour, const Contour& manual_contour, int min_samples) {
    check_pair(auto_contour, manual_contour);
    const double fwd = directed_max_distance(auto_contour, manual_contour, min_samples);
    const double bwd = directed_max_distance(manual_contour, auto_contour, min_samples);
    return std::max(fwd, bwd) * auto_contour.pixel_spacing;
}

double conformity(double dice_value) {
    if (dice_value <= 0.0) throw MetricError("conformity: undefined for dice = 0");
    return (3.0 * dice_value - 2.0) / dice_value;
}

bool classify_good(double apd_mm) {
    if (apd_mm < 0.0) throw InputError("classify_good: negative distance");
    return apd_mm < 5.0;
}

SliceMetrics slice_metrics(const Contour& auto_contour, const Contour& manual_contour,
                           int height, int width) {
    SliceMetrics sm;
    sm.dice = dice(rasterize_polygon(auto_contour, height, width),
                   rasterize_polygon(manual_contour, height, width));
    sm.apd_mm = apd(auto_contour, manual_contour);
    sm.hausdorff_mm = hausdorff(auto_contour, manual_contour);
    sm.conformity = conformity(sm.dice);
    sm.good = classify_good(sm.apd_mm);
    return sm;
}

StudyMetrics study_metrics(const std::vector<SliceMetrics>& per_slice) {
    if (per_slice.empty()) throw InputError("study_metrics: empty slice list");
    StudyMetrics out;
    out.n_slices = static_cast<int>(per_slice.size());
    std::vector<double> d, a, h, c;
    long good = 0;
    for (const SliceMetrics& m : per_slice) {
        d.push_back(m.dice);
        a.push_back(m.apd_mm);
        h.push_back(m.hausdorff_mm);
        c.push_back(m.conformity);
        good += m.good ? 1 : 0;
    }
    out.dice_mean = mean_of(d);
    out.dice_sd = population_sd(d, out.dice_mean);
    out.apd_mean = mean_of(a);
    out.apd_sd = population_sd(a, out.apd_mean);
    out.hausdorff_mean = mean_of(h);
    out.hausdorff_sd = population_sd(h, out.hausdorff_mean);
    out.conformity_mean = mean_of(c);
    out.conformity_sd = population_sd(c, out.conformity_mean);
    out.good_pct = 100.0 * static_cast<double>(good) / static_cast<double>(per_slice.size());
    return out;
}

ClinicalIndices clinical_indices(const std::vector<double>& ed_areas_px,
                                 const std::vector<double>& es_areas_px, double thickness_mm,
                                 double spacing_mm) {
    if (ed_areas_px.empty() || es_areas_px.empty())
        throw InputError("clinical_indices: empty slice stack");
    if (thickness_mm <= 0.0 || spacing_mm <= 0.0)
        throw InputError("clinical_indices: non-positive thickness or spacing");
    const auto volume_ml = [&](const std::vector<double>& areas) {
        double px = 0.0;
        for (double a : areas) px += a;
        return px * spacing_mm * spacing_mm * thickness_mm / 1000.0;  // mm^3 -> cm^3
    };
    ClinicalIndices ci;
    ci.edv_ml = volume_ml(ed_areas_px);
    ci.esv_ml = volume_ml(es_areas_px);
    if (ci.edv_ml <= 0.0) throw MetricError("clinical_indices: EF undefined for EDV = 0");
    ci.ef_pct = 100.0 * (ci.edv_ml - ci.esv_ml) / ci.edv_ml;
    return ci;
}

ClinicalIndices clinical_indices(const std::vector<Contour>& ed_stack,
                                 const std::vector<Contour>& es_stack, double thickness_mm,
                                 double spacing_mm) {
    std::vector<double> ed, es;
    ed.reserve(ed_stack.size());
    es.reserve(es_stack.size());
    for (const Contour& c : ed_stack) ed.push_back(contour_area(c));
    for (const Contour& c : es_stack) es.push_back(contour_area(c));
    return clinical_indices(ed, es, thickness_mm, spacing_mm);
}

AgreementStats agreement(const std::vector<double>& auto_vals,
                         const std::vector<double>& manual_vals) {
    if (auto_vals.size() != manual_vals.size())
        throw InputError("agreement: paired lists differ in length");
    if (auto_vals.size() < 3) throw InputError("agreement: need at least 3 pairs");
    const int n = static_cast<int>(auto_vals.size());

    const double mean_a = mean_of(auto_vals);
    const double mean_m = mean_of(manual_vals);
    double cov = 0.0, var_a = 0.0, var_m = 0.0;
    for (int i = 0; i < n; ++i) {
        const double da = auto_vals[i] - mean_a;
        const double dm = manual_vals[i] - mean_m;
        cov += da * dm;
        var_a += da * da;
        var_m += dm * dm;
    }
    if (var_m <= 0.0) throw MetricError("agreement: zero variance in the manual values");

    AgreementStats st;
    st.n = n;
    st.slope = cov / var_m;
    st.intercept = mean_a - st.slope * mean_m;
    st.pearson_r = (var_a > 0.0) ? cov / std::sqrt(var_a * var_m) : 0.0;

    std::vector<double> diffs(auto_vals.size());
    for (int i = 0; i < n; ++i) diffs[static_cast<std::size_t>(i)] = auto_vals[i] - manual_vals[i];
    st.bias = mean_of(diffs);
    double ss = 0.0;
    for (double d : diffs) ss += (d - st.bias) * (d - st.bias);
    const double sd = std::sqrt(ss / (n - 1));
    st.rpc = 1.96 * sd;
    st.loa_low = st.bias - st.rpc;
    st.loa_high = st.bias + st.rpc;

    double mean_all = 0.0;
    for (int i = 0; i < n; ++i) mean_all += auto_vals[i] + manual_vals[i];
    mean_all /= 2.0 * n;
    if (std::abs(mean_all) < 1e-12)
        throw MetricError("agreement: CV undefined for zero mean values");
    st.cv_pct = 100.0 * sd / mean_all;
    return st;
}

} // namespace cardlv
