#include "cardlv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <thread>

#include "cardlv/contour_extraction.hpp"
#include "cardlv/errors.hpp"
#include "cardlv/mask_ops.hpp"
#include "cardlv/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cardlv {

namespace {

std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

constexpr int kRoiSide = 100;

TrainControl control_from(const KeyValues& kv, const std::string& prefix, int iters, double step) {
    TrainControl c;
    c.max_iters = static_cast<int>(kv.get_int(prefix + "_iters", iters));
    c.step = kv.get_double(prefix + "_step", step);
    c.line_search = kv.get_bool(prefix + "_line_search", true);
    c.tol = kv.get_double(prefix + "_tol", 1e-8);
    return c;
}

// Ring label: reference contour mapped into the crop, scaled to the network
// grid, drawn as a 1-px polyline and dilated once.
BinaryMask make_shape_ring_label(const Contour& contour_full, int x0, int y0, int sub_side,
                                 int net_side) {
    const double scale = static_cast<double>(net_side) / sub_side;
    Contour local = contour_full;
    for (Point& p : local.points) {
        p.x = (p.x - x0 + 0.5) * scale - 0.5;
        p.y = (p.y - y0 + 0.5) * scale - 0.5;
    }
    return dilate3x3(rasterize_contour_line(local, net_side, net_side));
}

struct ShapeSample {
    Eigen::VectorXd input;   ///< 64x64 sub-image, unrolled
    Eigen::VectorXd label;   ///< ring mask, unrolled
    double area_px = 0.0;    ///< reference contour area, full-image px^2
};

std::string kind_name(NetworkKind k) { return k == NetworkKind::large ? "large" : "small"; }

StackedAEParams train_shape_group(const std::vector<ShapeSample>& samples,
                                  const std::vector<std::size_t>& indices,
                                  const PipelineConfig& cfg, const std::string& group,
                                  std::uint64_t seed, TrainingLog* log) {
    if (indices.empty())
        throw TrainingError("train_system: contour group '" + group + "' is empty");

    std::vector<std::size_t> used = indices;
    if (cfg.shape_max_samples > 0 &&
        static_cast<int>(used.size()) > cfg.shape_max_samples) {
        std::mt19937_64 rng(mix(seed ^ 0xface));
        std::shuffle(used.begin(), used.end(), rng);
        used.resize(static_cast<std::size_t>(cfg.shape_max_samples));
    }

    ShapeNetArch arch;
    Eigen::MatrixXd X(arch.input_dim, static_cast<Eigen::Index>(used.size()));
    Eigen::MatrixXd L(arch.input_dim, static_cast<Eigen::Index>(used.size()));
    for (std::size_t k = 0; k < used.size(); ++k) {
        X.col(static_cast<Eigen::Index>(k)) = samples[used[k]].input;
        L.col(static_cast<Eigen::Index>(k)) = samples[used[k]].label;
    }

    StackedAEParams params = StackedAEParams::init_random(arch, mix(seed ^ 0xbeef));
    TrainingCurve curve;
    layerwise_pretrain(params, X, cfg.sae_pretrain, mix(seed ^ 0xcafe), &curve);
    if (log) log->append("layerwise_pretrain_" + group, curve);

    curve.clear();
    train_output_layer(params, X, L, cfg.shape_lambda, cfg.shape_output, &curve);
    if (log) log->append("train_output_layer_" + group, curve);

    curve.clear();
    finetune_sae(params, X, L, cfg.shape_lambda, cfg.shape_finetune, &curve);
    if (log) log->append("finetune_sae_" + group, curve);
    return params;
}

} // namespace

NetworkKind select_network(int slice_index, int n_slices) {
    if (slice_index < 1 || slice_index > n_slices)
        throw InputError("select_network: slice index " + std::to_string(slice_index) +
                         " outside 1.." + std::to_string(n_slices));
    const int boundary = static_cast<int>(std::ceil(2.0 * n_slices / 3.0));
    return slice_index > boundary ? NetworkKind::small : NetworkKind::large;
}

ContourGroups split_contour_groups(const std::vector<double>& areas_px) {
    if (areas_px.empty()) throw InputError("split_contour_groups: no contours");
    std::vector<double> sorted = areas_px;
    std::sort(sorted.begin(), sorted.end());
    ContourGroups g;
    g.threshold_px = sorted[sorted.size() / 2];  // upper median
    for (std::size_t i = 0; i < areas_px.size(); ++i) {
        if (areas_px[i] >= g.threshold_px)
            g.large.push_back(i);
        else
            g.small.push_back(i);
    }
    return g;
}

PipelineConfig PipelineConfig::from_key_values(const KeyValues& kv) {
    PipelineConfig c;
    c.seed = kv.get_u64("seed", c.seed);
    c.train_dir = kv.get_string("train_dir", "");

    c.patch_count = static_cast<int>(kv.get_int("patch_count", c.patch_count));
    c.patch_size = static_cast<int>(kv.get_int("patch_size", c.patch_size));
    c.ae.lambda = kv.get_double("ae_lambda", 1e-4);
    c.ae.rho = kv.get_double("ae_rho", 0.1);
    c.ae.beta = kv.get_double("ae_beta", 3.0);
    c.ae.control = control_from(kv, "ae", 200, 1.0);

    c.detector_lambda = kv.get_double("detector_lambda", 1e-4);
    c.detector_pretrain = control_from(kv, "detector_pretrain", 40, 1.0);
    c.detector_finetune = control_from(kv, "detector_finetune", 8, 0.5);
    c.detector_max_samples = static_cast<int>(kv.get_int("detector_max_samples", 0));

    c.sae_pretrain.lambda = kv.get_double("sae_pretrain_lambda", 3e-3);
    c.sae_pretrain.rho = kv.get_double("sae_rho", 0.1);
    c.sae_pretrain.beta = kv.get_double("sae_beta", 3.0);
    c.sae_pretrain.control = control_from(kv, "sae_pretrain", 150, 1.0);
    c.shape_lambda = kv.get_double("shape_lambda", 1e-4);
    c.shape_output = control_from(kv, "shape_output", 150, 1.0);
    c.shape_finetune = control_from(kv, "shape_finetune", 60, 1.0);
    c.shape_max_samples = static_cast<int>(kv.get_int("shape_max_samples", 0));

    c.augment = kv.get_bool("augment", false);
    c.augment_cfg.factor = static_cast<int>(kv.get_int("augment_factor", 10));
    c.augment_cfg.max_translate_px = kv.get_double("augment_translate_px", 10.0);
    c.augment_cfg.max_rotate_deg = kv.get_double("augment_rotate_deg", 15.0);
    c.augment_cfg.pca_intensity_scale = kv.get_double("augment_pca_scale", 0.1);
    c.augment_cfg.seed = kv.get_u64("augment_seed", 7);

    c.weights.alpha1 = kv.get_double("alpha1", 1.0);
    c.weights.alpha2 = kv.get_double("alpha2", 0.5);
    c.weights.alpha3 = kv.get_double("alpha3", 0.25);
    c.evolution.gamma = kv.get_double("gamma", 0.1);
    c.evolution.epsilon = kv.get_double("epsilon", 1.5);
    c.evolution.max_iters = static_cast<int>(kv.get_int("max_iters", 1000));
    c.evolution.length_tol = kv.get_double("length_tol", 0.5);
    c.evolution.check_every = static_cast<int>(kv.get_int("check_every", 10));
    c.evolution.stable_checks = static_cast<int>(kv.get_int("stable_checks", 3));
    c.evolution.reinit_every = static_cast<int>(kv.get_int("reinit_every", 50));
    c.evolution.backtracking = kv.get_bool("backtracking", false);

    const std::string rule = kv.get_string("selection", "position");
    if (rule == "position")
        c.selection = SelectionRule::position;
    else if (rule == "area_feedback")
        c.selection = SelectionRule::area_feedback;
    else
        throw LoadError("config: unknown selection rule '" + rule + "'");
    return c;
}

void TrainingLog::append(const std::string& stage, const TrainingCurve& curve) {
    for (std::size_t i = 0; i < curve.size(); ++i)
        rows.push_back({stage, static_cast<int>(i), curve[i]});
}

void TrainingLog::write_csv(const fs::path& path) const {
    std::ofstream out(path);
    if (!out) throw LoadError("training log: cannot write " + path.string());
    out << "stage,iteration,cost\n";
    char buf[160];
    for (const Row& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.12g\n", r.stage.c_str(), r.iteration, r.cost);
        out << buf;
    }
}

TrainedSystem train_system(const std::vector<StudyRecord>& studies, const PipelineConfig& cfg,
                           TrainingLog* log) {
    // Labeled slices are the training units.
    std::vector<TrainingSlice> slices;
    for (const StudyRecord& study : studies)
        for (const StudySlice& s : study.slices)
            if (s.reference) slices.push_back({s.image, *s.reference});
    if (slices.empty()) throw InputError("train_system: no slices carry reference contours");

    if (cfg.augment && cfg.augment_cfg.factor > 1)
        slices = augment_dataset(slices, cfg.augment_cfg);

    TrainedSystem sys;
    sys.weights = cfg.weights;
    sys.evolution = cfg.evolution;
    sys.selection = cfg.selection;
    sys.seed = cfg.seed;

    // ---- Detector stage -------------------------------------------------------
    DetectorArch det_arch;
    std::vector<Image> images64;
    images64.reserve(slices.size());
    for (const TrainingSlice& s : slices)
        images64.push_back(resample(s.image, det_arch.input_side, det_arch.input_side,
                                    Interp::bilinear));

    const Eigen::MatrixXd patches =
        sample_patches(images64, cfg.patch_count, cfg.patch_size, mix(cfg.seed ^ 0xa1));
    TrainingCurve curve;
    const AEParams ae =
        train_ae(patches, det_arch.n_filters, cfg.ae, mix(cfg.seed ^ 0xa2), &curve);
    if (log) log->append("train_ae", curve);

    sys.detector = DetectorParams::from_filter_bank(det_arch, export_filters(ae, cfg.patch_size),
                                                    mix(cfg.seed ^ 0xd1));

    std::vector<std::size_t> det_order(slices.size());
    for (std::size_t i = 0; i < det_order.size(); ++i) det_order[i] = i;
    if (cfg.detector_max_samples > 0 &&
        static_cast<int>(det_order.size()) > cfg.detector_max_samples) {
        std::mt19937_64 rng(mix(cfg.seed ^ 0xd2));
        std::shuffle(det_order.begin(), det_order.end(), rng);
        det_order.resize(static_cast<std::size_t>(cfg.detector_max_samples));
    }
    DetectorDataset det_data;
    det_data.labels = Eigen::MatrixXd(det_arch.output_dim(),
                                      static_cast<Eigen::Index>(det_order.size()));
    for (std::size_t k = 0; k < det_order.size(); ++k) {
        const std::size_t i = det_order[k];
        det_data.images.push_back(images64[i]);
        const Point center = contour_centroid(slices[i].contour);
        det_data.labels.col(static_cast<Eigen::Index>(k)) =
            make_roi_label(center, kRoiSide, det_arch.label_side, slices[i].image.width)
                .unrolled();
    }

    curve.clear();
    pretrain_output_layer(sys.detector, det_data, cfg.detector_lambda, cfg.detector_pretrain,
                          &curve);
    if (log) log->append("pretrain_output_layer", curve);
    curve.clear();
    finetune_detector(sys.detector, det_data, cfg.detector_lambda, cfg.detector_finetune, &curve);
    if (log) log->append("finetune_detector", curve);

    // ---- Shape stage -----------------------------------------------------------
    ShapeNetArch shape_arch;
    std::vector<ShapeSample> shape_samples;
    std::vector<double> areas;
    shape_samples.reserve(slices.size());
    for (const TrainingSlice& s : slices) {
        const Point center = contour_centroid(s.contour);
        const CropResult cropped = crop(s.image, center.x, center.y, kRoiSide);
        ShapeSample sample;
        sample.input = unroll_image(
            resample(cropped.image, shape_arch.side(), shape_arch.side(), Interp::bilinear));
        const BinaryMask ring = make_shape_ring_label(s.contour, cropped.x0, cropped.y0, kRoiSide,
                                                      shape_arch.side());
        sample.label = Eigen::VectorXd(ring.size());
        for (Eigen::Index i = 0; i < sample.label.size(); ++i)
            sample.label[i] = ring.data[static_cast<std::size_t>(i)];
        sample.area_px = contour_area(s.contour);
        areas.push_back(sample.area_px);
        shape_samples.push_back(std::move(sample));
    }

    const ContourGroups groups = split_contour_groups(areas);
    sys.area_threshold_px = groups.threshold_px;
    sys.shape_large =
        train_shape_group(shape_samples, groups.large, cfg, "large", mix(cfg.seed ^ 0x51), log);
    sys.shape_small =
        train_shape_group(shape_samples, groups.small, cfg, "small", mix(cfg.seed ^ 0x52), log);
    return sys;
}

void save_system(const TrainedSystem& system, const fs::path& dir) {
    fs::create_directories(dir);
    const std::map<std::string, std::string> meta = {{"seed", std::to_string(system.seed)}};
    save_detector(system.detector, dir / "detector", meta);
    save_shape_net(system.shape_large, dir / "shape_large", meta);
    save_shape_net(system.shape_small, dir / "shape_small", meta);

    json j;
    j["format"] = "cardlv-system-v1";
    j["seed"] = system.seed;
    j["selection"] = system.selection == SelectionRule::position ? "position" : "area_feedback";
    j["area_threshold_px"] = system.area_threshold_px;
    j["weights"] = {{"alpha1", system.weights.alpha1},
                    {"alpha2", system.weights.alpha2},
                    {"alpha3", system.weights.alpha3}};
    j["evolution"] = {{"gamma", system.evolution.gamma},
                      {"epsilon", system.evolution.epsilon},
                      {"max_iters", system.evolution.max_iters},
                      {"length_tol", system.evolution.length_tol},
                      {"check_every", system.evolution.check_every},
                      {"stable_checks", system.evolution.stable_checks},
                      {"reinit_every", system.evolution.reinit_every},
                      {"backtracking", system.evolution.backtracking}};
    std::ofstream out(dir / "system.json");
    if (!out) throw LoadError("system: cannot write " + (dir / "system.json").string());
    out << j.dump(2) << "\n";
}

TrainedSystem load_system(const fs::path& dir) {
    std::ifstream in(dir / "system.json");
    if (!in) throw LoadError("system: cannot open " + (dir / "system.json").string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("system: malformed system.json: " + std::string(e.what()));
    }
    if (j.value("format", "") != "cardlv-system-v1")
        throw LoadError("system: unknown format in " + (dir / "system.json").string());

    TrainedSystem sys;
    sys.seed = j.value("seed", 0ull);
    sys.selection = j.value("selection", "position") == std::string("area_feedback")
                        ? SelectionRule::area_feedback
                        : SelectionRule::position;
    sys.area_threshold_px = j.value("area_threshold_px", 0.0);
    const auto& w = j.at("weights");
    sys.weights.alpha1 = w.at("alpha1").get<double>();
    sys.weights.alpha2 = w.at("alpha2").get<double>();
    sys.weights.alpha3 = w.at("alpha3").get<double>();
    const auto& e = j.at("evolution");
    sys.evolution.gamma = e.at("gamma").get<double>();
    sys.evolution.epsilon = e.at("epsilon").get<double>();
    sys.evolution.max_iters = e.at("max_iters").get<int>();
    sys.evolution.length_tol = e.at("length_tol").get<double>();
    sys.evolution.check_every = e.at("check_every").get<int>();
    sys.evolution.stable_checks = e.at("stable_checks").get<int>();
    sys.evolution.reinit_every = e.at("reinit_every").get<int>();
    sys.evolution.backtracking = e.at("backtracking").get<bool>();

    sys.detector = load_detector(dir / "detector");
    sys.shape_large = load_shape_net(dir / "shape_large");
    sys.shape_small = load_shape_net(dir / "shape_small");
    return sys;
}

namespace {

SliceSegmentation segment_one_slice(const TrainedSystem& system, const StudyRecord& study,
                                    int slice_index, const std::string& trace_dir) {
    SliceSegmentation out;
    out.index = slice_index;
    const StudySlice& slice = study.slices[static_cast<std::size_t>(slice_index - 1)];
    try {
        const RoiDetection det = detect_roi(system.detector, slice.image, kRoiSide);
        out.center = det.center;
        out.detector_fallback = det.fallback;

        const int n = static_cast<int>(study.slices.size());
        const int net_side = system.shape_large.arch.side();
        BinaryMask prior;
        if (system.selection == SelectionRule::position) {
            out.network = select_network(slice_index, n);
            try {
                prior = infer_shape(out.network == NetworkKind::large ? system.shape_large
                                                                      : system.shape_small,
                                    det.sub_image)
                            .filled;
            } catch (const ShapeInferenceError&) {
                prior = fallback_disk_mask(net_side, 12.0);
                out.prior_fallback = true;
            }
        } else {
            // Area feedback: try the large net, hand small contours to the
            // small net. The inferred area is compared in full-image pixels.
            const double to_full = static_cast<double>(kRoiSide) / net_side;
            double large_area = -1.0;
            BinaryMask large_mask;
            try {
                large_mask = infer_shape(system.shape_large, det.sub_image).filled;
                large_area =
                    static_cast<double>(large_mask.count_foreground()) * to_full * to_full;
            } catch (const ShapeInferenceError&) {
            }
            if (large_area >= system.area_threshold_px) {
                out.network = NetworkKind::large;
                prior = large_mask;
            } else {
                out.network = NetworkKind::small;
                try {
                    prior = infer_shape(system.shape_small, det.sub_image).filled;
                } catch (const ShapeInferenceError&) {
                    if (large_area >= 0.0) {
                        out.network = NetworkKind::large;
                        prior = large_mask;
                    } else {
                        prior = fallback_disk_mask(net_side, 12.0);
                        out.prior_fallback = true;
                    }
                }
            }
        }

        EvolutionConfig evo = system.evolution;
        if (!trace_dir.empty())
            evo.trace_csv = trace_dir + "/trace_slice_" + std::to_string(slice_index) + ".csv";
        const SegmentResult seg = segment(det.sub_image, prior, system.weights, evo);

        // Mask-grid -> sub-image -> full-image coordinates.
        const double scale = static_cast<double>(det.sub_image.width) / seg.phi.width;
        std::vector<Point> pts;
        pts.reserve(seg.contour.points.size());
        for (const Point& p : seg.contour.points)
            pts.push_back({(p.x + 0.5) * scale - 0.5 + det.x0,
                           (p.y + 0.5) * scale - 0.5 + det.y0});
        out.contour = make_contour(std::move(pts), study.spacing_mm, true);
        out.area_px = contour_area(out.contour);
        out.ok = true;
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

} // namespace

StudySegmentation segment_study(const TrainedSystem& system, const StudyRecord& study,
                                int threads, const std::string& trace_dir) {
    if (study.slices.empty()) throw InputError("segment_study: study has no slices");
    StudySegmentation res;
    res.study_id = study.id;
    const int n = static_cast<int>(study.slices.size());
    res.slices.resize(static_cast<std::size_t>(n));

    const auto worker = [&](int begin, int step) {
        for (int i = begin; i < n; i += step)
            res.slices[static_cast<std::size_t>(i)] =
                segment_one_slice(system, study, i + 1, trace_dir);
    };
    if (threads <= 1 || n <= 1) {
        worker(0, 1);
    } else {
        const int used = std::min(threads, n);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(used));
        for (int t = 0; t < used; ++t) pool.emplace_back(worker, t, used);
        for (std::thread& t : pool) t.join();
    }

    std::vector<Point> observed;
    std::vector<int> indices;
    std::vector<Contour> ok_contours;
    for (const SliceSegmentation& s : res.slices) {
        if (!s.ok) continue;
        observed.push_back(contour_centroid(s.contour));
        indices.push_back(s.index);
        ok_contours.push_back(s.contour);
    }
    if (observed.empty())
        throw Error("segment_study: all " + std::to_string(n) + " slices failed");

    res.alignment = align_centers(observed, indices);
    res.aligned = align_contours(ok_contours, res.alignment.observed, res.alignment.corrected);
    return res;
}

void write_segmentation(const StudySegmentation& seg, const StudyRecord& study,
                        const fs::path& out_dir) {
    fs::create_directories(out_dir);
    json j;
    j["study_id"] = seg.study_id;
    j["n_slices"] = seg.slices.size();
    j["alignment_passthrough"] = seg.alignment.passthrough;
    json slice_list = json::array();

    std::size_t aligned_idx = 0;
    for (const SliceSegmentation& s : seg.slices) {
        json entry;
        entry["index"] = s.index;
        entry["ok"] = s.ok;
        if (s.ok) {
            entry["center"] = {s.center.x, s.center.y};
            entry["detector_fallback"] = s.detector_fallback;
            entry["prior_fallback"] = s.prior_fallback;
            entry["network"] = kind_name(s.network);
            entry["area_px"] = s.area_px;

            const std::string idx = std::to_string(s.index);
            save_contour_csv(s.contour, out_dir / ("contour_" + idx + ".csv"));
            save_contour_csv(seg.aligned[aligned_idx], out_dir / ("aligned_contour_" + idx + ".csv"));
            ++aligned_idx;

            Image overlay = study.slices[static_cast<std::size_t>(s.index - 1)].image;
            const BinaryMask burn =
                rasterize_contour_line(s.contour, overlay.height, overlay.width);
            for (std::size_t i = 0; i < burn.size(); ++i)
                if (burn.data[i]) overlay.data[i] = 1.0;
            save_pgm(overlay, (out_dir / ("overlay_" + idx + ".pgm")).string());
        } else {
            entry["error"] = s.error;
        }
        slice_list.push_back(entry);
    }
    j["slices"] = slice_list;
    write_alignment_csv(seg.alignment, (out_dir / "alignment_report.csv").string());
    std::ofstream out(out_dir / "segmentation.json");
    if (!out) throw LoadError("segmentation: cannot write " + (out_dir / "segmentation.json").string());
    out << j.dump(2) << "\n";
}

namespace {

std::string patient_key(const std::string& id, std::string* phase_out) {
    for (const char* suffix : {"_ED", "_ES"}) {
        if (id.size() > 3 && id.compare(id.size() - 3, 3, suffix) == 0) {
            if (phase_out) *phase_out = suffix + 1;
            return id.substr(0, id.size() - 3);
        }
    }
    if (phase_out) phase_out->clear();
    return id;
}

} // namespace

EvaluationReport evaluate_studies(const fs::path& auto_root, const fs::path& ref_root) {
    const std::vector<fs::path> ref_dirs = find_study_dirs(ref_root);
    EvaluationReport report;

    struct PhaseData {
        std::vector<double> auto_areas, manual_areas;
        double thickness = 0.0, spacing = 0.0;
        bool present = false;
    };
    std::map<std::string, std::map<std::string, PhaseData>> patients;

    for (const fs::path& ref_dir : ref_dirs) {
        const StudyRecord ref = load_study(ref_dir);
        const fs::path auto_dir =
            fs::exists(auto_root / ref.id / "segmentation.json") ? auto_root / ref.id : auto_root;
        if (!fs::exists(auto_dir / "segmentation.json"))
            throw InputError("evaluate: no automatic output for study '" + ref.id + "' under " +
                             auto_root.string());

        StudyEvaluation se;
        se.id = ref.id;
        std::string phase;
        const std::string patient = patient_key(ref.id, &phase);
        PhaseData* pd = nullptr;
        if (phase == "ED" || phase == "ES") {
            pd = &patients[patient][phase];
            pd->present = true;
            pd->thickness = ref.thickness_mm;
            pd->spacing = ref.spacing_mm;
        }

        for (std::size_t i = 0; i < ref.slices.size(); ++i) {
            if (!ref.slices[i].reference) continue;
            const fs::path auto_path = auto_dir / ("contour_" + std::to_string(i + 1) + ".csv");
            if (!fs::exists(auto_path)) {
                ++se.missing_auto;
                continue;
            }
            const Contour auto_contour = load_contour_csv(auto_path, ref.spacing_mm);
            const Contour& manual = *ref.slices[i].reference;
            se.slice_indices.push_back(static_cast<int>(i + 1));
            se.per_slice.push_back(slice_metrics(auto_contour, manual,
                                                 ref.slices[i].image.height,
                                                 ref.slices[i].image.width));
            if (pd) {
                pd->auto_areas.push_back(contour_area(auto_contour));
                pd->manual_areas.push_back(contour_area(manual));
            }
        }
        if (!se.per_slice.empty()) se.summary = study_metrics(se.per_slice);
        report.studies.push_back(std::move(se));
    }

    // Clinical indices per patient with both phases evaluated.
    std::vector<double> auto_edv, auto_esv, auto_ef, man_edv, man_esv, man_ef;
    for (const auto& [patient, phases] : patients) {
        const auto ed = phases.find("ED");
        const auto es = phases.find("ES");
        if (ed == phases.end() || es == phases.end()) continue;
        if (!ed->second.present || !es->second.present) continue;
        if (ed->second.auto_areas.empty() || es->second.auto_areas.empty()) continue;
        PatientClinical pc;
        pc.patient = patient;
        pc.automatic = clinical_indices(ed->second.auto_areas, es->second.auto_areas,
                                        ed->second.thickness, ed->second.spacing);
        pc.manual = clinical_indices(ed->second.manual_areas, es->second.manual_areas,
                                     ed->second.thickness, ed->second.spacing);
        auto_edv.push_back(pc.automatic.edv_ml);
        auto_esv.push_back(pc.automatic.esv_ml);
        auto_ef.push_back(pc.automatic.ef_pct);
        man_edv.push_back(pc.manual.edv_ml);
        man_esv.push_back(pc.manual.esv_ml);
        man_ef.push_back(pc.manual.ef_pct);
        report.clinical.push_back(std::move(pc));
    }
    if (report.clinical.size() >= 3) {
        report.agreement["EDV"] = agreement(auto_edv, man_edv);
        report.agreement["ESV"] = agreement(auto_esv, man_esv);
        report.agreement["EF"] = agreement(auto_ef, man_ef);
    }
    return report;
}

void write_evaluation(const EvaluationReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    char buf[320];

    {
        std::ofstream csv(out_dir / "per_slice.csv");
        csv << "study,slice,dice,apd_mm,hausdorff_mm,conformity,good\n";
        for (const StudyEvaluation& se : report.studies) {
            for (std::size_t k = 0; k < se.per_slice.size(); ++k) {
                const SliceMetrics& m = se.per_slice[k];
                std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f,%d\n", se.id.c_str(),
                              se.slice_indices[k], m.dice, m.apd_mm, m.hausdorff_mm, m.conformity,
                              m.good ? 1 : 0);
                csv << buf;
            }
        }
    }
    {
        std::ofstream csv(out_dir / "clinical.csv");
        csv << "patient,auto_edv_ml,auto_esv_ml,auto_ef_pct,manual_edv_ml,manual_esv_ml,"
               "manual_ef_pct\n";
        for (const PatientClinical& pc : report.clinical) {
            std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          pc.patient.c_str(), pc.automatic.edv_ml, pc.automatic.esv_ml,
                          pc.automatic.ef_pct, pc.manual.edv_ml, pc.manual.esv_ml,
                          pc.manual.ef_pct);
            csv << buf;
        }
    }
    {
        std::ofstream csv(out_dir / "agreement.csv");
        csv << "index,n,pearson_r,slope,intercept,bias,loa_low,loa_high,cv_pct,rpc\n";
        for (const auto& [name, st] : report.agreement) {
            std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          name.c_str(), st.n, st.pearson_r, st.slope, st.intercept, st.bias,
                          st.loa_low, st.loa_high, st.cv_pct, st.rpc);
            csv << buf;
        }
    }
    // Scatter data for external plotting.
    for (const char* index : {"EDV", "ESV", "EF"}) {
        std::string lower = index;
        for (char& c : lower) c = static_cast<char>(std::tolower(c));
        std::ofstream ba(out_dir / ("bland_altman_" + lower + ".csv"));
        std::ofstream corr(out_dir / ("correlation_" + lower + ".csv"));
        ba << "patient,mean,difference\n";
        corr << "patient,manual,automatic\n";
        for (const PatientClinical& pc : report.clinical) {
            double a = 0, m = 0;
            if (std::string(index) == "EDV") {
                a = pc.automatic.edv_ml;
                m = pc.manual.edv_ml;
            } else if (std::string(index) == "ESV") {
                a = pc.automatic.esv_ml;
                m = pc.manual.esv_ml;
            } else {
                a = pc.automatic.ef_pct;
                m = pc.manual.ef_pct;
            }
            std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", pc.patient.c_str(), (a + m) / 2.0,
                          a - m);
            ba << buf;
            std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", pc.patient.c_str(), m, a);
            corr << buf;
        }
    }

    json j;
    json studies = json::array();
    for (const StudyEvaluation& se : report.studies) {
        json js;
        js["id"] = se.id;
        js["missing_auto"] = se.missing_auto;
        json slices = json::array();
        for (std::size_t k = 0; k < se.per_slice.size(); ++k) {
            const SliceMetrics& m = se.per_slice[k];
            slices.push_back({{"slice", se.slice_indices[k]},
                              {"dice", m.dice},
                              {"apd_mm", m.apd_mm},
                              {"hausdorff_mm", m.hausdorff_mm},
                              {"conformity", m.conformity},
                              {"good", m.good}});
        }
        js["slices"] = slices;
        if (!se.per_slice.empty()) {
            js["summary"] = {{"dice_mean", se.summary.dice_mean},
                             {"dice_sd", se.summary.dice_sd},
                             {"apd_mean", se.summary.apd_mean},
                             {"apd_sd", se.summary.apd_sd},
                             {"hausdorff_mean", se.summary.hausdorff_mean},
                             {"hausdorff_sd", se.summary.hausdorff_sd},
                             {"conformity_mean", se.summary.conformity_mean},
                             {"conformity_sd", se.summary.conformity_sd},
                             {"good_pct", se.summary.good_pct},
                             {"n_slices", se.summary.n_slices}};
        }
        studies.push_back(js);
    }
    j["studies"] = studies;
    json clin = json::array();
    for (const PatientClinical& pc : report.clinical) {
        clin.push_back({{"patient", pc.patient},
                        {"auto", {{"edv_ml", pc.automatic.edv_ml},
                                  {"esv_ml", pc.automatic.esv_ml},
                                  {"ef_pct", pc.automatic.ef_pct}}},
                        {"manual", {{"edv_ml", pc.manual.edv_ml},
                                    {"esv_ml", pc.manual.esv_ml},
                                    {"ef_pct", pc.manual.ef_pct}}}});
    }
    j["clinical"] = clin;
    json agr;
    for (const auto& [name, st] : report.agreement) {
        agr[name] = {{"n", st.n},          {"pearson_r", st.pearson_r}, {"slope", st.slope},
                     {"intercept", st.intercept}, {"bias", st.bias},   {"loa_low", st.loa_low},
                     {"loa_high", st.loa_high},   {"cv_pct", st.cv_pct}, {"rpc", st.rpc}};
    }
    j["agreement"] = agr;
    std::ofstream out(out_dir / "report.json");
    if (!out) throw LoadError("evaluation: cannot write " + (out_dir / "report.json").string());
    out << j.dump(2) << "\n";
}

} // namespace cardlv
