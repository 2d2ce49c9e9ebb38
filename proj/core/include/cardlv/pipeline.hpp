#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cardlv/augment.hpp"
#include "cardlv/config.hpp"
#include "cardlv/evaluation.hpp"
#include "cardlv/level_set.hpp"
#include "cardlv/lv_detector.hpp"
#include "cardlv/shape_net.hpp"
#include "cardlv/slice_alignment.hpp"
#include "cardlv/study.hpp"

namespace cardlv {

enum class NetworkKind { large, small };

/// Position rule: the apical third (1-based index > ceil(2n/3)) uses the
/// small-contour network.
NetworkKind select_network(int slice_index, int n_slices);

enum class SelectionRule { position, area_feedback };

/// Slice assignment to the large/small contour groups by reference-contour
/// area against the upper-median threshold (area >= threshold -> large).
struct ContourGroups {
    std::vector<std::size_t> large;
    std::vector<std::size_t> small;
    double threshold_px = 0.0;
};
ContourGroups split_contour_groups(const std::vector<double>& areas_px);

struct PipelineConfig {
    std::uint64_t seed = 1;
    std::string train_dir;

    // Detector stage.
    int patch_count = 10000;
    int patch_size = 11;
    SparsityConfig ae;                 ///< lambda 1e-4, rho 0.1, beta 3
    double detector_lambda = 1e-4;
    TrainControl detector_pretrain;
    TrainControl detector_finetune;
    int detector_max_samples = 0;      ///< 0 = use every labeled slice

    // Shape networks.
    SparsityConfig sae_pretrain;       ///< lambda 3e-3, rho 0.1, beta 3
    double shape_lambda = 1e-4;
    TrainControl shape_output;
    TrainControl shape_finetune;
    int shape_max_samples = 0;         ///< per contour group; 0 = all

    // Augmentation.
    bool augment = false;
    AugmentConfig augment_cfg;

    // Segmentation stage.
    EnergyWeights weights;
    EvolutionConfig evolution;
    SelectionRule selection = SelectionRule::position;

    static PipelineConfig from_key_values(const KeyValues& kv);
};

struct TrainedSystem {
    DetectorParams detector;
    StackedAEParams shape_large;
    StackedAEParams shape_small;
    EnergyWeights weights;
    EvolutionConfig evolution;
    SelectionRule selection = SelectionRule::position;
    double area_threshold_px = 0.0;  ///< contour-group split threshold, full-image px^2
    std::uint64_t seed = 0;
};

struct TrainingLog {
    struct Row {
        std::string stage;
        int iteration;
        double cost;
    };
    std::vector<Row> rows;

    void append(const std::string& stage, const TrainingCurve& curve);
    void write_csv(const std::filesystem::path& path) const;
};

/// Runs the full offline training chain on the labeled studies: patch AE ->
/// filters -> detector pretrain/finetune -> contour-group split -> two stacked
/// autoencoders (layer-wise pretrain, output layer, fine-tune).
TrainedSystem train_system(const std::vector<StudyRecord>& studies, const PipelineConfig& cfg,
                           TrainingLog* log = nullptr);

void save_system(const TrainedSystem& system, const std::filesystem::path& dir);
TrainedSystem load_system(const std::filesystem::path& dir);

struct SliceSegmentation {
    int index = 0;  ///< 1-based position in the stack
    bool ok = false;
    std::string error;
    Point center;                  ///< detected LV center, full-image coordinates
    bool detector_fallback = false;
    bool prior_fallback = false;   ///< shape inference failed; disk prior used
    NetworkKind network = NetworkKind::large;
    Contour contour;               ///< final contour, full-image coordinates
    double area_px = 0.0;
};

struct StudySegmentation {
    std::string study_id;
    std::vector<SliceSegmentation> slices;
    AlignmentReport alignment;       ///< over the successful slices
    std::vector<Contour> aligned;    ///< aligned contours for the successful slices
};

/// Segments every slice (detect -> infer -> evolve), then aligns the stack.
/// Per-slice failures are recorded and skipped; throws only when every slice
/// fails. Slices run concurrently when threads > 1 with identical output.
StudySegmentation segment_study(const TrainedSystem& system, const StudyRecord& study,
                                int threads = 1, const std::string& trace_dir = "");

/// Writes contour_<i>.csv, aligned_contour_<i>.csv, overlay_<i>.pgm,
/// alignment_report.csv and segmentation.json into out_dir.
void write_segmentation(const StudySegmentation& seg, const StudyRecord& study,
                        const std::filesystem::path& out_dir);

struct StudyEvaluation {
    std::string id;
    std::vector<int> slice_indices;
    std::vector<SliceMetrics> per_slice;
    StudyMetrics summary;
    int missing_auto = 0;  ///< reference slices without an automatic contour
};

struct PatientClinical {
    std::string patient;
    ClinicalIndices automatic;
    ClinicalIndices manual;
};

struct EvaluationReport {
    std::vector<StudyEvaluation> studies;
    std::vector<PatientClinical> clinical;                 ///< patients with both phases
    std::map<std::string, AgreementStats> agreement;       ///< EDV/ESV/EF when >= 3 patients
};

/// Compares automatic contours (out_dir layout of write_segmentation) against
/// reference studies; study sets are matched by id and mismatches are errors.
EvaluationReport evaluate_studies(const std::filesystem::path& auto_root,
                                  const std::filesystem::path& ref_root);

/// report.json, per_slice.csv, clinical.csv, agreement.csv plus Bland-Altman
/// and correlation scatter CSVs per clinical index.
void write_evaluation(const EvaluationReport& report, const std::filesystem::path& out_dir);

} // namespace cardlv
