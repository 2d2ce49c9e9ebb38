#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "cardlv/errors.hpp"
#include "cardlv/phantom.hpp"
#include "cardlv/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
    std::int64_t seed = -1;  ///< -1: keep the config file's seed
    int threads = 1;
    bool debug_trace = false;
};

int run_phantom(const std::string& config_path, const std::string& out_dir,
                const GlobalOpts& g) {
    cardlv::PhantomConfig cfg =
        cardlv::PhantomConfig::from_key_values(cardlv::KeyValues::load(config_path));
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    const auto phantoms = cardlv::generate_phantoms(cfg);
    for (const cardlv::PhantomStudy& ps : phantoms)
        cardlv::save_study(ps.study, fs::path(out_dir) / ps.study.id);
    std::cout << "phantom: wrote " << phantoms.size() << " studies to " << out_dir << "\n";
    return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir, const GlobalOpts& g) {
    cardlv::PipelineConfig cfg =
        cardlv::PipelineConfig::from_key_values(cardlv::KeyValues::load(config_path));
    if (g.seed >= 0) cfg.seed = static_cast<std::uint64_t>(g.seed);
    if (cfg.train_dir.empty())
        throw cardlv::LoadError("train: config must name a train_dir");

    std::vector<cardlv::StudyRecord> studies;
    for (const fs::path& dir : cardlv::find_study_dirs(cfg.train_dir))
        studies.push_back(cardlv::load_study(dir));
    std::cout << "train: " << studies.size() << " studies from " << cfg.train_dir << "\n";

    cardlv::TrainingLog log;
    const cardlv::TrainedSystem system = cardlv::train_system(studies, cfg, &log);
    cardlv::save_system(system, out_dir);
    log.write_csv(fs::path(out_dir) / "training_log.csv");
    std::cout << "train: wrote model bundle to " << out_dir << "\n";
    return 0;
}

int run_segment(const std::string& model_dir, const std::string& study_dir,
                const std::string& out_dir, const GlobalOpts& g) {
    const cardlv::TrainedSystem system = cardlv::load_system(model_dir);
    int failures = 0, total = 0;
    for (const fs::path& dir : cardlv::find_study_dirs(study_dir)) {
        const cardlv::StudyRecord study = cardlv::load_study(dir);
        const fs::path study_out = fs::path(out_dir) / study.id;
        std::string trace_dir;
        if (g.debug_trace) {
            fs::create_directories(study_out);
            trace_dir = study_out.string();
        }
        const cardlv::StudySegmentation seg =
            cardlv::segment_study(system, study, g.threads, trace_dir);
        cardlv::write_segmentation(seg, study, study_out);
        for (const cardlv::SliceSegmentation& s : seg.slices) {
            ++total;
            if (!s.ok) {
                ++failures;
                std::cerr << "segment: " << study.id << " slice " << s.index << ": " << s.error
                          << "\n";
            }
        }
    }
    std::cout << "segment: " << (total - failures) << "/" << total << " slices to " << out_dir
              << "\n";
    return 0;
}

int run_evaluate(const std::string& auto_dir, const std::string& ref_dir,
                 const std::string& out_dir) {
    const cardlv::EvaluationReport report = cardlv::evaluate_studies(auto_dir, ref_dir);
    cardlv::write_evaluation(report, out_dir);
    double dice_sum = 0.0;
    int n = 0;
    for (const cardlv::StudyEvaluation& se : report.studies)
        for (const cardlv::SliceMetrics& m : se.per_slice) {
            dice_sum += m.dice;
            ++n;
        }
    std::cout << "evaluate: " << report.studies.size() << " studies, " << n << " slices";
    if (n > 0) std::cout << ", mean dice " << dice_sum / n;
    std::cout << "; reports in " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cardlv: automatic left-ventricle segmentation pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Override the config seed");
    app.add_option("--threads", g.threads, "Worker threads for slice-level parallelism")
        ->check(CLI::PositiveNumber);
    app.add_flag("--debug-trace", g.debug_trace,
                 "Write per-iteration level-set traces next to the outputs");

    std::string config_path, out_dir, model_dir, study_dir, auto_dir, ref_dir;

    CLI::App* phantom = app.add_subcommand("phantom", "Generate synthetic phantom studies");
    phantom->add_option("--config", config_path, "Phantom key=value config")->required();
    phantom->add_option("--out", out_dir, "Output directory")->required();

    CLI::App* train = app.add_subcommand("train", "Train the full system");
    train->add_option("--config", config_path, "Pipeline key=value config")->required();
    train->add_option("--out", out_dir, "Model bundle directory")->required();

    CLI::App* segment = app.add_subcommand("segment", "Segment a study or a directory of studies");
    segment->add_option("--model", model_dir, "Trained model bundle")->required();
    segment->add_option("--study", study_dir, "Study directory (or parent of studies)")->required();
    segment->add_option("--out", out_dir, "Output directory")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "Compare automatic against reference contours");
    evaluate->add_option("--auto", auto_dir, "Segmentation output directory")->required();
    evaluate->add_option("--ref", ref_dir, "Reference study directory")->required();
    evaluate->add_option("--out", out_dir, "Report directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(phantom)) return run_phantom(config_path, out_dir, g);
        if (app.got_subcommand(train)) return run_train(config_path, out_dir, g);
        if (app.got_subcommand(segment)) return run_segment(model_dir, study_dir, out_dir, g);
        if (app.got_subcommand(evaluate)) return run_evaluate(auto_dir, ref_dir, out_dir);
    } catch (const cardlv::Error& e) {
        std::cerr << app.get_subcommands().front()->get_name() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "cardlv: unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
