#include "cardlv/study.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "cardlv/config.hpp"
#include "cardlv/errors.hpp"

namespace fs = std::filesystem;

namespace cardlv {

Contour load_contour_csv(const fs::path& path, double pixel_spacing) {
    std::ifstream in(path);
    if (!in) throw LoadError("contour: cannot open " + path.string());
    std::vector<Point> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        double x = 0, y = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) != 2)
            throw LoadError("contour: malformed row at " + path.string() + ":" +
                            std::to_string(lineno));
        pts.push_back({x, y});
    }
    try {
        return make_contour(std::move(pts), pixel_spacing, true);
    } catch (const InputError& e) {
        throw LoadError("contour: " + std::string(e.what()) + " in " + path.string());
    }
}

void save_contour_csv(const Contour& contour, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw LoadError("contour: cannot write " + path.string());
    char buf[80];
    for (const Point& p : contour.points) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", p.x, p.y);
        out << buf;
    }
}

bool is_study_dir(const fs::path& dir) {
    return fs::exists(dir / "metadata.txt");
}

std::vector<fs::path> find_study_dirs(const fs::path& root) {
    if (is_study_dir(root)) return {root};
    std::vector<fs::path> out;
    if (!fs::is_directory(root)) throw LoadError("study: not a directory: " + root.string());
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && is_study_dir(entry.path())) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw LoadError("study: no study directories under " + root.string());
    return out;
}

StudyRecord load_study(const fs::path& dir) {
    const fs::path meta_path = dir / "metadata.txt";
    if (!fs::exists(meta_path))
        throw LoadError("study: missing metadata.txt in " + dir.string());
    const KeyValues meta = KeyValues::load(meta_path.string());

    StudyRecord study;
    study.id = dir.filename().string();
    study.spacing_mm = meta.get_double("spacing_mm", -1.0);
    study.thickness_mm = meta.get_double("thickness_mm", -1.0);
    if (study.spacing_mm <= 0.0)
        throw LoadError("study: missing or invalid spacing_mm in " + meta_path.string());
    if (study.thickness_mm <= 0.0)
        throw LoadError("study: missing or invalid thickness_mm in " + meta_path.string());
    study.phase = meta.get_string("phase", "");
    study.pathology = meta.get_string("pathology", "");

    for (int i = 1;; ++i) {
        const fs::path slice_path = dir / ("slice_" + std::to_string(i) + ".pgm");
        if (!fs::exists(slice_path)) break;
        StudySlice slice;
        slice.image = load_pgm(slice_path.string());
        if (slice.image.height != 256 || slice.image.width != 256)
            throw LoadError("study: slice is not 256x256: " + slice_path.string());
        const fs::path contour_path = dir / ("contour_" + std::to_string(i) + ".csv");
        if (fs::exists(contour_path))
            slice.reference = load_contour_csv(contour_path, study.spacing_mm);
        study.slices.push_back(std::move(slice));
    }
    if (study.slices.empty())
        throw LoadError("study: no slice_<i>.pgm files in " + dir.string());
    return study;
}

void save_study(const StudyRecord& study, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream meta(dir / "metadata.txt");
        if (!meta) throw LoadError("study: cannot write metadata in " + dir.string());
        char buf[128];
        std::snprintf(buf, sizeof(buf), "spacing_mm=%.6f\nthickness_mm=%.6f\n", study.spacing_mm,
                      study.thickness_mm);
        meta << buf;
        meta << "phase=" << study.phase << "\n";
        meta << "pathology=" << study.pathology << "\n";
    }
    for (std::size_t i = 0; i < study.slices.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        save_pgm(study.slices[i].image, (dir / ("slice_" + idx + ".pgm")).string());
        if (study.slices[i].reference)
            save_contour_csv(*study.slices[i].reference, dir / ("contour_" + idx + ".csv"));
    }
}

} // namespace cardlv
