#include "cardlv/serialization.hpp"

#include <bit>
#include <fstream>
#include <json.hpp>

#include "cardlv/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "parameter container assumes a little-endian host");

namespace cardlv {

namespace {

struct TensorOut {
    std::string name;
    const Eigen::MatrixXd* mat = nullptr;
    const Eigen::VectorXd* vec = nullptr;
};

void write_container(const fs::path& base, const std::string& kind,
                     const std::vector<TensorOut>& tensors,
                     const std::map<std::string, std::string>& meta) {
    json manifest;
    manifest["format"] = "cardlv-params-v1";
    manifest["kind"] = kind;
    manifest["byte_order"] = "little";
    manifest["scalar"] = "float64";
    manifest["meta"] = meta;

    std::ofstream bin(base.string() + ".bin", std::ios::binary);
    if (!bin) throw LoadError("params: cannot write " + base.string() + ".bin");
    std::size_t offset = 0;
    json tensor_list = json::array();
    std::vector<double> row;
    for (const TensorOut& t : tensors) {
        json entry;
        entry["name"] = t.name;
        entry["offset_doubles"] = offset;
        if (t.mat) {
            entry["rows"] = t.mat->rows();
            entry["cols"] = t.mat->cols();
            row.resize(static_cast<std::size_t>(t.mat->cols()));
            for (Eigen::Index r = 0; r < t.mat->rows(); ++r) {
                for (Eigen::Index c = 0; c < t.mat->cols(); ++c)
                    row[static_cast<std::size_t>(c)] = (*t.mat)(r, c);
                bin.write(reinterpret_cast<const char*>(row.data()),
                          static_cast<std::streamsize>(row.size() * sizeof(double)));
            }
            offset += static_cast<std::size_t>(t.mat->size());
        } else {
            entry["rows"] = t.vec->size();
            entry["cols"] = 1;
            bin.write(reinterpret_cast<const char*>(t.vec->data()),
                      static_cast<std::streamsize>(t.vec->size() * sizeof(double)));
            offset += static_cast<std::size_t>(t.vec->size());
        }
        tensor_list.push_back(entry);
    }
    if (!bin) throw LoadError("params: write failed for " + base.string() + ".bin");
    manifest["tensors"] = tensor_list;

    std::ofstream side(base.string() + ".json");
    if (!side) throw LoadError("params: cannot write " + base.string() + ".json");
    side << manifest.dump(2) << "\n";
}

struct Container {
    json manifest;
    std::vector<double> data;

    Eigen::MatrixXd tensor(const std::string& name) const {
        for (const auto& entry : manifest.at("tensors")) {
            if (entry.at("name") != name) continue;
            const auto rows = entry.at("rows").get<Eigen::Index>();
            const auto cols = entry.at("cols").get<Eigen::Index>();
            const auto off = entry.at("offset_doubles").get<std::size_t>();
            if (off + static_cast<std::size_t>(rows * cols) > data.size())
                throw LoadError("params: tensor '" + name + "' overruns the binary payload");
            Eigen::MatrixXd m(rows, cols);
            std::size_t k = off;
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
            return m;
        }
        throw LoadError("params: missing tensor '" + name + "'");
    }

    Eigen::VectorXd vector(const std::string& name) const {
        const Eigen::MatrixXd m = tensor(name);
        if (m.cols() != 1) throw LoadError("params: tensor '" + name + "' is not a vector");
        return m.col(0);
    }

    int meta_int(const std::string& key) const {
        const auto& meta = manifest.at("meta");
        if (!meta.contains(key)) throw LoadError("params: missing meta key '" + key + "'");
        return std::stoi(meta.at(key).get<std::string>());
    }
};

Container read_container(const fs::path& base, const std::string& expected_kind) {
    Container c;
    {
        std::ifstream side(base.string() + ".json");
        if (!side) throw LoadError("params: cannot open " + base.string() + ".json");
        try {
            side >> c.manifest;
        } catch (const json::exception& e) {
            throw LoadError("params: malformed sidecar " + base.string() + ".json: " + e.what());
        }
    }
    if (c.manifest.value("format", "") != "cardlv-params-v1")
        throw LoadError("params: unknown container format in " + base.string() + ".json");
    if (c.manifest.value("kind", "") != expected_kind)
        throw LoadError("params: expected kind '" + expected_kind + "', found '" +
                        c.manifest.value("kind", "") + "' in " + base.string() + ".json");

    std::ifstream bin(base.string() + ".bin", std::ios::binary | std::ios::ate);
    if (!bin) throw LoadError("params: cannot open " + base.string() + ".bin");
    const std::streamsize bytes = bin.tellg();
    if (bytes % static_cast<std::streamsize>(sizeof(double)) != 0)
        throw LoadError("params: binary payload not a whole number of doubles: " + base.string());
    c.data.resize(static_cast<std::size_t>(bytes) / sizeof(double));
    bin.seekg(0);
    bin.read(reinterpret_cast<char*>(c.data.data()), bytes);
    if (!bin) throw LoadError("params: truncated binary payload: " + base.string());
    return c;
}

} // namespace

void save_detector(const DetectorParams& params, const fs::path& base,
                   const std::map<std::string, std::string>& meta) {
    std::map<std::string, std::string> m = meta;
    m["input_side"] = std::to_string(params.arch.input_side);
    m["filter_side"] = std::to_string(params.arch.filter_side);
    m["n_filters"] = std::to_string(params.arch.n_filters);
    m["pool_window"] = std::to_string(params.arch.pool_window);
    m["label_side"] = std::to_string(params.arch.label_side);
    write_container(base, "detector",
                    {{"filters", &params.filters, nullptr},
                     {"b0", nullptr, &params.b0},
                     {"W1", &params.W1, nullptr},
                     {"b1", nullptr, &params.b1}},
                    m);
}

DetectorParams load_detector(const fs::path& base) {
    const Container c = read_container(base, "detector");
    DetectorParams p;
    p.arch.input_side = c.meta_int("input_side");
    p.arch.filter_side = c.meta_int("filter_side");
    p.arch.n_filters = c.meta_int("n_filters");
    p.arch.pool_window = c.meta_int("pool_window");
    p.arch.label_side = c.meta_int("label_side");
    p.arch.validate();
    p.filters = c.tensor("filters");
    p.b0 = c.vector("b0");
    p.W1 = c.tensor("W1");
    p.b1 = c.vector("b1");
    if (p.filters.rows() != p.arch.n_filters ||
        p.filters.cols() != p.arch.filter_side * p.arch.filter_side ||
        p.W1.rows() != p.arch.output_dim() || p.W1.cols() != p.arch.feature_dim() ||
        p.b0.size() != p.arch.n_filters || p.b1.size() != p.arch.output_dim())
        throw LoadError("params: detector tensor shapes disagree with the architecture: " +
                        base.string());
    return p;
}

void save_shape_net(const StackedAEParams& params, const fs::path& base,
                    const std::map<std::string, std::string>& meta) {
    std::map<std::string, std::string> m = meta;
    m["input_dim"] = std::to_string(params.arch.input_dim);
    m["hidden1"] = std::to_string(params.arch.hidden1);
    m["hidden2"] = std::to_string(params.arch.hidden2);
    write_container(base, "shape_net",
                    {{"W4", &params.W4, nullptr},
                     {"b4", nullptr, &params.b4},
                     {"W5", &params.W5, nullptr},
                     {"b5", nullptr, &params.b5},
                     {"W6", &params.W6, nullptr},
                     {"b6", nullptr, &params.b6}},
                    m);
}

StackedAEParams load_shape_net(const fs::path& base) {
    const Container c = read_container(base, "shape_net");
    StackedAEParams p;
    p.arch.input_dim = c.meta_int("input_dim");
    p.arch.hidden1 = c.meta_int("hidden1");
    p.arch.hidden2 = c.meta_int("hidden2");
    p.arch.validate();
    p.W4 = c.tensor("W4");
    p.b4 = c.vector("b4");
    p.W5 = c.tensor("W5");
    p.b5 = c.vector("b5");
    p.W6 = c.tensor("W6");
    p.b6 = c.vector("b6");
    if (p.W4.rows() != p.arch.hidden1 || p.W4.cols() != p.arch.input_dim ||
        p.W5.rows() != p.arch.hidden2 || p.W5.cols() != p.arch.hidden1 ||
        p.W6.rows() != p.arch.input_dim || p.W6.cols() != p.arch.hidden2)
        throw LoadError("params: shape-net tensor shapes disagree with the architecture: " +
                        base.string());
    return p;
}

} // namespace cardlv
