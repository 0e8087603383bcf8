#include "exai5g/model.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace exai5g {

namespace {

constexpr const char* kFormat = "exai5g-checkpoint";
constexpr int kVersion = 1;

}  // namespace

void ModelConfig::validate() const {
    auto positive = [](const char* field, int v) {
        if (v <= 0) throw ConfigInvalid(std::string("model.") + field, "must be positive");
    };
    positive("d_model", d_model);
    positive("n_layers", n_layers);
    positive("n_heads", n_heads);
    positive("d_ff", d_ff);
    positive("n_features", n_features);
    positive("n_classes", n_classes);
    if (d_model % n_heads != 0) throw ConfigInvalid("model.n_heads", "must divide d_model");
}

std::string checkpoint_json(const ModelParams<double>& params) {
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    const auto& c = params.config;
    j["config"] = {{"d_model", c.d_model}, {"n_layers", c.n_layers}, {"n_heads", c.n_heads},
                   {"d_ff", c.d_ff},       {"n_features", c.n_features}, {"n_classes", c.n_classes}};
    nlohmann::ordered_json weights = nlohmann::ordered_json::object();
    params.visit([&](const std::string& name, const Mat<double>& m) {
        weights[name] = {{"rows", m.rows()},
                         {"cols", m.cols()},
                         {"data", std::vector<double>(m.data(), m.data() + m.size())}};
    });
    j["weights"] = std::move(weights);
    return j.dump();
}

ModelParams<double> checkpoint_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != kFormat) throw ParseError("not an exai5g checkpoint");
    if (j.value("version", 0) != kVersion) throw ParseError("unsupported checkpoint version");
    ModelConfig cfg;
    const auto& jc = j.at("config");
    cfg.d_model = jc.at("d_model");
    cfg.n_layers = jc.at("n_layers");
    cfg.n_heads = jc.at("n_heads");
    cfg.d_ff = jc.at("d_ff");
    cfg.n_features = jc.at("n_features");
    cfg.n_classes = jc.at("n_classes");
    ModelParams<double> params = init_params<double>(cfg, 0);
    const auto& jw = j.at("weights");
    params.visit([&](const std::string& name, Mat<double>& m) {
        const auto& e = jw.at(name);
        const Eigen::Index rows = e.at("rows");
        const Eigen::Index cols = e.at("cols");
        const auto data = e.at("data").get<std::vector<double>>();
        if (rows != m.rows() || cols != m.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
            throw ShapeMismatch("checkpoint weight '" + name + "' has wrong shape");
        }
        m = Eigen::Map<const Mat<double>>(data.data(), rows, cols);
    });
    return params;
}

void save_checkpoint(const ModelParams<double>& params, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + path.string());
    out << checkpoint_json(params);
}

ModelParams<double> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read checkpoint: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

}  // namespace exai5g
