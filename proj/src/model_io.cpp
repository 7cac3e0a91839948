#include "accel/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace accel::io {

namespace {

nlohmann::ordered_json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const kriging::KrigingModel& model) {
    nlohmann::ordered_json j;
    j["params"] = {{"beta", model.params().beta},
                   {"tau2", model.params().tau2},
                   {"theta", model.params().theta},
                   {"nugget", model.params().nugget}};
    j["normalization"] = {{"offset", vector_to_json(model.normalization().offset)},
                          {"scale", vector_to_json(model.normalization().scale)}};
    nlohmann::ordered_json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.size(); ++i) {
        rows.push_back(vector_to_json(model.design().X.row(i).transpose()));
    }
    j["design"] = {{"x", rows}, {"y", vector_to_json(model.design().Y)}};

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
}

kriging::KrigingModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
    nlohmann::json j;
    in >> j;

    kriging::KernelParams params;
    params.beta = j.at("params").at("beta").get<double>();
    params.tau2 = j.at("params").at("tau2").get<double>();
    params.theta = j.at("params").at("theta").get<double>();
    params.nugget = j.at("params").at("nugget").get<double>();

    kriging::Normalization norm;
    norm.offset = vector_from_json(j.at("normalization").at("offset"));
    norm.scale = vector_from_json(j.at("normalization").at("scale"));

    const auto& rows = j.at("design").at("x");
    kriging::DesignSet design;
    design.Y = vector_from_json(j.at("design").at("y"));
    design.X.resize(static_cast<Eigen::Index>(rows.size()), norm.offset.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        design.X.row(static_cast<Eigen::Index>(i)) = vector_from_json(rows[i]).transpose();
    }
    return kriging::KrigingModel::build(std::move(design), params, std::move(norm));
}

}  // namespace accel::io
