#include "cen/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace cen {

using nlohmann::json;

void save_checkpoint(const CenModel& model, const std::string& path) {
    json j;
    j["format_version"] = kCheckpointVersion;
    j["family"] = model.family == Family::Linear ? "linear" : "survival";
    j["encoder"] = model.encoder_kind == EncoderKind::Mlp ? "mlp" : "recurrent";
    j["num_classes"] = model.num_classes;
    j["intervals"] = model.intervals;
    j["attr_dim"] = model.attr_dim;
    if (model.encoder_kind == EncoderKind::Mlp) {
        std::vector<std::size_t> dims;
        dims.push_back(model.mlp.input_dim());
        for (const auto& w : model.mlp.weights()) dims.push_back(w.rows());
        j["mlp"] = {{"dims", dims}, {"dropout", model.mlp.dropout()}};
    } else {
        j["rnn"] = {{"input", model.rnn.input_dim()},
                    {"hidden", model.rnn.hidden_dim()},
                    {"output", model.rnn.output_dim()}};
    }
    if (model.dictionary) {
        j["dictionary"] = {{"atoms", model.dictionary->rows()},
                           {"dim", model.dictionary->cols()}};
    } else {
        j["dictionary"] = nullptr;
    }
    j["reg"] = {{"l1_theta", model.reg.l1_theta},   {"l2_theta", model.reg.l2_theta},
                {"l1_dict", model.reg.l1_dict},     {"l2_dict", model.reg.l2_dict},
                {"entropy_weight", model.reg.entropy_weight},
                {"c2_smooth", model.reg.c2_smooth}};
    j["params"] = model.get_params();

    std::ofstream out(path);
    if (!out) throw Error("save_checkpoint: cannot write " + path);
    out << j.dump(2) << "\n";
}

CenModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("load_checkpoint: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("load_checkpoint: malformed JSON: " + std::string(e.what()));
    }
    if (j.value("format_version", -1) != kCheckpointVersion) {
        throw Error("load_checkpoint: unsupported format version");
    }

    CenModel m;
    m.family = j.at("family") == "linear" ? Family::Linear : Family::SurvivalCrf;
    m.encoder_kind = j.at("encoder") == "mlp" ? EncoderKind::Mlp : EncoderKind::Recurrent;
    m.num_classes = j.at("num_classes");
    m.intervals = j.at("intervals");
    m.attr_dim = j.at("attr_dim");
    const auto& reg = j.at("reg");
    m.reg.l1_theta = reg.at("l1_theta");
    m.reg.l2_theta = reg.at("l2_theta");
    m.reg.l1_dict = reg.at("l1_dict");
    m.reg.l2_dict = reg.at("l2_dict");
    m.reg.entropy_weight = reg.at("entropy_weight");
    m.reg.c2_smooth = reg.at("c2_smooth");

    Rng scratch(0);  // weights are overwritten by set_params below
    if (m.encoder_kind == EncoderKind::Mlp) {
        std::vector<std::size_t> dims = j.at("mlp").at("dims");
        m.mlp = MlpEncoder::init(dims, scratch, j.at("mlp").value("dropout", 0.0));
    } else {
        m.rnn = RecurrentEncoder::init(j.at("rnn").at("input"), j.at("rnn").at("hidden"),
                                       j.at("rnn").at("output"), scratch);
    }
    if (!j.at("dictionary").is_null()) {
        m.dictionary = Matrix(j.at("dictionary").at("atoms"), j.at("dictionary").at("dim"));
    }
    Vector params = j.at("params");
    m.set_params(params);
    return m;
}

}  // namespace cen
