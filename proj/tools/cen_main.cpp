// cen: train, evaluate, explain, diagnose, and run scripted experiments for
// contextual explanation networks. JSON configs in, JSON/CSV artifacts out.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cen/checkpoint.hpp"
#include "cen/data.hpp"
#include "cen/experiments.hpp"
#include "cen/posthoc.hpp"
#include "cen/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cen;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- config plumbing ----

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw UsageError("config: " + where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw UsageError("config: unknown key '" + key + "' in " + where);
        }
        (void)value;
    }
}

json load_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw UsageError(std::string(what) + ": cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError(std::string(what) + ": malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

Schema parse_schema(const json& j) {
    reject_unknown_keys(j, {"columns"}, "schema");
    Schema s;
    for (const auto& col : j.at("columns")) {
        reject_unknown_keys(col, {"name", "kind"}, "schema column");
        ColumnSpec spec;
        spec.name = col.at("name").get<std::string>();
        const std::string kind = col.at("kind").get<std::string>();
        if (kind == "numeric") spec.kind = ColumnKind::Numeric;
        else if (kind == "categorical") spec.kind = ColumnKind::Categorical;
        else if (kind == "event_time") spec.kind = ColumnKind::EventTime;
        else if (kind == "censor_flag") spec.kind = ColumnKind::CensorFlag;
        else if (kind == "label") spec.kind = ColumnKind::Label;
        else throw UsageError("schema: unknown column kind '" + kind + "'");
        s.columns.push_back(std::move(spec));
    }
    if (s.columns.empty()) throw UsageError("schema: no columns");
    return s;
}

struct DataConfig {
    std::string kind;  // "csv" | "xor"
    // csv
    std::string path, schema_path;
    std::vector<std::string> context_columns, attr_columns;
    double horizon = 0.0, width = 0.0;  // survival discretization
    // xor
    SyntheticSpec synth;
};

struct RunConfig {
    Family family = Family::Linear;
    EncoderKind encoder = EncoderKind::Mlp;
    std::size_t dict_size = 2;  // 0 = unconstrained
    std::vector<std::size_t> hidden = {16};
    RegConfig reg;
    TrainConfig train;
    DataConfig data;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

TrainConfig parse_train(const json& j) {
    reject_unknown_keys(j,
                        {"optimizer", "learning_rate", "momentum", "batch_size", "epochs",
                         "patience", "validation_fraction", "entropy_reg", "amsgrad"},
                        "train");
    TrainConfig t;
    if (j.contains("optimizer")) {
        const std::string o = j.at("optimizer").get<std::string>();
        if (o == "adam") t.optimizer = OptimizerTag::Adam;
        else if (o == "sgd") t.optimizer = OptimizerTag::SgdMomentum;
        else throw UsageError("config: unknown optimizer '" + o + "'");
    }
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.momentum = j.value("momentum", t.momentum);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.max_epochs = j.value("epochs", t.max_epochs);
    t.patience = j.value("patience", t.patience);
    t.validation_fraction = j.value("validation_fraction", t.validation_fraction);
    t.use_entropy_reg = j.value("entropy_reg", t.use_entropy_reg);
    t.amsgrad = j.value("amsgrad", t.amsgrad);
    if (t.learning_rate < 0.0 || t.batch_size == 0 || t.max_epochs == 0) {
        throw UsageError("config: invalid train settings");
    }
    return t;
}

RegConfig parse_reg(const json& j) {
    reject_unknown_keys(
        j, {"l1_theta", "l2_theta", "l1_dict", "l2_dict", "entropy_weight", "c2_smooth"}, "reg");
    RegConfig r;
    r.l1_theta = j.value("l1_theta", 0.0);
    r.l2_theta = j.value("l2_theta", 0.0);
    r.l1_dict = j.value("l1_dict", 0.0);
    r.l2_dict = j.value("l2_dict", 0.0);
    r.entropy_weight = j.value("entropy_weight", 0.0);
    r.c2_smooth = j.value("c2_smooth", 0.0);
    return r;
}

DataConfig parse_data(const json& j) {
    DataConfig d;
    d.kind = j.value("kind", std::string("xor"));
    if (d.kind == "csv") {
        reject_unknown_keys(j,
                            {"kind", "path", "schema", "context_columns", "attr_columns",
                             "horizon", "width"},
                            "data");
        if (!j.contains("path")) throw UsageError("config: data.path is required for csv data");
        d.path = j.at("path").get<std::string>();
        if (!j.contains("schema")) throw UsageError("config: data.schema is required for csv data");
        d.schema_path = j.at("schema").get<std::string>();
        d.context_columns = j.value("context_columns", std::vector<std::string>{});
        d.attr_columns = j.value("attr_columns", std::vector<std::string>{});
        if (d.context_columns.empty() || d.attr_columns.empty()) {
            throw UsageError("config: data.context_columns and data.attr_columns are required");
        }
        d.horizon = j.value("horizon", 0.0);
        d.width = j.value("width", 0.0);
    } else if (d.kind == "xor") {
        reject_unknown_keys(j, {"kind", "per_context", "offset", "noise", "class_pure", "seed"},
                            "data");
        d.synth.per_context = j.value("per_context", std::size_t{60});
        d.synth.offset = j.value("offset", 1.0);
        d.synth.noise = j.value("noise", 0.3);
        d.synth.class_pure = j.value("class_pure", false);
        d.synth.seed = j.value("seed", std::uint64_t{0});
    } else {
        throw UsageError("config: unknown data.kind '" + d.kind + "' (expected csv or xor)");
    }
    return d;
}

RunConfig parse_run_config(const json& j) {
    reject_unknown_keys(j,
                        {"family", "encoder", "dict_size", "hidden", "reg", "train", "data",
                         "test_fraction", "seed"},
                        "config");
    RunConfig c;
    const std::string fam = j.value("family", std::string("linear"));
    if (fam == "linear") c.family = Family::Linear;
    else if (fam == "survival") c.family = Family::SurvivalCrf;
    else throw UsageError("config: unknown family '" + fam + "'");
    const std::string enc = j.value("encoder", std::string("mlp"));
    if (enc == "mlp") c.encoder = EncoderKind::Mlp;
    else if (enc == "recurrent") c.encoder = EncoderKind::Recurrent;
    else throw UsageError("config: unknown encoder '" + enc + "'");
    c.dict_size = j.value("dict_size", std::size_t{2});
    if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    if (j.contains("reg")) c.reg = parse_reg(j.at("reg"));
    if (j.contains("train")) c.train = parse_train(j.at("train"));
    if (j.contains("data")) c.data = parse_data(j.at("data"));
    c.test_fraction = j.value("test_fraction", 0.2);
    c.seed = j.value("seed", std::uint64_t{0});
    if (c.test_fraction < 0.0 || c.test_fraction >= 1.0) {
        throw UsageError("config: test_fraction must be in [0, 1)");
    }
    if (c.encoder == EncoderKind::Recurrent && c.family != Family::SurvivalCrf) {
        throw UsageError("config: the recurrent encoder requires the survival family");
    }
    if (c.encoder == EncoderKind::Recurrent && c.dict_size == 0) {
        throw UsageError("config: the recurrent encoder requires a dictionary");
    }
    return c;
}

// ---- data assembly ----

struct LoadedData {
    Batch train;
    Batch test;
    std::size_t context_dim = 0;
    std::size_t attr_dim = 0;
    std::size_t num_classes = 2;
    std::size_t intervals = 1;
};

void seeded_split(const Batch& all, double test_fraction, std::uint64_t seed, Batch& train,
                  Batch& test) {
    std::vector<std::size_t> order(all.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed ^ 0x5eedULL);
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
    const std::size_t n_test = static_cast<std::size_t>(test_fraction * order.size());
    test = all.slice({order.begin(), order.begin() + n_test});
    train = all.slice({order.begin() + n_test, order.end()});
}

LoadedData load_data(const RunConfig& cfg) {
    LoadedData out;
    if (cfg.data.kind == "xor") {
        if (cfg.family != Family::Linear) {
            throw UsageError("config: xor data is linear-family only");
        }
        Batch all = gen_xor_context(cfg.data.synth);
        seeded_split(all, cfg.test_fraction, cfg.seed, out.train, out.test);
        out.context_dim = 4;
        out.attr_dim = 2;
        out.num_classes = 2;
        return out;
    }

    if (!fs::exists(cfg.data.path)) {
        throw UsageError("config: dataset path does not exist: " + cfg.data.path);
    }
    if (!fs::exists(cfg.data.schema_path)) {
        throw UsageError("config: schema path does not exist: " + cfg.data.schema_path);
    }
    Schema schema = parse_schema(load_json_file(cfg.data.schema_path, "schema"));
    TabularDataset ds = load_csv(cfg.data.path, schema);
    if (ds.num_rows() < 4) throw IngestionError("dataset has fewer than 4 rows");

    std::vector<std::size_t> order(ds.num_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(cfg.seed ^ 0x5eedULL);
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
    const std::size_t n_test = static_cast<std::size_t>(cfg.test_fraction * order.size());
    std::vector<std::size_t> test_rows(order.begin(), order.begin() + n_test);
    std::vector<std::size_t> train_rows(order.begin() + n_test, order.end());

    PreprocessRequest req;
    req.context_columns = cfg.data.context_columns;
    req.attr_columns = cfg.data.attr_columns;
    ProcessedData p = preprocess(ds, req, train_rows);

    Batch all;
    all.contexts = p.contexts;
    all.attrs = p.attrs;
    if (cfg.family == Family::Linear) {
        if (p.labels.size() != ds.num_rows()) {
            throw UsageError("config: linear family needs a label column in the schema");
        }
        all.labels = p.labels;
        out.num_classes = std::max<std::size_t>(2, p.plan.label_map.size());
    } else {
        if (p.event_times.size() != ds.num_rows() || p.censor_flags.size() != ds.num_rows()) {
            throw UsageError(
                "config: survival family needs event_time and censor_flag columns in the schema");
        }
        if (cfg.data.horizon <= 0.0 || cfg.data.width <= 0.0) {
            throw UsageError("config: survival csv data needs positive data.horizon and data.width");
        }
        std::vector<bool> censored;
        for (double f : p.censor_flags) censored.push_back(f != 0.0);
        DiscretizeResult disc =
            discretize_survival(p.event_times, censored, cfg.data.horizon, cfg.data.width);
        all.survival_targets = disc.targets;
        out.intervals = disc.intervals;
    }
    out.train = all.slice(train_rows);
    out.test = all.slice(test_rows);
    out.context_dim = all.contexts.empty() ? 0 : all.contexts[0].size();
    out.attr_dim = all.attrs.empty() ? 0 : all.attrs[0].size();
    return out;
}

CenModel build_model(const RunConfig& cfg, const LoadedData& data) {
    Rng rng(cfg.seed);
    if (cfg.family == Family::Linear) {
        if (cfg.dict_size == 0) {
            return CenModel::make_linear_unconstrained(data.context_dim, data.attr_dim,
                                                       data.num_classes, cfg.hidden, rng, cfg.reg);
        }
        return CenModel::make_linear(data.context_dim, data.attr_dim, data.num_classes,
                                     cfg.dict_size, cfg.hidden, rng, cfg.reg);
    }
    if (cfg.encoder == EncoderKind::Recurrent) {
        const std::size_t hidden = cfg.hidden.empty() ? 16 : cfg.hidden[0];
        return CenModel::make_survival_recurrent(data.context_dim, data.attr_dim, data.intervals,
                                                 cfg.dict_size, hidden, rng, cfg.reg);
    }
    return CenModel::make_survival_mlp(data.context_dim, data.attr_dim, data.intervals,
                                       cfg.dict_size, cfg.hidden, rng, cfg.reg);
}

// ---- output helpers (write whole artifacts atomically: tmp file + rename) ----

void write_text_file(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw UsageError("cannot write " + path.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

json metrics_for(const CenModel& model, const Batch& test, const Batch& train_ref,
                 const std::vector<double>& quantiles) {
    json m;
    m["format_version"] = 1;
    if (model.family == Family::Linear) {
        m["accuracy"] = evaluate_accuracy(model, test);
        m["loss"] = evaluate_loss(model, test);
        if (model.num_classes == 2) {
            std::vector<double> scores;
            for (std::size_t i = 0; i < test.size(); ++i) {
                scores.push_back(
                    cen_forward(model, test.contexts[i], test.attrs[i]).prediction[1]);
            }
            try {
                m["auc"] = auc(scores, test.labels);
            } catch (const UndefinedMetric&) {
                m["auc"] = nullptr;
            }
        }
    } else {
        m["loss"] = evaluate_loss(model, test);
        SurvivalEval ev = survival_eval(model, test);
        try {
            std::vector<double> accs = acc_at_quantiles(ev.curves, test.survival_targets,
                                                        train_ref.survival_targets, quantiles);
            json jq = json::object();
            for (std::size_t i = 0; i < quantiles.size(); ++i) {
                jq[std::to_string(quantiles[i])] = accs[i];
            }
            m["acc_at_quantiles"] = jq;
        } catch (const UndefinedMetric&) {
            m["acc_at_quantiles"] = nullptr;
        }
        try {
            m["rae"] = rae(ev.predicted, test.survival_targets);
        } catch (const UndefinedMetric&) {
            m["rae"] = nullptr;
        }
    }
    return m;
}

// ---- commands ----

struct CommonArgs {
    std::string config_path, out_dir, data_path, schema_path, checkpoint_path;
    std::optional<std::uint64_t> seed;
    std::string quantiles;  // "a,b,c"
    std::string rows;       // "start:end" for explain
};

RunConfig effective_config(const CommonArgs& args, bool require_config) {
    json j = json::object();
    if (!args.config_path.empty()) j = load_json_file(args.config_path, "config");
    else if (require_config) throw UsageError("--config is required");
    RunConfig cfg = parse_run_config(j);
    if (!args.data_path.empty()) {
        if (cfg.data.kind != "csv") {
            cfg.data = DataConfig{};
            cfg.data.kind = "csv";
        }
        cfg.data.path = args.data_path;
    }
    if (!args.schema_path.empty()) cfg.data.schema_path = args.schema_path;
    if (args.seed) cfg.seed = *args.seed;
    if (cfg.data.kind == "csv" && (cfg.data.path.empty() || cfg.data.schema_path.empty())) {
        throw UsageError("csv data needs both a data path and a schema path");
    }
    if (cfg.data.kind == "csv" &&
        (cfg.data.context_columns.empty() || cfg.data.attr_columns.empty())) {
        throw UsageError("csv data needs data.context_columns and data.attr_columns in the config");
    }
    return cfg;
}

std::vector<double> parse_quantiles(const std::string& s) {
    if (s.empty()) return {0.25, 0.5, 0.75};
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError("--quantiles: cannot parse '" + tok + "'");
        }
        if (out.back() <= 0.0 || out.back() >= 1.0) {
            throw UsageError("--quantiles: values must be in (0, 1)");
        }
    }
    if (out.empty()) throw UsageError("--quantiles: empty list");
    return out;
}

fs::path prepare_out_dir(const std::string& out_dir) {
    if (out_dir.empty()) throw UsageError("--out is required");
    fs::path p(out_dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw UsageError("cannot create output dir " + out_dir);
    return p;
}

int cmd_train(const CommonArgs& args) {
    RunConfig cfg = effective_config(args, true);
    fs::path out = prepare_out_dir(args.out_dir);
    LoadedData data = load_data(cfg);

    CenModel model = build_model(cfg, data);
    TrainConfig tcfg = cfg.train;
    tcfg.seed = cfg.seed;
    TrainResult result = train(model, data.train, {}, tcfg);

    // all compute done; now emit artifacts
    std::ostringstream hist;
    hist << "epoch,train_loss,val_loss,val_acc,entropy\n";
    for (const auto& row : result.history) {
        hist << row.epoch << "," << row.train_loss << "," << row.val_loss << "," << row.val_acc
             << "," << row.entropy << "\n";
    }
    write_text_file(out / "history.csv", hist.str());

    save_checkpoint(model, (out / "checkpoint.json").string());

    json metrics = metrics_for(model, data.test.size() ? data.test : data.train, data.train,
                               parse_quantiles(args.quantiles));
    metrics["final_train_loss"] = result.history.back().train_loss;
    metrics["best_val_loss"] = result.best_val_loss;
    metrics["best_epoch"] = result.best_epoch;
    metrics["seed"] = cfg.seed;
    write_text_file(out / "metrics.json", metrics.dump(2) + "\n");
    return kExitOk;
}

int cmd_eval(const CommonArgs& args) {
    if (args.checkpoint_path.empty()) throw UsageError("--checkpoint is required");
    RunConfig cfg = effective_config(args, true);
    fs::path out = prepare_out_dir(args.out_dir);
    CenModel model = load_checkpoint(args.checkpoint_path);
    LoadedData data = load_data(cfg);
    json metrics = metrics_for(model, data.test.size() ? data.test : data.train, data.train,
                               parse_quantiles(args.quantiles));
    metrics["seed"] = cfg.seed;
    write_text_file(out / "metrics.json", metrics.dump(2) + "\n");
    return kExitOk;
}

int cmd_explain(const CommonArgs& args) {
    if (args.checkpoint_path.empty()) throw UsageError("--checkpoint is required");
    RunConfig cfg = effective_config(args, true);
    fs::path out = prepare_out_dir(args.out_dir);
    CenModel model = load_checkpoint(args.checkpoint_path);
    LoadedData data = load_data(cfg);

    // explanations are dumped for the test split (fall back to train if empty)
    const Batch& batch = data.test.size() ? data.test : data.train;
    std::size_t lo = 0, hi = batch.size();
    if (!args.rows.empty()) {
        const auto colon = args.rows.find(':');
        if (colon == std::string::npos) throw UsageError("--rows must look like start:end");
        try {
            lo = std::stoul(args.rows.substr(0, colon));
            hi = std::stoul(args.rows.substr(colon + 1));
        } catch (const std::exception&) {
            throw UsageError("--rows: cannot parse '" + args.rows + "'");
        }
        if (lo >= hi || hi > batch.size()) throw UsageError("--rows: range out of bounds");
    }
    if (batch.attrs.empty() || batch.attrs[0].size() != model.attr_dim) {
        throw UsageError("checkpoint expects " + std::to_string(model.attr_dim) +
                         " attribute columns, data has " +
                         std::to_string(batch.attrs.empty() ? 0 : batch.attrs[0].size()));
    }

    const std::size_t d = model.attr_dim;
    std::ostringstream exp_csv, curves_csv;
    const std::size_t n_alpha = model.dict_atoms();
    if (model.family == Family::Linear) {
        exp_csv << "instance,class";
        for (std::size_t f = 0; f < d; ++f) exp_csv << ",w" << f;
        exp_csv << ",bias";
        for (std::size_t k = 0; k < n_alpha; ++k) exp_csv << ",alpha" << k;
        exp_csv << "\n";
    } else {
        exp_csv << "instance,step";
        for (std::size_t f = 0; f < d; ++f) exp_csv << ",w" << f;
        for (std::size_t k = 0; k < n_alpha; ++k) exp_csv << ",alpha" << k;
        exp_csv << "\n";
        curves_csv << "instance";
        for (std::size_t j = 0; j <= model.intervals; ++j) curves_csv << ",s" << j;
        curves_csv << "\n";
    }

    for (std::size_t i = lo; i < hi; ++i) {
        CenForward f = cen_forward(model, batch.contexts[i], batch.attrs[i]);
        if (model.family == Family::Linear) {
            LinearExplanation exp = model.linear_explanation(f.theta);
            for (std::size_t cls = 0; cls < exp.classes(); ++cls) {
                exp_csv << i << "," << cls;
                for (std::size_t ff = 0; ff < d; ++ff) exp_csv << "," << exp.weights(cls, ff);
                exp_csv << "," << exp.bias[cls];
                for (std::size_t k = 0; k < n_alpha; ++k) exp_csv << "," << f.alpha[k];
                exp_csv << "\n";
            }
        } else {
            SurvivalExplanation exp = model.survival_explanation(f.theta);
            for (std::size_t t = 0; t < model.intervals; ++t) {
                exp_csv << i << "," << t;
                for (std::size_t ff = 0; ff < d; ++ff) exp_csv << "," << exp.theta(t, ff);
                const Vector& a = f.alphas.empty() ? f.alpha : f.alphas[t];
                for (std::size_t k = 0; k < n_alpha; ++k) exp_csv << "," << a[k];
                exp_csv << "\n";
            }
            Vector s = survival_curve(exp, batch.attrs[i]);
            curves_csv << i;
            for (double v : s) curves_csv << "," << v;
            curves_csv << "\n";
        }
    }

    write_text_file(out / "explanations.csv", exp_csv.str());
    if (model.family == Family::SurvivalCrf) {
        write_text_file(out / "survival_curves.csv", curves_csv.str());
    }
    return kExitOk;
}

int cmd_diagnose(const CommonArgs& args) {
    if (args.checkpoint_path.empty()) throw UsageError("--checkpoint is required");
    RunConfig cfg = effective_config(args, true);
    fs::path out = prepare_out_dir(args.out_dir);
    CenModel model = load_checkpoint(args.checkpoint_path);
    LoadedData data = load_data(cfg);
    const Batch& batch = data.test.size() ? data.test : data.train;
    Rng rng(cfg.seed);
    FanoReport rep = fano_diagnostic(model, batch, rng);
    json j;
    j["format_version"] = 1;
    j["epsilon_hat"] = rep.epsilon_hat;
    j["delta_hat"] = rep.delta_hat;
    j["bound"] = rep.bound;
    j["contribution"] = rep.contribution;
    j["acc_full"] = rep.acc_full;
    j["acc_theta_only"] = rep.acc_theta_only;
    j["holds"] = rep.holds;
    write_text_file(out / "diagnosis.json", j.dump(2) + "\n");
    return kExitOk;
}

std::size_t thread_cap() {
    const char* env = std::getenv("CEN_THREADS");
    if (!env) return 1;
    const long v = std::atol(env);
    if (v < 1) return 1;
    return static_cast<std::size_t>(v);
}

// Runs fn(i) for i in [0, n) on up to CEN_THREADS workers; results are
// collected by the callee into preallocated slots, so output order is fixed.
void parallel_conditions(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_cap(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

int cmd_experiment(const std::string& name, const CommonArgs& args) {
    json j = json::object();
    if (!args.config_path.empty()) j = load_json_file(args.config_path, "config");
    reject_unknown_keys(j,
                        {"seeds", "seed", "sizes", "fractions", "snrs", "lambdas", "num_points",
                         "num_samples"},
                        "experiment config");
    fs::path out = prepare_out_dir(args.out_dir);

    std::vector<std::uint64_t> seeds = j.value("seeds", std::vector<std::uint64_t>{0, 1, 2});
    std::uint64_t seed = j.value("seed", std::uint64_t{0});
    if (args.seed) {
        seed = *args.seed;
        seeds = {seed, seed + 1, seed + 2};
    }

    std::ostringstream csv;
    if (name == "dict-size") {
        const auto sizes =
            j.value("sizes", std::vector<std::size_t>{1, 2, 4, 8, 16});
        std::vector<std::vector<experiments::DictSizeRow>> per(sizes.size());
        parallel_conditions(sizes.size(), [&](std::size_t i) {
            per[i] = experiments::dict_size_sweep({sizes[i]}, seeds);
        });
        csv << "dict_size,seed,val_error,test_error\n";
        for (const auto& rows : per) {
            for (const auto& r : rows) {
                csv << r.dict_size << "," << r.seed << "," << r.val_error << "," << r.test_error
                    << "\n";
            }
        }
    } else if (name == "sample-efficiency") {
        const auto fractions =
            j.value("fractions", std::vector<double>{0.05, 0.1, 0.25, 0.5, 1.0});
        std::vector<std::vector<experiments::SampleEfficiencyRow>> per(fractions.size());
        parallel_conditions(fractions.size(), [&](std::size_t i) {
            per[i] = experiments::sample_efficiency_sweep({fractions[i]}, seeds);
        });
        csv << "fraction,seed,cen_test_error,baseline_test_error\n";
        for (const auto& rows : per) {
            for (const auto& r : rows) {
                csv << r.fraction << "," << r.seed << "," << r.cen_test_error << ","
                    << r.baseline_test_error << "\n";
            }
        }
    } else if (name == "noisy-features") {
        const auto snrs = j.value("snrs", std::vector<double>{8, 4, 2, 1, 0.5});
        auto rows = experiments::noisy_features_sweep(snrs, seed);
        csv << "snr,cen_error,surrogate_error,fidelity_r2\n";
        for (const auto& r : rows) {
            csv << r.level << "," << r.cen_error << "," << r.surrogate_error << ","
                << r.fidelity_r2 << "\n";
        }
    } else if (name == "incomplete-features") {
        const auto fractions = j.value("fractions", std::vector<double>{1.0, 0.75, 0.5, 0.25});
        auto rows = experiments::incomplete_features_sweep(fractions, seed);
        csv << "fraction,cen_error,surrogate_error,fidelity_r2\n";
        for (const auto& r : rows) {
            csv << r.level << "," << r.cen_error << "," << r.surrogate_error << ","
                << r.fidelity_r2 << "\n";
        }
    } else if (name == "entropy-reg") {
        const auto lambdas = j.value("lambdas", std::vector<double>{0.0, 0.1});
        std::vector<std::vector<experiments::EntropyRegRow>> per(lambdas.size());
        parallel_conditions(lambdas.size(), [&](std::size_t i) {
            per[i] = experiments::entropy_reg_sweep({lambdas[i]}, seeds);
        });
        csv << "entropy_weight,seed,test_accuracy,entropy\n";
        for (const auto& rows : per) {
            for (const auto& r : rows) {
                csv << r.entropy_weight << "," << r.seed << "," << r.test_accuracy << ","
                    << r.entropy << "\n";
            }
        }
    } else if (name == "lime-recovery") {
        const std::size_t num_points = j.value("num_points", std::size_t{100});
        const std::size_t num_samples = j.value("num_samples", std::size_t{2000});
        auto rows = experiments::lime_recovery(num_points, num_samples, seed);
        csv << "point,relative_error,fidelity_r2\n";
        for (const auto& r : rows) {
            csv << r.point << "," << r.relative_error << "," << r.fidelity_r2 << "\n";
        }
    } else if (name == "fano") {
        FanoReport rep = experiments::fano_experiment(seed);
        csv << "epsilon_hat,delta_hat,bound,contribution,acc_full,acc_theta_only,holds\n";
        csv << rep.epsilon_hat << "," << rep.delta_hat << "," << rep.bound << ","
            << rep.contribution << "," << rep.acc_full << "," << rep.acc_theta_only << ","
            << (rep.holds ? 1 : 0) << "\n";
    } else {
        throw UsageError(
            "unknown experiment '" + name +
            "'; valid names: dict-size, sample-efficiency, noisy-features, incomplete-features, "
            "entropy-reg, lime-recovery, fano");
    }

    write_text_file(out / "results.csv", csv.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contextual explanation networks"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string experiment_name;

    auto add_common = [&](CLI::App* sub, bool with_rows = false) {
        sub->add_option("--config", args.config_path, "JSON config file");
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed, "seed override");
        sub->add_option("--data", args.data_path, "dataset CSV override");
        sub->add_option("--schema", args.schema_path, "schema JSON override");
        sub->add_option("--checkpoint", args.checkpoint_path, "checkpoint path");
        sub->add_option("--quantiles", args.quantiles, "comma-separated survival quantiles");
        if (with_rows) sub->add_option("--rows", args.rows, "instance range start:end");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a model from a config");
    add_common(train_cmd);
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(eval_cmd);
    CLI::App* explain_cmd = app.add_subcommand("explain", "dump per-instance explanations");
    add_common(explain_cmd, true);
    CLI::App* diagnose_cmd = app.add_subcommand("diagnose", "run the explanation-contribution "
                                                            "diagnostic");
    add_common(diagnose_cmd);
    CLI::App* experiment_cmd = app.add_subcommand("experiment", "run a named scripted sweep");
    experiment_cmd->add_option("name", experiment_name, "experiment name")->required();
    add_common(experiment_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(args);
        if (eval_cmd->parsed()) return cmd_eval(args);
        if (explain_cmd->parsed()) return cmd_explain(args);
        if (diagnose_cmd->parsed()) return cmd_diagnose(args);
        if (experiment_cmd->parsed()) return cmd_experiment(experiment_name, args);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IngestionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DivergedTraining& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
