#include <fstream>
#include <initializer_list>
#include <string>

#include "fairdisc/errors.hpp"
#include "fairdisc/json_io.hpp"

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw fairdisc::ConfigError(std::string("config: section '") + section +
                                    "' must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) known = true;
        if (!known)
            throw fairdisc::ConfigError(std::string("config: unknown key '") + key + "' in " +
                                        section + " section");
    }
}

} // namespace

namespace fairdisc::model {

void to_json(json& j, const ModelConfig& c) {
    j = json{{"input_dim", c.input_dim},
             {"code_dim", c.code_dim},
             {"trunk_hidden", c.trunk_hidden},
             {"activation", ad::activation_name(c.activation)},
             {"target_classes", c.target_classes},
             {"sensitive_classes", c.sensitive_classes},
             {"target_disc_hidden", c.target_disc_hidden},
             {"sensitive_disc_hidden", c.sensitive_disc_hidden},
             {"variant", variant_name(c.variant)},
             {"prior_mean_target", c.prior_mean_target},
             {"prior_mean_sensitive", c.prior_mean_sensitive}};
}

void from_json(const json& j, ModelConfig& c) {
    check_keys(j, "model",
               {"input_dim", "code_dim", "trunk_hidden", "activation", "target_classes",
                "sensitive_classes", "target_disc_hidden", "sensitive_disc_hidden", "variant",
                "prior_mean_target", "prior_mean_sensitive"});
    c.input_dim = j.value("input_dim", c.input_dim);
    c.code_dim = j.value("code_dim", c.code_dim);
    c.trunk_hidden = j.value("trunk_hidden", c.trunk_hidden);
    if (j.contains("activation"))
        c.activation = ad::activation_from_string(j.at("activation").get<std::string>());
    c.target_classes = j.value("target_classes", c.target_classes);
    c.sensitive_classes = j.value("sensitive_classes", c.sensitive_classes);
    c.target_disc_hidden = j.value("target_disc_hidden", c.target_disc_hidden);
    c.sensitive_disc_hidden = j.value("sensitive_disc_hidden", c.sensitive_disc_hidden);
    if (j.contains("variant"))
        c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.prior_mean_target = j.value("prior_mean_target", c.prior_mean_target);
    c.prior_mean_sensitive = j.value("prior_mean_sensitive", c.prior_mean_sensitive);
}

} // namespace fairdisc::model

namespace fairdisc::train {

void to_json(json& j, const TrainConfig& c) {
    j = json{{"max_epochs", c.max_epochs},
             {"step_epochs", c.step_epochs},
             {"lambda_e0", c.lambda_e0},
             {"lambda_od0", c.lambda_od0},
             {"gamma_e", c.gamma_e},
             {"gamma_od", c.gamma_od},
             {"schedule_mode", schedule_mode_name(c.schedule_mode)},
             {"batch_size", c.batch_size},
             {"mc_samples", c.mc_samples},
             {"lr", c.lr},
             {"weight_decay", c.weight_decay},
             {"decoupled_decay", c.decoupled_decay},
             {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
    check_keys(j, "train",
               {"max_epochs", "step_epochs", "lambda_e0", "lambda_od0", "gamma_e", "gamma_od",
                "schedule_mode", "batch_size", "mc_samples", "lr", "weight_decay",
                "decoupled_decay", "seed"});
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.step_epochs = j.value("step_epochs", c.step_epochs);
    c.lambda_e0 = j.value("lambda_e0", c.lambda_e0);
    c.lambda_od0 = j.value("lambda_od0", c.lambda_od0);
    c.gamma_e = j.value("gamma_e", c.gamma_e);
    c.gamma_od = j.value("gamma_od", c.gamma_od);
    if (j.contains("schedule_mode"))
        c.schedule_mode = schedule_mode_from_string(j.at("schedule_mode").get<std::string>());
    c.batch_size = j.value("batch_size", c.batch_size);
    c.mc_samples = j.value("mc_samples", c.mc_samples);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.decoupled_decay = j.value("decoupled_decay", c.decoupled_decay);
    c.seed = j.value("seed", c.seed);
}

} // namespace fairdisc::train

namespace fairdisc::data {

void to_json(json& j, const SyntheticSpec& c) {
    j = json{{"rows", c.rows},       {"rho", c.rho},
             {"obs_dim", c.obs_dim}, {"mix_hidden", c.mix_hidden},
             {"noise", c.noise},     {"seed", c.seed},
             {"sensitive_channel", c.sensitive_channel}};
}

void from_json(const json& j, SyntheticSpec& c) {
    check_keys(j, "synthetic",
               {"rows", "rho", "obs_dim", "mix_hidden", "noise", "seed", "sensitive_channel"});
    c.rows = j.value("rows", c.rows);
    c.rho = j.value("rho", c.rho);
    c.obs_dim = j.value("obs_dim", c.obs_dim);
    c.mix_hidden = j.value("mix_hidden", c.mix_hidden);
    c.noise = j.value("noise", c.noise);
    c.seed = j.value("seed", c.seed);
    c.sensitive_channel = j.value("sensitive_channel", c.sensitive_channel);
}

} // namespace fairdisc::data

namespace fairdisc::eval {

void to_json(json& j, const ProbeConfig& c) {
    j = json{{"hidden", c.hidden},
             {"activation", ad::activation_name(c.activation)},
             {"epochs", c.epochs},
             {"batch_size", c.batch_size},
             {"lr", c.lr},
             {"weight_decay", c.weight_decay},
             {"embedding", embedding_name(c.embedding)},
             {"seed", c.seed}};
}

void from_json(const json& j, ProbeConfig& c) {
    check_keys(j, "probe",
               {"hidden", "activation", "epochs", "batch_size", "lr", "weight_decay", "embedding",
                "seed"});
    c.hidden = j.value("hidden", c.hidden);
    if (j.contains("activation"))
        c.activation = ad::activation_from_string(j.at("activation").get<std::string>());
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    if (j.contains("embedding"))
        c.embedding = embedding_from_string(j.at("embedding").get<std::string>());
    c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const SweepGrid& c) {
    j = json{{"lambda_od", c.lambda_od},
             {"lambda_e", c.lambda_e},
             {"gamma_od", c.gamma_od},
             {"gamma_e", c.gamma_e}};
}

void from_json(const json& j, SweepGrid& c) {
    check_keys(j, "sweep", {"lambda_od", "lambda_e", "gamma_od", "gamma_e"});
    c.lambda_od = j.value("lambda_od", c.lambda_od);
    c.lambda_e = j.value("lambda_e", c.lambda_e);
    c.gamma_od = j.value("gamma_od", c.gamma_od);
    c.gamma_e = j.value("gamma_e", c.gamma_e);
}

} // namespace fairdisc::eval

namespace fairdisc::config {

void DatasetSource::validate() const {
    switch (kind) {
    case Kind::Cache:
        if (train_cache.empty() || test_cache.empty())
            throw ConfigError("dataset: cache source needs train and test paths");
        break;
    case Kind::Synthetic:
        synthetic.validate();
        if (!(test_fraction > 0.0 && test_fraction < 1.0))
            throw ConfigError("dataset: test_fraction must be in (0, 1)");
        break;
    }
}

void RunConfig::validate() const {
    dataset.validate();
    if (model.input_dim != 0) {
        model.validate();
    } else {
        // width 0 = infer from the dataset at run time; validate the rest
        model::ModelConfig deferred = model;
        deferred.input_dim = 1;
        deferred.validate();
    }
    train.validate();
    probe.validate();
    sweep.validate();
    if (ablation_seeds.empty()) throw ConfigError("config: ablation_seeds must not be empty");
    if (sweep_seeds.empty()) throw ConfigError("config: sweep_seeds must not be empty");
}

void to_json(json& j, const DatasetSource& c) {
    switch (c.kind) {
    case DatasetSource::Kind::Cache:
        j = json{{"kind", "cache"}, {"train", c.train_cache}, {"test", c.test_cache}};
        break;
    case DatasetSource::Kind::Synthetic:
        j = json{{"kind", "synthetic"},
                 {"synthetic", c.synthetic},
                 {"test_fraction", c.test_fraction},
                 {"split_seed", c.split_seed}};
        break;
    }
}

void from_json(const json& j, DatasetSource& c) {
    check_keys(j, "dataset", {"kind", "train", "test", "synthetic", "test_fraction", "split_seed"});
    const std::string kind = j.value("kind", std::string{"synthetic"});
    if (kind == "cache") {
        c.kind = DatasetSource::Kind::Cache;
        c.train_cache = j.value("train", c.train_cache);
        c.test_cache = j.value("test", c.test_cache);
    } else if (kind == "synthetic") {
        c.kind = DatasetSource::Kind::Synthetic;
        if (j.contains("synthetic")) c.synthetic = j.at("synthetic").get<data::SyntheticSpec>();
        c.test_fraction = j.value("test_fraction", c.test_fraction);
        c.split_seed = j.value("split_seed", c.split_seed);
    } else {
        throw ConfigError("dataset: unknown kind '" + kind + "'; expected cache or synthetic");
    }
}

void to_json(json& j, const RunConfig& c) {
    j = json{{"dataset", c.dataset},          {"model", c.model},
             {"train", c.train},              {"probe", c.probe},
             {"ablation_seeds", c.ablation_seeds}, {"sweep", c.sweep},
             {"sweep_seeds", c.sweep_seeds}};
}

void from_json(const json& j, RunConfig& c) {
    check_keys(j, "run",
               {"dataset", "model", "train", "probe", "ablation_seeds", "sweep", "sweep_seeds"});
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<DatasetSource>();
    if (j.contains("model")) c.model = j.at("model").get<model::ModelConfig>();
    if (j.contains("train")) c.train = j.at("train").get<train::TrainConfig>();
    if (j.contains("probe")) c.probe = j.at("probe").get<eval::ProbeConfig>();
    c.ablation_seeds = j.value("ablation_seeds", c.ablation_seeds);
    if (j.contains("sweep")) c.sweep = j.at("sweep").get<eval::SweepGrid>();
    c.sweep_seeds = j.value("sweep_seeds", c.sweep_seeds);
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    try {
        return j.get<RunConfig>();
    } catch (const json::exception& e) {
        throw ConfigError("config is malformed: " + std::string(e.what()));
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_run_config(text);
    } catch (const ConfigError& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

std::string dump_run_config(const RunConfig& rc) {
    const json j = rc;
    return j.dump(2);
}

data::Splits resolve_dataset(const DatasetSource& src) {
    src.validate();
    if (src.kind == DatasetSource::Kind::Cache) {
        data::Splits out;
        out.train = data::load_cache(src.train_cache);
        out.test = data::load_cache(src.test_cache);
        if (out.train.dim() != out.test.dim())
            throw DataError("dataset caches disagree on feature width");
        if (out.train.n_classes != out.test.n_classes ||
            out.train.m_classes != out.test.m_classes)
            throw DataError("dataset caches disagree on class counts");
        return out;
    }
    const data::SyntheticDraw draw = data::gen_synthetic(src.synthetic);
    return data::split_and_standardize(draw.all, src.test_fraction, src.split_seed);
}

} // namespace fairdisc::config
