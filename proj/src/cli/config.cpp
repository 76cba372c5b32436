#include <fstream>
#include <set>

#include "tabppo/cli.hpp"
#include "tabppo/random.hpp"

namespace tabppo::cli {

std::string to_string(TrainerKind kind) { return kind == TrainerKind::ppo ? "ppo" : "ce"; }

TrainerKind trainer_kind_from_string(const std::string& name) {
    if (name == "ppo") return TrainerKind::ppo;
    if (name == "ce") return TrainerKind::ce;
    throw ConfigError("unknown trainer '" + name + "' (expected ppo or ce)");
}

void RunConfig::validate() const {
    const bool has_csv = !data.csv.empty();
    const bool has_synth = data.synthetic.has_value();
    if (has_csv == has_synth) {
        throw ConfigError(has_csv ? "data: give either csv or synthetic, not both"
                                  : "data: no data source (set data.csv, data.synthetic or --data)");
    }
    if (!data.preset.empty() && data.preset != "ton_iot") {
        throw ConfigError("data.preset: unknown preset '" + data.preset + "' (expected ton_iot)");
    }
    if (!(data.train_fraction > 0.0 && data.train_fraction <= 1.0)) {
        throw ConfigError("data.train_fraction must be in (0, 1]");
    }
    if (has_csv && data.label_column.empty()) throw ConfigError("data.label_column must not be empty");
    try {
        if (has_synth) data.synthetic->validate();
        encoder.validate();
        reward.validate();
        ppo.validate();
        ce.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (out.empty()) throw ConfigError("out must not be empty");
}

namespace {

void reject_unknown(const nlohmann::json& j, const nlohmann::json& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

nlohmann::json data_to_json(const DataConfig& d) {
    nlohmann::json j;
    if (!d.csv.empty()) {
        j["csv"] = d.csv;
        j["label_column"] = d.label_column;
        j["preset"] = d.preset;
        j["categorical_columns"] = d.categorical_columns;
        j["numerical_columns"] = d.numerical_columns;
    }
    if (d.synthetic) j["synthetic"] = *d.synthetic;
    j["train_fraction"] = d.train_fraction;
    return j;
}

DataConfig data_from_json(const nlohmann::json& j) {
    reject_unknown(j,
                   {{"csv", 0},
                    {"label_column", 0},
                    {"preset", 0},
                    {"categorical_columns", 0},
                    {"numerical_columns", 0},
                    {"synthetic", 0},
                    {"train_fraction", 0}},
                   "data");
    DataConfig d;
    d.csv = j.value("csv", d.csv);
    d.preset = j.value("preset", d.preset);
    d.label_column = j.value("label_column", d.preset == "ton_iot" ? std::string("type") : d.label_column);
    d.categorical_columns = j.value("categorical_columns", d.categorical_columns);
    d.numerical_columns = j.value("numerical_columns", d.numerical_columns);
    if (j.contains("synthetic")) {
        reject_unknown(j.at("synthetic"), nlohmann::json(data::SyntheticSpec{}), "data.synthetic");
        d.synthetic = j.at("synthetic").get<data::SyntheticSpec>();
    }
    d.train_fraction = j.value("train_fraction", d.train_fraction);
    return d;
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
    return {{"data", data_to_json(c.data)},
            {"encoder", c.encoder},
            {"reward", c.reward},
            {"ppo", c.ppo},
            {"ce", c.ce},
            {"trainer", to_string(c.trainer)},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"out", c.out}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    const RunConfig defaults;
    try {
        reject_unknown(j, to_json(defaults), "config");
        RunConfig c;
        if (j.contains("data")) c.data = data_from_json(j.at("data"));
        if (j.contains("encoder")) {
            reject_unknown(j.at("encoder"), nlohmann::json(defaults.encoder), "encoder");
            c.encoder = j.at("encoder").get<model::EncoderConfig>();
        }
        if (j.contains("reward")) {
            reject_unknown(j.at("reward"), nlohmann::json(defaults.reward), "reward");
            c.reward = j.at("reward").get<reward::RewardConfig>();
        }
        if (j.contains("ppo")) {
            reject_unknown(j.at("ppo"), nlohmann::json(defaults.ppo), "ppo");
            c.ppo = j.at("ppo").get<rl::PpoConfig>();
        }
        if (j.contains("ce")) {
            reject_unknown(j.at("ce"), nlohmann::json(defaults.ce), "ce");
            c.ce = j.at("ce").get<rl::CeConfig>();
        }
        if (j.contains("trainer")) c.trainer = trainer_kind_from_string(j.at("trainer").get<std::string>());
        c.epochs = j.value("epochs", c.epochs);
        c.seed = j.value("seed", c.seed);
        c.out = j.value("out", c.out);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

void save_run_config(const RunConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(c).dump(2) << '\n';
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_path, const Overrides& o) {
    RunConfig c = config_path ? load_run_config(*config_path) : RunConfig{};
    if (o.data) {
        c.data.csv = *o.data;
        c.data.synthetic.reset();
    }
    if (o.label_column) c.data.label_column = *o.label_column;
    if (o.trainer) c.trainer = trainer_kind_from_string(*o.trainer);
    if (o.encoder) {
        try {
            c.encoder.kind = model::encoder_kind_from_string(*o.encoder);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (o.seed) c.seed = *o.seed;
    if (o.epochs) c.epochs = *o.epochs;
    if (o.out) c.out = *o.out;
    return c;
}

data::PreparedData load_data(const RunConfig& config) {
    const std::uint64_t split_seed = derive_seed(config.seed, "split");
    if (config.data.synthetic) {
        return data::prepare(data::generate_synthetic(*config.data.synthetic), config.data.train_fraction, split_seed);
    }
    data::CsvOptions opts = config.data.preset == "ton_iot" ? data::ton_iot_options() : data::CsvOptions{};
    opts.label_column = config.data.label_column;
    if (!config.data.categorical_columns.empty() || !config.data.numerical_columns.empty()) {
        opts.categorical_columns = config.data.categorical_columns;
        opts.numerical_columns = config.data.numerical_columns;
    }
    opts.train_fraction = config.data.train_fraction;
    opts.split_seed = split_seed;
    return data::load_csv(config.data.csv, opts);
}

}  // namespace tabppo::cli
