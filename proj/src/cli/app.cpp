#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "tabppo/cli.hpp"

namespace tabppo::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config, data, label_column, trainer, encoder, out;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* epochs_opt = nullptr;

    Overrides overrides() const {
        Overrides o;
        if (!data.empty()) o.data = data;
        if (!label_column.empty()) o.label_column = label_column;
        if (!trainer.empty()) o.trainer = trainer;
        if (!encoder.empty()) o.encoder = encoder;
        if (!out.empty()) o.out = out;
        if (seed_opt && seed_opt->count()) o.seed = seed;
        if (epochs_opt && epochs_opt->count()) o.epochs = epochs;
        return o;
    }
    std::optional<fs::path> config_path() const {
        return config.empty() ? std::nullopt : std::optional<fs::path>(config);
    }
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON run configuration");
    cmd->add_option("--data", f.data, "CSV dataset (replaces the config's data source)");
    cmd->add_option("--label-column", f.label_column, "label column of the CSV");
    cmd->add_option("--trainer", f.trainer, "ppo or ce")->check(CLI::IsMember({"ppo", "ce"}));
    cmd->add_option("--encoder", f.encoder, "transformer or mlp")->check(CLI::IsMember({"transformer", "mlp"}));
    f.seed_opt = cmd->add_option("--seed", f.seed, "run seed");
    f.epochs_opt = cmd->add_option("--epochs", f.epochs, "training epochs");
    cmd->add_option("--out", f.out, "output directory");
}

data::SyntheticSpec generate_spec(const Flags& f) {
    data::SyntheticSpec spec;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw ConfigError("cannot read config " + f.config);
        nlohmann::json j;
        try {
            in >> j;
            // a bare synthetic spec or a run config carrying data.synthetic
            if (j.contains("samples_per_class")) {
                spec = j.get<data::SyntheticSpec>();
            } else {
                auto rc = run_config_from_json(j);
                if (!rc.data.synthetic) throw ConfigError("config has no data.synthetic section");
                spec = *rc.data.synthetic;
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config " + f.config + ": " + e.what());
        }
    }
    if (f.seed_opt->count()) spec.seed = f.seed;
    return spec;
}

data::Dataset eval_dataset(const Flags& f, const fs::path& checkpoint, const std::string& split,
                           const std::string& schema_path) {
    const fs::path schema_file = schema_path.empty() ? checkpoint.parent_path() / "schema.json" : fs::path(schema_path);
    auto schema = std::make_shared<const data::FeatureSchema>(data::FeatureSchema::load(schema_file));
    if (!f.data.empty()) {
        const std::string label = f.label_column.empty() ? "label" : f.label_column;
        return data::encode_csv(f.data, label, schema);
    }
    std::optional<fs::path> cfg_path = f.config_path();
    if (!cfg_path) cfg_path = checkpoint.parent_path() / "config.json";
    auto cfg = resolve_config(cfg_path, f.overrides());
    cfg.validate();
    auto prepared = load_data(cfg);
    const auto diff = schema->layout_diff(*prepared.schema);
    if (!diff.empty()) {
        std::string msg = "data does not match the checkpoint schema:";
        for (const auto& d : diff) msg += "\n  " + d;
        throw data::SchemaError(msg);
    }
    return split == "train" ? prepared.train : prepared.test;
}

void write_report(const metrics::ClassReport& r, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream(dir / "report.txt") << r.to_table();
    std::ofstream(dir / "report.kv") << r.to_key_values();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tabular intrusion detection with a transformer encoder trained by PPO"};
    app.require_subcommand(1);

    Flags gen_f, train_f, eval_f, ablate_f;
    auto* gen = app.add_subcommand("generate", "write a synthetic dataset (data.csv, schema.json, spec.json)");
    add_common(gen, gen_f);
    auto* train = app.add_subcommand("train", "train a model and report on the test split");
    add_common(train, train_f);
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval, eval_f);
    std::string checkpoint, split = "test", schema_path;
    eval->add_option("--checkpoint", checkpoint, "checkpoint.json written by train")->required();
    eval->add_option("--split", split, "split of the config's data source when --data is absent")
        ->check(CLI::IsMember({"train", "test"}));
    eval->add_option("--schema", schema_path, "schema sidecar (defaults to the checkpoint's directory)");
    auto* ablate = app.add_subcommand("ablate", "run TT+PPO, TT+CE and MLP+PPO on shared data and seed");
    add_common(ablate, ablate_f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitCode::ok : ExitCode::config_error;
    }

    try {
        if (*gen) {
            const auto spec = generate_spec(gen_f);
            cmd_generate(spec, gen_f.out.empty() ? fs::path("data") : fs::path(gen_f.out), out);
        } else if (*train) {
            cmd_train(resolve_config(train_f.config_path(), train_f.overrides()), out);
        } else if (*eval) {
            const auto ds = eval_dataset(eval_f, checkpoint, split, schema_path);
            const auto report = cmd_eval(checkpoint, ds);
            out << report.to_table();
            if (!eval_f.out.empty()) write_report(report, eval_f.out);
        } else if (*ablate) {
            const auto rows = cmd_ablate(resolve_config(ablate_f.config_path(), ablate_f.overrides()), out);
            out << '\n' << ablation_table(rows);
            for (const auto& r : rows)
                if (!r.ok) return r.code;
        }
        return ExitCode::ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return ExitCode::config_error;
    } catch (const num::NumericalError& e) {
        err << "numerical abort: " << e.what() << '\n';
        return ExitCode::numerical_abort;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << '\n';
        return ExitCode::data_error;
    }
}

}  // namespace tabppo::cli
