#include <cstdio>
#include <fstream>
#include <ostream>

#include "tabppo/cli.hpp"
#include "tabppo/random.hpp"

namespace tabppo::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

/// Sends every line both to the caller's stream and to run.log.
class RunLog {
public:
    RunLog(std::ostream& console, const fs::path& file) : console_(console), file_(file) {
        if (!file_) throw std::runtime_error("cannot write " + file.string());
    }
    void line(const std::string& text) {
        console_ << text << '\n';
        file_ << text << '\n';
        file_.flush();
    }

private:
    std::ostream& console_;
    std::ofstream file_;
};

std::string epoch_line(const rl::EpochMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "epoch %zu  reward %.4f  policy_loss %.4f  value_loss %.4f  clip %.3f  test_acc %.4f  "
                  "test_macro_f1 %.4f",
                  m.epoch, m.mean_reward, m.policy_loss, m.value_loss, m.clip_fraction, m.test_accuracy,
                  m.test_macro_f1);
    return buf;
}

bool same_layout(const model::InputLayout& a, const model::InputLayout& b) {
    return a.vocab_sizes == b.vocab_sizes && a.n_numerical == b.n_numerical && a.n_classes == b.n_classes;
}

}  // namespace

void cmd_generate(const data::SyntheticSpec& spec, const fs::path& out_dir, std::ostream& log) {
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("synthetic spec: ") + e.what());
    }
    fs::create_directories(out_dir);
    const auto ds = data::generate_synthetic(spec);
    data::write_csv(ds, out_dir / "data.csv", "label");
    ds.schema->save(out_dir / "schema.json");
    write_text(out_dir / "spec.json", nlohmann::json(spec).dump(2) + "\n");
    const auto counts = ds.class_counts();
    log << "wrote " << ds.rows << " rows to " << (out_dir / "data.csv").string() << '\n';
    for (std::size_t c = 0; c < counts.size(); ++c) log << "  " << ds.schema->labels[c] << ": " << counts[c] << '\n';
}

TrainResult cmd_train(const RunConfig& config, std::ostream& console) {
    config.validate();
    auto prepared = load_data(config);

    const auto layout = model::InputLayout::from_schema(*prepared.schema);
    std::mt19937_64 init_rng(derive_seed(config.seed, "init"));
    model::PolicyValueNet net;
    try {
        net = model::PolicyValueNet(config.encoder, layout, init_rng);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model does not fit the data: ") + e.what());
    }

    const fs::path out(config.out);
    fs::create_directories(out);
    save_run_config(config, out / "config.json");
    prepared.schema->save(out / "schema.json");
    RunLog log(console, out / "run.log");
    log.line("trainer " + to_string(config.trainer) + ", encoder " + model::to_string(config.encoder.kind) +
             ", seed " + std::to_string(config.seed) + ", epochs " + std::to_string(config.epochs));
    log.line("train rows " + std::to_string(prepared.train.rows) + ", test rows " +
             std::to_string(prepared.test.rows) + ", classes " + std::to_string(prepared.schema->n_classes()));
    for (const auto& w : prepared.warnings) log.line("warning: " + w);
    if (config.trainer == TrainerKind::ppo && config.ppo.entropy_coef != 0.0) {
        log.line("note: entropy bonus enabled, entropy_coef " + nlohmann::json(config.ppo.entropy_coef).dump());
    }

    const double lr = config.trainer == TrainerKind::ppo ? config.ppo.learning_rate : config.ce.learning_rate;
    auto state = rl::TrainerState::create(std::move(net), lr, config.reward.window_k, config.seed);

    std::ofstream metrics_log(out / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!metrics_log) throw std::runtime_error("cannot write " + (out / "metrics.jsonl").string());
    auto on_epoch = [&](const rl::EpochMetrics& m, const rl::TrainerState&) {
        metrics_log << nlohmann::json(m).dump() << '\n';
        metrics_log.flush();
        log.line(epoch_line(m));
    };

    TrainResult result;
    if (config.trainer == TrainerKind::ppo) {
        result.log = rl::train_ppo(prepared.train, state, config.ppo, config.reward, config.epochs, &prepared.test,
                                   on_epoch);
    } else {
        result.log = rl::train_cross_entropy(prepared.train, state, config.ce, config.epochs, &prepared.test, on_epoch);
    }

    state.save(out / "checkpoint.json");
    result.report = rl::evaluate_model(state.net, prepared.test);
    write_text(out / "report.txt", result.report.to_table());
    write_text(out / "report.kv", result.report.to_key_values());
    log.line("test accuracy " + std::to_string(result.report.accuracy) + ", macro F1 " +
             std::to_string(result.report.macro_f1));
    return result;
}

metrics::ClassReport cmd_eval(const fs::path& checkpoint, const data::Dataset& ds) {
    const auto state = rl::TrainerState::load(checkpoint);
    const auto expected = state.net.encoder().layout();
    const auto actual = model::InputLayout::from_schema(*ds.schema);
    if (!same_layout(expected, actual)) {
        throw data::SchemaError("dataset layout does not match the checkpoint: model expects " +
                                nlohmann::json(expected).dump() + ", data has " + nlohmann::json(actual).dump());
    }
    return rl::evaluate_model(state.net, ds);
}

std::vector<AblationRow> cmd_ablate(const RunConfig& base, std::ostream& log) {
    base.validate();
    struct Variant {
        const char* name;
        const char* dir;
        model::EncoderKind encoder;
        TrainerKind trainer;
    };
    const Variant variants[] = {
        {"TT+PPO", "tt_ppo", model::EncoderKind::transformer, TrainerKind::ppo},
        {"TT+CE (no PPO)", "tt_ce", model::EncoderKind::transformer, TrainerKind::ce},
        {"MLP+PPO (no TT)", "mlp_ppo", model::EncoderKind::mlp, TrainerKind::ppo},
    };
    log << "ablation seed " << base.seed << " shared by all variants\n";
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        RunConfig cfg = base;
        cfg.encoder.kind = v.encoder;
        cfg.trainer = v.trainer;
        cfg.out = (fs::path(base.out) / v.dir).string();
        AblationRow row;
        row.variant = v.name;
        log << "== " << v.name << '\n';
        try {
            const auto r = cmd_train(cfg, log);
            row.ok = true;
            row.accuracy = r.report.accuracy;
            row.macro_f1 = r.report.macro_f1;
        } catch (const ConfigError& e) {
            row.error = e.what();
            row.code = ExitCode::config_error;
        } catch (const num::NumericalError& e) {
            row.error = e.what();
            row.code = ExitCode::numerical_abort;
        } catch (const std::exception& e) {
            row.error = e.what();
            row.code = ExitCode::data_error;
        }
        if (!row.ok) {
            log << "variant " << v.name << " failed: " << row.error << '\n';
        }
        rows.push_back(row);
    }
    fs::create_directories(base.out);
    write_text(fs::path(base.out) / "ablation.txt", ablation_table(rows));
    nlohmann::json j{{"seed", base.seed}, {"variants", nlohmann::json::array()}};
    for (const auto& r : rows) {
        j["variants"].push_back(
            {{"variant", r.variant}, {"ok", r.ok}, {"accuracy", r.accuracy}, {"macro_f1", r.macro_f1}, {"error", r.error}});
    }
    write_text(fs::path(base.out) / "ablation.json", j.dump(2) + "\n");
    return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-18s  %9s  %9s\n", "Variant", "Accuracy", "Macro-F1");
    out += buf;
    for (const auto& r : rows) {
        if (r.ok) {
            std::snprintf(buf, sizeof buf, "%-18s  %8.2f%%  %8.2f%%\n", r.variant.c_str(), 100.0 * r.accuracy,
                          100.0 * r.macro_f1);
        } else {
            std::snprintf(buf, sizeof buf, "%-18s  %9s  %9s\n", r.variant.c_str(), "failed", "failed");
        }
        out += buf;
    }
    return out;
}

}  // namespace tabppo::cli
