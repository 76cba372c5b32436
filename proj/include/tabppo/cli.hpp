#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabppo/data.hpp"
#include "tabppo/encoder.hpp"
#include "tabppo/metrics.hpp"
#include "tabppo/reward.hpp"
#include "tabppo/rl.hpp"

namespace tabppo::cli {

enum ExitCode : int { ok = 0, config_error = 2, data_error = 3, numerical_abort = 4 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TrainerKind { ppo, ce };

std::string to_string(TrainerKind kind);
TrainerKind trainer_kind_from_string(const std::string& name);

/// Either a CSV file or a synthetic spec, never both.
struct DataConfig {
    std::string csv;
    std::string label_column = "label";
    /// "ton_iot" selects the TON_IoT column layout; empty infers column kinds.
    std::string preset;
    std::vector<std::string> categorical_columns;
    std::vector<std::string> numerical_columns;
    std::optional<data::SyntheticSpec> synthetic;
    double train_fraction = 0.8;
};

struct RunConfig {
    DataConfig data;
    model::EncoderConfig encoder;
    reward::RewardConfig reward;
    rl::PpoConfig ppo;
    rl::CeConfig ce;
    TrainerKind trainer = TrainerKind::ppo;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    std::string out = "run";

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& c, const std::filesystem::path& path);

/// Command-line values that win over the config file.
struct Overrides {
    std::optional<std::string> data;
    std::optional<std::string> label_column;
    std::optional<std::string> trainer;
    std::optional<std::string> encoder;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    std::optional<std::string> out;
};

RunConfig resolve_config(const std::optional<std::filesystem::path>& config_path, const Overrides& overrides);

/// Train/test data for a run; the split uses the run seed's "split" stream.
data::PreparedData load_data(const RunConfig& config);

struct TrainResult {
    std::vector<rl::EpochMetrics> log;
    metrics::ClassReport report;
};

/// Writes the synthetic CSV, its schema and the materialized spec into out_dir.
void cmd_generate(const data::SyntheticSpec& spec, const std::filesystem::path& out_dir, std::ostream& log);

/// Writes config.json, schema.json, metrics.jsonl, checkpoint.json, report.txt,
/// report.kv and run.log into config.out.
TrainResult cmd_train(const RunConfig& config, std::ostream& log);

/// Reports a checkpoint against an encoded dataset. The schema must match the
/// one stored next to the checkpoint.
metrics::ClassReport cmd_eval(const std::filesystem::path& checkpoint, const data::Dataset& ds);

struct AblationRow {
    std::string variant;
    bool ok = false;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::string error;
    int code = ExitCode::ok;  // exit code the failure would have produced alone
};

/// TT+PPO, TT+CE and MLP+PPO on the same data and seed; each variant trains
/// into its own subdirectory of config.out. A failing variant is reported and
/// the others still run.
std::vector<AblationRow> cmd_ablate(const RunConfig& base, std::ostream& log);
std::string ablation_table(const std::vector<AblationRow>& rows);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tabppo::cli
