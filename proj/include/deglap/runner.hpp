// Batch experiment driver: JSON configs in, CSV/JSON artifacts out.
#ifndef DEGLAP_RUNNER_HPP
#define DEGLAP_RUNNER_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

namespace deglap {

/// A validated experiment: command, effective seed (after the DEGLAP_SEED
/// override), output directory and the canonical config hash embedded in
/// every artifact.
struct ExperimentConfig {
    std::string command;
    nlohmann::json doc;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out_dir = "out";
    std::string config_hash;
};

/// Loads and schema-checks a config file for the given command.  Top-level
/// shape: {command?, seed?, out_dir?, inputs?, params?}; unknown keys are
/// rejected everywhere.  Throws ConfigError on any schema violation.
ExperimentConfig load_config(const std::string& command, const std::string& config_path,
                             int threads, const std::string& out_override);

/// Runs the experiment and writes its artifacts atomically under out_dir.
/// Returns the process exit code: 0 on success, 3 when a solve fails to
/// converge.  Schema problems throw ConfigError, numerical failures throw
/// NumericError; the CLI maps those to exit codes 2 and 3.
int run_experiment(const ExperimentConfig& cfg);

/// Markdown table over every check-report JSON found in out_dir.  Refuses to
/// mix different config hashes unless allow_mixed is set.
std::string report_summary(const std::string& out_dir, bool allow_mixed = false);

} // namespace deglap

#endif
