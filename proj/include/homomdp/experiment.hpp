#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "homomdp/environments.hpp"
#include "homomdp/io.hpp"
#include "homomdp/solvers.hpp"

namespace homomdp {

enum class Algorithm { PolicyIter, Hpg, Ebhpg };

/**
 * The six |S| = 100 benchmark tasks: random models at densities 0.1, 0.5 and
 * 1.0 and a 10 x 10 weakly coupled MDP (|A| = 10), a thin-wall four-room grid
 * of side 10 (|A| = 4), and a 5 x 5 x 2 x 2 tandem queue with shared server
 * modes (|A| = 3).
 */
std::vector<EnvSpec> small_benchmark_tasks(std::uint64_t seed = 0, double gamma = 0.9);

std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);

/**
 * One experiment. Repeat i uses environment seed env.seed + i and solver
 * seed solver.seed + i; |U| = max(1, int(abstract_fraction * r)).
 */
struct ExperimentConfig {
    std::string name = "experiment";
    EnvSpec env;
    Algorithm algorithm = Algorithm::PolicyIter;
    double abstract_fraction = 1.0;
    SolverConfig solver;
    int repeats = 1;
    std::filesystem::path output_dir = "results";

    void validate() const;
};

Json experiment_config_to_json(const ExperimentConfig& config);
/// Throws ConfigError on malformed input.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct SummaryRow {
    std::string task;
    std::string algorithm;
    double fraction = 1.0;
    std::uint64_t seed = 0;
    std::optional<double> final_j_s;  ///< empty when the run aborted before logging
    int iters = 0;
    double wall_clock_s = 0.0;
    bool span_ok = false;
    std::string status;
};

Json summary_row_to_json(const SummaryRow& row);
SummaryRow summary_row_from_json(const Json& j);

struct RepeatResult {
    SummaryRow summary;
    RunRecord record;
    int n_abstract = 0;
    int rank = 0;
};

/// Runs a single repeat in memory; solver failures are reported in the status.
RepeatResult run_repeat(const ExperimentConfig& config, int repeat);

/// 64-bit FNV-1a of the compact JSON form of the config.
std::string config_hash(const ExperimentConfig& config);

std::filesystem::path record_path(const ExperimentConfig& config, int repeat);
std::filesystem::path summary_path(const ExperimentConfig& config);
std::filesystem::path manifest_path(const ExperimentConfig& config);

/// Writes one CSV per repeat, the summary JSON and the manifest.
std::vector<SummaryRow> run_experiment(const ExperimentConfig& config);

/// Runs every config; up to `workers` experiments at once. Throws on the first
/// infrastructure failure after all workers finish.
std::vector<SummaryRow> run_suite(const std::vector<ExperimentConfig>& configs, int workers);

/// Merges every *_summary.json under `dir` (sorted by file name) into {rows: [...]}.
Json summarize_directory(const std::filesystem::path& dir);

}  // namespace homomdp
