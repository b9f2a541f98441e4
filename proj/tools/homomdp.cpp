// Command-line front end: gen, certify, solve, suite, summarize.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include "homomdp/errors.hpp"
#include "homomdp/experiment.hpp"
#include "homomdp/homomorphism.hpp"
#include "homomdp/io.hpp"

namespace fs = std::filesystem;
using namespace homomdp;

namespace {

constexpr int kUsageError = 2;

void emit(const Json& j, const std::string& out) {
    if (out.empty()) std::cout << j.dump(2) << '\n';
    else write_json_file(out, j);
}

std::vector<ExperimentConfig> load_suite(const fs::path& path) {
    const Json j = read_json_file(path);
    if (!j.is_object() || !j.contains("configs") || !j.at("configs").is_array())
        throw ConfigError(path.string() + ": expected {\"configs\": [...]}");
    std::vector<ExperimentConfig> configs;
    for (const auto& item : j.at("configs")) {
        if (item.is_string()) {
            fs::path p = item.get<std::string>();
            if (p.is_relative()) p = path.parent_path() / p;
            configs.push_back(load_experiment_config(p));
        } else {
            configs.push_back(experiment_config_from_json(item));
        }
    }
    return configs;
}

void print_rows(const std::vector<SummaryRow>& rows) {
    for (const auto& r : rows) {
        std::printf("%-28s %-12s frac=%-5g seed=%-4llu J_S=%-12.8g iters=%-6d span_ok=%d %s\n",
                    r.task.c_str(), r.algorithm.c_str(), r.fraction,
                    static_cast<unsigned long long>(r.seed),
                    r.final_j_s ? *r.final_j_s : std::nan(""), r.iters, r.span_ok ? 1 : 0,
                    r.status.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homomorphic MDP reduction toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::string mdp_path;
    std::string encoding_path;
    std::string dir;
    std::optional<std::uint64_t> seed;
    int workers = 1;

    auto* gen = app.add_subcommand("gen", "Generate an MDP JSON from an environment spec");
    gen->add_option("--config", config_path, "Environment spec JSON")->required();
    gen->add_option("--seed", seed, "Override the spec seed");
    gen->add_option("--out", out, "Output file (default: stdout)");

    auto* certify = app.add_subcommand("certify", "Check the span condition for an encoding");
    certify->add_option("--mdp", mdp_path, "MDP JSON")->required();
    certify->add_option("--encoding", encoding_path, "Encoding JSON (default: identity)");
    certify->add_option("--out", out, "Output file (default: stdout)");

    auto* solve = app.add_subcommand("solve", "Run one experiment config");
    solve->add_option("--config", config_path, "Experiment config JSON")->required();
    solve->add_option("--seed", seed, "Override the solver and environment seed");
    solve->add_option("--out", out, "Override the output directory");

    auto* suite = app.add_subcommand("suite", "Run a list of experiment configs");
    suite->add_option("--config", config_path, "Suite JSON {\"configs\": [path or object]}")
        ->required();
    suite->add_option("--workers", workers, "Concurrent experiments")->check(CLI::PositiveNumber);
    suite->add_option("--seed", seed, "Override every seed");
    suite->add_option("--out", out, "Override every output directory");

    auto* summarize = app.add_subcommand("summarize", "Merge summary tables in a directory");
    summarize->add_option("dir", dir, "Results directory")->required();
    summarize->add_option("--out", out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    const auto apply_overrides = [&](ExperimentConfig& c) {
        if (seed) {
            c.env.seed = *seed;
            c.solver.seed = *seed;
        }
        if (!out.empty()) c.output_dir = out;
    };

    try {
        if (*gen) {
            EnvSpec spec = env_spec_from_json(read_json_file(config_path));
            if (seed) spec.seed = *seed;
            emit(mdp_to_json(generate(spec)), out);
        } else if (*certify) {
            const GroundMdp mdp = mdp_from_json(read_json_file(mdp_path));
            const EncodingMatrix enc = encoding_path.empty()
                                           ? EncodingMatrix::identity(mdp.n_states())
                                           : encoding_from_json(read_json_file(encoding_path));
            emit(span_report_to_json(span_condition_holds(enc, transition_basis(mdp))), out);
        } else if (*solve) {
            ExperimentConfig c = load_experiment_config(config_path);
            apply_overrides(c);
            print_rows(run_experiment(c));
        } else if (*suite) {
            std::vector<ExperimentConfig> configs = load_suite(config_path);
            for (auto& c : configs) apply_overrides(c);
            print_rows(run_suite(configs, workers));
        } else if (*summarize) {
            emit(summarize_directory(dir), out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DimensionError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const InvalidModel& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
