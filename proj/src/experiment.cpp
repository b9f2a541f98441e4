#include "homomdp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "homomdp/errors.hpp"

#ifndef HOMOMDP_VERSION
#define HOMOMDP_VERSION "unknown"
#endif

namespace homomdp {

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::PolicyIter: return "policy_iter";
        case Algorithm::Hpg: return "hpg";
        case Algorithm::Ebhpg: return "ebhpg";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
    if (name == "policy_iter") return Algorithm::PolicyIter;
    if (name == "hpg") return Algorithm::Hpg;
    if (name == "ebhpg") return Algorithm::Ebhpg;
    throw ConfigError("unknown algorithm '" + name + "' (expected policy_iter, hpg or ebhpg)");
}

std::vector<EnvSpec> small_benchmark_tasks(std::uint64_t seed, double gamma) {
    std::vector<EnvSpec> tasks;
    EnvSpec base;
    base.seed = seed;
    base.gamma = gamma;
    for (double density : {0.1, 0.5, 1.0}) {
        EnvSpec s = base;
        s.kind = EnvKind::Random;
        s.n_states = 100;
        s.n_actions = 10;
        s.density = density;
        tasks.push_back(s);
    }
    EnvSpec wc = base;
    wc.kind = EnvKind::WeaklyCoupled;
    wc.n_clusters = 10;
    wc.cluster_size = 10;
    wc.n_actions = 10;
    tasks.push_back(wc);
    EnvSpec fr = base;
    fr.kind = EnvKind::FourRoom;
    fr.side = 10;
    fr.thin_walls = true;
    tasks.push_back(fr);
    EnvSpec tq = base;
    tq.kind = EnvKind::TandemQueue;
    tq.q1_cap = 4;
    tq.q2_cap = 4;
    tq.max_servers = 2;
    tq.joint_actions = false;
    tasks.push_back(tq);
    return tasks;
}

void ExperimentConfig::validate() const {
    if (name.empty() || name.find('/') != std::string::npos)
        throw ConfigError("name must be non-empty and contain no '/'");
    if (!(abstract_fraction > 0.0 && abstract_fraction <= 1.0))
        throw ConfigError("abstract_fraction must lie in (0, 1]");
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    solver.validate();
}

Json experiment_config_to_json(const ExperimentConfig& c) {
    return Json{{"name", c.name},
                {"env", env_spec_to_json(c.env)},
                {"algorithm", to_string(c.algorithm)},
                {"abstract_fraction", c.abstract_fraction},
                {"solver", solver_config_to_json(c.solver)},
                {"repeats", c.repeats},
                {"output_dir", c.output_dir.string()}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : j.items()) {
        static const std::vector<std::string> allowed{
            "name", "env", "algorithm", "abstract_fraction", "solver", "repeats", "output_dir"};
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ConfigError("config: unknown field '" + item.key() + "'");
    }
    if (!j.contains("env")) throw ConfigError("config: missing field 'env'");
    if (!j.contains("algorithm")) throw ConfigError("config: missing field 'algorithm'");
    ExperimentConfig c;
    try {
        if (j.contains("name")) c.name = j.at("name").get<std::string>();
        c.env = env_spec_from_json(j.at("env"));
        c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
        if (j.contains("abstract_fraction"))
            c.abstract_fraction = j.at("abstract_fraction").get<double>();
        if (j.contains("solver")) c.solver = solver_config_from_json(j.at("solver"));
        if (j.contains("repeats")) c.repeats = j.at("repeats").get<int>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return experiment_config_from_json(read_json_file(path));
}

Json summary_row_to_json(const SummaryRow& r) {
    return Json{{"task", r.task},
                {"algorithm", r.algorithm},
                {"fraction", r.fraction},
                {"seed", r.seed},
                {"final_J_S", r.final_j_s ? Json(*r.final_j_s) : Json(nullptr)},
                {"iters", r.iters},
                {"wall_clock_s", r.wall_clock_s},
                {"span_ok", r.span_ok},
                {"status", r.status}};
}

SummaryRow summary_row_from_json(const Json& j) {
    SummaryRow r;
    r.task = j.at("task").get<std::string>();
    r.algorithm = j.at("algorithm").get<std::string>();
    r.fraction = j.at("fraction").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("final_J_S").is_null()) r.final_j_s = j.at("final_J_S").get<double>();
    r.iters = j.at("iters").get<int>();
    r.wall_clock_s = j.at("wall_clock_s").get<double>();
    r.span_ok = j.at("span_ok").get<bool>();
    r.status = j.value("status", std::string());
    return r;
}

RepeatResult run_repeat(const ExperimentConfig& config, int repeat) {
    EnvSpec env = config.env;
    env.seed += static_cast<std::uint64_t>(repeat);
    SolverConfig solver = config.solver;
    solver.seed += static_cast<std::uint64_t>(repeat);

    RepeatResult out;
    out.summary.task = config.env.task_name();
    out.summary.algorithm = to_string(config.algorithm);
    out.summary.fraction = config.abstract_fraction;
    out.summary.seed = solver.seed;

    try {
        const GroundMdp mdp = generate(env);
        switch (config.algorithm) {
            case Algorithm::PolicyIter: {
                PolicyIterationResult res = policy_iteration(mdp, solver.max_iters);
                out.record = std::move(res.record);
                out.summary.span_ok = true;
                out.summary.status = res.converged ? "converged" : "max_iters";
                out.n_abstract = mdp.n_states();
                break;
            }
            case Algorithm::Hpg: {
                const TransitionBasis basis = transition_basis(mdp);
                out.rank = basis.rank;
                out.n_abstract = abstract_size(config.abstract_fraction, basis.rank);
                const EncodingMatrix enc =
                    build_encoding_from_basis(basis, out.n_abstract, solver.seed);
                HpgResult res = hpg_run(mdp, enc, solver, nullptr, &basis);
                out.record = std::move(res.record);
                out.summary.span_ok = res.span.span_ok;
                out.summary.status = to_string(res.status);
                break;
            }
            case Algorithm::Ebhpg: {
                const TransitionBasis basis = transition_basis(mdp);
                out.rank = basis.rank;
                out.n_abstract = abstract_size(config.abstract_fraction, basis.rank);
                EbhpgResult res = ebhpg_run(mdp, out.n_abstract, solver, nullptr, &basis);
                out.record = std::move(res.record);
                try {
                    const EncodingMatrix enc = encoding_from_logits(res.encoding_params.omega);
                    out.summary.span_ok = span_condition_holds(enc, basis).span_ok;
                } catch (const NumericError&) {
                    out.summary.span_ok = false;
                }
                out.summary.status = to_string(res.status);
                break;
            }
        }
    } catch (const NumericError& e) {
        out.summary.status = std::string("error: ") + e.what();
    } catch (const InfeasibleEncoding& e) {
        out.summary.status = std::string("error: ") + e.what();
    }

    if (!out.record.empty()) {
        out.summary.final_j_s = out.record.back().j_s;
        out.summary.iters = out.record.back().iter;
        out.summary.wall_clock_s = out.record.back().wall_clock_s;
    }
    return out;
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = experiment_config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::filesystem::path record_path(const ExperimentConfig& config, int repeat) {
    return config.output_dir / (config.name + "_rep" + std::to_string(repeat) + ".csv");
}

std::filesystem::path summary_path(const ExperimentConfig& config) {
    return config.output_dir / (config.name + "_summary.json");
}

std::filesystem::path manifest_path(const ExperimentConfig& config) {
    return config.output_dir / (config.name + "_manifest.json");
}

std::vector<SummaryRow> run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.output_dir);

    std::vector<SummaryRow> rows;
    Json seeds = Json::array();
    for (int i = 0; i < config.repeats; ++i) {
        RepeatResult res = run_repeat(config, i);
        const auto path = record_path(config, i);
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        res.record.write_csv(out);
        if (!out) throw std::runtime_error("write failed for " + path.string());
        seeds.push_back({{"repeat", i},
                         {"env_seed", config.env.seed + static_cast<std::uint64_t>(i)},
                         {"solver_seed", res.summary.seed}});
        rows.push_back(std::move(res.summary));
    }

    Json table = Json::array();
    for (const auto& r : rows) table.push_back(summary_row_to_json(r));
    write_json_file(summary_path(config), Json{{"rows", table}});
    write_json_file(manifest_path(config), Json{{"config", experiment_config_to_json(config)},
                                                {"config_hash", config_hash(config)},
                                                {"seeds", seeds},
                                                {"version", HOMOMDP_VERSION}});
    return rows;
}

std::vector<SummaryRow> run_suite(const std::vector<ExperimentConfig>& configs, int workers) {
    for (const auto& c : configs) c.validate();
    std::vector<std::vector<SummaryRow>> results(configs.size());
    std::vector<std::exception_ptr> errors(configs.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            try {
                results[i] = run_experiment(configs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(configs.size(), 1)));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<SummaryRow> rows;
    for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
    return rows;
}

Json summarize_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        const std::string suffix = "_summary.json";
        if (entry.is_regular_file() && name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    Json rows = Json::array();
    for (const auto& f : files) {
        const Json j = read_json_file(f);
        try {
            for (const auto& r : j.at("rows")) rows.push_back(summary_row_to_json(summary_row_from_json(r)));
        } catch (const Json::exception& e) {
            throw ConfigError(f.string() + ": malformed summary: " + e.what());
        }
    }
    return Json{{"rows", rows}};
}

}  // namespace homomdp
