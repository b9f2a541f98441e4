#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "homomdp/errors.hpp"
#include "homomdp/experiment.hpp"
#include "homomdp/io.hpp"
#include "support/oracles.hpp"

using namespace homomdp;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("homomdp_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string without_wall_clock(const fs::path& csv) {
    std::ifstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        out << line.substr(0, a) << line.substr(b) << '\n';
    }
    return out.str();
}

}  // namespace

TEST(MdpJson, RoundTrip) {
    std::mt19937_64 rng(70);
    const GroundMdp mdp = oracle::random_mdp(rng, 4, 3, 0.95);
    const Json j = mdp_to_json(mdp);
    EXPECT_EQ(j.at("n_states"), 4);
    EXPECT_EQ(j.at("n_actions"), 3);
    EXPECT_EQ(j.at("transitions")[2][1][3].get<double>(), mdp.transition(2, 1)(3));
    EXPECT_EQ(j.at("rewards")[3][2].get<double>(), mdp.reward(3, 2));
    const GroundMdp back = mdp_from_json(Json::parse(j.dump()));
    EXPECT_TRUE(back.stacked() == mdp.stacked());
    EXPECT_TRUE(back.rewards() == mdp.rewards());
    EXPECT_EQ(back.discount(), 0.95);
}

TEST(MdpJson, Malformed) {
    EXPECT_THROW(mdp_from_json(Json{{"n_states", 1}}), ConfigError);
    Json j = Json::parse(R"({"n_states":1,"n_actions":1,"gamma":0.9,"transitions":[[[1.0, 0.0]]],"rewards":[[1]]})");
    EXPECT_THROW(mdp_from_json(j), DimensionError);
    j["transitions"] = "oops";
    EXPECT_THROW(mdp_from_json(j), ConfigError);
}

TEST(EncodingJson, RoundTrip) {
    std::mt19937_64 rng(71);
    const EncodingMatrix enc(oracle::random_stochastic(rng, 2, 5));
    const EncodingMatrix back = encoding_from_json(Json::parse(encoding_to_json(enc).dump()));
    EXPECT_TRUE(back.p_nu() == enc.p_nu());
}

TEST(EnvSpecJson, RoundTripAndUnknownFields) {
    EnvSpec spec;
    spec.kind = EnvKind::TandemQueue;
    spec.q1_cap = 3;
    spec.service_rates = {0.3, 0.45};
    spec.joint_actions = true;
    const EnvSpec back = env_spec_from_json(env_spec_to_json(spec));
    EXPECT_EQ(back.kind, EnvKind::TandemQueue);
    EXPECT_EQ(back.q1_cap, 3);
    EXPECT_EQ(back.service_rates.second, 0.45);
    EXPECT_TRUE(back.joint_actions);
    EXPECT_THROW(env_spec_from_json(Json{{"variant", "random"}, {"denisty", 0.5}}), ConfigError);
    EXPECT_THROW(env_spec_from_json(Json{{"variant", "maze"}}), ConfigError);
}

TEST(ExperimentConfig, ParsingAndValidation) {
    const Json j = Json::parse(R"({
        "name": "t", "env": {"variant": "random", "n_states": 5, "n_actions": 2},
        "algorithm": "hpg", "abstract_fraction": 0.5,
        "solver": {"learning_rate": 0.01, "improvement": "greedy"}, "repeats": 2,
        "output_dir": "x"})");
    const ExperimentConfig c = experiment_config_from_json(j);
    EXPECT_EQ(c.algorithm, Algorithm::Hpg);
    EXPECT_EQ(c.solver.improvement, Improvement::Greedy);
    EXPECT_EQ(c.repeats, 2);

    Json bad = j;
    bad["abstract_fraction"] = 0.0;
    EXPECT_THROW(experiment_config_from_json(bad), ConfigError);
    bad = j;
    bad["repeats"] = 0;
    EXPECT_THROW(experiment_config_from_json(bad), ConfigError);
    bad = j;
    bad["algorithm"] = "sarsa";
    EXPECT_THROW(experiment_config_from_json(bad), ConfigError);
    bad = j;
    bad["solver"]["improvement"] = "newton";
    EXPECT_THROW(experiment_config_from_json(bad), ConfigError);
    bad = j;
    bad["repeats"] = "two";
    EXPECT_THROW(experiment_config_from_json(bad), ConfigError);
    EXPECT_EQ(config_hash(c), config_hash(experiment_config_from_json(j)));
    ExperimentConfig other = c;
    other.repeats = 3;
    EXPECT_NE(config_hash(c), config_hash(other));
}

TEST(RunExperiment, PolicyIterOnOneStateMdp) {
    // A 1-state random MDP with a single action: V = r / (1 - gamma).
    ExperimentConfig c;
    c.name = "one";
    c.env.kind = EnvKind::Random;
    c.env.n_states = 1;
    c.env.n_actions = 1;
    c.env.gamma = 0.8;
    c.output_dir = scratch_dir("one");
    const auto rows = run_experiment(c);
    ASSERT_EQ(rows.size(), 1u);
    const double r = generate(c.env).reward(0, 0);
    ASSERT_TRUE(rows[0].final_j_s.has_value());
    EXPECT_NEAR(*rows[0].final_j_s, r / 0.2, 1e-12);
    EXPECT_TRUE(fs::exists(record_path(c, 0)));
    const Json summary = read_json_file(summary_path(c));
    EXPECT_EQ(summary.at("rows").size(), 1u);
    const Json manifest = read_json_file(manifest_path(c));
    EXPECT_EQ(manifest.at("config_hash"), config_hash(c));
    EXPECT_EQ(manifest.at("seeds").size(), 1u);
    EXPECT_TRUE(manifest.contains("version"));
}

TEST(RunExperiment, HpgMatchesPolicyIter) {
    const fs::path dir = scratch_dir("cross");
    ExperimentConfig pi;
    pi.name = "pi";
    pi.env.kind = EnvKind::Random;
    pi.env.n_states = 20;
    pi.env.n_actions = 4;
    pi.env.seed = 3;
    pi.output_dir = dir;
    ExperimentConfig hpg = pi;
    hpg.name = "hpg";
    hpg.algorithm = Algorithm::Hpg;
    hpg.solver.improvement = Improvement::Greedy;
    const auto a = run_experiment(pi);
    const auto b = run_experiment(hpg);
    EXPECT_NEAR(*a[0].final_j_s, *b[0].final_j_s, 1e-4);
    EXPECT_TRUE(b[0].span_ok);
    EXPECT_EQ(b[0].status, "converged");
}

TEST(RunExperiment, DeterministicApartFromWallClock) {
    ExperimentConfig c;
    c.name = "det";
    c.env.kind = EnvKind::Random;
    c.env.n_states = 12;
    c.env.n_actions = 3;
    c.algorithm = Algorithm::Ebhpg;
    c.abstract_fraction = 0.5;
    c.solver.max_iters = 40;
    c.solver.learning_rate = 0.1;
    c.repeats = 2;
    c.output_dir = scratch_dir("det");
    run_experiment(c);
    const std::string first = without_wall_clock(record_path(c, 1));
    run_experiment(c);
    EXPECT_EQ(first, without_wall_clock(record_path(c, 1)));
    EXPECT_NE(first, without_wall_clock(record_path(c, 0)));
}

TEST(RunExperiment, InvalidConfigRejectedBeforeRunning) {
    ExperimentConfig c;
    c.name = "bad";
    c.abstract_fraction = 1.5;
    c.output_dir = scratch_dir("bad");
    EXPECT_THROW(run_experiment(c), ConfigError);
    EXPECT_FALSE(fs::exists(summary_path(c)));
}

TEST(Suite, ParallelWorkersAndSummarize) {
    const fs::path dir = scratch_dir("suite");
    std::vector<ExperimentConfig> configs;
    for (double density : {0.1, 0.5, 1.0}) {
        for (double fraction : {0.2, 0.5, 0.8, 1.0}) {
            ExperimentConfig c;
            std::ostringstream name;
            name << "d" << density << "_f" << fraction;
            c.name = name.str();
            c.env.kind = EnvKind::Random;
            c.env.n_states = 20;
            c.env.n_actions = 3;
            c.env.density = density;
            c.algorithm = Algorithm::Hpg;
            c.abstract_fraction = fraction;
            c.solver.improvement = Improvement::Greedy;
            c.solver.max_iters = 50;
            c.output_dir = dir;
            configs.push_back(c);
        }
    }
    const auto rows = run_suite(configs, 3);
    EXPECT_EQ(rows.size(), 12u);
    const Json table = summarize_directory(dir);
    EXPECT_EQ(table.at("rows").size(), 12u);
    EXPECT_EQ(summarize_directory(scratch_dir("empty")).at("rows").size(), 0u);
}
