#include "homomdp/io.hpp"

#include <fstream>
#include <set>

#include "homomdp/errors.hpp"

namespace homomdp {

namespace {

template <class T>
T field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
void optional_field(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(std::string(what) + ": unknown field '" + item.key() + "'");
}

}  // namespace

Json mdp_to_json(const GroundMdp& mdp) {
    Json trans = Json::array();
    Json rew = Json::array();
    for (int s = 0; s < mdp.n_states(); ++s) {
        Json per_action = Json::array();
        Json r = Json::array();
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const VectorXd row = mdp.transition(s, a).transpose();
            per_action.push_back(std::vector<double>(row.data(), row.data() + row.size()));
            r.push_back(mdp.reward(s, a));
        }
        trans.push_back(std::move(per_action));
        rew.push_back(std::move(r));
    }
    return Json{{"n_states", mdp.n_states()},
                {"n_actions", mdp.n_actions()},
                {"gamma", mdp.discount()},
                {"transitions", std::move(trans)},
                {"rewards", std::move(rew)}};
}

GroundMdp mdp_from_json(const Json& j) {
    const int ns = field<int>(j, "n_states");
    const int na = field<int>(j, "n_actions");
    const double gamma = field<double>(j, "gamma");
    const auto trans = field<std::vector<std::vector<std::vector<double>>>>(j, "transitions");
    const auto rew = field<std::vector<std::vector<double>>>(j, "rewards");
    if (ns < 1 || na < 1) throw DimensionError("mdp: n_states and n_actions must be >= 1");
    if (static_cast<int>(trans.size()) != ns || static_cast<int>(rew.size()) != ns)
        throw DimensionError("mdp: transitions/rewards must have n_states entries");
    MatrixXd p(static_cast<Eigen::Index>(ns) * na, ns);
    MatrixXd r(ns, na);
    for (int s = 0; s < ns; ++s) {
        if (static_cast<int>(trans[s].size()) != na || static_cast<int>(rew[s].size()) != na)
            throw DimensionError("mdp: state " + std::to_string(s) + " must have n_actions entries");
        for (int a = 0; a < na; ++a) {
            if (static_cast<int>(trans[s][a].size()) != ns)
                throw DimensionError("mdp: transition row must have n_states entries");
            for (int t = 0; t < ns; ++t) p(static_cast<Eigen::Index>(s) * na + a, t) = trans[s][a][t];
            r(s, a) = rew[s][a];
        }
    }
    return GroundMdp(std::move(p), std::move(r), gamma);
}

Json encoding_to_json(const EncodingMatrix& enc) {
    Json rows = Json::array();
    for (int u = 0; u < enc.n_abstract(); ++u) {
        const VectorXd row = enc.p_nu().row(u).transpose();
        rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
    }
    return Json{{"n_abstract", enc.n_abstract()}, {"n_states", enc.n_states()}, {"rows", rows}};
}

EncodingMatrix encoding_from_json(const Json& j) {
    const auto rows = field<std::vector<std::vector<double>>>(j, "rows");
    int nu = static_cast<int>(rows.size());
    int ns = rows.empty() ? 0 : static_cast<int>(rows[0].size());
    optional_field(j, "n_abstract", nu);
    optional_field(j, "n_states", ns);
    if (nu < 1 || static_cast<int>(rows.size()) != nu)
        throw DimensionError("encoding: rows must have n_abstract >= 1 entries");
    MatrixXd p(nu, ns);
    for (int u = 0; u < nu; ++u) {
        if (static_cast<int>(rows[u].size()) != ns)
            throw DimensionError("encoding: every row must have n_states entries");
        for (int s = 0; s < ns; ++s) p(u, s) = rows[u][s];
    }
    return EncodingMatrix(std::move(p));
}

Json span_report_to_json(const SpanReport& report) {
    Json worst = nullptr;
    if (report.worst_pair.first >= 0) worst = {report.worst_pair.first, report.worst_pair.second};
    return Json{{"span_ok", report.span_ok},
                {"rank", report.rank},
                {"max_residual", report.max_residual},
                {"tolerance", report.tolerance},
                {"worst_pair", worst}};
}

Json env_spec_to_json(const EnvSpec& spec) {
    Json j{{"variant", to_string(spec.kind)}, {"gamma", spec.gamma}, {"seed", spec.seed}};
    switch (spec.kind) {
        case EnvKind::Random:
            j["n_states"] = spec.n_states;
            j["n_actions"] = spec.n_actions;
            j["density"] = spec.density;
            break;
        case EnvKind::WeaklyCoupled:
            j["n_clusters"] = spec.n_clusters;
            j["cluster_size"] = spec.cluster_size;
            j["n_actions"] = spec.n_actions;
            j["inter_prob"] = spec.inter_prob;
            break;
        case EnvKind::FourRoom:
            j["side"] = spec.side;
            j["thin_walls"] = spec.thin_walls;
            break;
        case EnvKind::TandemQueue:
            j["q1_cap"] = spec.q1_cap;
            j["q2_cap"] = spec.q2_cap;
            j["max_servers"] = spec.max_servers;
            j["arrival_rate"] = spec.arrival_rate;
            j["service_rates"] = {spec.service_rates.first, spec.service_rates.second};
            j["cost_weights"] = {spec.cost_weights.first, spec.cost_weights.second};
            j["joint_actions"] = spec.joint_actions;
            break;
    }
    return j;
}

EnvSpec env_spec_from_json(const Json& j) {
    reject_unknown(j,
                   {"variant", "gamma", "seed", "n_states", "n_actions", "density", "n_clusters",
                    "cluster_size", "inter_prob", "side", "thin_walls", "q1_cap", "q2_cap", "max_servers",
                    "arrival_rate", "service_rates", "cost_weights", "joint_actions"},
                   "env");
    EnvSpec spec;
    spec.kind = env_kind_from_string(field<std::string>(j, "variant"));
    optional_field(j, "gamma", spec.gamma);
    optional_field(j, "seed", spec.seed);
    optional_field(j, "n_states", spec.n_states);
    optional_field(j, "n_actions", spec.n_actions);
    optional_field(j, "density", spec.density);
    optional_field(j, "n_clusters", spec.n_clusters);
    optional_field(j, "cluster_size", spec.cluster_size);
    optional_field(j, "inter_prob", spec.inter_prob);
    optional_field(j, "side", spec.side);
    optional_field(j, "thin_walls", spec.thin_walls);
    optional_field(j, "q1_cap", spec.q1_cap);
    optional_field(j, "q2_cap", spec.q2_cap);
    optional_field(j, "max_servers", spec.max_servers);
    optional_field(j, "arrival_rate", spec.arrival_rate);
    optional_field(j, "service_rates", spec.service_rates);
    optional_field(j, "cost_weights", spec.cost_weights);
    optional_field(j, "joint_actions", spec.joint_actions);
    return spec;
}

Json solver_config_to_json(const SolverConfig& c) {
    return Json{{"learning_rate", c.learning_rate},
                {"max_iters", c.max_iters},
                {"epsilon", c.epsilon},
                {"ground_eval_every", c.ground_eval_every},
                {"seed", c.seed},
                {"improvement", c.improvement == Improvement::Greedy ? "greedy" : "gradient"},
                {"grad_tol", c.grad_tol},
                {"greedy_tol", c.greedy_tol}};
}

SolverConfig solver_config_from_json(const Json& j) {
    reject_unknown(j,
                   {"learning_rate", "max_iters", "epsilon", "ground_eval_every", "seed",
                    "improvement", "grad_tol", "greedy_tol"},
                   "solver");
    SolverConfig c;
    optional_field(j, "learning_rate", c.learning_rate);
    optional_field(j, "max_iters", c.max_iters);
    optional_field(j, "epsilon", c.epsilon);
    optional_field(j, "ground_eval_every", c.ground_eval_every);
    optional_field(j, "seed", c.seed);
    optional_field(j, "grad_tol", c.grad_tol);
    optional_field(j, "greedy_tol", c.greedy_tol);
    std::string improvement = "gradient";
    optional_field(j, "improvement", improvement);
    if (improvement == "gradient") c.improvement = Improvement::Gradient;
    else if (improvement == "greedy") c.improvement = Improvement::Greedy;
    else throw ConfigError("solver: improvement must be 'gradient' or 'greedy'");
    c.validate();
    return c;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace homomdp
