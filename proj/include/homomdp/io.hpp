#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "homomdp/environments.hpp"
#include "homomdp/homomorphism.hpp"
#include "homomdp/mdp.hpp"
#include "homomdp/solvers.hpp"

namespace homomdp {

using Json = nlohmann::json;

/// {n_states, n_actions, gamma, transitions[s][a][s'], rewards[s][a]}
Json mdp_to_json(const GroundMdp& mdp);
/// Throws ConfigError on missing or mistyped fields, model errors as usual.
GroundMdp mdp_from_json(const Json& j);

/// {n_abstract, n_states, rows[u][s]}
Json encoding_to_json(const EncodingMatrix& enc);
EncodingMatrix encoding_from_json(const Json& j);

/// {span_ok, rank, max_residual, tolerance, worst_pair: [s, a] or null}
Json span_report_to_json(const SpanReport& report);

Json env_spec_to_json(const EnvSpec& spec);
/// Missing fields keep their defaults; unknown fields are rejected.
EnvSpec env_spec_from_json(const Json& j);

Json solver_config_to_json(const SolverConfig& config);
SolverConfig solver_config_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Writes pretty-printed JSON followed by a newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace homomdp
