#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "homomdp/mdp.hpp"

namespace homomdp {

/// Small deterministic generator whose output does not depend on the standard
/// library implementation (std:: distributions are not portable).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Uniform integer in [0, n).
    int below(int n);
    /// Normalized Dirichlet(1, ..., 1) sample of length n.
    std::vector<double> dirichlet(int n);

private:
    std::uint64_t state_;
};

enum class EnvKind { Random, WeaklyCoupled, FourRoom, TandemQueue };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

/// Generator parameters. Only the fields relevant to `kind` are read.
struct EnvSpec {
    EnvKind kind = EnvKind::Random;
    double gamma = 0.9;
    std::uint64_t seed = 0;

    // random
    int n_states = 100;
    int n_actions = 10;
    double density = 1.0;

    // weakly_coupled (n_actions shared with random)
    int n_clusters = 10;
    int cluster_size = 10;
    double inter_prob = 0.05;

    // four_room
    int side = 11;
    bool thin_walls = false;

    // tandem_queue
    int q1_cap = 4;
    int q2_cap = 4;
    int max_servers = 2;
    double arrival_rate = 0.6;
    std::pair<double, double> service_rates{0.4, 0.4};
    std::pair<double, double> cost_weights{1.0, 0.5};
    bool joint_actions = false;  ///< 9 joint actions instead of 3 shared modes

    /// Short human-readable identifier, e.g. "random_d0.1".
    std::string task_name() const;
};

GroundMdp gen_random_mdp(int n_states, int n_actions, double density, double gamma,
                         std::uint64_t seed);

GroundMdp gen_weakly_coupled(int n_clusters, int cluster_size, int n_actions, double inter_prob,
                             double gamma, std::uint64_t seed);

/**
 * Four-room gridworld on a side x side grid.
 *
 * Layout rule: with m = side / 2, row m and column m are wall cells (side odd)
 * and each of the four wall segments has one doorway at its midpoint. With
 * `thin_walls` the walls run between cells m - 1 and m instead, so every cell
 * is a state and |S| = side^2. Start is the top-left cell, goal the
 * bottom-right cell. Actions are North, East, South, West.
 */
struct FourRoom {
    GroundMdp mdp;
    int side = 0;
    int start = 0;
    int goal = 0;
    std::vector<std::pair<int, int>> cells;  ///< (row, col) of each state
};

enum FourRoomAction { North = 0, East = 1, South = 2, West = 3 };

/// Number of open cells for a given side under the layout rule.
int four_room_states(int side, bool thin_walls = false);

FourRoom gen_four_room(int side, double gamma, std::uint64_t seed = 0, bool thin_walls = false);

/// States from which `target` is reachable with positive probability under some policy.
std::vector<bool> can_reach(const GroundMdp& mdp, int target);

struct TandemQueueParams {
    int q1_cap = 4;
    int q2_cap = 4;
    int max_servers = 2;
    double arrival_rate = 0.6;
    double service1 = 0.4;
    double service2 = 0.4;
    double holding_cost = 1.0;
    double server_cost = 0.5;
    bool joint_actions = false;
};

/// State index of (len1, len2, servers1, servers2); servers are 1-based.
int tandem_index(const TandemQueueParams& p, int len1, int len2, int srv1, int srv2);
int tandem_states(const TandemQueueParams& p);

/**
 * Two serial queues with parallel servers in discrete time.
 *
 * Per slot: the action sets the server counts (remove / retain / add, clamped
 * to [1, max_servers]); queue 2 serves Binomial(min(len2, srv2), service2)
 * jobs; queue 1 serves Binomial(min(len1, srv1), service1) jobs of which as
 * many as fit move to queue 2; one job arrives at queue 1 with probability
 * arrival_rate and is dropped when it is full. The reward is
 * 1 - (holding_cost * (len1 + len2) + server_cost * (srv1' + srv2')) / max_cost.
 */
GroundMdp gen_tandem_queue(const TandemQueueParams& params, double gamma);

GroundMdp generate(const EnvSpec& spec);

}  // namespace homomdp
