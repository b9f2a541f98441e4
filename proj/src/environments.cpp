#include "homomdp/environments.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "homomdp/errors.hpp"

namespace homomdp {

SeededRng::SeededRng(std::uint64_t seed) : state_(seed) {}

// splitmix64
std::uint64_t SeededRng::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SeededRng::uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

int SeededRng::below(int n) {
    return std::min(n - 1, static_cast<int>(uniform() * n));
}

std::vector<double> SeededRng::dirichlet(int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (auto& x : w) {
        x = -std::log(uniform());
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

std::string to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::Random: return "random";
        case EnvKind::WeaklyCoupled: return "weakly_coupled";
        case EnvKind::FourRoom: return "four_room";
        case EnvKind::TandemQueue: return "tandem_queue";
    }
    return "unknown";
}

EnvKind env_kind_from_string(const std::string& name) {
    if (name == "random") return EnvKind::Random;
    if (name == "weakly_coupled") return EnvKind::WeaklyCoupled;
    if (name == "four_room") return EnvKind::FourRoom;
    if (name == "tandem_queue") return EnvKind::TandemQueue;
    throw ConfigError("unknown environment variant '" + name + "'");
}

std::string EnvSpec::task_name() const {
    std::ostringstream os;
    switch (kind) {
        case EnvKind::Random: os << "random_d" << density; break;
        case EnvKind::WeaklyCoupled: os << "weakly_coupled_" << n_clusters << "x" << cluster_size; break;
        case EnvKind::FourRoom: os << "four_room_" << four_room_states(side, thin_walls); break;
        case EnvKind::TandemQueue:
            os << "tandem_queue_" << tandem_states({q1_cap, q2_cap, max_servers, arrival_rate,
                                                    service_rates.first, service_rates.second,
                                                    cost_weights.first, cost_weights.second,
                                                    joint_actions});
            break;
    }
    return os.str();
}

namespace {

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidModel("gamma must lie in [0, 1)");
}

MatrixXd uniform_rewards(int n_states, int n_actions, SeededRng& rng) {
    MatrixXd r(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) r(s, a) = rng.uniform();
    return r;
}

// k distinct indices from [0, n) by partial Fisher-Yates.
std::vector<int> choose(int n, int k, SeededRng& rng) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

}  // namespace

GroundMdp gen_random_mdp(int n_states, int n_actions, double density, double gamma,
                         std::uint64_t seed) {
    if (n_states < 1 || n_actions < 1) throw DimensionError("gen_random_mdp: sizes must be >= 1");
    if (!(density > 0.0 && density <= 1.0) || density * n_states < 1.0)
        throw InvalidModel("gen_random_mdp: density must lie in (0, 1] with density * |S| >= 1");
    check_gamma(gamma);

    const int k = std::clamp(static_cast<int>(std::lround(density * n_states)), 1, n_states);
    SeededRng rng(seed);
    MatrixXd p = MatrixXd::Zero(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
    for (Eigen::Index row = 0; row < p.rows(); ++row) {
        const std::vector<int> cols = choose(n_states, k, rng);
        const std::vector<double> w = rng.dirichlet(k);
        for (int i = 0; i < k; ++i) p(row, cols[i]) = w[i];
    }
    MatrixXd r = uniform_rewards(n_states, n_actions, rng);
    return GroundMdp(std::move(p), std::move(r), gamma);
}

GroundMdp gen_weakly_coupled(int n_clusters, int cluster_size, int n_actions, double inter_prob,
                             double gamma, std::uint64_t seed) {
    if (n_clusters < 1 || cluster_size < 1 || n_actions < 1)
        throw DimensionError("gen_weakly_coupled: sizes must be >= 1");
    if (!(inter_prob >= 0.0 && inter_prob < 0.5))
        throw InvalidModel("gen_weakly_coupled: inter_prob must lie in [0, 0.5)");
    if (n_clusters == 1 && inter_prob > 0.0)
        throw InvalidModel("gen_weakly_coupled: inter_prob > 0 needs at least two clusters");
    check_gamma(gamma);

    // Inter-cluster mass goes to a few random states outside the block.
    constexpr int kInterTargets = 2;
    const int n = n_clusters * cluster_size;
    const int outside = n - cluster_size;
    SeededRng rng(seed);
    MatrixXd p = MatrixXd::Zero(static_cast<Eigen::Index>(n) * n_actions, n);
    for (int s = 0; s < n; ++s) {
        const int base = (s / cluster_size) * cluster_size;
        for (int a = 0; a < n_actions; ++a) {
            const Eigen::Index row = static_cast<Eigen::Index>(s) * n_actions + a;
            const std::vector<double> intra = rng.dirichlet(cluster_size);
            for (int j = 0; j < cluster_size; ++j) p(row, base + j) = (1.0 - inter_prob) * intra[j];
            if (inter_prob == 0.0) continue;
            const int m = std::min(kInterTargets, outside);
            const std::vector<int> picks = choose(outside, m, rng);
            const std::vector<double> w = rng.dirichlet(m);
            for (int i = 0; i < m; ++i) {
                const int target = picks[i] < base ? picks[i] : picks[i] + cluster_size;
                p(row, target) = inter_prob * w[i];
            }
        }
    }
    MatrixXd r = uniform_rewards(n, n_actions, rng);
    return GroundMdp(std::move(p), std::move(r), gamma);
}

namespace {

bool four_room_open(int side, bool thin, int row, int col) {
    if (thin) return true;
    const int m = side / 2;
    const int door_low = (m - 1) / 2;
    const int door_high = m + 1 + (side - m - 2) / 2;
    if (row == m && col == m) return false;
    if (col == m) return row == door_low || row == door_high;
    if (row == m) return col == door_low || col == door_high;
    return true;
}

// Thin walls sit between index m - 1 and m on both axes.
bool thin_wall_blocks(int side, int r, int c, int nr, int nc) {
    const int m = side / 2;
    const int door_low = (m - 1) / 2;
    const int door_high = m + (side - m - 1) / 2;
    const auto crosses = [m](int a, int b) { return std::min(a, b) == m - 1 && std::max(a, b) == m; };
    if (r == nr && crosses(c, nc)) return r != door_low && r != door_high;
    if (c == nc && crosses(r, nr)) return c != door_low && c != door_high;
    return false;
}

}  // namespace

int four_room_states(int side, bool thin_walls) {
    int count = 0;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) count += four_room_open(side, thin_walls, r, c) ? 1 : 0;
    return count;
}

FourRoom gen_four_room(int side, double gamma, std::uint64_t /*seed*/, bool thin_walls) {
    if (thin_walls ? side < 4 : (side < 5 || side % 2 == 0))
        throw InvalidModel(thin_walls ? "gen_four_room: side must be >= 4"
                                      : "gen_four_room: side must be odd and >= 5");
    check_gamma(gamma);
    constexpr double kSuccess = 0.8;
    constexpr int kDr[4] = {-1, 0, 1, 0};
    constexpr int kDc[4] = {0, 1, 0, -1};

    FourRoom out{GroundMdp(MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1), gamma), side, 0, 0, {}};
    std::vector<int> index(static_cast<std::size_t>(side * side), -1);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            if (!four_room_open(side, thin_walls, r, c)) continue;
            index[static_cast<std::size_t>(r * side + c)] = static_cast<int>(out.cells.size());
            out.cells.emplace_back(r, c);
        }
    }
    const int n = static_cast<int>(out.cells.size());
    out.start = index[0];
    out.goal = index[static_cast<std::size_t>(side * side - 1)];

    MatrixXd p = MatrixXd::Zero(static_cast<Eigen::Index>(n) * 4, n);
    MatrixXd rew = MatrixXd::Zero(n, 4);
    for (int s = 0; s < n; ++s) {
        const auto [r, c] = out.cells[static_cast<std::size_t>(s)];
        for (int a = 0; a < 4; ++a) {
            const Eigen::Index row = static_cast<Eigen::Index>(s) * 4 + a;
            if (s == out.goal) {
                p(row, out.start) = 1.0;
                rew(s, a) = 1.0;
                continue;
            }
            const int nr = r + kDr[a];
            const int nc = c + kDc[a];
            const bool valid = nr >= 0 && nr < side && nc >= 0 && nc < side &&
                               four_room_open(side, thin_walls, nr, nc) &&
                               !(thin_walls && thin_wall_blocks(side, r, c, nr, nc));
            if (!valid) {
                p(row, s) = 1.0;
                continue;
            }
            p(row, index[static_cast<std::size_t>(nr * side + nc)]) = kSuccess;
            p(row, s) = 1.0 - kSuccess;
        }
    }
    out.mdp = GroundMdp(std::move(p), std::move(rew), gamma);
    return out;
}

std::vector<bool> can_reach(const GroundMdp& mdp, int target) {
    const int n = mdp.n_states();
    // Reverse BFS over the support graph.
    std::vector<std::vector<int>> preds(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const auto row = mdp.stacked().row(mdp.row_index(s, a));
            for (int t = 0; t < n; ++t)
                if (row(t) > 0.0) preds[static_cast<std::size_t>(t)].push_back(s);
        }
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::deque<int> queue{target};
    seen[static_cast<std::size_t>(target)] = true;
    while (!queue.empty()) {
        const int t = queue.front();
        queue.pop_front();
        for (int s : preds[static_cast<std::size_t>(t)]) {
            if (seen[static_cast<std::size_t>(s)]) continue;
            seen[static_cast<std::size_t>(s)] = true;
            queue.push_back(s);
        }
    }
    return seen;
}

int tandem_states(const TandemQueueParams& p) {
    return (p.q1_cap + 1) * (p.q2_cap + 1) * p.max_servers * p.max_servers;
}

int tandem_index(const TandemQueueParams& p, int len1, int len2, int srv1, int srv2) {
    return ((len1 * (p.q2_cap + 1) + len2) * p.max_servers + (srv1 - 1)) * p.max_servers +
           (srv2 - 1);
}

namespace {

std::vector<double> binomial_pmf(int n, double q) {
    std::vector<double> pmf(static_cast<std::size_t>(n + 1));
    double coeff = 1.0;
    for (int k = 0; k <= n; ++k) {
        pmf[static_cast<std::size_t>(k)] = coeff * std::pow(q, k) * std::pow(1.0 - q, n - k);
        coeff = coeff * (n - k) / (k + 1);
    }
    return pmf;
}

}  // namespace

GroundMdp gen_tandem_queue(const TandemQueueParams& p, double gamma) {
    if (p.q1_cap < 1 || p.q2_cap < 1 || p.max_servers < 1)
        throw InvalidModel("gen_tandem_queue: capacities and max_servers must be >= 1");
    const auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!(p.arrival_rate >= 0.0 && p.arrival_rate < 1.0) || !open_unit(p.service1) ||
        !open_unit(p.service2))
        throw InvalidModel("gen_tandem_queue: rates must lie in (0, 1)");
    if (!(p.holding_cost >= 0.0 && p.server_cost >= 0.0) ||
        p.holding_cost + p.server_cost <= 0.0)
        throw InvalidModel("gen_tandem_queue: cost weights must be non-negative, not both zero");
    check_gamma(gamma);

    const int n = tandem_states(p);
    const int na = p.joint_actions ? 9 : 3;
    const double max_cost =
        p.holding_cost * (p.q1_cap + p.q2_cap) + p.server_cost * 2.0 * p.max_servers;
    MatrixXd trans = MatrixXd::Zero(static_cast<Eigen::Index>(n) * na, n);
    MatrixXd rew(n, na);

    for (int l1 = 0; l1 <= p.q1_cap; ++l1)
    for (int l2 = 0; l2 <= p.q2_cap; ++l2)
    for (int k1 = 1; k1 <= p.max_servers; ++k1)
    for (int k2 = 1; k2 <= p.max_servers; ++k2) {
        const int s = tandem_index(p, l1, l2, k1, k2);
        for (int a = 0; a < na; ++a) {
            // mode 0 = remove, 1 = retain, 2 = add
            const int m1 = p.joint_actions ? a / 3 : a;
            const int m2 = p.joint_actions ? a % 3 : a;
            const int s1 = std::clamp(k1 + m1 - 1, 1, p.max_servers);
            const int s2 = std::clamp(k2 + m2 - 1, 1, p.max_servers);
            rew(s, a) = 1.0 - (p.holding_cost * (l1 + l2) + p.server_cost * (s1 + s2)) / max_cost;

            const Eigen::Index row = static_cast<Eigen::Index>(s) * na + a;
            const std::vector<double> out2 = binomial_pmf(std::min(l2, s2), p.service2);
            const std::vector<double> out1 = binomial_pmf(std::min(l1, s1), p.service1);
            for (std::size_t d2 = 0; d2 < out2.size(); ++d2) {
                for (std::size_t c1 = 0; c1 < out1.size(); ++c1) {
                    const int after2 = l2 - static_cast<int>(d2);
                    const int moved = std::min(static_cast<int>(c1), p.q2_cap - after2);
                    const int n2 = after2 + moved;
                    const int base1 = l1 - moved;
                    const double w = out2[d2] * out1[c1];
                    const int arrive = std::min(p.q1_cap, base1 + 1);
                    trans(row, tandem_index(p, arrive, n2, s1, s2)) += w * p.arrival_rate;
                    trans(row, tandem_index(p, base1, n2, s1, s2)) += w * (1.0 - p.arrival_rate);
                }
            }
            // Renormalize away rounding in the products of pmf terms.
            trans.row(row) /= trans.row(row).sum();
        }
    }
    return GroundMdp(std::move(trans), std::move(rew), gamma);
}

GroundMdp generate(const EnvSpec& spec) {
    switch (spec.kind) {
        case EnvKind::Random:
            return gen_random_mdp(spec.n_states, spec.n_actions, spec.density, spec.gamma, spec.seed);
        case EnvKind::WeaklyCoupled:
            return gen_weakly_coupled(spec.n_clusters, spec.cluster_size, spec.n_actions,
                                      spec.inter_prob, spec.gamma, spec.seed);
        case EnvKind::FourRoom:
            return gen_four_room(spec.side, spec.gamma, spec.seed, spec.thin_walls).mdp;
        case EnvKind::TandemQueue: {
            TandemQueueParams p{spec.q1_cap, spec.q2_cap, spec.max_servers, spec.arrival_rate,
                                spec.service_rates.first, spec.service_rates.second,
                                spec.cost_weights.first, spec.cost_weights.second,
                                spec.joint_actions};
            return gen_tandem_queue(p, spec.gamma);
        }
    }
    throw ConfigError("generate: unknown environment variant");
}

}  // namespace homomdp
