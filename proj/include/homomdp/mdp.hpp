#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

#include "homomdp/run_record.hpp"

namespace homomdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Tolerance for probability rows summing to one.
inline constexpr double kStochasticTol = 1e-12;
/// Default Bellman residual tolerance for exact evaluation.
inline constexpr double kBellmanTol = 1e-9;

/**
 * Tabular MDP (S, A, P_SA, gamma, r).
 *
 * Transitions are stored stacked: row `s * n_actions + a` holds P(. | s, a).
 * This is also the matrix whose rows are the elementary transition vectors.
 */
class GroundMdp {
public:
    /// Validates stochasticity, finiteness and 0 <= gamma < 1.
    GroundMdp(MatrixXd stacked_transitions, MatrixXd rewards, double discount);

    int n_states() const noexcept { return static_cast<int>(rewards_.rows()); }
    int n_actions() const noexcept { return static_cast<int>(rewards_.cols()); }
    double discount() const noexcept { return discount_; }

    /// (|S||A|) x |S| stacked transition matrix.
    const MatrixXd& stacked() const noexcept { return transitions_; }
    /// |S| x |A| reward table.
    const MatrixXd& rewards() const noexcept { return rewards_; }

    Eigen::Index row_index(int s, int a) const noexcept {
        return static_cast<Eigen::Index>(s) * n_actions() + a;
    }
    auto transition(int s, int a) const { return transitions_.row(row_index(s, a)); }
    double reward(int s, int a) const { return rewards_(s, a); }

private:
    MatrixXd transitions_;
    MatrixXd rewards_;
    double discount_;
};

/// Stochastic policy pi[s][a].
class PolicyMatrix {
public:
    explicit PolicyMatrix(MatrixXd probs);

    /// Deterministic policy from one action index per state.
    static PolicyMatrix deterministic(const std::vector<int>& actions, int n_actions);
    static PolicyMatrix uniform(int n_states, int n_actions);

    const MatrixXd& probs() const noexcept { return probs_; }
    int n_states() const noexcept { return static_cast<int>(probs_.rows()); }
    int n_actions() const noexcept { return static_cast<int>(probs_.cols()); }

    /// Highest-probability action per state, lowest index on ties.
    std::vector<int> greedy_actions() const;

private:
    MatrixXd probs_;
};

/**
 * Markov reward process (P, R, gamma).
 *
 * Chains built from a ground MDP are row-stochastic. Abstract chains produced
 * when the span condition fails are general linear operators, so the check is
 * opt-out.
 */
class MarkovChain {
public:
    enum class Check { Stochastic, None };

    MarkovChain(MatrixXd transition, VectorXd reward, double discount,
                Check check = Check::Stochastic);

    const MatrixXd& transition() const noexcept { return transition_; }
    const VectorXd& reward() const noexcept { return reward_; }
    double discount() const noexcept { return discount_; }
    int size() const noexcept { return static_cast<int>(reward_.size()); }

    /// max_s |sum_s' P(s, s') - 1|
    double row_sum_drift() const;
    double min_entry() const { return transition_.minCoeff(); }

private:
    MatrixXd transition_;
    VectorXd reward_;
    double discount_;
};

struct ValueVector {
    VectorXd values;
};

/// Probability vector over states (ground or abstract).
class InitialDistribution {
public:
    explicit InitialDistribution(VectorXd xi);
    static InitialDistribution uniform(int n);
    static InitialDistribution point(int n, int index);

    const VectorXd& xi() const noexcept { return xi_; }
    int size() const noexcept { return static_cast<int>(xi_.size()); }

private:
    VectorXd xi_;
};

/// P^pi(s'|s) = sum_a pi(a|s) P(s'|s,a), R^pi(s) = sum_a pi(a|s) r(s,a).
MarkovChain induce_chain(const GroundMdp& mdp, const PolicyMatrix& policy);

/// Expected one-step reward R^pi only.
VectorXd policy_reward(const GroundMdp& mdp, const PolicyMatrix& policy);

/// Solves (I - gamma P) V = R with a dense LU factorization.
/// Throws NumericError when the residual stays above kBellmanTol.
ValueVector exact_value(const MarkovChain& chain);

/// Same solve for a raw (P, R, gamma) triple; no stochasticity requirement.
VectorXd solve_value(const MatrixXd& transition, const VectorXd& reward, double discount);

/// ||V - (R + gamma P V)||_inf
double bellman_residual(const MarkovChain& chain, const VectorXd& v);

/// Q(s,a) = r(s,a) + gamma sum_s' P(s'|s,a) V(s')
MatrixXd q_values(const GroundMdp& mdp, const ValueVector& v);

/// J = xi^T V
double performance(const InitialDistribution& xi, const ValueVector& v);

struct PolicyIterationResult {
    PolicyMatrix policy;
    ValueVector value;
    RunRecord record;
    bool converged = false;
    int iterations = 0;
};

/**
 * Howard policy iteration with exact evaluation and greedy improvement.
 *
 * Ties keep the current action unless another beats it by more than `tol`;
 * among strictly better actions the lowest index wins. J_S in the record uses
 * `xi` (uniform when omitted).
 */
PolicyIterationResult policy_iteration(const GroundMdp& mdp, int max_iters = 1000,
                                       double tol = 1e-12,
                                       const InitialDistribution* xi = nullptr);

}  // namespace homomdp
