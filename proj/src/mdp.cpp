#include "homomdp/mdp.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "homomdp/errors.hpp"

namespace homomdp {

namespace {

void check_stochastic_rows(const MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw InvalidModel(std::string(what) + ": non-finite entry");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (m.row(i).minCoeff() < 0.0) {
            std::ostringstream os;
            os << what << ": negative probability in row " << i;
            throw InvalidModel(os.str());
        }
        const double sum = m.row(i).sum();
        if (std::abs(sum - 1.0) > kStochasticTol) {
            std::ostringstream os;
            os << what << ": row " << i << " sums to " << sum;
            throw InvalidModel(os.str());
        }
    }
}

}  // namespace

GroundMdp::GroundMdp(MatrixXd stacked_transitions, MatrixXd rewards, double discount)
    : transitions_(std::move(stacked_transitions)), rewards_(std::move(rewards)),
      discount_(discount) {
    if (rewards_.rows() < 1 || rewards_.cols() < 1)
        throw DimensionError("GroundMdp: need at least one state and one action");
    if (transitions_.rows() != rewards_.rows() * rewards_.cols() ||
        transitions_.cols() != rewards_.rows()) {
        std::ostringstream os;
        os << "GroundMdp: transitions are " << transitions_.rows() << "x" << transitions_.cols()
           << ", expected " << rewards_.rows() * rewards_.cols() << "x" << rewards_.rows();
        throw DimensionError(os.str());
    }
    if (!(discount_ >= 0.0 && discount_ < 1.0))
        throw InvalidModel("GroundMdp: discount must lie in [0, 1)");
    if (!rewards_.allFinite()) throw InvalidModel("GroundMdp: rewards must be finite");
    check_stochastic_rows(transitions_, "GroundMdp transitions");
}

PolicyMatrix::PolicyMatrix(MatrixXd probs) : probs_(std::move(probs)) {
    if (probs_.rows() < 1 || probs_.cols() < 1) throw DimensionError("PolicyMatrix: empty");
    check_stochastic_rows(probs_, "PolicyMatrix");
}

PolicyMatrix PolicyMatrix::deterministic(const std::vector<int>& actions, int n_actions) {
    MatrixXd p = MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions)
            throw DimensionError("PolicyMatrix::deterministic: action out of range");
        p(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return PolicyMatrix(std::move(p));
}

PolicyMatrix PolicyMatrix::uniform(int n_states, int n_actions) {
    return PolicyMatrix(MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions));
}

std::vector<int> PolicyMatrix::greedy_actions() const {
    std::vector<int> out(static_cast<std::size_t>(n_states()));
    for (int s = 0; s < n_states(); ++s) {
        Eigen::Index best = 0;
        probs_.row(s).maxCoeff(&best);  // first maximum
        out[static_cast<std::size_t>(s)] = static_cast<int>(best);
    }
    return out;
}

MarkovChain::MarkovChain(MatrixXd transition, VectorXd reward, double discount, Check check)
    : transition_(std::move(transition)), reward_(std::move(reward)), discount_(discount) {
    if (transition_.rows() != transition_.cols() || transition_.rows() != reward_.size())
        throw DimensionError("MarkovChain: transition must be square and match reward length");
    if (!reward_.allFinite()) throw InvalidModel("MarkovChain: reward must be finite");
    if (!(discount_ >= 0.0 && discount_ < 1.0))
        throw InvalidModel("MarkovChain: discount must lie in [0, 1)");
    if (check == Check::Stochastic) check_stochastic_rows(transition_, "MarkovChain");
    else if (!transition_.allFinite())
        throw InvalidModel("MarkovChain: transition must be finite");
}

double MarkovChain::row_sum_drift() const {
    return (transition_.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

InitialDistribution::InitialDistribution(VectorXd xi) : xi_(std::move(xi)) {
    if (xi_.size() < 1) throw DimensionError("InitialDistribution: empty");
    if (!xi_.allFinite() || xi_.minCoeff() < 0.0)
        throw InvalidModel("InitialDistribution: entries must be finite and non-negative");
    if (std::abs(xi_.sum() - 1.0) > kStochasticTol)
        throw InvalidModel("InitialDistribution: entries must sum to 1");
}

InitialDistribution InitialDistribution::uniform(int n) {
    return InitialDistribution(VectorXd::Constant(n, 1.0 / n));
}

InitialDistribution InitialDistribution::point(int n, int index) {
    VectorXd xi = VectorXd::Zero(n);
    xi(index) = 1.0;
    return InitialDistribution(std::move(xi));
}

namespace {

void check_policy_shape(const GroundMdp& mdp, const PolicyMatrix& policy) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw DimensionError("policy shape does not match the MDP");
}

}  // namespace

VectorXd policy_reward(const GroundMdp& mdp, const PolicyMatrix& policy) {
    check_policy_shape(mdp, policy);
    return mdp.rewards().cwiseProduct(policy.probs()).rowwise().sum();
}

MarkovChain induce_chain(const GroundMdp& mdp, const PolicyMatrix& policy) {
    check_policy_shape(mdp, policy);
    const int n = mdp.n_states();
    const int na = mdp.n_actions();
    MatrixXd p = MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < na; ++a) {
            const double w = policy.probs()(s, a);
            if (w != 0.0) p.row(s).noalias() += w * mdp.transition(s, a);
        }
    }
    return MarkovChain(std::move(p), policy_reward(mdp, policy), mdp.discount());
}

VectorXd solve_value(const MatrixXd& transition, const VectorXd& reward, double discount) {
    const Eigen::Index n = reward.size();
    if (transition.rows() != n || transition.cols() != n)
        throw DimensionError("solve_value: shape mismatch");
    MatrixXd a = MatrixXd::Identity(n, n) - discount * transition;
    Eigen::PartialPivLU<MatrixXd> lu(a);
    VectorXd v = lu.solve(reward);
    if (!v.allFinite()) throw NumericError("solve_value: singular system (I - gamma P)");
    // One step of iterative refinement.
    VectorXd r = reward - a * v;
    if (r.lpNorm<Eigen::Infinity>() > kBellmanTol) {
        v += lu.solve(r);
        r = reward - a * v;
    }
    if (!v.allFinite() || r.lpNorm<Eigen::Infinity>() > kBellmanTol) {
        const double cond = lu.rcond() > 0.0 ? 1.0 / lu.rcond() : INFINITY;
        std::ostringstream os;
        os << "solve_value: Bellman residual " << r.lpNorm<Eigen::Infinity>()
           << " above tolerance (condition ~" << cond << ")";
        throw NumericError(os.str(), cond);
    }
    return v;
}

ValueVector exact_value(const MarkovChain& chain) {
    return {solve_value(chain.transition(), chain.reward(), chain.discount())};
}

double bellman_residual(const MarkovChain& chain, const VectorXd& v) {
    return (v - (chain.reward() + chain.discount() * chain.transition() * v))
        .lpNorm<Eigen::Infinity>();
}

MatrixXd q_values(const GroundMdp& mdp, const ValueVector& v) {
    if (v.values.size() != mdp.n_states()) throw DimensionError("q_values: value length mismatch");
    const VectorXd next = mdp.stacked() * v.values;  // row s*A + a
    MatrixXd q = mdp.rewards();
    for (int s = 0; s < mdp.n_states(); ++s)
        for (int a = 0; a < mdp.n_actions(); ++a)
            q(s, a) += mdp.discount() * next(mdp.row_index(s, a));
    return q;
}

double performance(const InitialDistribution& xi, const ValueVector& v) {
    if (xi.size() != v.values.size()) throw DimensionError("performance: length mismatch");
    return xi.xi().dot(v.values);
}

PolicyIterationResult policy_iteration(const GroundMdp& mdp, int max_iters, double tol,
                                       const InitialDistribution* xi) {
    const int n = mdp.n_states();
    const InitialDistribution uniform = InitialDistribution::uniform(n);
    const InitialDistribution& start = xi ? *xi : uniform;
    if (start.size() != n) throw DimensionError("policy_iteration: xi length mismatch");

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    std::vector<int> actions(static_cast<std::size_t>(n), 0);
    PolicyMatrix policy = PolicyMatrix::deterministic(actions, mdp.n_actions());
    ValueVector value = exact_value(induce_chain(mdp, policy));
    RunRecord record;
    bool converged = false;
    int it = 0;
    while (it < max_iters) {
        ++it;
        const double j = performance(start, value);
        record.append({it - 1, std::chrono::duration<double>(clock::now() - t0).count(), j, j, j,
                       0.0, 0.0, 0.0});

        const MatrixXd q = q_values(mdp, value);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            const double best = q.row(s).maxCoeff();
            auto& a = actions[static_cast<std::size_t>(s)];
            if (q(s, a) >= best - tol) continue;
            for (int b = 0; b < mdp.n_actions(); ++b) {
                if (q(s, b) >= best - tol) {
                    a = b;
                    break;
                }
            }
            changed = true;
        }
        if (!changed) {
            converged = true;
            break;
        }
        policy = PolicyMatrix::deterministic(actions, mdp.n_actions());
        value = exact_value(induce_chain(mdp, policy));
    }
    return {std::move(policy), std::move(value), std::move(record), converged, it};
}

}  // namespace homomdp
