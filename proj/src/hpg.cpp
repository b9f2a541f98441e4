#include <chrono>
#include <cmath>

#include "homomdp/errors.hpp"
#include "homomdp/solvers.hpp"

namespace homomdp {

void SolverConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("solver: learning_rate must be > 0");
    if (!(epsilon > 0.0)) throw ConfigError("solver: epsilon must be > 0");
    if (max_iters < 0) throw ConfigError("solver: max_iters must be >= 0");
    if (ground_eval_every < 1) throw ConfigError("solver: ground_eval_every must be >= 1");
}

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::Converged: return "converged";
        case RunStatus::MaxIters: return "max_iters";
        case RunStatus::Diverged: return "diverged";
    }
    return "unknown";
}

namespace {

// Logit assigned to non-selected actions of a deterministic policy.
constexpr double kGreedyLogit = -50.0;

MatrixXd logits_of(const std::vector<int>& actions, int n_actions) {
    MatrixXd theta = MatrixXd::Constant(static_cast<Eigen::Index>(actions.size()), n_actions,
                                        kGreedyLogit);
    for (std::size_t s = 0; s < actions.size(); ++s) theta(static_cast<Eigen::Index>(s), actions[s]) = 0.0;
    return theta;
}

// ||g|| with g = P_nu P^pi V_hat - P_U V_U, reusing the workspace.
double error_norm(const GroundMdp& mdp, const PolicyMatrix& policy, const EncodingMatrix& enc,
                  const GradientWorkspace& ws) {
    const VectorXd r_pi = policy_reward(mdp, policy);
    const VectorXd v_hat = r_pi + mdp.discount() * (ws.c_pi * ws.abstract_value);
    const VectorXd next = mdp.stacked() * v_hat;
    VectorXd w = VectorXd::Zero(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s)
        for (int a = 0; a < mdp.n_actions(); ++a)
            w(s) += policy.probs()(s, a) * next(mdp.row_index(s, a));
    return (enc.p_nu() * w - ws.p_u * ws.abstract_value).norm();
}

}  // namespace

HpgResult hpg_run(const GroundMdp& mdp, const EncodingMatrix& enc, const SolverConfig& config,
                  const InitialDistribution* xi_s, const TransitionBasis* basis) {
    config.validate();
    if (enc.n_states() != mdp.n_states()) throw DimensionError("hpg_run: encoding width != |S|");
    const int ns = mdp.n_states();
    const int na = mdp.n_actions();
    const double gamma = mdp.discount();

    const InitialDistribution uniform = InitialDistribution::uniform(ns);
    const InitialDistribution& start = xi_s ? *xi_s : uniform;
    const VectorXd xi_u = lift_initial_distribution(start, enc).xi_u.xi();

    HpgResult out{PolicyParams{MatrixXd::Zero(ns, na)}, PolicyMatrix::uniform(ns, na), {}, {},
                  RunStatus::MaxIters, 0};
    if (basis) {
        out.span = span_condition_holds(enc, *basis);
    } else {
        const TransitionBasis own = transition_basis(mdp);
        out.span = span_condition_holds(enc, own);
    }

    const MatrixXd p1 = composite_kernel(mdp, enc);
    const bool greedy = config.improvement == Improvement::Greedy;
    std::vector<int> actions(static_cast<std::size_t>(ns), 0);
    if (greedy) out.params.theta = logits_of(actions, na);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    for (int it = 0;; ++it) {
        const PolicyMatrix policy = greedy ? PolicyMatrix::deterministic(actions, na)
                                           : policy_from_logits(out.params.theta);
        const GradientWorkspace ws = make_workspace(mdp, policy, enc, &p1);
        const double j_u = xi_u.dot(ws.abstract_value);

        MatrixXd grad;
        double grad_norm = 0.0;
        bool stop = false;
        if (!greedy) {
            const MatrixXd& pi = policy.probs();
            const VectorXd mean_q = pi.cwiseProduct(ws.q_tilde).rowwise().sum();
            const MatrixXd score = pi.cwiseProduct(ws.q_tilde - mean_q.replicate(1, na));
            const VectorXd weight = enc.p_nu().transpose() * (ws.occupancy.transpose() * xi_u);
            grad = weight.asDiagonal() * score;
            grad_norm = grad.norm();
            stop = grad_norm <= config.grad_tol;
        }
        const bool diverged = !std::isfinite(j_u) || !std::isfinite(grad_norm);
        const bool last = it >= config.max_iters;

        if (greedy || it % config.ground_eval_every == 0 || stop || last || diverged) {
            const double j_s = performance(start, exact_value(induce_chain(mdp, policy)));
            const double bound = j_u - error_norm(mdp, policy, enc, ws) / (1.0 - gamma);
            out.record.append({it, std::chrono::duration<double>(clock::now() - t0).count(), j_s,
                               j_u, bound, grad_norm, 0.0, out.span.max_residual});
        }
        out.iterations = it;
        out.policy = policy;

        if (diverged) {
            out.status = RunStatus::Diverged;
            break;
        }
        if (stop) {
            out.status = RunStatus::Converged;
            break;
        }
        if (last) {
            out.status = RunStatus::MaxIters;
            break;
        }

        if (greedy) {
            bool changed = false;
            for (int s = 0; s < ns; ++s) {
                const double best = ws.q_tilde.row(s).maxCoeff();
                auto& a = actions[static_cast<std::size_t>(s)];
                if (ws.q_tilde(s, a) >= best - config.greedy_tol) continue;
                for (int b = 0; b < na; ++b) {
                    if (ws.q_tilde(s, b) >= best - config.greedy_tol) {
                        a = b;
                        break;
                    }
                }
                changed = true;
            }
            if (!changed) {
                out.status = RunStatus::Converged;
                break;
            }
            out.params.theta = logits_of(actions, na);
        } else {
            out.params.theta += config.learning_rate * grad;
        }
    }
    return out;
}

}  // namespace homomdp
