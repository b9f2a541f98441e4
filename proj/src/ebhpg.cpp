#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "homomdp/errors.hpp"
#include "homomdp/solvers.hpp"

namespace homomdp {

MatrixXd initial_encoding_logits(const TransitionBasis& basis, int n_abstract, std::uint64_t seed) {
    const EncodingMatrix enc = build_encoding_from_basis(basis, n_abstract, seed);
    return enc.p_nu().array().max(1e-6).log().matrix();
}

namespace {

constexpr int kMaxReinitAttempts = 3;

// Rebuilds the encoding from logits, resetting rows that lost rank to their
// initial logits plus a small seeded perturbation.
std::optional<EncodingMatrix> encoding_with_repair(MatrixXd& omega, const MatrixXd& omega_init,
                                                   std::mt19937_64& rng, int& reinitialized) {
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    for (int attempt = 0; attempt <= kMaxReinitAttempts; ++attempt) {
        try {
            return encoding_from_logits(omega);
        } catch (const RankDeficient& e) {
            std::vector<int> rows = e.offending_rows();
            if (rows.empty()) rows.push_back(static_cast<int>(omega.rows()) - 1);
            for (int r : rows) {
                for (Eigen::Index j = 0; j < omega.cols(); ++j)
                    omega(r, j) = omega_init(r, j) + (attempt > 0 ? jitter(rng) : 0.0);
                ++reinitialized;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

EbhpgResult ebhpg_run(const GroundMdp& mdp, int n_abstract, const SolverConfig& config,
                      const InitialDistribution* xi_s, const TransitionBasis* basis,
                      const MatrixXd* omega_init_override) {
    config.validate();
    const int ns = mdp.n_states();
    const int na = mdp.n_actions();

    std::optional<TransitionBasis> own_basis;
    if (!basis) {
        own_basis = transition_basis(mdp);
        basis = &*own_basis;
    }
    const InitialDistribution uniform = InitialDistribution::uniform(ns);
    const InitialDistribution& start = xi_s ? *xi_s : uniform;

    if (omega_init_override &&
        (omega_init_override->rows() != n_abstract || omega_init_override->cols() != ns))
        throw DimensionError("ebhpg_run: omega_init must be |U| x |S|");
    const MatrixXd omega_init = omega_init_override
                                    ? *omega_init_override
                                    : initial_encoding_logits(*basis, n_abstract, config.seed);
    EbhpgResult out{PolicyParams{MatrixXd::Zero(ns, na)}, EncodingParams{omega_init},
                    PolicyMatrix::uniform(ns, na), {}, RunStatus::MaxIters, 0, 0};
    std::mt19937_64 rng(config.seed);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    std::optional<VectorXd> xi_u;
    std::optional<VectorXd> prev_value;
    for (int it = 0;; ++it) {
        const PolicyMatrix policy = policy_from_logits(out.policy_params.theta);
        out.policy = policy;
        out.iterations = it;
        const std::optional<EncodingMatrix> enc =
            encoding_with_repair(out.encoding_params.omega, omega_init, rng, out.reinitialized_rows);
        if (!enc) {
            out.status = RunStatus::Diverged;
            break;
        }
        const bool last = it >= config.max_iters;
        const bool checkpoint = it % config.ground_eval_every == 0 || last;
        if (checkpoint || !xi_u) {
            const VectorXd* warm = xi_u ? &*xi_u : nullptr;
            xi_u = lift_initial_distribution(start, *enc, warm).xi_u.xi();
        }

        ObjectiveGradient grad;
        try {
            grad = objective_gradient(mdp, policy, *enc, *xi_u, true);
        } catch (const NumericError&) {
            out.status = RunStatus::Diverged;
            break;
        }
        const MatrixXd g_theta = softmax_backward(policy.probs(), grad.policy_bar);
        const MatrixXd g_omega = softmax_backward(enc->p_nu(), grad.p_nu_bar);
        const bool diverged = !std::isfinite(grad.value.objective) || !g_theta.allFinite() ||
                              !g_omega.allFinite();

        if (checkpoint || diverged) {
            const VectorXd v_s = exact_value(induce_chain(mdp, policy)).values;
            const double j_s = start.xi().dot(v_s);
            const double span = span_condition_holds(*enc, *basis).max_residual;
            out.record.append({it, std::chrono::duration<double>(clock::now() - t0).count(), j_s,
                               grad.value.j_u, grad.value.objective, g_theta.norm(),
                               g_omega.norm(), span});
            if (prev_value && (v_s - *prev_value).norm() <= config.epsilon) {
                out.status = RunStatus::Converged;
                break;
            }
            prev_value = v_s;
        }
        if (diverged) {
            out.status = RunStatus::Diverged;
            break;
        }
        if (last) {
            out.status = RunStatus::MaxIters;
            break;
        }
        out.policy_params.theta += config.learning_rate * g_theta;
        out.encoding_params.omega += config.learning_rate * g_omega;
    }
    return out;
}

}  // namespace homomdp
