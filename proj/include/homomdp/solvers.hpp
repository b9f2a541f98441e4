#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "homomdp/homomorphism.hpp"
#include "homomdp/mdp.hpp"
#include "homomdp/run_record.hpp"

namespace homomdp {

// ---------------------------------------------------------------------------
// Parameterizations
// ---------------------------------------------------------------------------

/// Policy logits theta[s][a]; the policy is the row-wise softmax.
struct PolicyParams {
    MatrixXd theta;
};

/// Encoding logits omega[u][s]; P_nu is the row-wise softmax.
struct EncodingParams {
    MatrixXd omega;
};

/// Numerically stable row-wise softmax. Throws InvalidModel on non-finite input.
MatrixXd row_softmax(const MatrixXd& logits);

PolicyMatrix policy_from_logits(const MatrixXd& theta);
EncodingMatrix encoding_from_logits(const MatrixXd& omega);

/// Backpropagates d/dP through P = row_softmax(logits).
MatrixXd softmax_backward(const MatrixXd& probs, const MatrixXd& probs_bar);

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/**
 * Quantities shared by the abstract-space policy gradient.
 *
 * occupancy(u, x) = sum_t gamma^t P(X_t = x | X_0 = u) under P_U, i.e. the
 * resolvent (I - gamma P_U)^{-1}. p1 row (s*A + a) is
 * P1(. | s, a) = sum_s' P(s' | s, a) P_nu^dagger(s', .).
 */
struct GradientWorkspace {
    MatrixXd p1;
    MatrixXd c_pi;
    MatrixXd p_u;
    MatrixXd occupancy;
    VectorXd abstract_value;
    MatrixXd q_tilde;  ///< r(s,a) + gamma P1(. | s,a) V_U
};

/// P1 = P_SA P_nu^dagger; depends only on the MDP and the encoding.
MatrixXd composite_kernel(const GroundMdp& mdp, const EncodingMatrix& enc);

GradientWorkspace make_workspace(const GroundMdp& mdp, const PolicyMatrix& policy,
                                 const EncodingMatrix& enc, const MatrixXd* p1 = nullptr);

/// dV_U/dtheta as a |U| x (|S||A|) Jacobian; column s*|A| + a.
MatrixXd grad_value_theta(const GroundMdp& mdp, const MatrixXd& theta, const EncodingMatrix& enc);

/// dJ_U/dtheta with J_U = xi_U^T V_U, shaped |S| x |A|.
MatrixXd grad_performance_theta(const GroundMdp& mdp, const MatrixXd& theta,
                                const EncodingMatrix& enc, const VectorXd& xi_u,
                                const MatrixXd* p1 = nullptr);

/// Value of the lower-bound objective and its ingredients.
struct ObjectiveValue {
    double j_u = 0.0;
    double g_norm = 0.0;
    double objective = 0.0;  ///< j_u - g_norm / (1 - gamma)
};

ObjectiveValue evaluate_objective(const GroundMdp& mdp, const PolicyMatrix& policy,
                                  const EncodingMatrix& enc, const VectorXd& xi_u);

/// Gradients of J_U - ||g|| / (1 - gamma) w.r.t. the policy and P_nu (not yet
/// through the softmax). xi_U is held fixed.
struct ObjectiveGradient {
    ObjectiveValue value;
    MatrixXd policy_bar;  ///< |S| x |A|
    MatrixXd p_nu_bar;    ///< |U| x |S|, empty unless requested
};

/// Below this norm the penalty gradient is taken as zero.
inline constexpr double kPenaltyFloor = 1e-12;

ObjectiveGradient objective_gradient(const GroundMdp& mdp, const PolicyMatrix& policy,
                                     const EncodingMatrix& enc, const VectorXd& xi_u,
                                     bool with_encoding);

MatrixXd grad_objective_theta(const GroundMdp& mdp, const MatrixXd& theta,
                              const EncodingMatrix& enc, const VectorXd& xi_u);

/// Throws NumericError when P_nu P_nu^T is ill-conditioned.
MatrixXd grad_objective_omega(const GroundMdp& mdp, const PolicyMatrix& policy,
                              const MatrixXd& omega, const VectorXd& xi_u);

/// Differential of P^dagger = P^T (P P^T)^{-1} along `direction`:
/// dP^T G^{-1} - P^dagger (dP P^T + P dP^T) G^{-1}.
MatrixXd pseudoinverse_differential(const MatrixXd& p, const MatrixXd& pinv,
                                    const MatrixXd& direction);

/// Vector-Jacobian product: gradient w.r.t. P of <pinv_bar, P^dagger>.
MatrixXd pseudoinverse_vjp(const MatrixXd& p, const MatrixXd& pinv, const MatrixXd& pinv_bar);

/// Gradient of the single entry P^dagger(s, u) w.r.t. P (|U| x |S|).
MatrixXd pseudoinverse_entry_gradient(const MatrixXd& p, const MatrixXd& pinv, int s, int u);

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

struct FdReport {
    double max_rel_error = 0.0;  ///< ||analytic - fd||_inf / max(||analytic||_inf, ||fd||_inf)
    double max_abs_error = 0.0;
    Eigen::Index worst = -1;
    MatrixXd numeric;
};

/// Central differences of `fn` at `params`, compared with `analytic`.
FdReport finite_difference_check(const std::function<double(const MatrixXd&)>& fn,
                                 const MatrixXd& params, const MatrixXd& analytic,
                                 double h = 1e-5);

// ---------------------------------------------------------------------------
// Solver loops
// ---------------------------------------------------------------------------

enum class Improvement { Gradient, Greedy };

struct SolverConfig {
    double learning_rate = 1e-3;
    int max_iters = 10000;
    double epsilon = 1e-6;        ///< EBHPG stop: ||V_S^t - V_S^{t'}||_2 <= epsilon
    int ground_eval_every = 10;
    std::uint64_t seed = 0;
    Improvement improvement = Improvement::Gradient;
    double grad_tol = 1e-8;       ///< HPG stop on ||grad||
    double greedy_tol = 1e-12;

    void validate() const;
};

enum class RunStatus { Converged, MaxIters, Diverged };

std::string to_string(RunStatus status);

struct HpgResult {
    PolicyParams params;
    PolicyMatrix policy;
    RunRecord record;
    SpanReport span;
    RunStatus status = RunStatus::MaxIters;
    int iterations = 0;
};

/**
 * Homomorphic policy gradient on a fixed encoding.
 *
 * Gradient mode ascends J_U = xi_U^T V_U from uniform logits. Greedy mode
 * replaces the ascent step with exact improvement against
 * r + gamma P1 V_U, which is policy iteration when the span condition holds.
 * Rows are logged every `ground_eval_every` iterations plus the last one.
 */
HpgResult hpg_run(const GroundMdp& mdp, const EncodingMatrix& enc, const SolverConfig& config,
                  const InitialDistribution* xi_s = nullptr,
                  const TransitionBasis* basis = nullptr);

struct EbhpgResult {
    PolicyParams policy_params;
    EncodingParams encoding_params;
    PolicyMatrix policy;
    RunRecord record;
    RunStatus status = RunStatus::MaxIters;
    int iterations = 0;
    int reinitialized_rows = 0;
};

/// Initial encoding logits: log of the basis-selected rows floored at 1e-6.
MatrixXd initial_encoding_logits(const TransitionBasis& basis, int n_abstract, std::uint64_t seed);

/**
 * Error-bounded homomorphic policy gradient: simultaneous ascent on theta and
 * omega of J_U - ||g|| / (1 - gamma). Stops when two consecutive ground
 * evaluations differ by at most `epsilon`. `omega_init` overrides the
 * basis-selected starting logits.
 */
EbhpgResult ebhpg_run(const GroundMdp& mdp, int n_abstract, const SolverConfig& config,
                      const InitialDistribution* xi_s = nullptr,
                      const TransitionBasis* basis = nullptr,
                      const MatrixXd* omega_init = nullptr);

}  // namespace homomdp
