#include <algorithm>
#include <cmath>
#include <sstream>

#include "homomdp/errors.hpp"
#include "homomdp/solvers.hpp"

namespace homomdp {

MatrixXd row_softmax(const MatrixXd& logits) {
    if (!logits.allFinite()) throw InvalidModel("row_softmax: non-finite logits");
    MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        out.row(i) = (logits.row(i).array() - m).exp().matrix();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

PolicyMatrix policy_from_logits(const MatrixXd& theta) { return PolicyMatrix(row_softmax(theta)); }

EncodingMatrix encoding_from_logits(const MatrixXd& omega) {
    return EncodingMatrix(row_softmax(omega));
}

MatrixXd softmax_backward(const MatrixXd& probs, const MatrixXd& probs_bar) {
    const VectorXd inner = probs.cwiseProduct(probs_bar).rowwise().sum();
    return probs.cwiseProduct(probs_bar - inner.replicate(1, probs.cols()));
}

MatrixXd composite_kernel(const GroundMdp& mdp, const EncodingMatrix& enc) {
    if (enc.n_states() != mdp.n_states()) throw DimensionError("composite_kernel: |S| mismatch");
    return mdp.stacked() * enc.pinv();
}

namespace {

// C(s, .) = sum_a pi(a|s) P1(s*A + a, .)
MatrixXd mix_rows(const MatrixXd& stacked_rows, const MatrixXd& probs) {
    const Eigen::Index ns = probs.rows();
    const Eigen::Index na = probs.cols();
    MatrixXd out = MatrixXd::Zero(ns, stacked_rows.cols());
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < na; ++a) out.row(s) += probs(s, a) * stacked_rows.row(s * na + a);
    return out;
}

MatrixXd reshape_sa(const VectorXd& v, Eigen::Index ns, Eigen::Index na) {
    MatrixXd out(ns, na);
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < na; ++a) out(s, a) = v(s * na + a);
    return out;
}

void check_workspace_shapes(const GroundMdp& mdp, const PolicyMatrix& policy,
                            const EncodingMatrix& enc) {
    if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
        throw DimensionError("policy shape does not match the MDP");
    if (enc.n_states() != mdp.n_states()) throw DimensionError("encoding width != |S|");
}

}  // namespace

GradientWorkspace make_workspace(const GroundMdp& mdp, const PolicyMatrix& policy,
                                 const EncodingMatrix& enc, const MatrixXd* p1) {
    check_workspace_shapes(mdp, policy, enc);
    GradientWorkspace ws;
    ws.p1 = p1 ? *p1 : composite_kernel(mdp, enc);
    const double gamma = mdp.discount();
    const int nu = enc.n_abstract();
    ws.c_pi = mix_rows(ws.p1, policy.probs());
    ws.p_u = enc.p_nu() * ws.c_pi;
    const VectorXd r_u = enc.p_nu() * policy_reward(mdp, policy);
    Eigen::PartialPivLU<MatrixXd> lu(MatrixXd::Identity(nu, nu) - gamma * ws.p_u);
    ws.occupancy = lu.inverse();
    if (!ws.occupancy.allFinite())
        throw NumericError("make_workspace: singular I - gamma P_U", INFINITY);
    ws.abstract_value = ws.occupancy * r_u;
    ws.q_tilde = mdp.rewards() +
                 gamma * reshape_sa(ws.p1 * ws.abstract_value, mdp.n_states(), mdp.n_actions());
    return ws;
}

MatrixXd grad_value_theta(const GroundMdp& mdp, const MatrixXd& theta, const EncodingMatrix& enc) {
    const PolicyMatrix policy = policy_from_logits(theta);
    const GradientWorkspace ws = make_workspace(mdp, policy, enc);
    const MatrixXd& pi = policy.probs();
    const VectorXd mean_q = pi.cwiseProduct(ws.q_tilde).rowwise().sum();
    // Advantage-weighted score: pi(a|s) (q(s,a) - sum_b pi(b|s) q(s,b)).
    const MatrixXd score = pi.cwiseProduct(ws.q_tilde - mean_q.replicate(1, pi.cols()));
    // weight(s, u) = sum_x eta(x | u) nu(s | x)
    const MatrixXd weight = enc.p_nu().transpose() * ws.occupancy.transpose();

    const Eigen::Index ns = pi.rows();
    const Eigen::Index na = pi.cols();
    MatrixXd jac(enc.n_abstract(), ns * na);
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < na; ++a) jac.col(s * na + a) = weight.row(s).transpose() * score(s, a);
    return jac;
}

MatrixXd grad_performance_theta(const GroundMdp& mdp, const MatrixXd& theta,
                                const EncodingMatrix& enc, const VectorXd& xi_u,
                                const MatrixXd* p1) {
    if (xi_u.size() != enc.n_abstract()) throw DimensionError("xi_U length != |U|");
    const PolicyMatrix policy = policy_from_logits(theta);
    const GradientWorkspace ws = make_workspace(mdp, policy, enc, p1);
    const MatrixXd& pi = policy.probs();
    const VectorXd mean_q = pi.cwiseProduct(ws.q_tilde).rowwise().sum();
    const MatrixXd score = pi.cwiseProduct(ws.q_tilde - mean_q.replicate(1, pi.cols()));
    const VectorXd weight = enc.p_nu().transpose() * (ws.occupancy.transpose() * xi_u);
    return weight.asDiagonal() * score;
}

MatrixXd pseudoinverse_differential(const MatrixXd& p, const MatrixXd& pinv,
                                    const MatrixXd& direction) {
    const MatrixXd gram = p * p.transpose();
    Eigen::LLT<MatrixXd> llt(gram);
    const MatrixXd sym = direction * p.transpose() + p * direction.transpose();
    // X G^{-1} = (G^{-1} X^T)^T since G is symmetric.
    const MatrixXd lhs = direction.transpose() - pinv * sym;
    return llt.solve(lhs.transpose()).transpose();
}

MatrixXd pseudoinverse_vjp(const MatrixXd& p, const MatrixXd& pinv, const MatrixXd& pinv_bar) {
    const MatrixXd gram = p * p.transpose();
    Eigen::LLT<MatrixXd> llt(gram);
    // <B, dP^T G^{-1}>            -> G^{-1} B^T
    // <B, -P^+ (dP P^T + P dP^T) G^{-1}> -> -(K + K^T) P,  K = G^{-1} B^T P^+
    const MatrixXd ginv_bt = llt.solve(pinv_bar.transpose());
    const MatrixXd k = ginv_bt * pinv;
    return ginv_bt - (k + k.transpose()) * p;
}

MatrixXd pseudoinverse_entry_gradient(const MatrixXd& p, const MatrixXd& pinv, int s, int u) {
    MatrixXd bar = MatrixXd::Zero(pinv.rows(), pinv.cols());
    bar(s, u) = 1.0;
    return pseudoinverse_vjp(p, pinv, bar);
}

namespace {

struct Forward {
    MatrixXd p_pi;   // |S| x |S|
    VectorXd r_pi;
    MatrixXd c;      // |S| x |U|
    MatrixXd p_u;
    Eigen::PartialPivLU<MatrixXd> lu;
    VectorXd v_u;
    VectorXd v_hat;
    VectorXd w;      // P^pi V_hat
    VectorXd g;
    ObjectiveValue value;
};

Forward forward(const GroundMdp& mdp, const PolicyMatrix& policy, const EncodingMatrix& enc,
                const VectorXd& xi_u) {
    check_workspace_shapes(mdp, policy, enc);
    if (xi_u.size() != enc.n_abstract()) throw DimensionError("xi_U length != |U|");
    const double gamma = mdp.discount();
    const int nu = enc.n_abstract();
    Forward f;
    const MarkovChain chain = induce_chain(mdp, policy);
    f.p_pi = chain.transition();
    f.r_pi = chain.reward();
    f.c = f.p_pi * enc.pinv();
    f.p_u = enc.p_nu() * f.c;
    f.lu.compute(MatrixXd::Identity(nu, nu) - gamma * f.p_u);
    f.v_u = f.lu.solve(enc.p_nu() * f.r_pi);
    if (!f.v_u.allFinite()) throw NumericError("objective: singular I - gamma P_U", INFINITY);
    f.v_hat = f.r_pi + gamma * (f.c * f.v_u);
    f.w = f.p_pi * f.v_hat;
    f.g = enc.p_nu() * f.w - f.p_u * f.v_u;
    f.value.j_u = xi_u.dot(f.v_u);
    f.value.g_norm = f.g.norm();
    f.value.objective = f.value.j_u - f.value.g_norm / (1.0 - gamma);
    return f;
}

}  // namespace

ObjectiveValue evaluate_objective(const GroundMdp& mdp, const PolicyMatrix& policy,
                                  const EncodingMatrix& enc, const VectorXd& xi_u) {
    return forward(mdp, policy, enc, xi_u).value;
}

ObjectiveGradient objective_gradient(const GroundMdp& mdp, const PolicyMatrix& policy,
                                     const EncodingMatrix& enc, const VectorXd& xi_u,
                                     bool with_encoding) {
    const Forward f = forward(mdp, policy, enc, xi_u);
    const double gamma = mdp.discount();
    const MatrixXd& p_nu = enc.p_nu();
    const MatrixXd& pinv = enc.pinv();

    // Reverse pass. Bars are gradients of the objective w.r.t. each node.
    const VectorXd g_bar = f.value.g_norm > kPenaltyFloor
                               ? VectorXd(-f.g / (f.value.g_norm * (1.0 - gamma)))
                               : VectorXd(VectorXd::Zero(f.g.size()));
    // g = P_nu w - P_U V_U
    VectorXd v_u_bar = xi_u - f.p_u.transpose() * g_bar;
    MatrixXd p_u_bar = -g_bar * f.v_u.transpose();
    const VectorXd w_bar = p_nu.transpose() * g_bar;
    // w = P^pi V_hat
    MatrixXd p_pi_bar = w_bar * f.v_hat.transpose();
    const VectorXd v_hat_bar = f.p_pi.transpose() * w_bar;
    // V_hat = R^pi + gamma C V_U
    VectorXd r_pi_bar = v_hat_bar;
    MatrixXd c_bar = gamma * v_hat_bar * f.v_u.transpose();
    v_u_bar += gamma * f.c.transpose() * v_hat_bar;
    // V_U = (I - gamma P_U)^{-1} P_nu R^pi
    const VectorXd y = f.lu.transpose().solve(v_u_bar);
    p_u_bar += gamma * y * f.v_u.transpose();
    r_pi_bar += p_nu.transpose() * y;
    // P_U = P_nu C
    c_bar += p_nu.transpose() * p_u_bar;
    // C = P^pi P^+
    p_pi_bar += c_bar * pinv.transpose();

    ObjectiveGradient out;
    out.value = f.value;
    const int ns = mdp.n_states();
    const int na = mdp.n_actions();
    out.policy_bar.resize(ns, na);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            out.policy_bar(s, a) = mdp.transition(s, a).dot(p_pi_bar.row(s)) +
                                   r_pi_bar(s) * mdp.reward(s, a);

    if (with_encoding) {
        MatrixXd p_nu_bar = g_bar * f.w.transpose();
        p_nu_bar += y * f.r_pi.transpose();
        p_nu_bar += p_u_bar * f.c.transpose();
        const MatrixXd pinv_bar = f.p_pi.transpose() * c_bar;
        p_nu_bar += pseudoinverse_vjp(p_nu, pinv, pinv_bar);
        out.p_nu_bar = std::move(p_nu_bar);
    }
    return out;
}

MatrixXd grad_objective_theta(const GroundMdp& mdp, const MatrixXd& theta,
                              const EncodingMatrix& enc, const VectorXd& xi_u) {
    const PolicyMatrix policy = policy_from_logits(theta);
    const ObjectiveGradient grad = objective_gradient(mdp, policy, enc, xi_u, false);
    return softmax_backward(policy.probs(), grad.policy_bar);
}

MatrixXd grad_objective_omega(const GroundMdp& mdp, const PolicyMatrix& policy,
                              const MatrixXd& omega, const VectorXd& xi_u) {
    const MatrixXd p_nu = row_softmax(omega);
    const double cond = gram_condition(p_nu);
    if (!(cond <= kGramConditionLimit)) {
        std::ostringstream os;
        os << "grad_objective_omega: P_nu P_nu^T condition " << cond;
        throw NumericError(os.str(), cond);
    }
    const EncodingMatrix enc(p_nu);
    const ObjectiveGradient grad = objective_gradient(mdp, policy, enc, xi_u, true);
    return softmax_backward(p_nu, grad.p_nu_bar);
}

FdReport finite_difference_check(const std::function<double(const MatrixXd&)>& fn,
                                 const MatrixXd& params, const MatrixXd& analytic, double h) {
    if (analytic.rows() != params.rows() || analytic.cols() != params.cols())
        throw DimensionError("finite_difference_check: gradient shape mismatch");
    FdReport report;
    report.numeric.resize(params.rows(), params.cols());
    MatrixXd x = params;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double x0 = x.data()[i];
        x.data()[i] = x0 + h;
        const double fp = fn(x);
        x.data()[i] = x0 - h;
        const double fm = fn(x);
        x.data()[i] = x0;
        report.numeric.data()[i] = (fp - fm) / (2.0 * h);
    }
    const MatrixXd diff = (analytic - report.numeric).cwiseAbs();
    if (diff.size() > 0) {
        Eigen::Index r = 0, c = 0;
        report.max_abs_error = diff.maxCoeff(&r, &c);
        report.worst = c * diff.rows() + r;  // column-major, matches data() order
    }
    const double scale = std::max(analytic.lpNorm<Eigen::Infinity>(),
                                  report.numeric.lpNorm<Eigen::Infinity>());
    report.max_rel_error = scale > 0.0 ? report.max_abs_error / scale : 0.0;
    return report;
}

}  // namespace homomdp
