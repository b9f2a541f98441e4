#include "homomdp/homomorphism.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "homomdp/errors.hpp"

namespace homomdp {

namespace {

void check_encoding_rows(const MatrixXd& p) {
    if (p.rows() < 1 || p.cols() < 1) throw DimensionError("EncodingMatrix: empty");
    if (p.rows() > p.cols())
        throw DimensionError("EncodingMatrix: more abstract than ground states");
    if (!p.allFinite()) throw InvalidModel("EncodingMatrix: non-finite entry");
    for (Eigen::Index u = 0; u < p.rows(); ++u) {
        if (p.row(u).minCoeff() < 0.0 || std::abs(p.row(u).sum() - 1.0) > kStochasticTol) {
            std::ostringstream os;
            os << "EncodingMatrix: row " << u << " is not a probability distribution";
            throw InvalidModel(os.str());
        }
    }
}

}  // namespace

EncodingMatrix::EncodingMatrix(MatrixXd p_nu) : p_nu_(std::move(p_nu)) {
    check_encoding_rows(p_nu_);
    pinv_ = right_pseudoinverse(p_nu_);
}

EncodingMatrix::EncodingMatrix(MatrixXd p_nu, MatrixXd pinv, bool approximate)
    : p_nu_(std::move(p_nu)), pinv_(std::move(pinv)), approximate_(approximate) {}

EncodingMatrix EncodingMatrix::with_fallback(MatrixXd p_nu) {
    check_encoding_rows(p_nu);
    try {
        MatrixXd pinv = right_pseudoinverse(p_nu);
        return EncodingMatrix(std::move(p_nu), std::move(pinv), false);
    } catch (const RankDeficient&) {
        MatrixXd pinv = truncated_pseudoinverse(p_nu);
        return EncodingMatrix(std::move(p_nu), std::move(pinv), true);
    }
}

EncodingMatrix EncodingMatrix::identity(int n_states) {
    return EncodingMatrix(MatrixXd::Identity(n_states, n_states));
}

TransitionBasis transition_basis(const GroundMdp& mdp, double rel_tol) {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("transition_basis: tol must be positive");
    const MatrixXd columns = mdp.stacked().transpose();  // |S| x |S||A|
    const double sigma = largest_singular_value(columns);

    Eigen::ColPivHouseholderQR<MatrixXd> qr(columns);
    const auto diag = qr.matrixQR().diagonal().cwiseAbs();
    const auto& perm = qr.colsPermutation().indices();

    TransitionBasis basis;
    basis.tolerance = rel_tol * sigma;
    int rank = 0;
    while (rank < diag.size() && diag(rank) > basis.tolerance) ++rank;
    basis.rank = rank;
    basis.vectors.resize(rank, mdp.n_states());
    for (int i = 0; i < rank; ++i) {
        const int row = perm(i);
        basis.vectors.row(i) = mdp.stacked().row(row);
        basis.selected_pairs.emplace_back(row / mdp.n_actions(), row % mdp.n_actions());
        basis.pivots.push_back(diag(i));
    }
    return basis;
}

double basis_reconstruction_residual(const GroundMdp& mdp, const TransitionBasis& basis) {
    if (basis.rank == 0) return mdp.stacked().rowwise().norm().maxCoeff();
    Eigen::HouseholderQR<MatrixXd> qr(basis.vectors.transpose());
    const MatrixXd q = qr.householderQ() * MatrixXd::Identity(mdp.n_states(), basis.rank);
    const MatrixXd& alpha = mdp.stacked();
    const MatrixXd resid = alpha - (alpha * q) * q.transpose();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < alpha.rows(); ++i)
        worst = std::max(worst, resid.row(i).norm() / (1.0 + alpha.row(i).norm()));
    return worst;
}

SpanReport span_condition_holds(const EncodingMatrix& enc, const TransitionBasis& basis,
                                double tol) {
    if (basis.vectors.cols() != enc.n_states())
        throw DimensionError("span_condition_holds: basis and encoding disagree on |S|");
    SpanReport report;
    report.rank = basis.rank;
    report.tolerance = tol >= 0.0 ? tol : basis.tolerance;
    const MatrixXd projected = (basis.vectors * enc.pinv()) * enc.p_nu();
    for (int i = 0; i < basis.rank; ++i) {
        const double r = (basis.vectors.row(i) - projected.row(i)).norm();
        if (report.worst_index < 0 || r > report.max_residual) {
            report.max_residual = r;
            report.worst_index = i;
            report.worst_pair = basis.selected_pairs[static_cast<std::size_t>(i)];
        }
    }
    report.span_ok = report.max_residual <= report.tolerance;
    return report;
}

int abstract_size(double fraction, int rank) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("abstract_size: fraction must lie in (0, 1]");
    return std::max(1, static_cast<int>(fraction * rank));
}

EncodingMatrix build_encoding_from_basis(const TransitionBasis& basis, int n_abstract,
                                         std::uint64_t seed) {
    if (n_abstract < 1) throw std::invalid_argument("build_encoding_from_basis: |U| must be >= 1");
    if (n_abstract > basis.rank) {
        std::ostringstream os;
        os << "build_encoding_from_basis: |U| = " << n_abstract << " exceeds rank " << basis.rank;
        throw InfeasibleEncoding(os.str());
    }
    std::vector<int> order(static_cast<std::size_t>(basis.rank));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo + 1;
        const double p = basis.pivots[lo];
        while (hi < order.size() && std::abs(basis.pivots[hi] - p) <= 1e-15 * p) ++hi;
        if (hi - lo > 1) std::shuffle(order.begin() + static_cast<long>(lo),
                                      order.begin() + static_cast<long>(hi), rng);
        lo = hi;
    }
    MatrixXd rows(n_abstract, basis.vectors.cols());
    for (int u = 0; u < n_abstract; ++u) rows.row(u) = basis.vectors.row(order[static_cast<std::size_t>(u)]);
    return EncodingMatrix(std::move(rows));
}

HomomorphicChain build_homomorphic_chain(const GroundMdp& mdp, const PolicyMatrix& policy,
                                         const EncodingMatrix& enc) {
    if (enc.n_states() != mdp.n_states())
        throw DimensionError("build_homomorphic_chain: encoding width != |S|");
    const MarkovChain ground = induce_chain(mdp, policy);
    MatrixXd c = ground.transition() * enc.pinv();
    MatrixXd p_u = enc.p_nu() * c;
    VectorXd r_u = enc.p_nu() * ground.reward();
    const double gamma = mdp.discount();

    const int nu = enc.n_abstract();
    Eigen::PartialPivLU<MatrixXd> lu(MatrixXd::Identity(nu, nu) - gamma * p_u);
    const double cond = lu.rcond() > 0.0 ? 1.0 / lu.rcond() : INFINITY;
    VectorXd v_u;
    try {
        v_u = solve_value(p_u, r_u, gamma);
    } catch (const NumericError& e) {
        throw NumericError(std::string("build_homomorphic_chain: ") + e.what(), cond);
    }
    MatrixXd enc_transition = c * enc.p_nu();
    MarkovChain abstract(p_u, std::move(r_u), gamma, MarkovChain::Check::None);
    MarkovChain encoding(std::move(enc_transition), ground.reward(), gamma,
                         MarkovChain::Check::None);
    HomomorphicChain out{std::move(c), std::move(abstract), std::move(encoding), std::move(v_u),
                         p_u.minCoeff(), 0.0, cond};
    out.row_sum_drift = out.abstract.row_sum_drift();
    return out;
}

VectorXd encoding_value(const GroundMdp& mdp, const PolicyMatrix& policy,
                        const EncodingMatrix& enc, const VectorXd& abstract_value) {
    const MarkovChain ground = induce_chain(mdp, policy);
    return ground.reward() + mdp.discount() * (ground.transition() * (enc.pinv() * abstract_value));
}

LiftResult lift_initial_distribution(const InitialDistribution& xi_s, const EncodingMatrix& enc,
                                     const VectorXd* warm_start) {
    if (xi_s.size() != enc.n_states())
        throw DimensionError("lift_initial_distribution: xi length != |S|");
    const MatrixXd a = enc.p_nu().transpose();
    const SimplexLeastSquares sol = simplex_least_squares(a, xi_s.xi(), warm_start);
    VectorXd x = sol.x;
    x /= x.sum();
    return {InitialDistribution(std::move(x)), sol.residual};
}

ErrorTerm error_term(const GroundMdp& mdp, const PolicyMatrix& policy, const EncodingMatrix& enc) {
    const HomomorphicChain hc = build_homomorphic_chain(mdp, policy, enc);
    const MarkovChain ground = induce_chain(mdp, policy);
    const VectorXd v_hat = ground.reward() + mdp.discount() * (hc.c_pi * hc.abstract_value);
    ErrorTerm e;
    e.g = enc.p_nu() * (ground.transition() * v_hat) - hc.abstract.transition() * hc.abstract_value;
    e.norm = e.g.norm();
    e.bound = e.norm / (1.0 - mdp.discount());
    return e;
}

LowerBoundReport performance_lower_bound(const GroundMdp& mdp, const PolicyMatrix& policy,
                                         const EncodingMatrix& enc,
                                         const InitialDistribution& xi_s) {
    LowerBoundReport out;
    const LiftResult lift = lift_initial_distribution(xi_s, enc);
    const HomomorphicChain hc = build_homomorphic_chain(mdp, policy, enc);
    out.j_u = lift.xi_u.xi().dot(hc.abstract_value);
    out.error = error_term(mdp, policy, enc);
    out.value = out.j_u - out.error.bound;
    out.lift_residual = lift.residual;
    out.xi_u = lift.xi_u.xi();
    return out;
}

}  // namespace homomdp
