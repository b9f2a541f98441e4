#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "homomdp/linalg.hpp"
#include "homomdp/mdp.hpp"

namespace homomdp {

/// Default relative tolerance for rank and span decisions (scaled by sigma_max).
inline constexpr double kRankTol = 1e-8;

/**
 * Row-stochastic |U| x |S| encoding P_nu, row u being nu(. | u), together
 * with its cached right pseudoinverse.
 */
class EncodingMatrix {
public:
    /// Validates row-stochasticity and computes P_nu^dagger; throws RankDeficient.
    explicit EncodingMatrix(MatrixXd p_nu);

    /// Falls back to a truncated-SVD pseudoinverse instead of throwing; the
    /// result is flagged approximate.
    static EncodingMatrix with_fallback(MatrixXd p_nu);
    static EncodingMatrix identity(int n_states);

    const MatrixXd& p_nu() const noexcept { return p_nu_; }
    const MatrixXd& pinv() const noexcept { return pinv_; }
    int n_abstract() const noexcept { return static_cast<int>(p_nu_.rows()); }
    int n_states() const noexcept { return static_cast<int>(p_nu_.cols()); }
    bool approximate() const noexcept { return approximate_; }

private:
    EncodingMatrix(MatrixXd p_nu, MatrixXd pinv, bool approximate);

    MatrixXd p_nu_;
    MatrixXd pinv_;
    bool approximate_ = false;
};

/// Maximal linearly independent subset F of the rows P(. | s, a).
struct TransitionBasis {
    MatrixXd vectors;                            ///< r x |S|, rows in pivot order
    int rank = 0;
    std::vector<std::pair<int, int>> selected_pairs;  ///< (s, a) of each row
    std::vector<double> pivots;                  ///< |R_ii| of the pivoted QR
    double tolerance = 0.0;                      ///< absolute tolerance used
};

/**
 * Column-pivoted Householder QR of the stacked transitions (transposed).
 * A pivot counts as independent when |R_ii| > rel_tol * sigma_max.
 */
TransitionBasis transition_basis(const GroundMdp& mdp, double rel_tol = kRankTol);

/// max over (s,a) of the distance from P(. | s, a) to span(F).
double basis_reconstruction_residual(const GroundMdp& mdp, const TransitionBasis& basis);

struct SpanReport {
    bool span_ok = false;
    int rank = 0;
    double max_residual = 0.0;
    int worst_index = -1;                  ///< row of the basis
    std::pair<int, int> worst_pair{-1, -1};  ///< its (s, a)
    double tolerance = 0.0;
};

/// Checks Row(P_nu) contains span(F): ||alpha^T - alpha^T P_nu^dagger P_nu|| <= tol.
/// A negative `tol` uses the basis tolerance.
SpanReport span_condition_holds(const EncodingMatrix& enc, const TransitionBasis& basis,
                                double tol = -1.0);

/**
 * Encoding whose rows are the first `n_abstract` basis vectors in pivot order.
 * `seed` only permutes runs of exactly equal pivots. Throws InfeasibleEncoding
 * when n_abstract exceeds the rank.
 */
EncodingMatrix build_encoding_from_basis(const TransitionBasis& basis, int n_abstract,
                                         std::uint64_t seed = 0);

/// |U| = max(1, int(fraction * r)).
int abstract_size(double fraction, int rank);

struct HomomorphicChain {
    MatrixXd c_pi;           ///< P^pi P_nu^dagger, |S| x |U|
    MarkovChain abstract;    ///< (P_nu C, P_nu R^pi, gamma) over U
    MarkovChain encoding;    ///< (C P_nu, R^pi, gamma) over S
    VectorXd abstract_value; ///< V_U
    double min_entry = 0.0;      ///< of P_U
    double row_sum_drift = 0.0;  ///< of P_U
    double condition = 0.0;      ///< 1-norm condition estimate of I - gamma P_U
};

HomomorphicChain build_homomorphic_chain(const GroundMdp& mdp, const PolicyMatrix& policy,
                                         const EncodingMatrix& enc);

/// Encoding-chain value V_hat. Uses V_hat = R^pi + gamma C V_U, so no |S|^3 solve.
VectorXd encoding_value(const GroundMdp& mdp, const PolicyMatrix& policy,
                        const EncodingMatrix& enc, const VectorXd& abstract_value);

struct LiftResult {
    InitialDistribution xi_u;
    double residual = 0.0;  ///< ||xi_U^T P_nu - xi_S^T||_2
};

/// Simplex-constrained least-squares lift of xi_S onto the rows of P_nu.
LiftResult lift_initial_distribution(const InitialDistribution& xi_s, const EncodingMatrix& enc,
                                     const VectorXd* warm_start = nullptr);

struct ErrorTerm {
    VectorXd g;           ///< P_nu P^pi V_hat - P_U V_U, length |U|
    double norm = 0.0;    ///< Euclidean
    double bound = 0.0;   ///< norm / (1 - gamma)
};

ErrorTerm error_term(const GroundMdp& mdp, const PolicyMatrix& policy, const EncodingMatrix& enc);

struct LowerBoundReport {
    double value = 0.0;          ///< J_U - ||g|| / (1 - gamma)
    double j_u = 0.0;
    ErrorTerm error;
    double lift_residual = 0.0;  ///< bound is only guaranteed at zero residual
    VectorXd xi_u;
};

LowerBoundReport performance_lower_bound(const GroundMdp& mdp, const PolicyMatrix& policy,
                                         const EncodingMatrix& enc,
                                         const InitialDistribution& xi_s);

}  // namespace homomdp
