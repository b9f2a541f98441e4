#pragma once

#include <Eigen/Dense>

namespace homomdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Gram matrices with a 2-norm condition number above this are treated as singular.
inline constexpr double kGramConditionLimit = 1e12;

/// Condition number of P P^T from its extreme eigenvalues (infinity if singular).
double gram_condition(const MatrixXd& p);

/**
 * Right pseudoinverse P^T (P P^T)^{-1} of a full-row-rank matrix.
 *
 * Throws RankDeficient, naming rows outside the span of the others, when the
 * Gram condition number exceeds `condition_limit`.
 */
MatrixXd right_pseudoinverse(const MatrixXd& p, double condition_limit = kGramConditionLimit);

/// Moore-Penrose pseudoinverse with singular values below rcond * sigma_max dropped.
MatrixXd truncated_pseudoinverse(const MatrixXd& p, double rcond = 1e-10);

/// Largest singular value by power iteration on M^T M.
double largest_singular_value(const MatrixXd& m, int max_iters = 500, double rel_tol = 1e-10);

/// Euclidean projection onto the probability simplex.
VectorXd project_to_simplex(const VectorXd& v);

struct SimplexLeastSquares {
    VectorXd x;
    double residual = 0.0;  ///< ||A x - b||_2
    int iterations = 0;
    bool converged = false;
};

/**
 * min ||A x - b||_2 over the probability simplex.
 *
 * Accelerated projected gradient with restarts, followed by an exact
 * equality-constrained solve on the detected support. `stationarity_tol`
 * bounds the projected-gradient step norm at termination.
 */
SimplexLeastSquares simplex_least_squares(const MatrixXd& a, const VectorXd& b,
                                          const VectorXd* warm_start = nullptr,
                                          double stationarity_tol = 1e-10,
                                          int max_iters = 200000);

}  // namespace homomdp
