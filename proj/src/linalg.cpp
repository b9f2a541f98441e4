#include "homomdp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "homomdp/errors.hpp"

namespace homomdp {

double gram_condition(const MatrixXd& p) {
    const MatrixXd gram = p * p.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

namespace {

std::vector<int> dependent_rows(const MatrixXd& p) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(p.transpose());
    qr.setThreshold(1e-10);
    const auto& perm = qr.colsPermutation().indices();
    std::vector<int> rows;
    for (Eigen::Index i = qr.rank(); i < perm.size(); ++i) rows.push_back(perm(i));
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace

MatrixXd right_pseudoinverse(const MatrixXd& p, double condition_limit) {
    if (p.rows() < 1 || p.rows() > p.cols())
        throw DimensionError("right_pseudoinverse: need 1 <= rows <= cols");
    const double cond = gram_condition(p);
    if (!(cond <= condition_limit)) {
        std::vector<int> rows = dependent_rows(p);
        std::ostringstream os;
        os << "right_pseudoinverse: Gram matrix condition " << cond << " exceeds "
           << condition_limit << "; dependent rows {";
        for (std::size_t i = 0; i < rows.size(); ++i) os << (i ? "," : "") << rows[i];
        os << "}";
        throw RankDeficient(os.str(), std::move(rows), cond);
    }
    const MatrixXd gram = p * p.transpose();
    Eigen::LLT<MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw RankDeficient("right_pseudoinverse: Gram not SPD", {}, cond);
    return llt.solve(p).transpose();
}

MatrixXd truncated_pseudoinverse(const MatrixXd& p, double rcond) {
    Eigen::BDCSVD<MatrixXd> svd(p, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() ? rcond * sv(0) : 0.0;
    VectorXd inv = VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double largest_singular_value(const MatrixXd& m, int max_iters, double rel_tol) {
    if (m.size() == 0) return 0.0;
    // Deterministic, generic start vector.
    VectorXd x(m.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 1.0 + 0.1 * std::sin(1.0 + i);
    x.normalize();
    double sigma = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        const VectorXd y = m * x;
        VectorXd z = m.transpose() * y;
        const double norm = z.norm();
        if (norm == 0.0) return 0.0;
        const double next = std::sqrt(norm);
        x = z / norm;
        if (std::abs(next - sigma) <= rel_tol * next) return next;
        sigma = next;
    }
    return sigma;
}

VectorXd project_to_simplex(const VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumsum += u[static_cast<std::size_t>(k)];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[static_cast<std::size_t>(k)] - t > 0.0) tau = t;
    }
    return (v.array() - tau).max(0.0).matrix();
}

namespace {

double objective(const MatrixXd& a, const VectorXd& b, const VectorXd& x) {
    return 0.5 * (a * x - b).squaredNorm();
}

// Minimizes over {x : x_i = 0 off `support`, sum x = 1}; returns false when
// the solution leaves the non-negative orthant.
bool solve_on_support(const MatrixXd& a, const VectorXd& b, const std::vector<int>& support,
                      VectorXd& out) {
    const auto k = static_cast<Eigen::Index>(support.size());
    MatrixXd kkt = MatrixXd::Zero(k + 1, k + 1);
    VectorXd rhs(k + 1);
    MatrixXd as(a.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) as.col(j) = a.col(support[static_cast<std::size_t>(j)]);
    kkt.topLeftCorner(k, k) = as.transpose() * as;
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    rhs.head(k) = as.transpose() * b;
    rhs(k) = 1.0;
    const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if (!sol.allFinite() || sol.head(k).minCoeff() < -1e-14) return false;
    out = VectorXd::Zero(a.cols());
    for (Eigen::Index j = 0; j < k; ++j)
        out(support[static_cast<std::size_t>(j)]) = std::max(0.0, sol(j));
    const double s = out.sum();
    if (!(s > 0.0)) return false;
    out /= s;
    return true;
}

}  // namespace

SimplexLeastSquares simplex_least_squares(const MatrixXd& a, const VectorXd& b,
                                          const VectorXd* warm_start, double stationarity_tol,
                                          int max_iters) {
    const Eigen::Index n = a.cols();
    if (n < 1 || a.rows() != b.size()) throw DimensionError("simplex_least_squares: shape mismatch");

    SimplexLeastSquares out;
    const double sigma = largest_singular_value(a);
    const double lipschitz = sigma * sigma;
    VectorXd x = warm_start && warm_start->size() == n ? project_to_simplex(*warm_start)
                                                       : VectorXd::Constant(n, 1.0 / n);
    if (lipschitz == 0.0) {
        out.x = x;
        out.residual = b.norm();
        out.converged = true;
        return out;
    }
    const MatrixXd ata = a.transpose() * a;
    const VectorXd atb = a.transpose() * b;
    auto grad = [&](const VectorXd& v) -> VectorXd { return ata * v - atb; };

    VectorXd y = x;
    double t = 1.0;
    double fx = objective(a, b, x);
    int it = 0;
    for (; it < max_iters; ++it) {
        const VectorXd x_next = project_to_simplex(y - grad(y) / lipschitz);
        const double f_next = objective(a, b, x_next);
        if (f_next > fx) {
            // Function-value restart.
            y = x;
            t = 1.0;
            continue;
        }
        const double step = (x_next - x).norm();
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x_next + ((t - 1.0) / t_next) * (x_next - x);
        x = x_next;
        fx = f_next;
        t = t_next;
        if (step <= stationarity_tol) {
            const double pg = (x - project_to_simplex(x - grad(x) / lipschitz)).norm();
            if (pg <= stationarity_tol) {
                out.converged = true;
                break;
            }
        }
    }
    out.iterations = it;

    std::vector<int> support;
    for (Eigen::Index i = 0; i < n; ++i)
        if (x(i) > 0.0) support.push_back(static_cast<int>(i));
    VectorXd polished;
    if (!support.empty() && solve_on_support(a, b, support, polished) &&
        objective(a, b, polished) <= fx) {
        x = polished;
    }
    out.x = x;
    out.residual = (a * x - b).norm();
    return out;
}

}  // namespace homomdp
