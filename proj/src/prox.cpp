#include "proxflow/prox.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "proxflow/errors.hpp"

namespace proxflow::prox {

namespace {

// The iteration divides by Gamma*z and takes log(Gamma^T*y); a zero entry
// means some particle is unreachable from the whole other cloud.
const Eigen::VectorXd& checked_positive(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite() || (v.array() <= 0.0).any())
        throw NumericalError(std::string(what) +
                             ": nonpositive denominator (kernel underflow upstream)");
    return v;
}

}  // namespace

void ProxConfig::validate() const {
    if (!(h > 0.0)) throw std::invalid_argument("ProxConfig: h must be positive");
    if (!(beta > 0.0)) throw std::invalid_argument("ProxConfig: beta must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("ProxConfig: epsilon must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("ProxConfig: delta must be positive");
    if (max_iter < 1) throw std::invalid_argument("ProxConfig: max_iter must be at least 1");
}

double contraction_factor(const ProxConfig& cfg) {
    cfg.validate();
    const double r = 1.0 / (1.0 + cfg.beta * cfg.epsilon / cfg.h);
    // beta*eps/h below double resolution rounds the quotient to 1; keep the
    // factor strictly inside the unit interval.
    return r < 1.0 ? r : std::nextafter(1.0, 0.0);
}

CostMatrix cost_matrix_euclidean(const StateMatrix& a, const StateMatrix& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("cost_matrix_euclidean: state dimension mismatch");
    if (a.rows() != b.rows())
        throw std::invalid_argument("cost_matrix_euclidean: cloud cardinality mismatch");

    const Eigen::VectorXd a2 = a.rowwise().squaredNorm();
    const Eigen::VectorXd b2 = b.rowwise().squaredNorm();
    CostMatrix c = -2.0 * a * b.transpose();
    c.colwise() += a2;
    c.rowwise() += b2.transpose();
    return c.cwiseMax(0.0);  // clip the rounding negatives near the diagonal
}

CostMatrix cost_matrix_underdamped(const StateMatrix& Qa, const StateMatrix& Pa,
                                   const StateMatrix& Qb, const StateMatrix& Pb,
                                   const GradFn& grad_v, double h) {
    const Eigen::Index n = Qa.rows();
    const Eigen::Index d = Qa.cols();
    if (!(h > 0.0)) throw std::invalid_argument("cost_matrix_underdamped: h must be positive");
    if (Pa.rows() != n || Pa.cols() != d || Qb.rows() != Pb.rows() || Qb.cols() != d ||
        Pb.cols() != d)
        throw std::invalid_argument("cost_matrix_underdamped: nonconformable blocks");

    StateMatrix gv(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd g = grad_v(Qa.row(i).transpose());
        if (g.size() != d || !g.allFinite())
            throw NumericalError("cost_matrix_underdamped: non-finite grad_v at particle " +
                                 std::to_string(i));
        gv.row(i) = g.transpose();
    }

    const Eigen::Index m = Qb.rows();
    CostMatrix c(n, m);
    Eigen::RowVectorXd dp(d), dq(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            dp = Pb.row(j) - Pa.row(i) + h * gv.row(i);
            dq = (Qb.row(j) - Qa.row(i)) / h - (Pb.row(j) + Pa.row(i)) / 2.0;
            c(i, j) = dp.squaredNorm() + 12.0 * dq.squaredNorm();
        }
    }
    return c;
}

GibbsKernel gibbs_kernel(const CostMatrix& c, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("gibbs_kernel: epsilon must be positive");
    if (!c.allFinite() || (c.array() < 0.0).any())
        throw std::invalid_argument("gibbs_kernel: cost entries must be finite and nonnegative");

    GibbsKernel g = (-c.array() / (2.0 * epsilon)).exp();
    // A particle whose whole row/column sits at the underflow floor is
    // effectively disconnected from the other cloud; the iteration behind it
    // would divide by (numerical) zero. Fail loudly instead of clamping.
    constexpr double kKernelFloor = 1e-300;
    if ((g.rowwise().maxCoeff().array() < kKernelFloor).any() ||
        (g.colwise().maxCoeff().array() < kKernelFloor).any()) {
        const double ratio = c.maxCoeff() / (2.0 * epsilon);
        throw NumericalError(
            "gibbs_kernel: a whole kernel row/column underflowed (max C/(2*eps) = " +
            std::to_string(ratio) + "); epsilon is too small for the point-cloud spread");
    }
    return g;
}

Eigen::VectorXd xi_vector(const PotentialVector& psi, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("xi_vector: beta must be positive");
    if (!psi.allFinite()) throw std::invalid_argument("xi_vector: non-finite potential entry");

    const Eigen::ArrayXd expo = -beta * psi.array() - 1.0;
    if ((expo > 709.0).any())
        throw NumericalError("xi_vector: exp overflow (psi too negative for this beta)");
    return expo.exp();
}

double thompson_distance(const Eigen::VectorXd& z, const Eigen::VectorXd& zt) {
    if (z.size() != zt.size()) throw std::invalid_argument("thompson_distance: length mismatch");
    if (z.size() == 0) throw std::invalid_argument("thompson_distance: empty input");

    double max_ratio = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (!(z[i] > 0.0) || !(zt[i] > 0.0))
            throw std::invalid_argument("thompson_distance: entries must be strictly positive");
        const double r = z[i] / zt[i];
        max_ratio = std::max({max_ratio, r, 1.0 / r});
    }
    return std::log(max_ratio);
}

Eigen::VectorXd z_update(const Eigen::VectorXd& z, const GibbsKernel& gamma,
                         const PotentialVector& psi, const SimplexWeights& rho_prev,
                         const ProxConfig& cfg) {
    const double r = contraction_factor(cfg);
    const Eigen::ArrayXd log_xi = -cfg.beta * psi.array() - 1.0;
    const Eigen::VectorXd y =
        rho_prev.array() / checked_positive((gamma * z).eval(), "z_update").array();
    const Eigen::VectorXd gy = checked_positive((gamma.transpose() * y).eval(), "z_update");
    return (r * (log_xi - gy.array().log())).exp();
}

std::pair<SimplexWeights, ProxReport> prox_recur(const SimplexWeights& rho_prev,
                                                 const PotentialVector& psi,
                                                 const CostMatrix& cost, const ProxConfig& cfg,
                                                 RunRng& rng) {
    cfg.validate();
    const Eigen::Index n = rho_prev.size();
    if (psi.size() != n || cost.rows() != n || cost.cols() != n)
        throw std::invalid_argument("prox_recur: nonconformable inputs");
    if ((rho_prev.array() < 0.0).any())
        throw std::invalid_argument("prox_recur: previous weights must be nonnegative");

    const auto t0 = std::chrono::steady_clock::now();

    const GibbsKernel gamma = gibbs_kernel(cost, cfg.epsilon);
    // log(xi) = -beta*psi - 1 kept in exponent form: the z-update evaluates
    // exp(r*(log xi - log Gamma^T y)), which stays finite where xi itself
    // would underflow (far-tail particles with large psi).
    const Eigen::ArrayXd log_xi = -cfg.beta * psi.array() - 1.0;
    const double r = contraction_factor(cfg);

    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.uniform01();
    Eigen::VectorXd y =
        rho_prev.array() / checked_positive((gamma * z).eval(), "prox_recur").array();

    ProxReport report;
    Eigen::VectorXd z_next(n), y_next(n), gy(n), gz(n);
    const auto fixed_point_residuals = [&](const Eigen::VectorXd& zv, const Eigen::VectorXd& yv,
                                           const Eigen::VectorXd& gz_v) {
        gy.noalias() = gamma.transpose() * yv;
        report.residual_marginal = (yv.array() * gz_v.array() - rho_prev.array()).abs().maxCoeff();
        // xi .* z^(-beta*eps/h) evaluated in exponent form for the same
        // reason as the z-update.
        const Eigen::ArrayXd gibbs_rhs =
            (log_xi - (cfg.beta * cfg.epsilon / cfg.h) * zv.array().log()).exp();
        report.residual_gibbs = (zv.array() * gy.array() - gibbs_rhs).abs().maxCoeff();
    };

    int l = 1;
    while (l <= cfg.max_iter) {
        gy.noalias() = gamma.transpose() * y;
        checked_positive(gy, "prox_recur");
        z_next = (r * (log_xi - gy.array().log())).exp();
        gz.noalias() = gamma * z_next;
        checked_positive(gz, "prox_recur");
        y_next = rho_prev.array() / gz.array();

        report.residual_z = (z_next - z).norm();
        report.residual_y = (y_next - y).norm();
        z.swap(z_next);
        y.swap(y_next);
        report.iterations = l;
        if (report.residual_y < cfg.delta && report.residual_z < cfg.delta) {
            // Candidate exit: accept only if the stationarity system itself
            // is satisfied to 10*delta, so "converged" certifies the fixed
            // point and not just a slow iteration.
            fixed_point_residuals(z, y, gz);
            if (report.residual_marginal <= 10.0 * cfg.delta &&
                report.residual_gibbs <= 10.0 * cfg.delta) {
                report.converged = true;
                break;
            }
        }
        ++l;
    }
    if (!report.converged) {
        gz.noalias() = gamma * z;
        fixed_point_residuals(z, y, gz);
    }

    SimplexWeights rho = z.array() * gy.array();  // gy holds Gamma^T y for the final iterates
    report.mass_prenorm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) report.mass_prenorm += rho[i];

    SimplexWeights out = normalize(rho);
    report.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
            .count();
    return {std::move(out), report};
}

}  // namespace proxflow::prox
