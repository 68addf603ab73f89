#include "proxflow/energy.hpp"

#include <cmath>
#include <stdexcept>

#include "proxflow/errors.hpp"

namespace proxflow::energy {

double discrete_free_energy(const SimplexWeights& weights, const Eigen::VectorXd& psi,
                            double beta) {
    if (weights.size() != psi.size())
        throw std::invalid_argument("discrete_free_energy: size mismatch");
    if (!(beta > 0.0)) throw std::invalid_argument("discrete_free_energy: beta must be positive");

    double f = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (!(w > 0.0))
            throw std::invalid_argument("discrete_free_energy: zero weight (log singularity)");
        f += (psi[i] + std::log(w) / beta) * w;
    }
    return f;
}

InteractionMatrix interaction_matrix(const StateMatrix& states, const PotentialFn& phi) {
    const Eigen::Index n = states.rows();
    InteractionMatrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = phi(Eigen::VectorXd::Zero(states.cols()));
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = phi((states.row(i) - states.row(j)).transpose());
            d(i, j) = v;
            d(j, i) = v;  // phi is symmetric; fill both triangles from one evaluation
        }
    }
    return d;
}

Eigen::VectorXd semi_implicit_potential(const Eigen::VectorXd& psi, const InteractionMatrix& d,
                                        const SimplexWeights& prev_weights) {
    if (d.rows() != psi.size() || d.cols() != prev_weights.size())
        throw std::invalid_argument("semi_implicit_potential: nonconformable inputs");
    return psi + d * prev_weights;
}

double kl_divergence(const SimplexWeights& p, const SimplexWeights& q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: length mismatch");

    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
            throw std::invalid_argument("kl_divergence: negative entry");
        if (p[i] == 0.0) continue;  // 0 log 0 = 0
        if (q[i] == 0.0)
            throw std::invalid_argument("kl_divergence: support violation (p_i > 0, q_i = 0)");
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(kl, 0.0);
}

SinkhornResult sinkhorn_distance(const SimplexWeights& mu, const SimplexWeights& nu,
                                 const prox::CostMatrix& c, double epsilon, double tol,
                                 int max_iter) {
    const Eigen::Index n = mu.size();
    const Eigen::Index m = nu.size();
    if (c.rows() != n || c.cols() != m)
        throw std::invalid_argument("sinkhorn_distance: cost/marginal size mismatch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("sinkhorn_distance: epsilon must be positive");

    const Eigen::MatrixXd k = prox::gibbs_kernel(c, epsilon);
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m);

    SinkhornResult res;
    for (int it = 1; it <= max_iter; ++it) {
        u = mu.array() / (k * v).array();
        v = nu.array() / (k.transpose() * u).array();
        res.iterations = it;
        if (!u.allFinite() || !v.allFinite())
            throw NumericalError("sinkhorn_distance: scaling diverged (kernel underflow)");

        const Eigen::VectorXd row_marginal = u.array() * (k * v).array();
        res.marginal_error = (row_marginal - mu).cwiseAbs().maxCoeff();
        if (res.marginal_error < tol) {
            res.converged = true;
            break;
        }
    }
    res.coupling = u.asDiagonal() * k * v.asDiagonal();
    res.cost = (c.array() * res.coupling.array()).sum();
    return res;
}

double underdamped_free_energy(const SimplexWeights& weights, const StateMatrix& momenta,
                               double beta) {
    if (momenta.rows() != weights.size())
        throw std::invalid_argument("underdamped_free_energy: size mismatch");
    return discrete_free_energy(weights, momenta.rowwise().squaredNorm() / 2.0, beta);
}

}  // namespace proxflow::energy
