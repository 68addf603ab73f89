#pragma once

#include <Eigen/Dense>
#include <functional>

#include "proxflow/cloud.hpp"
#include "proxflow/prox.hpp"

namespace proxflow::energy {

// D(i,j) = phi(x_i - x_j); symmetric for symmetric phi.
using InteractionMatrix = Eigen::MatrixXd;

using PotentialFn = std::function<double(const Eigen::VectorXd&)>;

// F(rho) = sum_i (psi_i + beta^-1 log rho_i) rho_i over strictly positive
// simplex weights.
double discrete_free_energy(const SimplexWeights& weights, const Eigen::VectorXd& psi,
                            double beta);

InteractionMatrix interaction_matrix(const StateMatrix& states, const PotentialFn& phi);

// psi + D * prev_weights: the effective potential of the semi-implicit
// interaction scheme, ready to feed the proximal step unchanged.
Eigen::VectorXd semi_implicit_potential(const Eigen::VectorXd& psi, const InteractionMatrix& d,
                                        const SimplexWeights& prev_weights);

// sum p_i log(p_i/q_i) with the 0 log 0 = 0 convention; errors where p puts
// mass outside q's support.
double kl_divergence(const SimplexWeights& p, const SimplexWeights& q);

struct SinkhornResult {
    double cost = 0.0;  // <C, M> for the converged coupling
    int iterations = 0;
    bool converged = false;
    double marginal_error = 0.0;  // max |marginal - target| at exit
    Eigen::MatrixXd coupling;
};

// Diagnostic two-sided Sinkhorn scaling of exp(-C/2eps) to the marginals
// (mu, nu); the regularized transport cost it returns is an upper-biased
// surrogate for W^2 at eps > 0. Independent of ProxConfig; never called by
// the proximal recursion.
SinkhornResult sinkhorn_distance(const SimplexWeights& mu, const SimplexWeights& nu,
                                 const prox::CostMatrix& c, double epsilon, double tol = 1e-9,
                                 int max_iter = 10000);

// Free energy of the momentum marginal: psi_i = ||p_i||^2 / 2.
double underdamped_free_energy(const SimplexWeights& weights, const StateMatrix& momenta,
                               double beta);

}  // namespace proxflow::energy
