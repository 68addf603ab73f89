#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

#include "proxflow/cloud.hpp"
#include "proxflow/rng.hpp"

namespace proxflow::prox {

// N x N ground cost between two clouds; entries finite and >= 0, not
// necessarily symmetric (kinetic variant).
using CostMatrix = Eigen::MatrixXd;
// Entrywise exp(-C/2eps); entries in (0,1], possibly flushed to zero far
// from the diagonal.
using GibbsKernel = Eigen::MatrixXd;
// psi evaluated at the particle locations.
using PotentialVector = Eigen::VectorXd;

using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Scalars governing one Wasserstein-proximal step.
struct ProxConfig {
    double h = 0.0;        // time step
    double beta = 0.0;     // inverse temperature
    double epsilon = 0.0;  // entropic regularizer
    double delta = 0.0;    // fixed-point tolerance (Euclidean norm on the y/z updates)
    int max_iter = 0;      // L

    void validate() const;  // throws std::invalid_argument on violations
};

// r = 1/(1 + beta*epsilon/h) in (0,1): the Thompson-metric contraction
// factor of the z-iteration.
double contraction_factor(const ProxConfig& cfg);

// Convergence data for one proximal step.
struct ProxReport {
    int iterations = 0;       // sub-iterations used
    double residual_y = 0.0;  // ||y_l - y_{l-1}||_2 at exit
    double residual_z = 0.0;
    std::int64_t wall_ns = 0;
    bool converged = false;
    double mass_prenorm = 0.0;  // sum of the returned weights before renormalization
    // Infinity norms of the stationarity system at the returned iterates:
    //   y .* (Gamma z) - rho_prev          (marginal equation)
    //   z .* (Gamma^T y) - xi .* z^(-beta*eps/h)   (Gibbs equation)
    // Both are <= 10*delta whenever converged is true.
    double residual_marginal = 0.0;
    double residual_gibbs = 0.0;
};

// C(i,j) = squared Euclidean distance between row i of `a` and row j of `b`.
CostMatrix cost_matrix_euclidean(const StateMatrix& a, const StateMatrix& b);

// Two-point kinetic cost for underdamped dynamics. With (q,p) the i-th row
// of (Qa,Pa) and (qt,pt) the j-th row of (Qb,Pb):
//   C(i,j) = ||pt - p + h*grad_v(q)||^2 + 12*||(qt - q)/h - (pt + p)/2||^2.
// Generally asymmetric.
CostMatrix cost_matrix_underdamped(const StateMatrix& Qa, const StateMatrix& Pa,
                                   const StateMatrix& Qb, const StateMatrix& Pb,
                                   const GradFn& grad_v, double h);

// Entrywise exp(-C/2eps). Fails when a whole row or column underflows to
// zero (the iteration would divide by zero); the message names the largest
// C/(2eps) ratio so the caller can raise eps or shrink the step.
GibbsKernel gibbs_kernel(const CostMatrix& c, double epsilon);

// Entrywise exp(-beta*psi - 1).
Eigen::VectorXd xi_vector(const PotentialVector& psi, double beta);

// Thompson metric on the positive orthant:
// log max{ max_i z_i/zt_i, max_i zt_i/z_i }.
double thompson_distance(const Eigen::VectorXd& z, const Eigen::VectorXd& zt);

// One z-update of the fixed-point scheme with (gamma, psi, rho_prev) frozen:
//   z -> (xi ./ Gamma^T (rho_prev ./ (Gamma z)))^(1/(1+beta*eps/h)).
// Strictly contractive in the Thompson metric with factor
// contraction_factor(cfg).
Eigen::VectorXd z_update(const Eigen::VectorXd& z, const GibbsKernel& gamma,
                         const PotentialVector& psi, const SimplexWeights& rho_prev,
                         const ProxConfig& cfg);

// One entropic Wasserstein-proximal step: block-coordinate iteration
//   z_{l+1} = (xi ./ (Gamma^T y_l))^(1/(1+beta*eps/h)),
//   y_{l+1} = rho_prev ./ (Gamma z_{l+1}),
// from a random positive z_0 (entries ~ U(0,1) drawn from `rng`), stopping
// when both update norms fall below delta or after max_iter rounds. Returns
// the new simplex weights z .* (Gamma^T y), renormalized, plus the report
// (mass before renormalization, residuals, timing). Non-convergence is
// flagged, not thrown.
std::pair<SimplexWeights, ProxReport> prox_recur(const SimplexWeights& rho_prev,
                                                 const PotentialVector& psi,
                                                 const CostMatrix& cost, const ProxConfig& cfg,
                                                 RunRng& rng);

}  // namespace proxflow::prox
