#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>

#include "proxflow/cloud.hpp"
#include "proxflow/rng.hpp"

namespace proxflow::sde {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ScalarMap = std::function<double(double)>;

// dx = -grad_psi(x) dt + sqrt(2/beta) dw.
struct GradientDriftSystem {
    ScalarFn psi;
    VecFn grad_psi;
    double beta = 1.0;
};

// dx = -(grad_psi(x) + sum_j grad_phi(x - x_j) rho_j) dt + sqrt(2/beta) dw;
// phi symmetric.
struct McKeanVlasovSystem {
    ScalarFn psi;
    VecFn grad_psi;
    double beta = 1.0;
    ScalarFn phi;
    VecFn grad_phi;
    // Optional closed form for the full interaction drift matrix
    // [sum_j grad_phi(x_i - x_j) rho_j]_i. Must equal the pair sum exactly;
    // used to avoid the O(N^2) callback cascade when the interaction has
    // known structure (e.g. quadratic phi).
    std::function<StateMatrix(const StateMatrix&, const SimplexWeights&)> interaction_drift_batch;
};

// dq = p dt, dp = (-grad_potential(q) - gamma p) dt + sqrt(2 gamma / beta) dw;
// state rows are (q, p) with n_pos position columns first.
struct UnderdampedSystem {
    ScalarFn potential;  // V(q)
    VecFn grad_potential;
    double gamma = 1.0;
    double beta = 1.0;
    int n_pos = 0;
};

// A unit-diffusion gradient system in y = forward(x) coordinates, with the
// change-of-variable bookkeeping to map densities back to x.
struct LampertiWrappedSystem {
    GradientDriftSystem inner;
    ScalarMap forward;   // y = varsigma(x)
    ScalarMap inverse;   // x = varsigma^{-1}(y)
    ScalarMap jacobian;  // |d varsigma / dx| evaluated at x
};

// Test hook only; the CLI never suppresses noise. Suppressed steps draw
// nothing from the stream.
enum class NoisePolicy { Sample, Suppress };

// Explicit Euler-Maruyama steppers. Tamed or (semi-)implicit variants for
// superlinear drifts would slot in behind these same signatures; only the
// explicit scheme is implemented.
StateMatrix em_step_gradient(const ParticleCloud& cloud, const GradientDriftSystem& sys, double h,
                             RunRng& rng, NoisePolicy noise = NoisePolicy::Sample);

// Interaction drift uses the current weights (density-dependent dynamics).
StateMatrix em_step_mckean_vlasov(const ParticleCloud& cloud, const McKeanVlasovSystem& sys,
                                  double h, RunRng& rng, NoisePolicy noise = NoisePolicy::Sample);

// Noise enters the momentum block only.
StateMatrix em_step_underdamped(const ParticleCloud& cloud, const UnderdampedSystem& sys, double h,
                                RunRng& rng, NoisePolicy noise = NoisePolicy::Sample);

// Unit-diffusion transform of the CIR model dx = a(theta-x) dt + b sqrt(x) dw:
// y = 2 sqrt(x)/b, with inner potential psi(y) = a y^2/4 - (q + 1/2) log y,
// q = 2 a theta / b^2 - 1, and beta = 2. Requires the Feller condition
// 2a > b^2 > 0, theta > 0.
LampertiWrappedSystem lamperti_transform_cir(double a, double b, double theta);

// Push a weighted univariate cloud through `point_map` and apply the
// change-of-measure multiplier `jacobian` at each mapped point, then
// renormalize.
std::pair<SimplexWeights, StateMatrix> pushforward_density(const SimplexWeights& weights,
                                                           const StateMatrix& states,
                                                           const ScalarMap& point_map,
                                                           const ScalarMap& jacobian);

// q' = q/R, p' = p/(R/T), t' = t/T for 6-column (q,p) clouds. Simplex
// weights are unchanged (the constant Jacobian cancels in normalization).
struct SatelliteScales {
    double r = 4.2164e7;  // m
    double t = 86164.0;   // s
};

ParticleCloud nondimensionalize(const ParticleCloud& dimensional, const SatelliteScales& s);
ParticleCloud redimensionalize(const ParticleCloud& nondimensional, const SatelliteScales& s);

}  // namespace proxflow::sde
