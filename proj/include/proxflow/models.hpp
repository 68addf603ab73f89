#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>

#include "proxflow/cloud.hpp"
#include "proxflow/sde.hpp"

namespace proxflow::models {

// dx = -a x dt + sqrt(2/beta) dw, x0 ~ N(mu0, sigma0_sq).
struct OUParams {
    double a = 1.0;
    double beta = 1.0;
    double mu0 = 5.0;
    double sigma0_sq = 4e-2;
};

// dx = A x dt + B dw, x0 ~ N(mu0, Sigma0).
struct LTIParams {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::VectorXd mu0;
    Eigen::MatrixXd sigma0;
};

// dx = a(theta - x) dt + b sqrt(x) dw with 2a > b^2 > 0 (Feller), x0 > 0.
struct CIRParams {
    double a = 3.0;
    double b = 2.0;
    double theta = 2.0;
    double x0 = 5.0;
};

// Perturbed two-body Langevin dynamics in geocentric coordinates.
struct SatelliteParams {
    double mu_grav = 3.9859e14;  // m^3/s^2
    double j2 = 1.082e-3;
    double r_earth = 6.3781e6;  // m
    double gamma = 1.0;         // 1/s
    double beta = 1.0;          // m^2/s^2
    double r_scale = 4.2164e7;  // m, nominal geostationary radius
    double t_scale = 86164.0;   // s, its period

    double oblateness_k() const { return 3.0 * j2 * r_earth * r_earth * mu_grav; }
};

// Transient law of the OU process: N(mu0 e^{-at}, (sigma0^2 - 1/(a beta)) e^{-2at} + 1/(a beta)).
std::pair<double, double> ou_analytic(const OUParams& p, double t);

struct LTIMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    bool a_hurwitz = true;  // informational; the oracle itself is finite-horizon
};

// Integrates mu' = A mu, Sigma' = A Sigma + Sigma A^T + B B^T with a classical
// fixed-step 4th-order scheme, refining the step until successive halvings
// agree to 1e-8.
LTIMoments lti_moments(const LTIParams& p, double t);

// Transient mean/variance of the quadratically-interacting mean-field model:
// mu(t) = mu0 e^{-at}, sigma^2(t) = (sigma0^2 - 1/((a+b)beta)) e^{-2(a+b)t} + 1/((a+b)beta).
std::pair<double, double> mv_analytic(double a, double b, double beta, double mu0,
                                      double sigma0_sq, double t);

// Closed-form transient density of the CIR model started from a Dirac at x0;
// zero for x <= 0. t must be positive (the initial law is a Dirac).
double cir_transient_pdf(const CIRParams& p, double x, double t);

// Modified Bessel function of the first kind, real order q >= 0, by power
// series; relative accuracy ~1e-10 at desk scale. Errors beyond the series
// validity bound (intermediate terms overflow near x ~ 700).
double bessel_i(double order, double x);

// exp(-beta psi(x_i)) over the given points, normalized on the simplex (the
// partition constant cancels).
SimplexWeights gibbs_stationary(const std::function<double(const Eigen::VectorXd&)>& psi,
                                double beta, const StateMatrix& points);

struct SatelliteDrift {
    Eigen::Vector3d gravitational;  // -mu q / ||q||^3
    Eigen::Vector3d perturbation;   // oblateness force, cartesian
};

// Gravitational drift and the J2 oblateness perturbation at position q (m).
SatelliteDrift satellite_drift(const SatelliteParams& p, const Eigen::Vector3d& q);

// The satellite dynamics in nondimensional coordinates q' = q/R, p' = pT/R,
// t' = t/T: an underdamped Langevin system with gamma' = gamma*T,
// beta' = beta*(R/T)^2, and momentum drift
//   -(mu T^2/R^3) q'/||q'||^3 + (T^2/R) f_pert(R q') - gamma' p'.
// Its noise coefficient sqrt(2 gamma'/beta') equals (T^{3/2}/R) sqrt(2 gamma/beta)
// identically.
sde::UnderdampedSystem satellite_nondim_system(const SatelliteParams& p);

}  // namespace proxflow::models
