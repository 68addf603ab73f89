#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "proxflow/errors.hpp"
#include "proxflow/models.hpp"
#include "support/quadrature.hpp"

using namespace proxflow;
using namespace proxflow::models;

TEST_CASE("ou analytic law") {
    OUParams p;  // a=1, beta=1, mu0=5, sigma0^2=0.04
    const auto [m0, v0] = ou_analytic(p, 0.0);
    CHECK(m0 == doctest::Approx(5.0));
    CHECK(v0 == doctest::Approx(0.04));

    const auto [m1, v1] = ou_analytic(p, 1.0);
    CHECK(m1 == doctest::Approx(1.8393972058572117).epsilon(1e-14));
    CHECK(v1 == doctest::Approx(0.8700781280928518).epsilon(1e-14));

    const auto [minf, vinf] = ou_analytic(p, 60.0);
    CHECK(minf == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(vinf == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mv analytic law") {
    const auto [m0, v0] = mv_analytic(1.0, 1.0, 1.0, 5.0, 9.0, 0.0);
    CHECK(m0 == doctest::Approx(5.0));
    CHECK(v0 == doctest::Approx(9.0));

    const auto [m1, v1] = mv_analytic(1.0, 1.0, 1.0, 5.0, 9.0, 1.0);
    CHECK(m1 == doctest::Approx(1.8393972058572117).epsilon(1e-14));
    CHECK(v1 == doctest::Approx(0.6556829305542405).epsilon(1e-14));

    const auto [minf, vinf] = mv_analytic(1.0, 1.0, 1.0, 5.0, 9.0, 50.0);
    CHECK(minf == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(vinf == doctest::Approx(0.5).epsilon(1e-12));
}

namespace {

LTIParams paper_lti() {
    LTIParams p;
    p.a.resize(2, 2);
    p.a << -10.0, 5.0, -30.0, 0.0;
    p.b.resize(2, 1);
    p.b << 2.0, 2.5;
    p.mu0 = Eigen::VectorXd::Constant(2, 4.0);
    p.sigma0 = 4.0 * Eigen::MatrixXd::Identity(2, 2);
    return p;
}

}  // namespace

TEST_CASE("lti moments") {
    const LTIParams p = paper_lti();

    const LTIMoments at0 = lti_moments(p, 0.0);
    CHECK((at0.mean - p.mu0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((at0.covariance - p.sigma0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(at0.a_hurwitz);

    // Stationary limit solves the Lyapunov equation.
    const LTIMoments at10 = lti_moments(p, 10.0);
    const Eigen::MatrixXd resid =
        p.a * at10.covariance + at10.covariance * p.a.transpose() + p.b * p.b.transpose();
    CHECK(resid.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(at10.mean.cwiseAbs().maxCoeff() <= 1e-8);
    // Independently hand-solved stationary covariance.
    CHECK(at10.covariance(0, 0) == doctest::Approx(0.2520833333333333).epsilon(1e-8));
    CHECK(at10.covariance(0, 1) == doctest::Approx(0.1041666666666667).epsilon(1e-8));
    CHECK(at10.covariance(1, 1) == doctest::Approx(0.7208333333333333).epsilon(1e-8));

    // Symmetry and positive definiteness along the trajectory.
    for (const double t : {0.05, 0.2, 0.5, 1.0, 2.0}) {
        const LTIMoments m = lti_moments(p, t);
        CHECK((m.covariance - m.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.covariance);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("lti moments decoupled decay when B = 0") {
    LTIParams p;
    p.a = -Eigen::MatrixXd::Identity(2, 2);
    p.b = Eigen::MatrixXd::Zero(2, 1);
    p.mu0 = Eigen::VectorXd::Zero(2);
    p.sigma0 = Eigen::MatrixXd::Identity(2, 2) * 3.0;
    const LTIMoments m = lti_moments(p, 0.7);
    CHECK(m.covariance(0, 0) == doctest::Approx(3.0 * std::exp(-1.4)).epsilon(1e-9));
    CHECK(m.covariance(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lti flags non-Hurwitz drift") {
    LTIParams p = paper_lti();
    p.a(0, 0) = 10.0;  // eigenvalue in the right half-plane
    p.a(1, 0) = 0.0;
    p.a(0, 1) = 0.0;
    p.a(1, 1) = -1.0;
    CHECK_FALSE(lti_moments(p, 0.1).a_hurwitz);
}

TEST_CASE("bessel_i") {
    CHECK(bessel_i(0.0, 0.0) == 1.0);
    CHECK(bessel_i(2.0, 0.0) == 0.0);
    CHECK(bessel_i(0.0, 1.0) == doctest::Approx(1.2660658777520084).epsilon(1e-12));
    CHECK(bessel_i(1.0, 2.0) == doctest::Approx(1.590636854637329).epsilon(1e-12));
    CHECK(bessel_i(2.0, 0.5) == doctest::Approx(0.031906149177738256).epsilon(1e-12));
    CHECK(bessel_i(0.0, 30.0) == doctest::Approx(781672297823.9779).epsilon(1e-10));
    CHECK_THROWS_AS(bessel_i(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(bessel_i(0.0, 1e4), NumericalError);
}

TEST_CASE("cir transient pdf") {
    CIRParams p;  // a=3, b=2, theta=2, x0=5

    CHECK(cir_transient_pdf(p, -1.0, 0.5) == 0.0);
    CHECK(cir_transient_pdf(p, 0.0, 0.5) == 0.0);
    CHECK_THROWS_AS(cir_transient_pdf(p, 1.0, 0.0), std::invalid_argument);

    // Externally computed values.
    CHECK(cir_transient_pdf(p, 2.0, 1.0) == doctest::Approx(0.33516006115889485).epsilon(1e-10));
    CHECK(cir_transient_pdf(p, 5.0, 0.3) == doctest::Approx(0.1042262707062077).epsilon(1e-10));

    // Quadrature oracle: unit mass and the known mean theta + (x0-theta)e^{-at}.
    for (const double t : {0.1, 0.5, 1.0}) {
        const auto pdf = [&](double x) { return cir_transient_pdf(p, x, t); };
        const double mass = testsupport::integrate(pdf, 0.0, 40.0, 1e-10);
        CHECK(std::abs(mass - 1.0) <= 1e-6);
        const double mean = testsupport::integrate([&](double x) { return x * pdf(x); }, 0.0, 40.0,
                                                   1e-10);
        CHECK(mean == doctest::Approx(p.theta + (p.x0 - p.theta) * std::exp(-p.a * t))
                          .epsilon(1e-6));
    }

    CIRParams bad;
    bad.a = 1.0;
    bad.b = 2.0;  // 2a = b^2 violates the Feller condition
    CHECK_THROWS_AS(cir_transient_pdf(bad, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("gibbs stationary weights") {
    const auto constant = [](const Eigen::VectorXd&) { return 3.0; };
    Eigen::MatrixXd pts(4, 1);
    pts << -1.0, 0.0, 1.0, 2.0;
    const SimplexWeights uniform = gibbs_stationary(constant, 1.0, pts);
    for (int i = 0; i < 4; ++i) CHECK(uniform[i] == doctest::Approx(0.25).epsilon(1e-14));

    const auto quad = [](const Eigen::VectorXd& x) { return 0.5 * x[0] * x[0]; };
    Eigen::MatrixXd sym(3, 1);
    sym << -1.0, 0.0, 1.0;
    const SimplexWeights w = gibbs_stationary(quad, 1.0, sym);
    CHECK(w[0] == doctest::Approx(w[2]).epsilon(1e-14));
    CHECK(w[1] > w[0]);
    CHECK(w[1] / w[0] == doctest::Approx(std::exp(0.5)).epsilon(1e-12));

    // Shift invariance: psi -> psi + c leaves the weights unchanged.
    const auto shifted = [&](const Eigen::VectorXd& x) { return quad(x) + 123.25; };
    const SimplexWeights ws = gibbs_stationary(shifted, 1.0, sym);
    CHECK((w - ws).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("bimodal potential critical points") {
    // grad psi = (x1^3 - x1, x2) vanishes at x1 in {-1, 0, 1}, x2 = 0; the
    // stationary density is largest at the two wells (+-1, 0).
    const auto psi = [](const Eigen::VectorXd& x) {
        return 0.25 * (1.0 + std::pow(x[0], 4)) + 0.5 * (x[1] * x[1] - x[0] * x[0]);
    };
    Eigen::MatrixXd crit(3, 2);
    crit << -1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    const SimplexWeights w = gibbs_stationary(psi, 1.0, crit);
    CHECK(w[0] == doctest::Approx(w[2]).epsilon(1e-13));
    CHECK(w[0] > w[1]);
}

TEST_CASE("satellite drift") {
    SatelliteParams p;
    const double k = p.oblateness_k();
    CHECK(k == doctest::Approx(5.263293184231138e25).epsilon(1e-12));

    const double r = p.r_scale;
    // Equatorial point: f_r = k/r^4 outward, f_theta = 0.
    const SatelliteDrift eq = satellite_drift(p, Eigen::Vector3d(r, 0.0, 0.0));
    CHECK(eq.gravitational.x() == doctest::Approx(-p.mu_grav / (r * r)).epsilon(1e-12));
    CHECK(eq.perturbation.x() == doctest::Approx(k / std::pow(r, 4)).epsilon(1e-12));
    CHECK(eq.perturbation.y() == doctest::Approx(0.0));
    CHECK(eq.perturbation.z() == doctest::Approx(0.0));
    CHECK(eq.perturbation.norm() ==
          doctest::Approx(1.6652918009249827e-05).epsilon(1e-10));

    // Polar point: f_r = -k/(2 r^4) along the axis.
    const SatelliteDrift pole = satellite_drift(p, Eigen::Vector3d(0.0, 0.0, r));
    CHECK(pole.perturbation.z() == doctest::Approx(-k / (2.0 * std::pow(r, 4))).epsilon(1e-12));
    CHECK(pole.perturbation.x() == doctest::Approx(0.0));

    // The oblateness force is a small correction to gravity at this radius.
    CHECK(eq.gravitational.norm() / eq.perturbation.norm() > 1e3);

    CHECK_THROWS_AS(satellite_drift(p, Eigen::Vector3d::Zero()), NumericalError);
}

TEST_CASE("satellite nondimensional system") {
    SatelliteParams p;
    const auto sys = satellite_nondim_system(p);
    CHECK(sys.gamma == doctest::Approx(p.gamma * p.t_scale));
    CHECK(sys.beta ==
          doctest::Approx(p.beta * (p.r_scale / p.t_scale) * (p.r_scale / p.t_scale)));

    // At the nominal radius the gravity term dominates and equals
    // mu T^2 / R^3 = (2 pi)^2 for a circular geostationary orbit (up to the
    // rounding of the published constants).
    const Eigen::VectorXd g = sys.grad_potential(Eigen::VectorXd::Unit(3, 0));
    const double grav_nd = p.mu_grav * p.t_scale * p.t_scale / std::pow(p.r_scale, 3);
    CHECK(grav_nd == doctest::Approx(4.0 * M_PI * M_PI).epsilon(2e-4));
    CHECK(g[0] == doctest::Approx(grav_nd - p.t_scale * p.t_scale / p.r_scale *
                                                1.6652918009249827e-05)
                      .epsilon(1e-12));
}
