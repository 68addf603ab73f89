#include "proxflow/models.hpp"

#include <cmath>
#include <stdexcept>

#include "proxflow/cloud.hpp"
#include "proxflow/errors.hpp"

namespace proxflow::models {

std::pair<double, double> ou_analytic(const OUParams& p, double t) {
    if (t < 0.0) throw std::invalid_argument("ou_analytic: negative time");
    const double mean = p.mu0 * std::exp(-p.a * t);
    const double var =
        (p.sigma0_sq - 1.0 / (p.a * p.beta)) * std::exp(-2.0 * p.a * t) + 1.0 / (p.a * p.beta);
    return {mean, var};
}

namespace {

struct LTIState {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};

LTIState lti_rk4(const LTIParams& p, double t, long steps) {
    const Eigen::MatrixXd bbt = p.b * p.b.transpose();
    const double dt = t / double(steps);

    auto mu_dot = [&](const Eigen::VectorXd& mu) { return (p.a * mu).eval(); };
    auto sig_dot = [&](const Eigen::MatrixXd& s) {
        return (p.a * s + s * p.a.transpose() + bbt).eval();
    };

    LTIState st{p.mu0, p.sigma0};
    for (long k = 0; k < steps; ++k) {
        const Eigen::VectorXd m1 = mu_dot(st.mu);
        const Eigen::MatrixXd s1 = sig_dot(st.sigma);
        const Eigen::VectorXd m2 = mu_dot(st.mu + 0.5 * dt * m1);
        const Eigen::MatrixXd s2 = sig_dot(st.sigma + 0.5 * dt * s1);
        const Eigen::VectorXd m3 = mu_dot(st.mu + 0.5 * dt * m2);
        const Eigen::MatrixXd s3 = sig_dot(st.sigma + 0.5 * dt * s2);
        const Eigen::VectorXd m4 = mu_dot(st.mu + dt * m3);
        const Eigen::MatrixXd s4 = sig_dot(st.sigma + dt * s3);
        st.mu += dt / 6.0 * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
        st.sigma += dt / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
        st.sigma = ((st.sigma + st.sigma.transpose()) / 2.0).eval();
    }
    return st;
}

}  // namespace

LTIMoments lti_moments(const LTIParams& p, double t) {
    const Eigen::Index n = p.a.rows();
    if (p.a.cols() != n || p.b.rows() != n || p.mu0.size() != n || p.sigma0.rows() != n ||
        p.sigma0.cols() != n)
        throw std::invalid_argument("lti_moments: nonconformable system matrices");
    if (t < 0.0) throw std::invalid_argument("lti_moments: negative time");

    LTIMoments out;
    out.a_hurwitz = (Eigen::EigenSolver<Eigen::MatrixXd>(p.a).eigenvalues().real().array() < 0.0).all();
    if (t == 0.0) {
        out.mean = p.mu0;
        out.covariance = p.sigma0;
        return out;
    }

    long steps = std::max<long>(16, std::lround(t / (1e-4 * std::max(1.0, t))));
    LTIState coarse = lti_rk4(p, t, steps);
    for (int round = 0; round < 8; ++round) {
        const LTIState fine = lti_rk4(p, t, steps * 2);
        const double err = std::max((fine.mu - coarse.mu).cwiseAbs().maxCoeff(),
                                    (fine.sigma - coarse.sigma).cwiseAbs().maxCoeff());
        coarse = fine;
        steps *= 2;
        if (err <= 1e-8) break;
    }
    out.mean = coarse.mu;
    out.covariance = coarse.sigma;
    return out;
}

std::pair<double, double> mv_analytic(double a, double b, double beta, double mu0,
                                      double sigma0_sq, double t) {
    if (!(a > 0.0) || !(b > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("mv_analytic: a, b, beta must be positive");
    const double mean = mu0 * std::exp(-a * t);
    const double s_inf = 1.0 / ((a + b) * beta);
    const double var = (sigma0_sq - s_inf) * std::exp(-2.0 * (a + b) * t) + s_inf;
    return {mean, var};
}

double bessel_i(double order, double x) {
    if (order < 0.0 || x < 0.0)
        throw std::invalid_argument("bessel_i: order and argument must be nonnegative");
    if (x > 650.0)
        throw NumericalError("bessel_i: argument beyond the power-series validity bound");

    // I_q(x) = sum_m (x/2)^{2m+q} / (m! Gamma(m+q+1)); all terms positive, so
    // plain summation is accurate. First term via lgamma to survive large q.
    const double half = x / 2.0;
    double term;
    if (half == 0.0) {
        return order == 0.0 ? 1.0 : 0.0;
    }
    term = std::exp(order * std::log(half) - std::lgamma(order + 1.0));
    double sum = term;
    for (int m = 1; m < 4000; ++m) {
        term *= half * half / (double(m) * (double(m) + order));
        sum += term;
        if (term < 1e-16 * sum) return sum;
    }
    throw NumericalError("bessel_i: series failed to converge");
}

double cir_transient_pdf(const CIRParams& p, double x, double t) {
    if (!(2.0 * p.a > p.b * p.b) || !(p.b * p.b > 0.0) || !(p.theta > 0.0))
        throw std::invalid_argument("cir_transient_pdf: Feller condition violated");
    if (t <= 0.0)
        throw std::invalid_argument("cir_transient_pdf: t must be positive (initial law is a Dirac)");
    if (x <= 0.0) return 0.0;

    const double q = 2.0 * p.a * p.theta / (p.b * p.b) - 1.0;
    const double c = 2.0 * p.a / (p.b * p.b * (1.0 - std::exp(-p.a * t)));
    const double u = c * p.x0 * std::exp(-p.a * t);
    const double v = c * x;
    return c * std::exp(-(u + v)) * std::pow(v / u, q / 2.0) * bessel_i(q, 2.0 * std::sqrt(u * v));
}

SimplexWeights gibbs_stationary(const std::function<double(const Eigen::VectorXd&)>& psi,
                                double beta, const StateMatrix& points) {
    if (!(beta > 0.0)) throw std::invalid_argument("gibbs_stationary: beta must be positive");
    const Eigen::Index n = points.rows();
    if (n < 1) throw std::invalid_argument("gibbs_stationary: empty point set");

    Eigen::VectorXd vals(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        vals[i] = psi(points.row(i).transpose());
        if (!std::isfinite(vals[i]))
            throw NumericalError("gibbs_stationary: psi not finite at point " + std::to_string(i));
    }
    // Shift by the minimum before exponentiating; the partition constant
    // absorbs it, which also makes the psi -> psi + c invariance exact up to
    // one rounding in the shift.
    const double shift = vals.minCoeff();
    Eigen::VectorXd raw = (-(beta * (vals.array() - shift))).exp();
    if ((raw.array() == 0.0).all())
        throw NumericalError("gibbs_stationary: all Gibbs factors underflowed");
    return normalize(raw);
}

SatelliteDrift satellite_drift(const SatelliteParams& p, const Eigen::Vector3d& q) {
    const double r = q.norm();
    if (!(r > 0.0)) throw NumericalError("satellite_drift: position at the singularity q = 0");

    SatelliteDrift d;
    d.gravitational = -p.mu_grav * q / (r * r * r);

    const double k = p.oblateness_k();
    const double ct = q.z() / r;                                  // cos(theta), theta from the pole axis convention c_theta = z/r
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    const double fr = k / (2.0 * std::pow(r, 4)) * (3.0 * st * st - 1.0);
    const double fth = -k / std::pow(r, 5) * st * ct;

    double cphi = 1.0, sphi = 0.0;
    if (st > 1e-12) {
        cphi = q.x() / (r * st);
        sphi = q.y() / (r * st);
    }
    // Spherical-to-cartesian rotation; f_phi = 0 identically, and at the
    // poles (st -> 0) the map degenerates to the phi-free limit.
    d.perturbation.x() = st * cphi * fr + ct * cphi * fth;
    d.perturbation.y() = st * sphi * fr + ct * sphi * fth;
    d.perturbation.z() = ct * fr - st * fth;
    return d;
}

sde::UnderdampedSystem satellite_nondim_system(const SatelliteParams& p) {
    const double t = p.t_scale, r = p.r_scale;
    const double grav_nd = p.mu_grav * t * t / (r * r * r);
    const double pert_nd = t * t / r;

    sde::UnderdampedSystem sys;
    sys.gamma = p.gamma * t;
    sys.beta = p.beta * (r / t) * (r / t);
    sys.n_pos = 3;
    sys.grad_potential = [grav_nd, pert_nd, p, r](const Eigen::VectorXd& qp) {
        const Eigen::Vector3d q(qp[0], qp[1], qp[2]);
        const double rn = q.norm();
        if (!(rn > 0.0)) throw NumericalError("satellite: position at the singularity q = 0");
        const SatelliteDrift d = satellite_drift(p, r * q);
        return Eigen::VectorXd(grav_nd * q / (rn * rn * rn) - pert_nd * d.perturbation);
    };
    sys.potential = [](const Eigen::VectorXd&) { return 0.0; };  // not needed by the stepper
    return sys;
}

}  // namespace proxflow::models
