#include "proxflow/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "proxflow/errors.hpp"

namespace proxflow::sde {

namespace {

void check_row_finite(const Eigen::RowVectorXd& row, Eigen::Index particle, const char* who) {
    if (!row.allFinite())
        throw NumericalError(std::string(who) + ": non-finite drift at particle " +
                             std::to_string(particle));
}

}  // namespace

StateMatrix em_step_gradient(const ParticleCloud& cloud, const GradientDriftSystem& sys, double h,
                             RunRng& rng, NoisePolicy noise) {
    if (!(h > 0.0)) throw std::invalid_argument("em_step_gradient: h must be positive");
    const Eigen::Index n = cloud.size();
    const Eigen::Index d = cloud.dim();
    const double noise_coeff = std::sqrt(2.0 / sys.beta) * std::sqrt(h);

    StateMatrix next(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd drift = -sys.grad_psi(cloud.states.row(i).transpose()).transpose();
        check_row_finite(drift, i, "em_step_gradient");
        next.row(i) = cloud.states.row(i) + h * drift;
        if (noise == NoisePolicy::Sample)
            for (Eigen::Index j = 0; j < d; ++j) next(i, j) += noise_coeff * rng.gaussian();
    }
    return next;
}

StateMatrix em_step_mckean_vlasov(const ParticleCloud& cloud, const McKeanVlasovSystem& sys,
                                  double h, RunRng& rng, NoisePolicy noise) {
    if (!(h > 0.0)) throw std::invalid_argument("em_step_mckean_vlasov: h must be positive");
    const Eigen::Index n = cloud.size();
    const Eigen::Index d = cloud.dim();
    if (cloud.weights.size() != n)
        throw std::invalid_argument("em_step_mckean_vlasov: weight/state size mismatch");
    const double noise_coeff = std::sqrt(2.0 / sys.beta) * std::sqrt(h);

    StateMatrix interaction;
    if (sys.interaction_drift_batch) {
        interaction = sys.interaction_drift_batch(cloud.states, cloud.weights);
        if (interaction.rows() != n || interaction.cols() != d)
            throw std::invalid_argument("em_step_mckean_vlasov: batch drift has wrong shape");
    } else {
        interaction = StateMatrix::Zero(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                interaction.row(i) +=
                    cloud.weights[j] *
                    sys.grad_phi((cloud.states.row(i) - cloud.states.row(j)).transpose())
                        .transpose();
    }

    StateMatrix next(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd drift =
            -(sys.grad_psi(cloud.states.row(i).transpose()).transpose() + interaction.row(i));
        check_row_finite(drift, i, "em_step_mckean_vlasov");
        next.row(i) = cloud.states.row(i) + h * drift;
        if (noise == NoisePolicy::Sample)
            for (Eigen::Index j = 0; j < d; ++j) next(i, j) += noise_coeff * rng.gaussian();
    }
    return next;
}

StateMatrix em_step_underdamped(const ParticleCloud& cloud, const UnderdampedSystem& sys, double h,
                                RunRng& rng, NoisePolicy noise) {
    if (!(h > 0.0)) throw std::invalid_argument("em_step_underdamped: h must be positive");
    const Eigen::Index n = cloud.size();
    const Eigen::Index np = sys.n_pos;
    if (cloud.dim() != 2 * np)
        throw std::invalid_argument("em_step_underdamped: state dimension must be 2*n_pos");
    const double noise_coeff = std::sqrt(2.0 * sys.gamma / sys.beta) * std::sqrt(h);

    StateMatrix next(n, 2 * np);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd q = cloud.states.row(i).head(np);
        const Eigen::RowVectorXd p = cloud.states.row(i).tail(np);
        const Eigen::RowVectorXd gv = sys.grad_potential(q.transpose()).transpose();
        check_row_finite(gv, i, "em_step_underdamped");

        next.row(i).head(np) = q + h * p;  // position block: no stochastic increment
        next.row(i).tail(np) = p - h * (gv + sys.gamma * p);
        if (noise == NoisePolicy::Sample)
            for (Eigen::Index j = 0; j < np; ++j)
                next(i, np + j) += noise_coeff * rng.gaussian();
    }
    return next;
}

LampertiWrappedSystem lamperti_transform_cir(double a, double b, double theta) {
    if (!(b * b > 0.0) || !(2.0 * a > b * b) || !(theta > 0.0))
        throw std::invalid_argument(
            "lamperti_transform_cir: Feller condition 2a > b^2 > 0, theta > 0 violated");

    const double q = 2.0 * a * theta / (b * b) - 1.0;
    LampertiWrappedSystem sys;
    sys.inner.beta = 2.0;
    sys.inner.psi = [a, q](const Eigen::VectorXd& y) {
        return a * y[0] * y[0] / 4.0 - (q + 0.5) * std::log(y[0]);
    };
    sys.inner.grad_psi = [a, q](const Eigen::VectorXd& y) {
        Eigen::VectorXd g(1);
        g[0] = a * y[0] / 2.0 - (q + 0.5) / y[0];
        return g;
    };
    sys.forward = [b](double x) { return 2.0 * std::sqrt(x) / b; };
    sys.inverse = [b](double y) { return b * b * y * y / 4.0; };
    sys.jacobian = [b](double x) { return 1.0 / (b * std::sqrt(x)); };
    return sys;
}

std::pair<SimplexWeights, StateMatrix> pushforward_density(const SimplexWeights& weights,
                                                           const StateMatrix& states,
                                                           const ScalarMap& point_map,
                                                           const ScalarMap& jacobian) {
    if (states.cols() != 1)
        throw std::invalid_argument("pushforward_density: univariate clouds only");
    if (states.rows() != weights.size())
        throw std::invalid_argument("pushforward_density: weight/state size mismatch");

    const Eigen::Index n = states.rows();
    StateMatrix mapped(n, 1);
    Eigen::VectorXd raw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = point_map(states(i, 0));
        const double j = jacobian(x);
        if (!std::isfinite(x) || !std::isfinite(j) || j == 0.0)
            throw NumericalError("pushforward_density: invalid jacobian at mapped point " +
                                 std::to_string(i));
        mapped(i, 0) = x;
        raw[i] = weights[i] * std::abs(j);
    }
    return {normalize(raw), std::move(mapped)};
}

ParticleCloud nondimensionalize(const ParticleCloud& dimensional, const SatelliteScales& s) {
    if (dimensional.dim() != 6)
        throw std::invalid_argument("nondimensionalize: expected 6-column (q,p) states");
    ParticleCloud out = dimensional;
    out.states.leftCols(3) /= s.r;
    out.states.rightCols(3) /= s.r / s.t;
    out.time = dimensional.time / s.t;
    return out;
}

ParticleCloud redimensionalize(const ParticleCloud& nondimensional, const SatelliteScales& s) {
    if (nondimensional.dim() != 6)
        throw std::invalid_argument("redimensionalize: expected 6-column (q,p) states");
    ParticleCloud out = nondimensional;
    out.states.leftCols(3) *= s.r;
    out.states.rightCols(3) *= s.r / s.t;
    out.time = nondimensional.time * s.t;
    return out;
}

}  // namespace proxflow::sde
