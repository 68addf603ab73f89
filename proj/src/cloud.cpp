#include "proxflow/cloud.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "proxflow/errors.hpp"

namespace proxflow {

SimplexWeights normalize(const Eigen::VectorXd& raw) {
    const Eigen::Index n = raw.size();
    if (n == 0) throw std::invalid_argument("normalize: empty weight vector");

    double sum = 0.0;  // sequential sum; the order matters for the exact no-op below
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = raw[i];
        if (!(v >= 0.0)) throw std::invalid_argument("normalize: negative or NaN weight entry");
        sum += v;
    }
    if (sum == 0.0) throw std::invalid_argument("normalize: all weight entries are zero");
    if (!std::isfinite(sum)) throw NumericalError("normalize: weight sum overflowed");

    if (sum == 1.0) return raw;

    SimplexWeights w = raw / sum;
    // Pin the sequential sum to exactly 1 when the correction is at rounding
    // level, so a second normalize sees sum == 1.0 and returns unchanged.
    double head = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) head += w[i];
    const double tail = 1.0 - head;
    const double eps = std::numeric_limits<double>::epsilon();
    if (tail > 0.0 && std::abs(tail - w[n - 1]) <= 64.0 * eps * std::max(1.0, std::abs(w[n - 1]))) {
        w[n - 1] = tail;
    }
    return w;
}

ParticleCloud init_cloud(const DensityFn& density, const SamplerFn& sampler,
                         Eigen::Index n_particles, RunRng& rng) {
    if (n_particles < 1) throw std::invalid_argument("init_cloud: need at least one particle");

    Eigen::VectorXd first = sampler(rng);
    const Eigen::Index dim = first.size();
    if (dim < 1) throw std::invalid_argument("init_cloud: sampler returned empty state");

    StateMatrix states(n_particles, dim);
    Eigen::VectorXd raw(n_particles);
    states.row(0) = first.transpose();
    for (Eigen::Index i = 1; i < n_particles; ++i) {
        Eigen::VectorXd x = sampler(rng);
        if (x.size() != dim) throw std::invalid_argument("init_cloud: sampler changed dimension");
        states.row(i) = x.transpose();
    }
    for (Eigen::Index i = 0; i < n_particles; ++i) {
        const double d = density(states.row(i).transpose());
        if (!std::isfinite(d) || d < 0.0)
            throw NumericalError("init_cloud: density evaluator returned an invalid value");
        raw[i] = d;
    }
    if (!states.allFinite()) throw NumericalError("init_cloud: sampler produced non-finite state");
    if ((raw.array() == 0.0).all())
        throw NumericalError("init_cloud: all density values are zero at the sampled points");

    return ParticleCloud{std::move(states), normalize(raw), 0.0};
}

ParticleCloud init_cloud(const DensityFn& density, const SamplerFn& sampler,
                         Eigen::Index n_particles, std::uint64_t seed) {
    RunRng rng(seed);
    return init_cloud(density, sampler, n_particles, rng);
}

Moments empirical_moments(const ParticleCloud& cloud, MomentMode mode) {
    const Eigen::Index n = cloud.size();
    if (n < 2) throw std::invalid_argument("empirical_moments: covariance needs at least two particles");
    if (cloud.weights.size() != n)
        throw std::invalid_argument("empirical_moments: weight/state size mismatch");

    Moments m;
    if (mode == MomentMode::Empirical) {
        m.mean = cloud.states.colwise().mean().transpose();
        const StateMatrix centered = cloud.states.rowwise() - m.mean.transpose();
        m.covariance = centered.transpose() * centered / double(n - 1);
    } else {
        m.mean = cloud.states.transpose() * cloud.weights;
        const StateMatrix centered = cloud.states.rowwise() - m.mean.transpose();
        m.covariance = centered.transpose() * cloud.weights.asDiagonal() * centered;
    }
    m.covariance = ((m.covariance + m.covariance.transpose()) / 2.0).eval();
    return m;
}

void write_snapshot_csv(const ParticleCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(ConfigCode::IoError, "cannot open " + path + " for writing");

    for (Eigen::Index j = 0; j < cloud.dim(); ++j) out << "x" << (j + 1) << ",";
    out << "weight\n";

    char buf[32];
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        for (Eigen::Index j = 0; j < cloud.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", cloud.states(i, j));
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", cloud.weights[i]);
        out << buf << "\n";
    }
}

}  // namespace proxflow
