#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>

#include "proxflow/rng.hpp"

namespace proxflow {

// N x n, one row per particle.
using StateMatrix = Eigen::MatrixXd;
// Length-N probability masses; strictly positive after initialization and
// summing to 1 within 1e-12.
using SimplexWeights = Eigen::VectorXd;

// Probability-weighted scattered point cloud: the discrete representation of
// a joint PDF at one instant. Treated as an immutable snapshot; stepping
// constructs the next cloud.
struct ParticleCloud {
    StateMatrix states;
    SimplexWeights weights;
    double time = 0.0;

    Eigen::Index size() const { return states.rows(); }
    Eigen::Index dim() const { return states.cols(); }
};

using DensityFn = std::function<double(const Eigen::VectorXd&)>;
using SamplerFn = std::function<Eigen::VectorXd(RunRng&)>;

// Project a nonnegative vector with positive total mass onto the
// probability simplex. A vector whose entries already sum to exactly 1 is
// returned unchanged, which makes normalize(normalize(w)) == normalize(w)
// bit for bit.
SimplexWeights normalize(const Eigen::VectorXd& raw);

// Draw n_particles i.i.d. samples of rho0 via `sampler` and weight each by
// the density value there (normalized to the simplex). Fails when every
// drawn point carries zero density.
ParticleCloud init_cloud(const DensityFn& density, const SamplerFn& sampler,
                         Eigen::Index n_particles, RunRng& rng);
ParticleCloud init_cloud(const DensityFn& density, const SamplerFn& sampler,
                         Eigen::Index n_particles, std::uint64_t seed);

// Empirical: unweighted sample mean and unbiased sample covariance (the
// states are equally-likely SDE samples; the simplex weights carry PDF
// values, so weighting them here would bias the estimate).
// MassWeighted: weight-averaged mean and second central moment, for
// diagnostics.
enum class MomentMode { Empirical, MassWeighted };

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

Moments empirical_moments(const ParticleCloud& cloud, MomentMode mode = MomentMode::Empirical);

// Snapshot CSV: header "x1,...,xn,weight", one row per particle, 17
// significant digits.
void write_snapshot_csv(const ParticleCloud& cloud, const std::string& path);

}  // namespace proxflow
