#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "proxflow/cloud.hpp"
#include "proxflow/prox.hpp"
#include "proxflow/scenario.hpp"

namespace proxflow::run {

// Per-sample reporting payload assembled by the scenario model: snapshot
// views (suffix -> cloud), the cloud whose moments go to moments.csv, the
// free-energy value, and the time column for the trace files.
struct ReportSample {
    std::vector<std::pair<std::string, ParticleCloud>> snapshot_views;
    ParticleCloud moments_cloud;
    double free_energy = 0.0;
    double report_time = 0.0;
};

std::string fnv1a64_file(const std::string& path);

// Streams one run directory: snapshots at stride, moments.csv,
// free_energy.csv, timing.jsonl (every step), manifest.json at the end.
// Inert when constructed with an empty directory.
class OutputWriter {
public:
    // particle_outputs = false (oracle-only scenarios) opens moments.csv only.
    OutputWriter(const RunConfig& cfg, bool particle_outputs = true);

    bool active() const { return active_; }
    void sample(long k, const ReportSample& s, MomentMode mode);
    // Moment row straight from an analytic oracle (no particles involved).
    void oracle_moment_row(double t, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);
    void timing(long k, const prox::ProxReport& rep);
    void error_record(long k, const std::string& message);
    void write_manifest(const RunConfig& cfg);

private:
    void moment_row(double t, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

    bool active_ = false;
    std::string dir_;
    std::ofstream moments_;
    std::ofstream energy_;
    std::ofstream timing_;
    bool moments_header_done_ = false;
    std::vector<std::string> hashed_files_;  // names relative to dir_
};

}  // namespace proxflow::run
