#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "proxflow/cloud.hpp"
#include "proxflow/prox.hpp"

namespace proxflow::run {

// Fully resolved run description: scenario registry defaults overlaid with
// the user's key = value file.
struct RunConfig {
    std::string scenario;
    long n_particles = 0;  // N
    long total_steps = 0;  // K
    long stride = 1;       // snapshot / moments / energy sampling stride
    std::uint64_t seed = 0;
    std::string out_dir;  // empty: run without touching the filesystem
    prox::ProxConfig prox;
    MomentMode moment_mode = MomentMode::Empirical;
    std::map<std::string, double> params;  // scenario-specific overrides
};

std::vector<std::string> scenario_names();
const std::string& scenario_description(const std::string& name);

// Registry defaults for a scenario (paper-caption parameter values).
RunConfig default_config(const std::string& scenario);

// Parse a flat key = value config text, fill defaults, enforce invariants.
// Throws ConfigError with a distinct code per failure family.
RunConfig validate_config(const std::string& text);

struct StepRecord {
    long k = 0;
    prox::ProxReport report;
};

// Invoked after every completed step with the propagation-space cloud
// (y-coordinates for Lamperti scenarios, nondimensional for the satellite).
using StepObserver = std::function<void(long k, const ParticleCloud&, const prox::ProxReport&)>;

struct RunResult {
    ParticleCloud final_cloud;  // propagation-space
    std::vector<StepRecord> reports;
};

// Execute the propagate loop: per step, Euler-Maruyama advances the states,
// the step's ground cost is assembled between the previous and the new
// cloud, the drift potential is evaluated, and the proximal recursion
// updates the weights. Artifacts (snapshots, moments.csv, free_energy.csv,
// timing.jsonl, manifest.json) are written under cfg.out_dir when set.
// Numerical failures write a machine-readable error record naming the step,
// then rethrow.
RunResult run_scenario(const RunConfig& cfg, const StepObserver& observer = {});

}  // namespace proxflow::run
