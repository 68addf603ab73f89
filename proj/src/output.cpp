#include "output.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "proxflow/errors.hpp"

namespace proxflow::run {

namespace fs = std::filesystem;

namespace {

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(ConfigCode::IoError, "cannot hash " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char out[32];
    std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

OutputWriter::OutputWriter(const RunConfig& cfg, bool particle_outputs) {
    if (cfg.out_dir.empty()) return;
    active_ = true;
    dir_ = cfg.out_dir;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError(ConfigCode::IoError, "cannot create output directory " + dir_);

    moments_.open(dir_ + "/moments.csv");
    if (!moments_)
        throw ConfigError(ConfigCode::IoError, "output directory " + dir_ + " is not writable");
    hashed_files_.push_back("moments.csv");

    if (particle_outputs) {
        energy_.open(dir_ + "/free_energy.csv");
        timing_.open(dir_ + "/timing.jsonl");
        if (!energy_ || !timing_)
            throw ConfigError(ConfigCode::IoError, "output directory " + dir_ + " is not writable");
        energy_ << "t,F\n";
        hashed_files_.push_back("free_energy.csv");
    }
}

void OutputWriter::moment_row(double t, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::Index n = mean.size();
    if (!moments_header_done_) {
        moments_ << "t";
        for (Eigen::Index i = 0; i < n; ++i) moments_ << ",mean_" << (i + 1);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) moments_ << ",var_" << (i + 1) << (j + 1);
        moments_ << "\n";
        moments_header_done_ = true;
    }
    moments_ << g17(t);
    for (Eigen::Index i = 0; i < n; ++i) moments_ << "," << g17(mean[i]);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) moments_ << "," << g17(cov(i, j));
    moments_ << "\n";
}

void OutputWriter::oracle_moment_row(double t, const Eigen::VectorXd& mean,
                                     const Eigen::MatrixXd& cov) {
    if (!active_) return;
    moment_row(t, mean, cov);
}

void OutputWriter::sample(long k, const ReportSample& s, MomentMode mode) {
    if (!active_) return;

    for (const auto& [suffix, cloud] : s.snapshot_views) {
        const std::string name =
            suffix.empty() ? "snapshot_k=" + std::to_string(k) + ".csv"
                           : "snapshot_" + suffix + "_k=" + std::to_string(k) + ".csv";
        write_snapshot_csv(cloud, dir_ + "/" + name);
        hashed_files_.push_back(name);
    }

    const Moments m = empirical_moments(s.moments_cloud, mode);
    moment_row(s.report_time, m.mean, m.covariance);
    energy_ << g17(s.report_time) << "," << g17(s.free_energy) << "\n";
}

void OutputWriter::timing(long k, const prox::ProxReport& rep) {
    if (!active_) return;
    timing_ << "{\"k\":" << k << ",\"iters\":" << rep.iterations << ",\"res_y\":"
            << g17(rep.residual_y) << ",\"res_z\":" << g17(rep.residual_z) << ",\"converged\":"
            << (rep.converged ? "true" : "false") << ",\"wall_ns\":" << rep.wall_ns << "}\n";
}

void OutputWriter::error_record(long k, const std::string& message) {
    if (!active_) return;
    nlohmann::json j;
    j["step"] = k;
    j["error"] = message;
    j["exit_code"] = 3;
    std::ofstream out(dir_ + "/error.json");
    out << j.dump(2) << "\n";
}

void OutputWriter::write_manifest(const RunConfig& cfg) {
    if (!active_) return;
    moments_.flush();
    energy_.flush();
    timing_.flush();

    nlohmann::json j;
    j["scenario"] = cfg.scenario;
    nlohmann::json c;
    c["N"] = cfg.n_particles;
    c["K"] = cfg.total_steps;
    c["stride"] = cfg.stride;
    c["seed"] = cfg.seed;
    c["h"] = cfg.prox.h;
    c["beta"] = cfg.prox.beta;
    c["epsilon"] = cfg.prox.epsilon;
    c["delta"] = cfg.prox.delta;
    c["L"] = cfg.prox.max_iter;
    c["moment_estimator"] =
        cfg.moment_mode == MomentMode::Empirical ? "empirical" : "mass_weighted";
    for (const auto& [key, value] : cfg.params) c[key] = value;
    j["config"] = c;

    // timing.jsonl carries wall-clock fields, so it is listed but not hashed;
    // every other artifact participates in the reproducibility audit.
    nlohmann::json outputs;
    for (const auto& name : hashed_files_) outputs[name] = fnv1a64_file(dir_ + "/" + name);
    j["outputs"] = outputs;
    j["unhashed"] = {"timing.jsonl"};

    std::ofstream out(dir_ + "/manifest.json");
    if (!out) throw ConfigError(ConfigCode::IoError, "cannot write manifest in " + dir_);
    out << j.dump(2) << "\n";
}

}  // namespace proxflow::run
