#include "proxflow/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "output.hpp"
#include "proxflow/energy.hpp"
#include "proxflow/errors.hpp"
#include "proxflow/models.hpp"
#include "proxflow/sde.hpp"

namespace proxflow::run {

namespace {

double param(const RunConfig& cfg, const std::string& key) { return cfg.params.at(key); }

DensityFn gaussian_density(const Eigen::VectorXd& mu, const Eigen::VectorXd& diag_var) {
    return [mu, diag_var](const Eigen::VectorXd& x) {
        double expo = 0.0, lognorm = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            expo += (x[i] - mu[i]) * (x[i] - mu[i]) / diag_var[i];
            lognorm += std::log(2.0 * M_PI * diag_var[i]);
        }
        return std::exp(-0.5 * expo - 0.5 * lognorm);
    };
}

SamplerFn gaussian_sampler(const Eigen::VectorXd& mu, const Eigen::VectorXd& diag_var) {
    return [mu, diag_var](RunRng& rng) {
        Eigen::VectorXd x(mu.size());
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            x[i] = mu[i] + std::sqrt(diag_var[i]) * rng.gaussian();
        return x;
    };
}

// Per-step inputs for the proximal update: the advanced states, the drift
// potential vector at the previous states, and the ground cost between the
// previous (rows) and new (columns) clouds. Rows pair with the previous
// weights, which is the orientation the coupling constraints require.
struct StepData {
    StateMatrix new_states;
    Eigen::VectorXd psi;
    prox::CostMatrix cost;
};

class ScenarioModel {
public:
    virtual ~ScenarioModel() = default;
    virtual bool particle_based() const { return true; }
    virtual ParticleCloud initial_cloud(const RunConfig& cfg, RunRng& rng) const = 0;
    virtual StepData make_step(const ParticleCloud& prev, const RunConfig& cfg,
                               RunRng& rng) const = 0;
    virtual prox::ProxConfig prox_config(const RunConfig& cfg) const { return cfg.prox; }
    virtual ReportSample report(const ParticleCloud& cloud, const RunConfig& cfg) const = 0;
    // Oracle-only scenarios implement this instead of the particle interface.
    virtual void write_oracle_outputs(OutputWriter&, const RunConfig&) const {}
};

// Plain gradient-drift scenario (OU and the planar bimodal potential).
class GradientScenario : public ScenarioModel {
public:
    GradientScenario(sde::GradientDriftSystem sys, Eigen::VectorXd mu0, Eigen::VectorXd var0)
        : sys_(std::move(sys)), mu0_(std::move(mu0)), var0_(std::move(var0)) {}

    ParticleCloud initial_cloud(const RunConfig& cfg, RunRng& rng) const override {
        return init_cloud(gaussian_density(mu0_, var0_), gaussian_sampler(mu0_, var0_),
                          cfg.n_particles, rng);
    }

    StepData make_step(const ParticleCloud& prev, const RunConfig& cfg, RunRng& rng) const override {
        StepData sd;
        sd.psi.resize(prev.size());
        for (Eigen::Index i = 0; i < prev.size(); ++i)
            sd.psi[i] = sys_.psi(prev.states.row(i).transpose());
        sd.new_states = sde::em_step_gradient(prev, sys_, cfg.prox.h, rng);
        sd.cost = prox::cost_matrix_euclidean(prev.states, sd.new_states);
        return sd;
    }

    ReportSample report(const ParticleCloud& cloud, const RunConfig&) const override {
        ReportSample s;
        s.snapshot_views = {{"", cloud}};
        s.moments_cloud = cloud;
        Eigen::VectorXd psi(cloud.size());
        for (Eigen::Index i = 0; i < cloud.size(); ++i)
            psi[i] = sys_.psi(cloud.states.row(i).transpose());
        s.free_energy = energy::discrete_free_energy(cloud.weights, psi, sys_.beta);
        s.report_time = cloud.time;
        return s;
    }

private:
    sde::GradientDriftSystem sys_;
    Eigen::VectorXd mu0_, var0_;
};

// Quadratic-interaction mean-field scenario, semi-implicit effective
// potential. The quadratic structure collapses the pair sums exactly
// (verified against the generic forms in the tests), which keeps the
// per-step cost linear in N outside the prox solve.
class McKeanVlasovScenario : public ScenarioModel {
public:
    explicit McKeanVlasovScenario(const RunConfig& cfg)
        : a_(param(cfg, "a")), b_(param(cfg, "b")), beta_(cfg.prox.beta),
          mu0_(param(cfg, "mu0")), var0_(param(cfg, "sigma0_sq")) {
        sys_.beta = beta_;
        sys_.psi = [a = a_](const Eigen::VectorXd& x) { return 0.5 * a * x[0] * x[0]; };
        sys_.grad_psi = [a = a_](const Eigen::VectorXd& x) {
            return Eigen::VectorXd::Constant(1, a * x[0]);
        };
        sys_.phi = [b = b_](const Eigen::VectorXd& v) { return 0.5 * b * v[0] * v[0]; };
        sys_.grad_phi = [b = b_](const Eigen::VectorXd& v) {
            return Eigen::VectorXd::Constant(1, b * v[0]);
        };
        sys_.interaction_drift_batch = [b = b_](const StateMatrix& x, const SimplexWeights& w) {
            const double wmean = (w.array() * x.col(0).array()).sum();
            return StateMatrix(b * (x.col(0).array() - wmean).matrix());
        };
    }

    ParticleCloud initial_cloud(const RunConfig& cfg, RunRng& rng) const override {
        const Eigen::VectorXd mu = Eigen::VectorXd::Constant(1, mu0_);
        const Eigen::VectorXd var = Eigen::VectorXd::Constant(1, var0_);
        return init_cloud(gaussian_density(mu, var), gaussian_sampler(mu, var), cfg.n_particles,
                          rng);
    }

    StepData make_step(const ParticleCloud& prev, const RunConfig& cfg, RunRng& rng) const override {
        StepData sd;
        Eigen::VectorXd psi(prev.size());
        for (Eigen::Index i = 0; i < prev.size(); ++i)
            psi[i] = sys_.psi(prev.states.row(i).transpose());
        // D(i,j) = (b/2)|x_i - x_j|^2: a scaled Euclidean distance matrix.
        const energy::InteractionMatrix d =
            (b_ / 2.0) * prox::cost_matrix_euclidean(prev.states, prev.states);
        sd.psi = energy::semi_implicit_potential(psi, d, prev.weights);
        sd.new_states = sde::em_step_mckean_vlasov(prev, sys_, cfg.prox.h, rng);
        sd.cost = prox::cost_matrix_euclidean(prev.states, sd.new_states);
        return sd;
    }

    ReportSample report(const ParticleCloud& cloud, const RunConfig&) const override {
        ReportSample s;
        s.snapshot_views = {{"", cloud}};
        s.moments_cloud = cloud;
        Eigen::VectorXd psi(cloud.size());
        for (Eigen::Index i = 0; i < cloud.size(); ++i)
            psi[i] = sys_.psi(cloud.states.row(i).transpose());
        const energy::InteractionMatrix d =
            (b_ / 2.0) * prox::cost_matrix_euclidean(cloud.states, cloud.states);
        // Interaction energy enters the Lyapunov functional with weight 1/2.
        s.free_energy = energy::discrete_free_energy(
            cloud.weights, psi + 0.5 * (d * cloud.weights), beta_);
        s.report_time = cloud.time;
        return s;
    }

private:
    double a_, b_, beta_, mu0_, var0_;
    sde::McKeanVlasovSystem sys_;
};

// CIR propagated in Lamperti coordinates; reports both spaces.
class CirScenario : public ScenarioModel {
public:
    explicit CirScenario(const RunConfig& cfg)
        : x0_(param(cfg, "x0")), var0_(param(cfg, "sigma0_sq")),
          lamperti_(sde::lamperti_transform_cir(param(cfg, "a"), param(cfg, "b"),
                                                param(cfg, "theta"))) {}

    ParticleCloud initial_cloud(const RunConfig& cfg, RunRng& rng) const override {
        const Eigen::VectorXd mu = Eigen::VectorXd::Constant(1, x0_);
        const Eigen::VectorXd var = Eigen::VectorXd::Constant(1, var0_);
        const DensityFn density_x = gaussian_density(mu, var);
        const SamplerFn sampler_x = gaussian_sampler(mu, var);
        // Initialize directly in y-space: rho_Y(y) = rho_X(x) / |dς/dx|(x).
        const DensityFn density_y = [this, density_x](const Eigen::VectorXd& y) {
            const double x = lamperti_.inverse(y[0]);
            return density_x(Eigen::VectorXd::Constant(1, x)) / lamperti_.jacobian(x);
        };
        const SamplerFn sampler_y = [this, sampler_x](RunRng& r) {
            const double x = sampler_x(r)[0];
            if (!(x > 0.0))
                throw NumericalError("cir: initial sample crossed zero; shrink sigma0_sq");
            return Eigen::VectorXd::Constant(1, lamperti_.forward(x));
        };
        return init_cloud(density_y, sampler_y, cfg.n_particles, rng);
    }

    StepData make_step(const ParticleCloud& prev, const RunConfig& cfg, RunRng& rng) const override {
        StepData sd;
        sd.psi.resize(prev.size());
        for (Eigen::Index i = 0; i < prev.size(); ++i)
            sd.psi[i] = lamperti_.inner.psi(prev.states.row(i).transpose());
        sd.new_states = sde::em_step_gradient(prev, lamperti_.inner, cfg.prox.h, rng);
        sd.cost = prox::cost_matrix_euclidean(prev.states, sd.new_states);
        return sd;
    }

    prox::ProxConfig prox_config(const RunConfig& cfg) const override {
        prox::ProxConfig p = cfg.prox;
        p.beta = lamperti_.inner.beta;  // beta = 2 by the transform
        return p;
    }

    ReportSample report(const ParticleCloud& cloud, const RunConfig&) const override {
        ReportSample s;
        auto [wx, xs] =
            sde::pushforward_density(cloud.weights, cloud.states, lamperti_.inverse,
                                     lamperti_.jacobian);
        ParticleCloud xcloud{std::move(xs), std::move(wx), cloud.time};
        s.snapshot_views = {{"", cloud}, {"x", xcloud}};
        s.moments_cloud = xcloud;
        Eigen::VectorXd psi(cloud.size());
        for (Eigen::Index i = 0; i < cloud.size(); ++i)
            psi[i] = lamperti_.inner.psi(cloud.states.row(i).transpose());
        s.free_energy = energy::discrete_free_energy(cloud.weights, psi, lamperti_.inner.beta);
        s.report_time = cloud.time;
        return s;
    }

private:
    double x0_, var0_;
    sde::LampertiWrappedSystem lamperti_;
};

// Perturbed two-body Langevin dynamics, propagated in nondimensional
// coordinates (q' = q/R, p' = p T/R, t' = t/T). The nondimensional system is
// underdamped Langevin in its own right with gamma' = gamma T and
// beta' = beta (R/T)^2; its noise coefficient sqrt(2 gamma'/beta') equals
// the (T^{3/2}/R) sqrt(2 gamma/beta) of the scaled SDE identically.
class SatelliteScenario : public ScenarioModel {
public:
    explicit SatelliteScenario(const RunConfig& cfg) {
        sp_.gamma = param(cfg, "gamma");
        sp_.beta = cfg.prox.beta;
        scales_ = {sp_.r_scale, sp_.t_scale};
        nd_sys_ = models::satellite_nondim_system(sp_);

        mu0_ = Eigen::VectorXd::Zero(6);
        mu0_[0] = 1.0;
        var0_.resize(6);
        var0_ << 3.335e-4, 6.133e-4, 3.933e-4, 6.562e-4, 9.246e-4, 5.761e-4;
    }

    ParticleCloud initial_cloud(const RunConfig& cfg, RunRng& rng) const override {
        return init_cloud(gaussian_density(mu0_, var0_), gaussian_sampler(mu0_, var0_),
                          cfg.n_particles, rng);
    }

    StepData make_step(const ParticleCloud& prev, const RunConfig& cfg, RunRng& rng) const override {
        StepData sd;
        // psi(i) = gamma' * |p_i|^2/2: the friction factor of the free energy
        // is folded into the potential so the plain recursion applies.
        sd.psi = nd_sys_.gamma * prev.states.rightCols(3).rowwise().squaredNorm() / 2.0;
        sd.new_states = sde::em_step_underdamped(prev, nd_sys_, cfg.prox.h, rng);
        sd.cost = prox::cost_matrix_underdamped(
            prev.states.leftCols(3), prev.states.rightCols(3), sd.new_states.leftCols(3),
            sd.new_states.rightCols(3), nd_sys_.grad_potential, cfg.prox.h);
        return sd;
    }

    prox::ProxConfig prox_config(const RunConfig& cfg) const override {
        prox::ProxConfig p = cfg.prox;
        p.beta = nd_sys_.beta / nd_sys_.gamma;  // beta_eff pairs with the folded potential
        return p;
    }

    ReportSample report(const ParticleCloud& cloud, const RunConfig&) const override {
        ReportSample s;
        const ParticleCloud dim = sde::redimensionalize(cloud, scales_);
        s.snapshot_views = {{"", dim}};
        s.moments_cloud = dim;
        s.free_energy =
            energy::underdamped_free_energy(cloud.weights, cloud.states.rightCols(3), nd_sys_.beta);
        s.report_time = dim.time;
        return s;
    }

private:
    models::SatelliteParams sp_;
    sde::SatelliteScales scales_;
    sde::UnderdampedSystem nd_sys_;
    Eigen::VectorXd mu0_, var0_;
};

// Analytic reference curves for the multivariate linear system; no particle
// propagation (the rotating-frame transform that would enable it lives
// outside this project).
class LtiScenario : public ScenarioModel {
public:
    LtiScenario() {
        p_.a.resize(2, 2);
        p_.a << -10.0, 5.0, -30.0, 0.0;
        p_.b.resize(2, 1);
        p_.b << 2.0, 2.5;
        p_.mu0.resize(2);
        p_.mu0 << 4.0, 4.0;
        p_.sigma0 = 4.0 * Eigen::MatrixXd::Identity(2, 2);
    }

    bool particle_based() const override { return false; }
    ParticleCloud initial_cloud(const RunConfig&, RunRng&) const override {
        throw std::logic_error("lti: oracle-only scenario");
    }
    StepData make_step(const ParticleCloud&, const RunConfig&, RunRng&) const override {
        throw std::logic_error("lti: oracle-only scenario");
    }
    ReportSample report(const ParticleCloud&, const RunConfig&) const override {
        throw std::logic_error("lti: oracle-only scenario");
    }

    void write_oracle_outputs(OutputWriter& out, const RunConfig& cfg) const override {
        for (long k = 0; k <= cfg.total_steps; k += cfg.stride) {
            const double t = double(k) * cfg.prox.h;
            const models::LTIMoments m = models::lti_moments(p_, t);
            out.oracle_moment_row(t, m.mean, m.covariance);
        }
    }

private:
    models::LTIParams p_;
};

struct ScenarioEntry {
    std::string description;
    std::map<std::string, double> default_params;
    std::set<std::string> rejected_common;  // common keys this scenario does not accept
    long n = 400, k = 1000, stride = 100;
    double h = 1e-3, beta = 1.0, epsilon = 5e-2, delta = 1e-3;
    int max_iter = 100;
    std::uint64_t seed = 1;
    bool particle_based = true;
    std::function<std::unique_ptr<ScenarioModel>(const RunConfig&)> make;
};

const std::map<std::string, ScenarioEntry>& registry() {
    static const std::map<std::string, ScenarioEntry> reg = [] {
        std::map<std::string, ScenarioEntry> r;

        {
            ScenarioEntry e;
            e.description = "univariate Ornstein-Uhlenbeck process, Gaussian transient law";
            e.default_params = {{"a", 1.0}, {"mu0", 5.0}, {"sigma0_sq", 4e-2}};
            e.make = [](const RunConfig& cfg) -> std::unique_ptr<ScenarioModel> {
                sde::GradientDriftSystem sys;
                sys.beta = cfg.prox.beta;
                const double a = param(cfg, "a");
                sys.psi = [a](const Eigen::VectorXd& x) { return 0.5 * a * x[0] * x[0]; };
                sys.grad_psi = [a](const Eigen::VectorXd& x) {
                    return Eigen::VectorXd::Constant(1, a * x[0]);
                };
                return std::make_unique<GradientScenario>(
                    std::move(sys), Eigen::VectorXd::Constant(1, param(cfg, "mu0")),
                    Eigen::VectorXd::Constant(1, param(cfg, "sigma0_sq")));
            };
            r["ou"] = std::move(e);
        }
        {
            ScenarioEntry e;
            e.description = "planar gradient drift with a bimodal stationary law";
            e.k = 3000;
            e.make = [](const RunConfig& cfg) -> std::unique_ptr<ScenarioModel> {
                sde::GradientDriftSystem sys;
                sys.beta = cfg.prox.beta;
                sys.psi = [](const Eigen::VectorXd& x) {
                    return 0.25 * (1.0 + std::pow(x[0], 4)) + 0.5 * (x[1] * x[1] - x[0] * x[0]);
                };
                sys.grad_psi = [](const Eigen::VectorXd& x) {
                    Eigen::VectorXd g(2);
                    g[0] = x[0] * x[0] * x[0] - x[0];
                    g[1] = x[1];
                    return g;
                };
                Eigen::VectorXd mu0(2);
                mu0 << 2.0, 2.0;
                return std::make_unique<GradientScenario>(std::move(sys), mu0,
                                                          Eigen::VectorXd::Constant(2, 4.0));
            };
            r["bimodal"] = std::move(e);
        }
        {
            ScenarioEntry e;
            e.description = "univariate mean-field model with quadratic interaction (semi-implicit)";
            e.k = 3000;
            e.default_params = {{"a", 1.0}, {"b", 1.0}, {"mu0", 5.0}, {"sigma0_sq", 9.0}};
            e.make = [](const RunConfig& cfg) {
                return std::make_unique<McKeanVlasovScenario>(cfg);
            };
            r["mckean-vlasov"] = std::move(e);
        }
        {
            ScenarioEntry e;
            e.description = "Cox-Ingersoll-Ross model propagated in Lamperti coordinates";
            e.beta = 2.0;  // fixed by the unit-diffusion transform
            e.rejected_common = {"beta"};
            e.default_params = {{"a", 3.0}, {"b", 2.0}, {"theta", 2.0}, {"x0", 5.0},
                                {"sigma0_sq", 1e-4}};
            e.make = [](const RunConfig& cfg) { return std::make_unique<CirScenario>(cfg); };
            r["cir"] = std::move(e);
        }
        {
            ScenarioEntry e;
            e.description = "6-D perturbed two-body Langevin dynamics, nondimensional propagation";
            e.h = 1e-5;
            e.default_params = {{"gamma", 1.0}};
            e.make = [](const RunConfig& cfg) { return std::make_unique<SatelliteScenario>(cfg); };
            r["satellite"] = std::move(e);
        }
        {
            ScenarioEntry e;
            e.description = "analytic moment curves for the multivariate linear benchmark";
            e.stride = 10;
            e.particle_based = false;
            e.rejected_common = {"beta", "epsilon", "delta", "L", "N", "moment_estimator"};
            e.make = [](const RunConfig&) { return std::make_unique<LtiScenario>(); };
            r["lti"] = std::move(e);
        }
        return r;
    }();
    return reg;
}

const ScenarioEntry& entry_or_throw(const std::string& name) {
    const auto it = registry().find(name);
    if (it == registry().end())
        throw ConfigError(ConfigCode::UnknownScenario, "unknown scenario \"" + name + "\"");
    return it->second;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(ConfigCode::BadValue, "key \"" + key + "\": cannot parse \"" + value +
                                                    "\" as a number");
    }
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(ConfigCode::BadValue, "key \"" + key + "\": cannot parse \"" + value +
                                                    "\" as an integer");
    }
}

void check_invariants(const RunConfig& cfg) {
    const ScenarioEntry& e = entry_or_throw(cfg.scenario);
    if (cfg.total_steps < 1)
        throw ConfigError(ConfigCode::BadCardinality, "K must be at least 1");
    if (cfg.stride < 1) throw ConfigError(ConfigCode::BadCardinality, "stride must be at least 1");
    if (e.particle_based && cfg.n_particles < 1)
        throw ConfigError(ConfigCode::BadCardinality, "N must be at least 1");
    for (const auto& [name, value] : std::initializer_list<std::pair<const char*, double>>{
             {"h", cfg.prox.h},
             {"beta", cfg.prox.beta},
             {"epsilon", cfg.prox.epsilon},
             {"delta", cfg.prox.delta}})
        if (!(value > 0.0) || !std::isfinite(value))
            throw ConfigError(ConfigCode::NonPositiveParameter,
                              std::string(name) + " must be positive");
    if (cfg.prox.max_iter < 1)
        throw ConfigError(ConfigCode::NonPositiveParameter, "L must be at least 1");
    for (const auto& [key, value] : cfg.params) {
        if (key == "mu0" || key == "x0") continue;  // location parameters may be any sign
        if (!(value > 0.0) || !std::isfinite(value))
            throw ConfigError(ConfigCode::NonPositiveParameter, key + " must be positive");
    }
    if (cfg.scenario == "cir") {
        const double a = cfg.params.at("a"), b = cfg.params.at("b");
        if (!(2.0 * a > b * b))
            throw ConfigError(ConfigCode::BadValue, "cir requires the Feller condition 2a > b^2");
        if (!(cfg.params.at("x0") > 0.0))
            throw ConfigError(ConfigCode::BadValue, "cir requires x0 > 0");
    }
}

}  // namespace

std::vector<std::string> scenario_names() {
    std::vector<std::string> names;
    for (const auto& [name, e] : registry()) names.push_back(name);
    return names;
}

const std::string& scenario_description(const std::string& name) {
    return entry_or_throw(name).description;
}

RunConfig default_config(const std::string& scenario) {
    const ScenarioEntry& e = entry_or_throw(scenario);
    RunConfig cfg;
    cfg.scenario = scenario;
    cfg.n_particles = e.n;
    cfg.total_steps = e.k;
    cfg.stride = e.stride;
    cfg.seed = e.seed;
    cfg.prox = prox::ProxConfig{e.h, e.beta, e.epsilon, e.delta, e.max_iter};
    cfg.params = e.default_params;
    return cfg;
}

RunConfig validate_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(ConfigCode::ParseError,
                              "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(ConfigCode::ParseError,
                              "line " + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key))
            throw ConfigError(ConfigCode::ParseError,
                              "line " + std::to_string(lineno) + ": duplicate key \"" + key + "\"");
        kv[key] = value;
    }

    const auto scen_it = kv.find("scenario");
    if (scen_it == kv.end())
        throw ConfigError(ConfigCode::ParseError, "missing required key \"scenario\"");
    const std::string scenario = scen_it->second;
    kv.erase(scen_it);

    const ScenarioEntry& e = entry_or_throw(scenario);
    RunConfig cfg = default_config(scenario);

    for (const auto& [key, value] : kv) {
        if (e.rejected_common.count(key))
            throw ConfigError(ConfigCode::UnknownKey,
                              "key \"" + key + "\" is fixed for scenario " + scenario);
        if (key == "N") cfg.n_particles = parse_long(key, value);
        else if (key == "K") cfg.total_steps = parse_long(key, value);
        else if (key == "stride") cfg.stride = parse_long(key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "h") cfg.prox.h = parse_double(key, value);
        else if (key == "beta") cfg.prox.beta = parse_double(key, value);
        else if (key == "epsilon") cfg.prox.epsilon = parse_double(key, value);
        else if (key == "delta") cfg.prox.delta = parse_double(key, value);
        else if (key == "L") cfg.prox.max_iter = static_cast<int>(parse_long(key, value));
        else if (key == "moment_estimator") {
            if (value == "empirical") cfg.moment_mode = MomentMode::Empirical;
            else if (value == "mass_weighted") cfg.moment_mode = MomentMode::MassWeighted;
            else
                throw ConfigError(ConfigCode::BadValue,
                                  "moment_estimator must be empirical or mass_weighted");
        } else if (e.default_params.count(key)) {
            cfg.params[key] = parse_double(key, value);
        } else {
            throw ConfigError(ConfigCode::UnknownKey,
                              "unknown key \"" + key + "\" for scenario " + scenario);
        }
    }

    check_invariants(cfg);
    return cfg;
}

RunResult run_scenario(const RunConfig& cfg, const StepObserver& observer) {
    check_invariants(cfg);
    const ScenarioEntry& e = entry_or_throw(cfg.scenario);
    const std::unique_ptr<ScenarioModel> model = e.make(cfg);

    if (!e.particle_based) {
        OutputWriter out(cfg, /*particle_outputs=*/false);
        model->write_oracle_outputs(out, cfg);
        out.write_manifest(cfg);
        return {};
    }

    OutputWriter out(cfg);
    RunRng rng(cfg.seed);

    RunResult res;
    long k = 0;
    try {
        ParticleCloud cloud = model->initial_cloud(cfg, rng);
        out.sample(0, model->report(cloud, cfg), cfg.moment_mode);

        const prox::ProxConfig pcfg = model->prox_config(cfg);
        res.reports.reserve(cfg.total_steps);
        for (k = 1; k <= cfg.total_steps; ++k) {
            // Euler-Maruyama first: the ground cost needs both clouds.
            StepData sd = model->make_step(cloud, cfg, rng);
            auto [weights, report] = prox::prox_recur(cloud.weights, sd.psi, sd.cost, pcfg, rng);
            cloud = ParticleCloud{std::move(sd.new_states), std::move(weights),
                                  double(k) * cfg.prox.h};
            out.timing(k, report);
            if (k % cfg.stride == 0 || k == cfg.total_steps)
                out.sample(k, model->report(cloud, cfg), cfg.moment_mode);
            if (observer) observer(k, cloud, report);
            res.reports.push_back({k, report});
        }
        res.final_cloud = std::move(cloud);
    } catch (const NumericalError& err) {
        out.error_record(k, err.what());
        throw;
    }
    out.write_manifest(cfg);
    return res;
}

}  // namespace proxflow::run
