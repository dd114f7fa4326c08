#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace mgpc {

struct HalfNormalPrior {
    double scale = 10000.0;
    double log_density(double x) const;
    double cdf(double x) const;
    double quantile(double p) const;
};

struct GammaPrior {
    double shape = 1.0;
    double rate = 1.0;
    double log_density(double x) const;
};

struct NormalPrior {
    double mean = 0.0;
    double scale = 10.0;
    double log_density(double x) const;
};

/// Hyperparameter priors. The two factory presets are the single-fidelity
/// (ell ~ Gamma(1, 1)) and multi-fidelity (ell ~ Gamma(2, 2)) choices.
struct PriorSpec {
    HalfNormalPrior eta{10000.0};
    GammaPrior ell{1.0, 1.0};
    NormalPrior rho{0.0, 10.0};

    static PriorSpec single_fidelity() { return {}; }
    static PriorSpec multi_fidelity() { return {HalfNormalPrior{10000.0}, GammaPrior{2.0, 2.0}, NormalPrior{0.0, 10.0}}; }

    void validate() const;
};

nlohmann::json to_json(const PriorSpec& priors);
PriorSpec priors_from_json(const nlohmann::json& j);

/// Differentiable log density over an unconstrained parameter vector.
class LogDensityModel {
public:
    virtual ~LogDensityModel() = default;

    virtual std::size_t dimension() const = 0;

    /// Returns log p(q) (up to a constant) and writes its gradient. May return
    /// -inf for finite q that overflow; throws a numerical Error for non-finite q.
    virtual double log_density(const Eigen::VectorXd& q, Eigen::VectorXd& gradient) const = 0;

    virtual std::vector<std::string> parameter_names() const;

    /// Map to the constrained (natural) parameterization.
    virtual Eigen::VectorXd constrain(const Eigen::VectorXd& q) const { return q; }
};

struct NutsConfig {
    std::size_t n_warmup = 500;
    std::size_t n_samples = 500;
    double target_accept = 0.9;
    int max_tree_depth = 10;
    double init_scale = 0.1;
    double max_energy_error = 1000.0;
    /// Fraction of divergent kept transitions above which a warning is emitted.
    double divergence_warning = 0.2;
};

nlohmann::json to_json(const NutsConfig& config);
NutsConfig nuts_config_from_json(const nlohmann::json& j);

struct PosteriorSamples {
    std::vector<std::string> names;
    Eigen::MatrixXd draws;        ///< n_kept x dim, unconstrained
    Eigen::MatrixXd constrained;  ///< n_kept x dim
    std::vector<double> accept_stat;
    std::vector<bool> divergent;
    std::vector<int> tree_depth;
    std::vector<int> n_leapfrog;
    std::size_t n_warmup = 0;
    std::size_t n_kept = 0;
    std::size_t n_divergent = 0;
    std::size_t n_warmup_divergent = 0;
    double step_size = 0.0;
    bool divergence_warning = false;

    Eigen::VectorXd draw(std::size_t i) const { return draws.row(static_cast<Eigen::Index>(i)).transpose(); }
};

/// Multinomial No-U-Turn sampler, identity metric, step size tuned by dual
/// averaging over the warmup. Deterministic given the seed.
PosteriorSamples run_nuts(const LogDensityModel& model, std::uint64_t seed, const NutsConfig& config = {});

/// Rebuild a PosteriorSamples carrying only draws (e.g. loaded from disk).
PosteriorSamples samples_from_draws(const LogDensityModel& model, Eigen::MatrixXd draws, double step_size = 0.0);

/// Effective sample size from Geyer's initial monotone sequence estimator.
double effective_sample_size(std::span<const double> chain);

/// Empirical quantile with linear interpolation (type 7).
double empirical_quantile(std::vector<double> values, double p);

/// Step size, divergences, acceptance statistics, per-parameter quantiles (constrained scale).
nlohmann::json diagnostics_report(const PosteriorSamples& samples, std::size_t max_parameters = 64);

} // namespace mgpc
