#include "mgpc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "mgpc/error.hpp"
#include "mgpc/random.hpp"

namespace mgpc {

namespace {

constexpr double log_sqrt_2pi = 0.91893853320467274178;
constexpr double neg_inf = -std::numeric_limits<double>::infinity();

double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

} // namespace

double HalfNormalPrior::log_density(double x) const {
    if (x < 0.0) return neg_inf;
    return std::log(2.0) - log_sqrt_2pi - std::log(scale) - 0.5 * (x / scale) * (x / scale);
}

double HalfNormalPrior::cdf(double x) const {
    return x <= 0.0 ? 0.0 : std::erf(x / (scale * std::numbers::sqrt2));
}

double HalfNormalPrior::quantile(double p) const {
    // Invert the CDF by bisection on a bracket that covers any p < 1 - 1e-15.
    double lo = 0.0, hi = 40.0 * scale;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double GammaPrior::log_density(double x) const {
    if (x <= 0.0) return neg_inf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double NormalPrior::log_density(double x) const {
    const double z = (x - mean) / scale;
    return -log_sqrt_2pi - std::log(scale) - 0.5 * z * z;
}

void PriorSpec::validate() const {
    if (!(eta.scale > 0.0) || !(ell.shape > 0.0) || !(ell.rate > 0.0) || !(rho.scale > 0.0)) {
        fail(ErrorCode::argument, "prior scale, shape and rate parameters must be strictly positive");
    }
}

nlohmann::json to_json(const PriorSpec& p) {
    return {{"eta_halfnormal_scale", p.eta.scale},
            {"ell_gamma_shape", p.ell.shape},
            {"ell_gamma_rate", p.ell.rate},
            {"rho_normal_mean", p.rho.mean},
            {"rho_normal_scale", p.rho.scale}};
}

PriorSpec priors_from_json(const nlohmann::json& j) {
    PriorSpec p;
    p.eta.scale = j.value("eta_halfnormal_scale", p.eta.scale);
    p.ell.shape = j.value("ell_gamma_shape", p.ell.shape);
    p.ell.rate = j.value("ell_gamma_rate", p.ell.rate);
    p.rho.mean = j.value("rho_normal_mean", p.rho.mean);
    p.rho.scale = j.value("rho_normal_scale", p.rho.scale);
    p.validate();
    return p;
}

nlohmann::json to_json(const NutsConfig& c) {
    return {{"n_warmup", c.n_warmup},         {"n_samples", c.n_samples},
            {"target_accept", c.target_accept}, {"max_tree_depth", c.max_tree_depth},
            {"init_scale", c.init_scale},       {"max_energy_error", c.max_energy_error}};
}

NutsConfig nuts_config_from_json(const nlohmann::json& j) {
    NutsConfig c;
    c.n_warmup = j.value("n_warmup", c.n_warmup);
    c.n_samples = j.value("n_samples", c.n_samples);
    c.target_accept = j.value("target_accept", c.target_accept);
    c.max_tree_depth = j.value("max_tree_depth", c.max_tree_depth);
    c.init_scale = j.value("init_scale", c.init_scale);
    c.max_energy_error = j.value("max_energy_error", c.max_energy_error);
    return c;
}

std::vector<std::string> LogDensityModel::parameter_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < dimension(); ++i) {
        names.push_back("q[" + std::to_string(i) + "]");
    }
    return names;
}

// ---------------------------------------------------------------------------
// NUTS

namespace {

struct PhasePoint {
    Eigen::VectorXd q;
    Eigen::VectorXd p;
    Eigen::VectorXd grad;
    double logp = neg_inf;
};

class Integrator {
public:
    explicit Integrator(const LogDensityModel& model) : model_(model) {}

    void evaluate(PhasePoint& z) const {
        if (!z.q.allFinite()) {
            z.logp = neg_inf;
            z.grad.setZero(z.q.size());
            return;
        }
        z.logp = model_.log_density(z.q, z.grad);
        if (std::isnan(z.logp) || !z.grad.allFinite()) {
            z.logp = neg_inf;
        }
    }

    void leapfrog(PhasePoint& z, double eps) const {
        z.p.noalias() += 0.5 * eps * z.grad;
        z.q.noalias() += eps * z.p;
        evaluate(z);
        if (z.logp != neg_inf) {
            z.p.noalias() += 0.5 * eps * z.grad;
        }
    }

    static double hamiltonian(const PhasePoint& z) {
        if (z.logp == neg_inf) return std::numeric_limits<double>::infinity();
        return -z.logp + 0.5 * z.p.squaredNorm();
    }

private:
    const LogDensityModel& model_;
};

bool no_u_turn(const Eigen::VectorXd& p_minus, const Eigen::VectorXd& p_plus, const Eigen::VectorXd& rho) {
    return p_plus.dot(rho) > 0.0 && p_minus.dot(rho) > 0.0;
}

struct Subtree {
    PhasePoint edge;        ///< outermost state in the build direction
    PhasePoint proposal;
    Eigen::VectorXd rho;    ///< sum of momenta
    Eigen::VectorXd p_begin;  ///< momentum of the first state built
    Eigen::VectorXd p_end;    ///< momentum of the last state built
    double log_sum_weight = neg_inf;
    double sum_accept = 0.0;
    int n_leapfrog = 0;
    bool valid = true;
    bool divergent = false;
};

class TreeBuilder {
public:
    TreeBuilder(const Integrator& integrator, double eps, double h0, double max_error, Rng& rng)
        : integrator_(integrator), eps_(eps), h0_(h0), max_error_(max_error), rng_(rng) {}

    Subtree build(const PhasePoint& start, int depth, int direction) {
        Subtree out;
        if (depth == 0) {
            out.edge = start;
            integrator_.leapfrog(out.edge, direction * eps_);
            out.n_leapfrog = 1;
            const double h = Integrator::hamiltonian(out.edge);
            const double delta = h - h0_;
            if (!(delta <= max_error_)) {
                out.valid = false;
                out.divergent = true;
                out.sum_accept = 0.0;
                return out;
            }
            out.log_sum_weight = -delta;
            out.sum_accept = std::min(1.0, std::exp(-delta));
            out.proposal = out.edge;
            out.rho = out.edge.p;
            out.p_begin = out.edge.p;
            out.p_end = out.edge.p;
            return out;
        }
        Subtree first = build(start, depth - 1, direction);
        if (!first.valid) {
            return first;
        }
        Subtree second = build(first.edge, depth - 1, direction);
        out.n_leapfrog = first.n_leapfrog + second.n_leapfrog;
        out.sum_accept = first.sum_accept + second.sum_accept;
        out.edge = second.edge;
        if (!second.valid) {
            out.valid = false;
            out.divergent = second.divergent;
            return out;
        }
        out.log_sum_weight = log_add_exp(first.log_sum_weight, second.log_sum_weight);
        const double take_second = std::exp(second.log_sum_weight - out.log_sum_weight);
        out.proposal = uniform_(rng_) < take_second ? std::move(second.proposal) : std::move(first.proposal);
        out.rho = first.rho + second.rho;
        out.p_begin = first.p_begin;
        out.p_end = second.p_end;

        bool persist = no_u_turn(out.p_begin, out.p_end, out.rho);
        persist = persist && no_u_turn(first.p_begin, second.p_begin, first.rho + second.p_begin);
        persist = persist && no_u_turn(first.p_end, second.p_end, second.rho + first.p_end);
        out.valid = persist;
        return out;
    }

private:
    const Integrator& integrator_;
    double eps_;
    double h0_;
    double max_error_;
    Rng& rng_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct Transition {
    PhasePoint state;
    double accept_stat = 0.0;
    int depth = 0;
    int n_leapfrog = 0;
    bool divergent = false;
};

Transition nuts_transition(const Integrator& integrator, const PhasePoint& current, double eps, int max_depth,
                           double max_error, Rng& rng) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    PhasePoint z0 = current;
    for (Eigen::Index i = 0; i < z0.p.size(); ++i) z0.p(i) = normal(rng);
    const double h0 = Integrator::hamiltonian(z0);

    PhasePoint fwd = z0, bck = z0;
    Eigen::VectorXd p_fwd_fwd = z0.p, p_bck_bck = z0.p;
    Eigen::VectorXd rho = z0.p;
    double log_sum_weight = 0.0;
    Transition out;
    out.state = z0;
    double sum_accept = 0.0;
    TreeBuilder builder(integrator, eps, h0, max_error, rng);

    while (out.depth < max_depth) {
        const int direction = uniform(rng) < 0.5 ? -1 : 1;
        const PhasePoint& start = direction > 0 ? fwd : bck;
        Subtree sub = builder.build(start, out.depth, direction);
        out.n_leapfrog += sub.n_leapfrog;
        sum_accept += sub.sum_accept;
        if (!sub.valid) {
            out.divergent = sub.divergent;
            break;
        }
        ++out.depth;
        if (sub.log_sum_weight > log_sum_weight) {
            out.state = sub.proposal;
        } else if (uniform(rng) < std::exp(sub.log_sum_weight - log_sum_weight)) {
            out.state = sub.proposal;
        }
        log_sum_weight = log_add_exp(log_sum_weight, sub.log_sum_weight);

        // Checks across the merged tree and across the junction of the two halves.
        bool persist;
        const Eigen::VectorXd rho_old = rho;
        rho += sub.rho;
        if (direction > 0) {
            fwd = sub.edge;
            persist = no_u_turn(p_bck_bck, sub.p_end, rho) &&
                      no_u_turn(p_bck_bck, sub.p_begin, rho_old + sub.p_begin) &&
                      no_u_turn(p_fwd_fwd, sub.p_end, sub.rho + p_fwd_fwd);
            p_fwd_fwd = sub.p_end;
        } else {
            bck = sub.edge;
            persist = no_u_turn(sub.p_end, p_fwd_fwd, rho) &&
                      no_u_turn(sub.p_end, p_bck_bck, sub.rho + p_bck_bck) &&
                      no_u_turn(sub.p_begin, p_fwd_fwd, rho_old + sub.p_begin);
            p_bck_bck = sub.p_end;
        }
        if (!persist) {
            break;
        }
    }
    out.accept_stat = out.n_leapfrog > 0 ? sum_accept / out.n_leapfrog : 0.0;
    return out;
}

double find_reasonable_step_size(const Integrator& integrator, const PhasePoint& start, Rng& rng) {
    std::normal_distribution<double> normal;
    double eps = 1.0;
    PhasePoint z = start;
    for (Eigen::Index i = 0; i < z.p.size(); ++i) z.p(i) = normal(rng);
    const PhasePoint z0 = z;
    const double h0 = Integrator::hamiltonian(z0);
    integrator.leapfrog(z, eps);
    double delta = h0 - Integrator::hamiltonian(z);
    const int direction = delta > std::log(0.8) ? 1 : -1;
    for (int i = 0; i < 100; ++i) {
        z = z0;
        integrator.leapfrog(z, eps);
        delta = h0 - Integrator::hamiltonian(z);
        if (direction == 1 && !(delta > std::log(0.8))) break;
        if (direction == -1 && !(delta < std::log(0.8))) break;
        eps = direction == 1 ? 2.0 * eps : 0.5 * eps;
        if (eps > 1e7 || eps < 1e-10) break;
    }
    return eps;
}

class DualAveraging {
public:
    DualAveraging(double eps0, double target) : mu_(std::log(10.0 * eps0)), target_(target), log_eps_(std::log(eps0)) {}

    double update(double accept) {
        ++m_;
        const double m = static_cast<double>(m_);
        const double w = 1.0 / (m + t0_);
        h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept);
        log_eps_ = mu_ - std::sqrt(m) / gamma_ * h_bar_;
        const double eta = std::pow(m, -kappa_);
        log_eps_bar_ = eta * log_eps_ + (1.0 - eta) * log_eps_bar_;
        return std::exp(log_eps_);
    }

    double final_step_size() const { return std::exp(log_eps_bar_); }

private:
    double mu_;
    double target_;
    double log_eps_;
    double log_eps_bar_ = 0.0;
    double h_bar_ = 0.0;
    std::size_t m_ = 0;
    static constexpr double gamma_ = 0.05;
    static constexpr double t0_ = 10.0;
    static constexpr double kappa_ = 0.75;
};

} // namespace

PosteriorSamples run_nuts(const LogDensityModel& model, std::uint64_t seed, const NutsConfig& config) {
    if (config.n_samples == 0) {
        fail(ErrorCode::argument, "NUTS needs at least one kept sample");
    }
    if (!(config.target_accept > 0.0 && config.target_accept < 1.0)) {
        fail(ErrorCode::argument, "target_accept must lie in (0, 1)");
    }
    const auto dim = static_cast<Eigen::Index>(model.dimension());
    Rng rng = make_rng(seed);
    Integrator integrator(model);

    PhasePoint z;
    z.p = Eigen::VectorXd::Zero(dim);
    {
        std::normal_distribution<double> init(0.0, config.init_scale);
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            z.q.resize(dim);
            for (Eigen::Index i = 0; i < dim; ++i) z.q(i) = init(rng);
            integrator.evaluate(z);
            ok = std::isfinite(z.logp);
        }
        if (!ok) {
            fail(ErrorCode::numerical, "could not find a finite initial log density in 100 attempts");
        }
    }

    double eps = find_reasonable_step_size(integrator, z, rng);
    DualAveraging adapt(eps, config.target_accept);

    PosteriorSamples out;
    out.names = model.parameter_names();
    out.n_warmup = config.n_warmup;
    out.n_kept = config.n_samples;
    out.draws.resize(static_cast<Eigen::Index>(config.n_samples), dim);
    out.accept_stat.reserve(config.n_samples);
    out.divergent.reserve(config.n_samples);

    for (std::size_t it = 0; it < config.n_warmup; ++it) {
        Transition t = nuts_transition(integrator, z, eps, config.max_tree_depth, config.max_energy_error, rng);
        z = std::move(t.state);
        out.n_warmup_divergent += t.divergent ? 1 : 0;
        eps = adapt.update(t.accept_stat);
    }
    if (config.n_warmup > 0) {
        eps = adapt.final_step_size();
    }
    out.step_size = eps;

    for (std::size_t it = 0; it < config.n_samples; ++it) {
        Transition t = nuts_transition(integrator, z, eps, config.max_tree_depth, config.max_energy_error, rng);
        z = std::move(t.state);
        out.draws.row(static_cast<Eigen::Index>(it)) = z.q.transpose();
        out.accept_stat.push_back(t.accept_stat);
        out.divergent.push_back(t.divergent);
        out.tree_depth.push_back(t.depth);
        out.n_leapfrog.push_back(t.n_leapfrog);
        out.n_divergent += t.divergent ? 1 : 0;
    }
    out.constrained.resize(out.draws.rows(), dim);
    for (Eigen::Index i = 0; i < out.draws.rows(); ++i) {
        out.constrained.row(i) = model.constrain(out.draws.row(i).transpose()).transpose();
    }
    const double frac = static_cast<double>(out.n_divergent) / static_cast<double>(out.n_kept);
    if (frac > config.divergence_warning) {
        out.divergence_warning = true;
        spdlog::warn("NUTS: {} of {} kept transitions diverged ({:.1f}%)", out.n_divergent, out.n_kept, 100.0 * frac);
    }
    return out;
}

PosteriorSamples samples_from_draws(const LogDensityModel& model, Eigen::MatrixXd draws, double step_size) {
    if (draws.cols() != static_cast<Eigen::Index>(model.dimension())) {
        fail(ErrorCode::argument, "draw matrix width does not match the model dimension");
    }
    PosteriorSamples out;
    out.names = model.parameter_names();
    out.n_kept = static_cast<std::size_t>(draws.rows());
    out.step_size = step_size;
    out.constrained.resize(draws.rows(), draws.cols());
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        out.constrained.row(i) = model.constrain(draws.row(i).transpose()).transpose();
    }
    out.draws = std::move(draws);
    out.accept_stat.assign(out.n_kept, std::numeric_limits<double>::quiet_NaN());
    out.divergent.assign(out.n_kept, false);
    return out;
}

double effective_sample_size(std::span<const double> chain) {
    const std::size_t n = chain.size();
    if (n < 4) return static_cast<double>(n);
    double mean = 0.0;
    for (double x : chain) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : chain) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    if (!(var > 0.0)) return static_cast<double>(n);
    auto autocorr = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += (chain[i] - mean) * (chain[i + lag] - mean);
        return s / (static_cast<double>(n) * var);
    };
    // Geyer: sum consecutive pairs while positive, enforcing monotonicity.
    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = autocorr(2 * k) + autocorr(2 * k + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        prev_pair = pair;
        tau += 2.0 * pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
    return static_cast<double>(n) / tau;
}

double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        fail(ErrorCode::argument, "quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

nlohmann::json diagnostics_report(const PosteriorSamples& s, std::size_t max_parameters) {
    nlohmann::json j;
    j["step_size"] = s.step_size;
    j["n_warmup"] = s.n_warmup;
    j["n_kept"] = s.n_kept;
    j["divergences"] = s.n_divergent;
    j["warmup_divergences"] = s.n_warmup_divergent;
    j["divergence_warning"] = s.divergence_warning;
    std::vector<double> acc;
    for (double a : s.accept_stat) {
        if (std::isfinite(a)) acc.push_back(a);
    }
    if (!acc.empty()) {
        double mean = 0.0;
        for (double a : acc) mean += a;
        j["accept_stat"] = {{"mean", mean / static_cast<double>(acc.size())},
                            {"q05", empirical_quantile(acc, 0.05)},
                            {"q50", empirical_quantile(acc, 0.5)}};
    }
    if (!s.tree_depth.empty()) {
        double mean = 0.0;
        for (int d : s.tree_depth) mean += d;
        j["mean_tree_depth"] = mean / static_cast<double>(s.tree_depth.size());
    }
    nlohmann::json params = nlohmann::json::array();
    const auto count = std::min<std::size_t>(max_parameters, static_cast<std::size_t>(s.constrained.cols()));
    for (std::size_t c = 0; c < count; ++c) {
        std::vector<double> col(s.constrained.rows());
        for (Eigen::Index r = 0; r < s.constrained.rows(); ++r) col[static_cast<std::size_t>(r)] = s.constrained(r, static_cast<Eigen::Index>(c));
        double mean = 0.0;
        for (double x : col) mean += x;
        mean /= static_cast<double>(col.size());
        params.push_back({{"name", c < s.names.size() ? s.names[c] : std::to_string(c)},
                          {"mean", mean},
                          {"q05", empirical_quantile(col, 0.05)},
                          {"q50", empirical_quantile(col, 0.5)},
                          {"q95", empirical_quantile(col, 0.95)},
                          {"ess", effective_sample_size(col)}});
    }
    j["parameters"] = params;
    return j;
}

} // namespace mgpc
