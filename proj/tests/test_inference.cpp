#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mgpc/inference.hpp"
#include "mgpc/latent_model.hpp"
#include "mgpc/random.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

/// y_i ~ N(mu, sigma^2), mu ~ N(m0, s0^2).
class ConjugateNormal final : public LogDensityModel {
public:
    ConjugateNormal(std::vector<double> y, double sigma, double m0, double s0)
        : y_(std::move(y)), sigma_(sigma), m0_(m0), s0_(s0) {}
    std::size_t dimension() const override { return 1; }
    double log_density(const Eigen::VectorXd& q, Eigen::VectorXd& g) const override {
        const double mu = q(0);
        double lp = -0.5 * (mu - m0_) * (mu - m0_) / (s0_ * s0_);
        double d = -(mu - m0_) / (s0_ * s0_);
        for (double y : y_) {
            lp -= 0.5 * (y - mu) * (y - mu) / (sigma_ * sigma_);
            d += (y - mu) / (sigma_ * sigma_);
        }
        g.resize(1);
        g(0) = d;
        return lp;
    }
    double posterior_variance() const { return 1.0 / (1.0 / (s0_ * s0_) + y_.size() / (sigma_ * sigma_)); }
    double posterior_mean() const {
        double sum = 0.0;
        for (double y : y_) sum += y;
        return posterior_variance() * (m0_ / (s0_ * s0_) + sum / (sigma_ * sigma_));
    }

private:
    std::vector<double> y_;
    double sigma_, m0_, s0_;
};

/// log eta with eta ~ HalfNormal(scale), including the log Jacobian.
class LogHalfNormal final : public LogDensityModel {
public:
    explicit LogHalfNormal(HalfNormalPrior prior) : prior_(prior) {}
    std::size_t dimension() const override { return 1; }
    double log_density(const Eigen::VectorXd& q, Eigen::VectorXd& g) const override {
        const double eta = std::exp(q(0));
        g.resize(1);
        g(0) = 1.0 - eta * eta / (prior_.scale * prior_.scale);
        return prior_.log_density(eta) + q(0);
    }
    Eigen::VectorXd constrain(const Eigen::VectorXd& q) const override { return q.array().exp(); }

private:
    HalfNormalPrior prior_;
};

class CorrelatedNormal final : public LogDensityModel {
public:
    CorrelatedNormal() {
        cov_ << 1.0, 0.8, 0.8, 2.0;
        prec_ = cov_.inverse();
    }
    std::size_t dimension() const override { return 2; }
    double log_density(const Eigen::VectorXd& q, Eigen::VectorXd& g) const override {
        const Eigen::Vector2d x = q - mean_;
        g = -prec_ * x;
        return -0.5 * x.dot(prec_ * x);
    }
    Eigen::Vector2d mean_{1.0, -2.0};
    Eigen::Matrix2d cov_, prec_;
};

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
    return {m.col(c).data(), m.col(c).data() + m.rows()};
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace

TEST_CASE("HalfNormal quantile inverts the cdf") {
    const HalfNormalPrior p{10000.0};
    CHECK(p.quantile(0.5) == doctest::Approx(10000.0 * 0.6744897501960817).epsilon(1e-10));
    for (double u : {0.01, 0.1, 0.25, 0.5, 0.9, 0.99}) {
        CHECK(p.cdf(p.quantile(u)) == doctest::Approx(u).epsilon(1e-10));
    }
    CHECK(p.cdf(0.0) == 0.0);
    CHECK(p.log_density(-1.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("conjugate toy posterior within 3 Monte-Carlo standard errors") {
    Rng rng = make_rng(42);
    std::normal_distribution<double> noise(1.5, 2.0);
    std::vector<double> y(20);
    for (auto& v : y) v = noise(rng);
    const ConjugateNormal model(y, 2.0, 0.0, 3.0);

    NutsConfig cfg;
    cfg.n_warmup = 1000;
    cfg.n_samples = 4000;
    const auto s = run_nuts(model, 7, cfg);
    const auto mu = column(s.draws, 0);
    const double ess = effective_sample_size(mu);
    REQUIRE(ess > 100.0);

    const double true_var = model.posterior_variance();
    const double se_mean = std::sqrt(true_var / ess);
    CHECK(std::abs(mean_of(mu) - model.posterior_mean()) < 3.0 * se_mean);

    std::vector<double> sq(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) sq[i] = (mu[i] - model.posterior_mean()) * (mu[i] - model.posterior_mean());
    const double se_var = std::sqrt(variance_of(sq) / effective_sample_size(sq));
    CHECK(std::abs(variance_of(mu) - true_var) < 3.0 * se_var);
}

TEST_CASE("prior-only eta quantiles follow HalfNormal(10000)") {
    const HalfNormalPrior prior{10000.0};
    const LogHalfNormal model(prior);
    NutsConfig cfg;
    cfg.n_warmup = 1000;
    cfg.n_samples = 6000;
    const auto s = run_nuts(model, 11, cfg);
    const auto eta = column(s.constrained, 0);
    const double ess = effective_sample_size(column(s.draws, 0));
    REQUIRE(ess > 200.0);
    for (double p : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        const double q = empirical_quantile(eta, p);
        // Coverage of the sample quantile under the analytic cdf.
        CHECK(std::abs(prior.cdf(q) - p) < 3.0 * std::sqrt(p * (1.0 - p) / ess));
    }
}

TEST_CASE("correlated Gaussian smoke test") {
    const CorrelatedNormal model;
    NutsConfig cfg;
    cfg.n_warmup = 500;
    cfg.n_samples = 3000;
    const auto s = run_nuts(model, 3, cfg);
    const Eigen::Vector2d m = s.draws.colwise().mean().transpose();
    const Eigen::MatrixXd c = s.draws.rowwise() - m.transpose();
    const Eigen::Matrix2d cov = c.transpose() * c / static_cast<double>(s.draws.rows() - 1);
    CHECK((m - model.mean_).cwiseAbs().maxCoeff() < 0.15);
    CHECK((cov - model.cov_).cwiseAbs().maxCoeff() < 0.25);
    CHECK(s.n_divergent == 0);
    CHECK(s.step_size > 0.0);
}

TEST_CASE("fixed seed gives bit-identical chains") {
    const CorrelatedNormal model;
    NutsConfig cfg;
    cfg.n_warmup = 200;
    cfg.n_samples = 300;
    const auto a = run_nuts(model, 99, cfg);
    const auto b = run_nuts(model, 99, cfg);
    const auto c = run_nuts(model, 100, cfg);
    CHECK(a.draws == b.draws);
    CHECK(a.step_size == b.step_size);
    CHECK(a.n_leapfrog == b.n_leapfrog);
    CHECK(a.draws != c.draws);
}

TEST_CASE("latent log-posterior gradients match finite differences") {
    const auto mesh = testing::tiny_mesh();
    const auto basis = testing::full_basis(mesh);
    LatentSpec spec;
    spec.n_lat = 10;
    Rng rng = make_rng(5);
    std::normal_distribution<double> normal;

    SUBCASE("single fidelity") {
        const SingleFidelityLatent model(basis, {0, 3, 5, 8, 11}, {1, 0, 1, 1, 0}, PriorSpec::single_fidelity(), spec);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd q(model.dimension());
            for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = 0.5 * normal(rng);
            Eigen::VectorXd g;
            model.log_density(q, g);
            CHECK(testing::max_rel_error(g, testing::numeric_gradient(model, q)) < 1e-5);
        }
    }
    SUBCASE("multi fidelity") {
        const MultiFidelityLatent model(basis, {0, 2, 4, 6, 9}, {1, 1, 0, 0, 1}, {1, 7, 10}, {0, 1, 1},
                                        PriorSpec::multi_fidelity(), spec);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd q(model.dimension());
            for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = 0.5 * normal(rng);
            Eigen::VectorXd g;
            model.log_density(q, g);
            CHECK(testing::max_rel_error(g, testing::numeric_gradient(model, q)) < 1e-5);
        }
    }
}

TEST_CASE("non-finite parameters are numerical errors") {
    const auto mesh = testing::tiny_mesh();
    const auto basis = testing::full_basis(mesh);
    LatentSpec spec;
    spec.n_lat = 4;
    const SingleFidelityLatent model(basis, {0, 1}, {1, 0}, PriorSpec::single_fidelity(), spec);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(model.dimension()), g;
    q(2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_MGPC_ERROR(model.log_density(q, g), ErrorCode::numerical);
}

TEST_CASE("effective sample size and quantiles") {
    std::vector<double> iid(4000);
    Rng rng = make_rng(1);
    std::normal_distribution<double> normal;
    for (auto& v : iid) v = normal(rng);
    const double ess = effective_sample_size(iid);
    CHECK(ess > 3000.0);
    CHECK(ess < 5000.0);
    CHECK(empirical_quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
    CHECK(empirical_quantile({5.0}, 0.3) == 5.0);
}
