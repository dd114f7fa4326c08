#include "mgpc/gpc.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include "conditioning.hpp"
#include "mgpc/error.hpp"

namespace mgpc {

namespace detail {

DrawPrediction condition_features(const Eigen::MatrixXd& train_features, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& query_features, const Eigen::VectorXd& f, double scale,
                                  double jitter, double max_jitter, std::size_t draw_index) {
    const Eigen::MatrixXd weighted = train_features * d.asDiagonal();  // F_x D
    Eigen::MatrixXd k = weighted * train_features.transpose();
    k = 0.5 * (k + k.transpose()).eval();

    DrawPrediction out;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double j = jitter;
    for (;;) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += j * scale;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) break;
        if (j * 10.0 > max_jitter * (1.0 + 1e-12)) {
            fail(ErrorCode::numerical, "covariance of posterior draw " + std::to_string(draw_index) +
                                           " is singular after jitter escalation to " + std::to_string(j * scale));
        }
        j *= 10.0;
        spdlog::debug("draw {}: increasing jitter to {:g}", draw_index, j * scale);
    }
    out.jitter = j * scale;

    const Eigen::VectorXd alpha = llt.solve(f);
    const Eigen::VectorXd beta = weighted.transpose() * alpha;  // D F_x^T K^-1 f
    out.mean = query_features * beta;

    Eigen::MatrixXd v = weighted;  // L^-1 F_x D
    llt.matrixL().solveInPlace(v);
    const Eigen::MatrixXd r = v * query_features.transpose();  // L^-1 k(X, Q)
    const Eigen::VectorXd prior = query_features.array().square().matrix() * d;
    out.variance = (prior - r.colwise().squaredNorm().transpose()).cwiseMax(0.0);
    return out;
}

void MomentAccumulator::add(const DrawPrediction& p) {
    if (count == 0) {
        mean = p.mean;
        variance = p.variance;
    } else {
        mean += p.mean;
        variance += p.variance;
    }
    ++count;
}

ClassProbabilityField MomentAccumulator::finish(std::span<const VertexId> query) const {
    ClassProbabilityField field;
    field.vertices.assign(query.begin(), query.end());
    field.samples_used = count;
    const double inv = count ? 1.0 / static_cast<double>(count) : 0.0;
    field.mean = mean * inv;
    field.variance = variance * inv;
    field.probability = field.mean.unaryExpr([](double m) { return sigmoid(m); });
    return field;
}

} // namespace detail

void GpcConfig::validate() const {
    if (!(jitter > 0.0) || !(max_jitter >= jitter)) {
        fail(ErrorCode::argument, "jitter must be positive and not exceed max_jitter");
    }
    if (latent.n_lat == 0) fail(ErrorCode::argument, "n_lat must be positive");
    if (!(latent.nu > 0.0) || latent.dim <= 0) fail(ErrorCode::argument, "nu and dim must be positive");
    if (nuts.n_samples == 0) fail(ErrorCode::argument, "n_samples must be positive");
    if (!(nuts.target_accept > 0.0 && nuts.target_accept < 1.0)) {
        fail(ErrorCode::argument, "target_accept must lie in (0, 1)");
    }
}

nlohmann::json to_json(const GpcConfig& c) {
    return {{"nuts", to_json(c.nuts)},
            {"n_lat", c.latent.n_lat},
            {"nu", c.latent.nu},
            {"dim", c.latent.dim},
            {"kappa_convention", c.latent.convention == KappaConvention::spde ? "spde" : "inverse-square"},
            {"n_pred_eig", c.n_pred_eig},
            {"n_pred_draws", c.n_pred_draws},
            {"jitter", c.jitter},
            {"max_jitter", c.max_jitter}};
}

GpcConfig gpc_config_from_json(const nlohmann::json& j) {
    GpcConfig c;
    if (j.contains("nuts")) c.nuts = nuts_config_from_json(j.at("nuts"));
    c.latent.n_lat = j.value("n_lat", c.latent.n_lat);
    c.latent.nu = j.value("nu", c.latent.nu);
    c.latent.dim = j.value("dim", c.latent.dim);
    const std::string conv = j.value("kappa_convention", std::string("inverse-square"));
    if (conv == "spde") {
        c.latent.convention = KappaConvention::spde;
    } else if (conv == "inverse-square" || conv == "inverse_square") {
        c.latent.convention = KappaConvention::inverse_square;
    } else {
        fail(ErrorCode::argument, "unknown kappa_convention '" + conv + "'");
    }
    c.n_pred_eig = j.value("n_pred_eig", c.n_pred_eig);
    c.n_pred_draws = j.value("n_pred_draws", c.n_pred_draws);
    c.jitter = j.value("jitter", c.jitter);
    c.max_jitter = j.value("max_jitter", c.max_jitter);
    c.validate();
    return c;
}

std::vector<std::size_t> thinned_draws(std::size_t n_draws, std::size_t n_keep) {
    std::vector<std::size_t> idx;
    if (n_keep == 0 || n_keep >= n_draws) {
        for (std::size_t i = 0; i < n_draws; ++i) idx.push_back(i);
        return idx;
    }
    for (std::size_t i = 0; i < n_keep; ++i) idx.push_back(i * n_draws / n_keep);
    return idx;
}

TrainedClassifier::TrainedClassifier(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> vertices,
                                     std::vector<int> labels, PriorSpec priors, GpcConfig config,
                                     PosteriorSamples samples)
    : basis_(std::move(basis)), config_(config), samples_(std::move(samples)) {
    if (!basis_) fail(ErrorCode::argument, "classifier needs a spectral basis");
    config_.validate();
    const std::size_t n_pred = config_.n_pred_eig == 0 ? basis_->n_eig() : std::min(config_.n_pred_eig, basis_->n_eig());
    pred_basis_ = n_pred == basis_->n_eig() ? basis_ : std::make_shared<const SpectralBasis>(basis_->truncated(n_pred));
    kernel_ = std::make_shared<const SpectralMatern>(pred_basis_, config_.latent.convention);
    model_ = std::make_shared<const SingleFidelityLatent>(basis_, std::move(vertices), std::move(labels), priors,
                                                          config_.latent);
    if (static_cast<std::size_t>(samples_.draws.cols()) != model_->dimension() || samples_.draws.rows() == 0) {
        fail(ErrorCode::argument, "posterior draws do not match the model dimension");
    }
}

TrainedClassifier TrainedClassifier::from_draws(std::shared_ptr<const SpectralBasis> basis,
                                                std::vector<VertexId> vertices, std::vector<int> labels,
                                                PriorSpec priors, GpcConfig config, Eigen::MatrixXd draws,
                                                double step_size) {
    const SingleFidelityLatent model(basis, vertices, labels, priors, config.latent);
    auto samples = samples_from_draws(model, std::move(draws), step_size);
    return TrainedClassifier(std::move(basis), std::move(vertices), std::move(labels), priors, config,
                             std::move(samples));
}

DrawPrediction TrainedClassifier::predict_draw(std::size_t s, std::span<const VertexId> query) const {
    if (s >= samples_.n_kept) fail(ErrorCode::argument, "draw index out of range");
    const Eigen::VectorXd q = samples_.draw(s);
    const KernelParams params = model_->kernel_params(q);
    const Eigen::MatrixXd fx = pred_basis_->rows(model_->vertices(), pred_basis_->n_eig());
    const Eigen::MatrixXd fq = pred_basis_->rows(query, pred_basis_->n_eig());
    return detail::condition_features(fx, kernel_->mode_variances(params), fq, model_->training_latent(q),
                                      params.eta * params.eta, config_.jitter, config_.max_jitter, s);
}

ClassProbabilityField TrainedClassifier::predict(std::span<const VertexId> query) const {
    for (auto v : query) {
        if (v >= basis_->vertex_count()) fail(ErrorCode::argument, "query vertex " + std::to_string(v) + " out of range");
    }
    const Eigen::MatrixXd fx = pred_basis_->rows(model_->vertices(), pred_basis_->n_eig());
    const Eigen::MatrixXd fq = pred_basis_->rows(query, pred_basis_->n_eig());
    detail::MomentAccumulator acc;
    for (const std::size_t s : thinned_draws(samples_.n_kept, config_.n_pred_draws)) {
        const Eigen::VectorXd q = samples_.draw(s);
        const KernelParams params = model_->kernel_params(q);
        acc.add(detail::condition_features(fx, kernel_->mode_variances(params), fq, model_->training_latent(q),
                                           params.eta * params.eta, config_.jitter, config_.max_jitter, s));
    }
    return acc.finish(query);
}

ClassProbabilityField TrainedClassifier::predict_all() const {
    std::vector<VertexId> all(basis_->vertex_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return predict(all);
}

TrainedClassifier train(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis, const LabeledDataset& data,
                        const PriorSpec& priors, std::uint64_t seed, const GpcConfig& config) {
    if (!basis) fail(ErrorCode::argument, "training needs a spectral basis");
    if (basis->vertex_count() != mesh.vertex_count()) {
        fail(ErrorCode::argument, "spectral basis was built on a different mesh (" +
                                      std::to_string(basis->vertex_count()) + " vs " +
                                      std::to_string(mesh.vertex_count()) + " vertices)");
    }
    data.validate(mesh.vertex_count());
    config.validate();
    auto vertices = data.vertices(Fidelity::high);
    auto labels = data.labels(Fidelity::high);
    if (vertices.empty()) fail(ErrorCode::argument, "single-fidelity training needs at least one high-fidelity label");
    if (data.count(Fidelity::low) > 0) {
        spdlog::info("single-fidelity training ignores {} low-fidelity entries", data.count(Fidelity::low));
    }
    const SingleFidelityLatent model(basis, vertices, labels, priors, config.latent);
    auto samples = run_nuts(model, seed, config.nuts);
    return TrainedClassifier(std::move(basis), std::move(vertices), std::move(labels), priors, config,
                             std::move(samples));
}

} // namespace mgpc
