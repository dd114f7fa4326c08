#include "mgpc/mfgpc.hpp"

#include <string>

#include "conditioning.hpp"
#include "mgpc/error.hpp"

namespace mgpc {

Eigen::MatrixXd block_covariance(std::span<const VertexId> low, std::span<const VertexId> high,
                                 const SpectralMatern& kernel, const MultiFidelityParams& params) {
    const auto nl = static_cast<Eigen::Index>(low.size());
    const auto nh = static_cast<Eigen::Index>(high.size());
    Eigen::MatrixXd k(nl + nh, nl + nh);
    k.topLeftCorner(nl, nl) = kernel.gram(low, low, params.low);
    const Eigen::MatrixXd lh = params.rho * kernel.gram(low, high, params.low);
    k.topRightCorner(nl, nh) = lh;
    k.bottomLeftCorner(nh, nl) = lh.transpose();
    k.bottomRightCorner(nh, nh) = params.rho * params.rho * kernel.gram(high, high, params.low);
    // eta_H = 0 is the degenerate no-discrepancy limit.
    if (params.high.eta != 0.0) k.bottomRightCorner(nh, nh) += kernel.gram(high, high, params.high);
    return k;
}

TrainedMFClassifier::TrainedMFClassifier(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> low_vertices,
                                         std::vector<int> low_labels, std::vector<VertexId> high_vertices,
                                         std::vector<int> high_labels, PriorSpec priors, GpcConfig config,
                                         PosteriorSamples samples)
    : basis_(std::move(basis)), config_(config), samples_(std::move(samples)) {
    if (!basis_) fail(ErrorCode::argument, "classifier needs a spectral basis");
    config_.validate();
    const std::size_t n_pred = config_.n_pred_eig == 0 ? basis_->n_eig() : std::min(config_.n_pred_eig, basis_->n_eig());
    pred_basis_ = n_pred == basis_->n_eig() ? basis_ : std::make_shared<const SpectralBasis>(basis_->truncated(n_pred));
    kernel_ = std::make_shared<const SpectralMatern>(pred_basis_, config_.latent.convention);
    model_ = std::make_shared<const MultiFidelityLatent>(basis_, std::move(low_vertices), std::move(low_labels),
                                                         std::move(high_vertices), std::move(high_labels), priors,
                                                         config_.latent);
    if (static_cast<std::size_t>(samples_.draws.cols()) != model_->dimension() || samples_.draws.rows() == 0) {
        fail(ErrorCode::argument, "posterior draws do not match the model dimension");
    }
}

TrainedMFClassifier TrainedMFClassifier::from_draws(std::shared_ptr<const SpectralBasis> basis,
                                                    std::vector<VertexId> low_vertices, std::vector<int> low_labels,
                                                    std::vector<VertexId> high_vertices, std::vector<int> high_labels,
                                                    PriorSpec priors, GpcConfig config, Eigen::MatrixXd draws,
                                                    double step_size) {
    const MultiFidelityLatent model(basis, low_vertices, low_labels, high_vertices, high_labels, priors, config.latent);
    auto samples = samples_from_draws(model, std::move(draws), step_size);
    return TrainedMFClassifier(std::move(basis), std::move(low_vertices), std::move(low_labels),
                               std::move(high_vertices), std::move(high_labels), priors, config, std::move(samples));
}

MultiFidelityParams TrainedMFClassifier::params(std::size_t s) const {
    const Eigen::VectorXd q = samples_.draw(s);
    return {model_->low_params(q), model_->high_params(q), MultiFidelityLatent::rho(q)};
}

DrawPrediction TrainedMFClassifier::predict_one(std::size_t s, const Eigen::MatrixXd& phi_low,
                                                const Eigen::MatrixXd& phi_high,
                                                const Eigen::MatrixXd& phi_query) const {
    const Eigen::VectorXd q = samples_.draw(s);
    const MultiFidelityParams p{model_->low_params(q), model_->high_params(q), MultiFidelityLatent::rho(q)};
    const Eigen::Index nl = phi_low.rows(), nh = phi_high.rows(), m = phi_low.cols();

    // Joint features: [f_L(X_L); f_H(X_H)] = [[Phi_L, 0], [rho Phi_H, Phi_H]] [z_L; z_delta].
    Eigen::MatrixXd fx = Eigen::MatrixXd::Zero(nl + nh, 2 * m);
    fx.topLeftCorner(nl, m) = phi_low;
    fx.bottomLeftCorner(nh, m) = p.rho * phi_high;
    fx.bottomRightCorner(nh, m) = phi_high;
    Eigen::MatrixXd fq(phi_query.rows(), 2 * m);
    fq.leftCols(m) = p.rho * phi_query;
    fq.rightCols(m) = phi_query;
    Eigen::VectorXd d(2 * m);
    d.head(m) = kernel_->mode_variances(p.low);
    d.tail(m) = kernel_->mode_variances(p.high);

    Eigen::VectorXd f(nl + nh);
    f.head(nl) = model_->low_latent(q, model_->low_vertices());
    f.tail(nh) = p.rho * model_->low_latent(q, model_->high_vertices()) +
                 model_->discrepancy_latent(q, model_->high_vertices());

    const double scale = p.rho * p.rho * p.low.eta * p.low.eta + p.high.eta * p.high.eta;
    return detail::condition_features(fx, d, fq, f, scale, config_.jitter, config_.max_jitter, s);
}

DrawPrediction TrainedMFClassifier::predict_draw(std::size_t s, std::span<const VertexId> query) const {
    if (s >= samples_.n_kept) fail(ErrorCode::argument, "draw index out of range");
    const std::size_t m = pred_basis_->n_eig();
    return predict_one(s, pred_basis_->rows(model_->low_vertices(), m), pred_basis_->rows(model_->high_vertices(), m),
                       pred_basis_->rows(query, m));
}

ClassProbabilityField TrainedMFClassifier::predict(std::span<const VertexId> query) const {
    for (auto v : query) {
        if (v >= basis_->vertex_count()) fail(ErrorCode::argument, "query vertex " + std::to_string(v) + " out of range");
    }
    const std::size_t m = pred_basis_->n_eig();
    const Eigen::MatrixXd phi_low = pred_basis_->rows(model_->low_vertices(), m);
    const Eigen::MatrixXd phi_high = pred_basis_->rows(model_->high_vertices(), m);
    const Eigen::MatrixXd phi_query = pred_basis_->rows(query, m);
    detail::MomentAccumulator acc;
    for (const std::size_t s : thinned_draws(samples_.n_kept, config_.n_pred_draws)) {
        acc.add(predict_one(s, phi_low, phi_high, phi_query));
    }
    return acc.finish(query);
}

ClassProbabilityField TrainedMFClassifier::predict_all() const {
    std::vector<VertexId> all(basis_->vertex_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return predict(all);
}

TrainedMFClassifier train_mf(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                             const LabeledDataset& data, const PriorSpec& priors, std::uint64_t seed,
                             const GpcConfig& config) {
    if (!basis) fail(ErrorCode::argument, "training needs a spectral basis");
    if (basis->vertex_count() != mesh.vertex_count()) {
        fail(ErrorCode::argument, "spectral basis was built on a different mesh");
    }
    data.validate(mesh.vertex_count());
    config.validate();
    if (data.count(Fidelity::low) == 0 || data.count(Fidelity::high) == 0) {
        fail(ErrorCode::argument,
             "multi-fidelity training needs both low- and high-fidelity labels; use single-fidelity training instead");
    }
    auto lv = data.vertices(Fidelity::low);
    auto ly = data.labels(Fidelity::low);
    auto hv = data.vertices(Fidelity::high);
    auto hy = data.labels(Fidelity::high);
    const MultiFidelityLatent model(basis, lv, ly, hv, hy, priors, config.latent);
    auto samples = run_nuts(model, seed, config.nuts);
    return TrainedMFClassifier(std::move(basis), std::move(lv), std::move(ly), std::move(hv), std::move(hy), priors,
                               config, std::move(samples));
}

} // namespace mgpc
