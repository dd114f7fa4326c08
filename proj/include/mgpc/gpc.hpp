#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mgpc/dataset.hpp"
#include "mgpc/inference.hpp"
#include "mgpc/kernel.hpp"
#include "mgpc/latent_model.hpp"

namespace mgpc {

/// Settings shared by the single- and multi-fidelity classifiers.
struct GpcConfig {
    NutsConfig nuts;
    LatentSpec latent;
    /// Modes in the prediction kernel; 0 uses every basis mode.
    std::size_t n_pred_eig = 0;
    /// Posterior draws averaged at prediction (evenly thinned); 0 uses all.
    std::size_t n_pred_draws = 0;
    /// Initial diagonal jitter and its ceiling, relative to the prior variance scale.
    double jitter = 1e-6;
    double max_jitter = 1e-2;

    void validate() const;
};

nlohmann::json to_json(const GpcConfig& config);
GpcConfig gpc_config_from_json(const nlohmann::json& j);

/// Conditional latent moments of one posterior draw at the query vertices.
struct DrawPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    double jitter = 0.0;
};

/// Indices of the draws averaged at prediction time.
std::vector<std::size_t> thinned_draws(std::size_t n_draws, std::size_t n_keep);

/// Single-fidelity classifier: posterior draws over (log eta, log ell, w).
class TrainedClassifier {
public:
    TrainedClassifier(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> vertices, std::vector<int> labels,
                      PriorSpec priors, GpcConfig config, PosteriorSamples samples);

    /// Rebuild from stored unconstrained draws (n_draws x (2 + n_lat)).
    static TrainedClassifier from_draws(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> vertices,
                                        std::vector<int> labels, PriorSpec priors, GpcConfig config,
                                        Eigen::MatrixXd draws, double step_size = 0.0);

    const PosteriorSamples& samples() const noexcept { return samples_; }
    const SingleFidelityLatent& model() const noexcept { return *model_; }
    const GpcConfig& config() const noexcept { return config_; }
    const PriorSpec& priors() const noexcept { return model_->priors(); }
    const std::vector<VertexId>& vertices() const noexcept { return model_->vertices(); }
    const std::vector<int>& labels() const noexcept { return model_->labels(); }
    const SpectralBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const SpectralBasis> basis_ptr() const noexcept { return basis_; }

    /// Prediction kernel (n_pred_eig modes).
    const SpectralMatern& kernel() const noexcept { return *kernel_; }

    /// Moments for draw s, conditioned on that draw's latent values at the training vertices.
    DrawPrediction predict_draw(std::size_t s, std::span<const VertexId> query) const;

    /// Draw-averaged mean and variance, probability = sigmoid(mean). Deterministic.
    ClassProbabilityField predict(std::span<const VertexId> query) const;
    ClassProbabilityField predict_all() const;

private:
    std::shared_ptr<const SpectralBasis> basis_;
    std::shared_ptr<const SpectralBasis> pred_basis_;
    std::shared_ptr<const SpectralMatern> kernel_;
    std::shared_ptr<const SingleFidelityLatent> model_;
    GpcConfig config_;
    PosteriorSamples samples_;
};

/// Fit on the high-fidelity entries of `data`.
TrainedClassifier train(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis, const LabeledDataset& data,
                        const PriorSpec& priors, std::uint64_t seed, const GpcConfig& config = {});

} // namespace mgpc
