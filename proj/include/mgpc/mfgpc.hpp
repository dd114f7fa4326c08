#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mgpc/gpc.hpp"

namespace mgpc {

struct MultiFidelityParams {
    KernelParams low;
    KernelParams high;
    double rho = 1.0;
};

/// [[K_LL, K_LH], [K_LH^T, K_HH]] with K_LH = rho k_L(X_L, X_H) and
/// K_HH = rho^2 k_L(X_H, X_H) + k_H(X_H, X_H); high.eta = 0 drops the k_H term.
Eigen::MatrixXd block_covariance(std::span<const VertexId> low, std::span<const VertexId> high,
                                 const SpectralMatern& kernel, const MultiFidelityParams& params);

/// Two-level classifier f_H = rho f_L + delta; predictions are for the high level.
class TrainedMFClassifier {
public:
    TrainedMFClassifier(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> low_vertices,
                        std::vector<int> low_labels, std::vector<VertexId> high_vertices, std::vector<int> high_labels,
                        PriorSpec priors, GpcConfig config, PosteriorSamples samples);

    /// Rebuild from stored unconstrained draws (n_draws x (5 + 2 n_lat)).
    static TrainedMFClassifier from_draws(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> low_vertices,
                                          std::vector<int> low_labels, std::vector<VertexId> high_vertices,
                                          std::vector<int> high_labels, PriorSpec priors, GpcConfig config,
                                          Eigen::MatrixXd draws, double step_size = 0.0);

    const PosteriorSamples& samples() const noexcept { return samples_; }
    const MultiFidelityLatent& model() const noexcept { return *model_; }
    const GpcConfig& config() const noexcept { return config_; }
    const SpectralBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const SpectralBasis> basis_ptr() const noexcept { return basis_; }
    const SpectralMatern& kernel() const noexcept { return *kernel_; }

    MultiFidelityParams params(std::size_t s) const;

    DrawPrediction predict_draw(std::size_t s, std::span<const VertexId> query) const;
    ClassProbabilityField predict(std::span<const VertexId> query) const;
    ClassProbabilityField predict_all() const;

private:
    DrawPrediction predict_one(std::size_t s, const Eigen::MatrixXd& phi_low, const Eigen::MatrixXd& phi_high,
                               const Eigen::MatrixXd& phi_query) const;

    std::shared_ptr<const SpectralBasis> basis_;
    std::shared_ptr<const SpectralBasis> pred_basis_;
    std::shared_ptr<const SpectralMatern> kernel_;
    std::shared_ptr<const MultiFidelityLatent> model_;
    GpcConfig config_;
    PosteriorSamples samples_;
};

/// Joint fit of both label sets; needs at least one entry of each fidelity.
TrainedMFClassifier train_mf(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                             const LabeledDataset& data, const PriorSpec& priors, std::uint64_t seed,
                             const GpcConfig& config = {});

} // namespace mgpc
