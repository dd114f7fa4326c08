#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mgpc/inference.hpp"
#include "mgpc/kernel.hpp"
#include "mgpc/laplace.hpp"

namespace mgpc {

/// Structural (non-inferred) settings of the non-centered spectral latent.
struct LatentSpec {
    std::size_t n_lat = 200;
    double nu = 1.5;
    int dim = 2;
    KappaConvention convention = KappaConvention::inverse_square;
};

/**
 * Non-centered spectral expansion of a Matern GP over the first n modes:
 *
 *   f(x) = eta / sqrt(C) * sum_i w_i (a + lambda_i)^(-nu/2 - d/4) psi_i(x),  w_i ~ N(0, 1)
 *
 * with C the normalization of the same truncation. Amplitudes are the
 * per-mode factors multiplying w_i.
 */
class SpectralExpansion {
public:
    SpectralExpansion(const SpectralBasis& basis, std::size_t modes, const LatentSpec& spec);

    std::size_t modes() const noexcept { return static_cast<std::size_t>(eigenvalues_.size()); }

    struct Amplitudes {
        Eigen::VectorXd value;       ///< eta * g_i / sqrt(C)
        Eigen::VectorXd dlog_ell;    ///< d value / d log(ell)
    };

    Amplitudes amplitudes(double eta, double ell) const;

private:
    Eigen::VectorXd eigenvalues_;
    Eigen::VectorXd mean_square_;
    LatentSpec spec_;
};

/// sum_i log-likelihood of Bernoulli labels under a logistic link, with r = y - sigmoid(f).
double bernoulli_logit_log_likelihood(const Eigen::VectorXd& f, const std::vector<int>& labels, Eigen::VectorXd& residual);

double sigmoid(double f);

/**
 * Single-fidelity classification posterior over q = [log eta, log ell, w_0 .. w_{n_lat-1}].
 * The log density includes the log-transform Jacobians.
 */
class SingleFidelityLatent final : public LogDensityModel {
public:
    SingleFidelityLatent(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> vertices,
                         std::vector<int> labels, PriorSpec priors, LatentSpec spec);

    std::size_t dimension() const override { return 2 + n_lat_; }
    double log_density(const Eigen::VectorXd& q, Eigen::VectorXd& gradient) const override;
    std::vector<std::string> parameter_names() const override;
    Eigen::VectorXd constrain(const Eigen::VectorXd& q) const override;

    /// Latent function values at arbitrary vertices for parameter vector q.
    Eigen::VectorXd latent_values(const Eigen::VectorXd& q, std::span<const VertexId> at) const;
    /// Latent values at the training vertices.
    Eigen::VectorXd training_latent(const Eigen::VectorXd& q) const;

    KernelParams kernel_params(const Eigen::VectorXd& q) const;

    std::size_t n_lat() const noexcept { return n_lat_; }
    const LatentSpec& spec() const noexcept { return spec_; }
    const PriorSpec& priors() const noexcept { return priors_; }
    const std::vector<VertexId>& vertices() const noexcept { return vertices_; }
    const std::vector<int>& labels() const noexcept { return labels_; }

private:
    std::shared_ptr<const SpectralBasis> basis_;
    std::vector<VertexId> vertices_;
    std::vector<int> labels_;
    PriorSpec priors_;
    LatentSpec spec_;
    std::size_t n_lat_;
    SpectralExpansion expansion_;
    Eigen::MatrixXd phi_;  ///< training rows, N x n_lat
};

/**
 * Two-level autoregressive posterior over
 * q = [log eta_L, log ell_L, log eta_H, log ell_H, rho, w_L (n_lat), w_delta (n_lat)],
 * with f_H = rho * f_L + delta. Low labels see sigmoid(f_L), high labels sigmoid(f_H).
 */
class MultiFidelityLatent final : public LogDensityModel {
public:
    MultiFidelityLatent(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> low_vertices,
                        std::vector<int> low_labels, std::vector<VertexId> high_vertices, std::vector<int> high_labels,
                        PriorSpec priors, LatentSpec spec);

    std::size_t dimension() const override { return 5 + 2 * n_lat_; }
    double log_density(const Eigen::VectorXd& q, Eigen::VectorXd& gradient) const override;
    std::vector<std::string> parameter_names() const override;
    Eigen::VectorXd constrain(const Eigen::VectorXd& q) const override;

    KernelParams low_params(const Eigen::VectorXd& q) const;
    KernelParams high_params(const Eigen::VectorXd& q) const;
    static double rho(const Eigen::VectorXd& q) { return q(4); }

    /// f_L at the given vertices.
    Eigen::VectorXd low_latent(const Eigen::VectorXd& q, std::span<const VertexId> at) const;
    /// delta at the given vertices.
    Eigen::VectorXd discrepancy_latent(const Eigen::VectorXd& q, std::span<const VertexId> at) const;

    std::size_t n_lat() const noexcept { return n_lat_; }
    const LatentSpec& spec() const noexcept { return spec_; }
    const PriorSpec& priors() const noexcept { return priors_; }
    const std::vector<VertexId>& low_vertices() const noexcept { return low_vertices_; }
    const std::vector<VertexId>& high_vertices() const noexcept { return high_vertices_; }
    const std::vector<int>& low_labels() const noexcept { return low_labels_; }
    const std::vector<int>& high_labels() const noexcept { return high_labels_; }

private:
    std::shared_ptr<const SpectralBasis> basis_;
    std::vector<VertexId> low_vertices_, high_vertices_;
    std::vector<int> low_labels_, high_labels_;
    PriorSpec priors_;
    LatentSpec spec_;
    std::size_t n_lat_;
    SpectralExpansion expansion_;
    Eigen::MatrixXd phi_low_, phi_high_;
};

} // namespace mgpc
