#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <tuple>

#include <Eigen/Core>

#include "mgpc/laplace.hpp"

namespace mgpc {

/// Which shift enters the spectral weights (a + lambda_i)^(-nu - d/2):
/// a = 1/ell^2 (inverse_square) or a = 2 nu / ell^2 (spde, kappa = sqrt(2 nu)/ell).
enum class KappaConvention { inverse_square, spde };

struct KernelParams {
    double eta = 1.0;
    double ell = 1.0;
    double nu = 1.5;
    int dim = 2;

    void validate() const;
};

/// Closed-form Matern covariance in R^3; the r = 0 limit is eta^2.
double matern_euclidean(const Eigen::Vector3d& x, const Eigen::Vector3d& y, const KernelParams& params);

/// Shift a(ell) for the chosen convention.
double spectral_shift(const KernelParams& params, KappaConvention convention);

/// Unnormalized spectral weights s_i = (a + lambda_i)^(-nu - d/2).
Eigen::VectorXd spectral_weights(const Eigen::VectorXd& eigenvalues, const KernelParams& params,
                                 KappaConvention convention);

/// C such that the area-weighted mean over vertices of sum_i s_i psi_i(x)^2 equals C.
double normalization_constant(const SpectralBasis& basis, const KernelParams& params, std::span<const double> areas,
                              KappaConvention convention = KappaConvention::inverse_square);

/**
 * Matern kernel on a mesh through its truncated Laplace-Beltrami spectrum:
 *
 *   k(i, j) = eta^2 / C * sum_n s_n psi_n(i) psi_n(j)
 *
 * C is cached per (ell, nu, d). Thread-safe.
 */
class SpectralMatern {
public:
    explicit SpectralMatern(std::shared_ptr<const SpectralBasis> basis,
                            KappaConvention convention = KappaConvention::inverse_square);

    const SpectralBasis& basis() const noexcept { return *basis_; }
    std::shared_ptr<const SpectralBasis> basis_ptr() const noexcept { return basis_; }
    KappaConvention convention() const noexcept { return convention_; }

    double normalization(const KernelParams& params) const;

    /// eta^2 / C * s, the per-mode prior variances.
    Eigen::VectorXd mode_variances(const KernelParams& params) const;

    double operator()(VertexId i, VertexId j, const KernelParams& params) const;

    Eigen::MatrixXd gram(std::span<const VertexId> rows, std::span<const VertexId> cols,
                         const KernelParams& params) const;

    /// k(x, x) for the listed vertices.
    Eigen::VectorXd diagonal(std::span<const VertexId> vertices, const KernelParams& params) const;

private:
    std::shared_ptr<const SpectralBasis> basis_;
    KappaConvention convention_;
    mutable std::mutex cache_mutex_;
    mutable std::map<std::tuple<double, double, int>, double> cache_;
};

} // namespace mgpc
