#include "mgpc/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mgpc/error.hpp"

namespace mgpc {

void KernelParams::validate() const {
    if (!(eta > 0.0) || !(ell > 0.0) || !(nu > 0.0) || dim <= 0 || !std::isfinite(eta) || !std::isfinite(ell)) {
        fail(ErrorCode::argument, "kernel parameters need eta > 0, ell > 0, nu > 0, dim > 0");
    }
}

double matern_euclidean(const Eigen::Vector3d& x, const Eigen::Vector3d& y, const KernelParams& params) {
    params.validate();
    const double r = (x - y).norm();
    const double eta2 = params.eta * params.eta;
    if (r == 0.0) {
        return eta2;
    }
    const double nu = params.nu;
    const double z = std::sqrt(2.0 * nu) * r / params.ell;
    // Half-integer closed forms avoid Bessel round-off for the common cases.
    if (nu == 0.5) {
        return eta2 * std::exp(-z);
    }
    if (nu == 1.5) {
        return eta2 * (1.0 + z) * std::exp(-z);
    }
    if (nu == 2.5) {
        return eta2 * (1.0 + z + z * z / 3.0) * std::exp(-z);
    }
    const double value = eta2 * std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) * std::cyl_bessel_k(nu, z);
    return std::isfinite(value) ? value : 0.0;
}

double spectral_shift(const KernelParams& params, KappaConvention convention) {
    const double inv_ell2 = 1.0 / (params.ell * params.ell);
    return convention == KappaConvention::spde ? 2.0 * params.nu * inv_ell2 : inv_ell2;
}

Eigen::VectorXd spectral_weights(const Eigen::VectorXd& eigenvalues, const KernelParams& params,
                                 KappaConvention convention) {
    const double a = spectral_shift(params, convention);
    const double exponent = -params.nu - 0.5 * params.dim;
    return (eigenvalues.array() + a).pow(exponent).matrix();
}

double normalization_constant(const SpectralBasis& basis, const KernelParams& params, std::span<const double> areas,
                              KappaConvention convention) {
    params.validate();
    if (areas.size() != basis.vertex_count()) {
        fail(ErrorCode::argument, "area vector does not match the basis vertex count");
    }
    const Eigen::VectorXd s = spectral_weights(basis.eigenvalues(), params, convention);
    const Eigen::Map<const Eigen::VectorXd> a(areas.data(), static_cast<Eigen::Index>(areas.size()));
    const Eigen::VectorXd diag = basis.eigenvectors().array().square().matrix() * s;
    return a.dot(diag) / a.sum();
}

SpectralMatern::SpectralMatern(std::shared_ptr<const SpectralBasis> basis, KappaConvention convention)
    : basis_(std::move(basis)), convention_(convention) {
    if (!basis_) {
        fail(ErrorCode::argument, "null spectral basis");
    }
}

double SpectralMatern::normalization(const KernelParams& params) const {
    params.validate();
    const auto key = std::make_tuple(params.ell, params.nu, params.dim);
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            return it->second;
        }
    }
    // With the per-mode area means precomputed this is O(n_eig).
    const double c = spectral_weights(basis_->eigenvalues(), params, convention_).dot(basis_->mode_mean_square());
    std::lock_guard lock(cache_mutex_);
    if (cache_.size() > 4096) {
        cache_.clear();
    }
    cache_.emplace(key, c);
    return c;
}

Eigen::VectorXd SpectralMatern::mode_variances(const KernelParams& params) const {
    const double c = normalization(params);
    return spectral_weights(basis_->eigenvalues(), params, convention_) * (params.eta * params.eta / c);
}

double SpectralMatern::operator()(VertexId i, VertexId j, const KernelParams& params) const {
    const Eigen::VectorXd w = mode_variances(params);
    const auto& psi = basis_->eigenvectors();
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    if (i >= basis_->vertex_count() || j >= basis_->vertex_count()) {
        fail(ErrorCode::argument, "vertex index out of range");
    }
    double sum = 0.0;
    for (Eigen::Index n = 0; n < w.size(); ++n) {
        sum += w(n) * (psi(ii, n) * psi(jj, n));
    }
    return sum;
}

Eigen::MatrixXd SpectralMatern::gram(std::span<const VertexId> rows, std::span<const VertexId> cols,
                                     const KernelParams& params) const {
    const Eigen::VectorXd w = mode_variances(params);
    const Eigen::MatrixXd pr = basis_->rows(rows, basis_->n_eig());
    if (rows.size() == cols.size() && std::equal(rows.begin(), rows.end(), cols.begin())) {
        Eigen::MatrixXd k = pr * w.asDiagonal() * pr.transpose();
        return 0.5 * (k + k.transpose());
    }
    const Eigen::MatrixXd pc = basis_->rows(cols, basis_->n_eig());
    return pr * w.asDiagonal() * pc.transpose();
}

Eigen::VectorXd SpectralMatern::diagonal(std::span<const VertexId> vertices, const KernelParams& params) const {
    const Eigen::VectorXd w = mode_variances(params);
    return basis_->rows(vertices, basis_->n_eig()).array().square().matrix() * w;
}

} // namespace mgpc
