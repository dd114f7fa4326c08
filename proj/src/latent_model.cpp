#include "mgpc/latent_model.hpp"

#include <cmath>
#include <limits>

#include "mgpc/error.hpp"

namespace mgpc {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(1 + exp(x)) without overflow.
double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void check_finite(const Eigen::VectorXd& q, std::size_t dim) {
    if (static_cast<std::size_t>(q.size()) != dim) {
        fail(ErrorCode::argument, "parameter vector has length " + std::to_string(q.size()) + ", expected " +
                                      std::to_string(dim));
    }
    if (!q.allFinite()) {
        fail(ErrorCode::numerical, "non-finite parameter vector passed to log density");
    }
}

void check_labels(const std::vector<VertexId>& vertices, const std::vector<int>& labels, std::size_t vertex_count) {
    if (vertices.size() != labels.size()) {
        fail(ErrorCode::argument, "vertex and label lists differ in length");
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (vertices[i] >= vertex_count) {
            fail(ErrorCode::argument, "training vertex " + std::to_string(vertices[i]) + " out of range");
        }
        if (labels[i] != 0 && labels[i] != 1) {
            fail(ErrorCode::argument, "labels must be 0 or 1");
        }
    }
}

/// Log priors of a (log eta, log ell) pair including Jacobians; adds gradients.
double hyper_log_prior(const PriorSpec& priors, double log_eta, double log_ell, double& g_eta, double& g_ell) {
    const double eta = std::exp(log_eta);
    const double ell = std::exp(log_ell);
    const double s = priors.eta.scale;
    g_eta += -(eta * eta) / (s * s) + 1.0;
    g_ell += priors.ell.shape - priors.ell.rate * ell;
    return priors.eta.log_density(eta) + log_eta + priors.ell.log_density(ell) + log_ell;
}

} // namespace

double sigmoid(double f) {
    return f >= 0.0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f));
}

double bernoulli_logit_log_likelihood(const Eigen::VectorXd& f, const std::vector<int>& labels,
                                      Eigen::VectorXd& residual) {
    residual.resize(f.size());
    double ll = 0.0;
    for (Eigen::Index j = 0; j < f.size(); ++j) {
        const double y = labels[static_cast<std::size_t>(j)];
        ll -= y > 0.5 ? softplus(-f(j)) : softplus(f(j));
        residual(j) = y - sigmoid(f(j));
    }
    return ll;
}

SpectralExpansion::SpectralExpansion(const SpectralBasis& basis, std::size_t modes, const LatentSpec& spec)
    : spec_(spec) {
    if (modes == 0 || modes > basis.n_eig()) {
        fail(ErrorCode::argument, "latent dimension must be in [1, " + std::to_string(basis.n_eig()) + "]");
    }
    const auto k = static_cast<Eigen::Index>(modes);
    eigenvalues_ = basis.eigenvalues().head(k);
    mean_square_ = basis.mode_mean_square().head(k);
}

SpectralExpansion::Amplitudes SpectralExpansion::amplitudes(double eta, double ell) const {
    const KernelParams params{eta, ell, spec_.nu, spec_.dim};
    const double a = spectral_shift(params, spec_.convention);
    const double e = spec_.nu + 0.5 * spec_.dim;
    const Eigen::ArrayXd shifted = eigenvalues_.array() + a;
    const Eigen::ArrayXd s = shifted.pow(-e);
    const Eigen::ArrayXd ratio = a / shifted;  // a / (a + lambda_i)
    const double c = (s * mean_square_.array()).sum();
    const double dlog_c = (mean_square_.array() * s * 2.0 * e * ratio).sum() / c;  // ell dC/dell / C

    Amplitudes out;
    out.value = ((eta / std::sqrt(c)) * s.sqrt()).matrix();
    out.dlog_ell = (out.value.array() * (e * ratio - 0.5 * dlog_c)).matrix();
    return out;
}

// ---------------------------------------------------------------------------

SingleFidelityLatent::SingleFidelityLatent(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> vertices,
                                           std::vector<int> labels, PriorSpec priors, LatentSpec spec)
    : basis_(std::move(basis)), vertices_(std::move(vertices)), labels_(std::move(labels)), priors_(priors),
      spec_(spec), n_lat_(std::min(spec.n_lat, basis_ ? basis_->n_eig() : 0)),
      expansion_(*basis_, n_lat_, spec) {
    priors_.validate();
    check_labels(vertices_, labels_, basis_->vertex_count());
    phi_ = basis_->rows(vertices_, n_lat_);
}

double SingleFidelityLatent::log_density(const Eigen::VectorXd& q, Eigen::VectorXd& gradient) const {
    check_finite(q, dimension());
    const auto n = static_cast<Eigen::Index>(n_lat_);
    gradient.setZero(q.size());
    const double log_eta = q(0), log_ell = q(1);
    const auto w = q.tail(n);

    double lp = hyper_log_prior(priors_, log_eta, log_ell, gradient(0), gradient(1));
    lp -= 0.5 * w.squaredNorm();
    gradient.tail(n) = -w;

    if (!vertices_.empty()) {
        const auto amp = expansion_.amplitudes(std::exp(log_eta), std::exp(log_ell));
        const Eigen::VectorXd z = amp.value.cwiseProduct(w);
        const Eigen::VectorXd f = phi_ * z;
        Eigen::VectorXd r;
        lp += bernoulli_logit_log_likelihood(f, labels_, r);
        const Eigen::VectorXd u = phi_.transpose() * r;  // dL/dz
        gradient.tail(n) += amp.value.cwiseProduct(u);
        gradient(0) += r.dot(f);
        gradient(1) += u.dot(amp.dlog_ell.cwiseProduct(w));
    }
    if (!std::isfinite(lp) || !gradient.allFinite()) {
        return neg_inf;
    }
    return lp;
}

std::vector<std::string> SingleFidelityLatent::parameter_names() const {
    std::vector<std::string> names{"eta", "ell"};
    for (std::size_t i = 0; i < n_lat_; ++i) names.push_back("w[" + std::to_string(i) + "]");
    return names;
}

Eigen::VectorXd SingleFidelityLatent::constrain(const Eigen::VectorXd& q) const {
    Eigen::VectorXd out = q;
    out(0) = std::exp(q(0));
    out(1) = std::exp(q(1));
    return out;
}

KernelParams SingleFidelityLatent::kernel_params(const Eigen::VectorXd& q) const {
    return {std::exp(q(0)), std::exp(q(1)), spec_.nu, spec_.dim};
}

Eigen::VectorXd SingleFidelityLatent::latent_values(const Eigen::VectorXd& q, std::span<const VertexId> at) const {
    const auto amp = expansion_.amplitudes(std::exp(q(0)), std::exp(q(1)));
    const Eigen::VectorXd z = amp.value.cwiseProduct(q.tail(static_cast<Eigen::Index>(n_lat_)));
    return basis_->rows(at, n_lat_) * z;
}

Eigen::VectorXd SingleFidelityLatent::training_latent(const Eigen::VectorXd& q) const {
    const auto amp = expansion_.amplitudes(std::exp(q(0)), std::exp(q(1)));
    return phi_ * amp.value.cwiseProduct(q.tail(static_cast<Eigen::Index>(n_lat_)));
}

// ---------------------------------------------------------------------------

MultiFidelityLatent::MultiFidelityLatent(std::shared_ptr<const SpectralBasis> basis, std::vector<VertexId> low_vertices,
                                         std::vector<int> low_labels, std::vector<VertexId> high_vertices,
                                         std::vector<int> high_labels, PriorSpec priors, LatentSpec spec)
    : basis_(std::move(basis)), low_vertices_(std::move(low_vertices)), high_vertices_(std::move(high_vertices)),
      low_labels_(std::move(low_labels)), high_labels_(std::move(high_labels)), priors_(priors), spec_(spec),
      n_lat_(std::min(spec.n_lat, basis_ ? basis_->n_eig() : 0)), expansion_(*basis_, n_lat_, spec) {
    priors_.validate();
    check_labels(low_vertices_, low_labels_, basis_->vertex_count());
    check_labels(high_vertices_, high_labels_, basis_->vertex_count());
    phi_low_ = basis_->rows(low_vertices_, n_lat_);
    phi_high_ = basis_->rows(high_vertices_, n_lat_);
}

double MultiFidelityLatent::log_density(const Eigen::VectorXd& q, Eigen::VectorXd& gradient) const {
    check_finite(q, dimension());
    const auto n = static_cast<Eigen::Index>(n_lat_);
    gradient.setZero(q.size());
    const double rho = q(4);
    const auto w_low = q.segment(5, n);
    const auto w_delta = q.segment(5 + n, n);

    double lp = hyper_log_prior(priors_, q(0), q(1), gradient(0), gradient(1));
    lp += hyper_log_prior(priors_, q(2), q(3), gradient(2), gradient(3));
    lp += priors_.rho.log_density(rho);
    gradient(4) = -(rho - priors_.rho.mean) / (priors_.rho.scale * priors_.rho.scale);
    lp -= 0.5 * (w_low.squaredNorm() + w_delta.squaredNorm());
    gradient.segment(5, n) = -w_low;
    gradient.segment(5 + n, n) = -w_delta;

    const auto amp_low = expansion_.amplitudes(std::exp(q(0)), std::exp(q(1)));
    const auto amp_high = expansion_.amplitudes(std::exp(q(2)), std::exp(q(3)));
    const Eigen::VectorXd z_low = amp_low.value.cwiseProduct(w_low);
    const Eigen::VectorXd z_delta = amp_high.value.cwiseProduct(w_delta);

    Eigen::VectorXd u_low = Eigen::VectorXd::Zero(n);    // dL/dz_low
    Eigen::VectorXd u_delta = Eigen::VectorXd::Zero(n);  // dL/dz_delta
    if (!low_vertices_.empty()) {
        const Eigen::VectorXd f_low = phi_low_ * z_low;
        Eigen::VectorXd r;
        lp += bernoulli_logit_log_likelihood(f_low, low_labels_, r);
        u_low += phi_low_.transpose() * r;
    }
    if (!high_vertices_.empty()) {
        const Eigen::VectorXd fl_at_high = phi_high_ * z_low;
        const Eigen::VectorXd delta = phi_high_ * z_delta;
        const Eigen::VectorXd f_high = rho * fl_at_high + delta;
        Eigen::VectorXd r;
        lp += bernoulli_logit_log_likelihood(f_high, high_labels_, r);
        const Eigen::VectorXd back = phi_high_.transpose() * r;
        u_low += rho * back;
        u_delta += back;
        gradient(4) += r.dot(fl_at_high);
    }
    gradient.segment(5, n) += amp_low.value.cwiseProduct(u_low);
    gradient.segment(5 + n, n) += amp_high.value.cwiseProduct(u_delta);
    gradient(0) += u_low.dot(z_low);
    gradient(1) += u_low.dot(amp_low.dlog_ell.cwiseProduct(w_low));
    gradient(2) += u_delta.dot(z_delta);
    gradient(3) += u_delta.dot(amp_high.dlog_ell.cwiseProduct(w_delta));

    if (!std::isfinite(lp) || !gradient.allFinite()) {
        return neg_inf;
    }
    return lp;
}

std::vector<std::string> MultiFidelityLatent::parameter_names() const {
    std::vector<std::string> names{"eta_L", "ell_L", "eta_H", "ell_H", "rho"};
    for (std::size_t i = 0; i < n_lat_; ++i) names.push_back("w_L[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < n_lat_; ++i) names.push_back("w_delta[" + std::to_string(i) + "]");
    return names;
}

Eigen::VectorXd MultiFidelityLatent::constrain(const Eigen::VectorXd& q) const {
    Eigen::VectorXd out = q;
    for (int i = 0; i < 4; ++i) out(i) = std::exp(q(i));
    return out;
}

KernelParams MultiFidelityLatent::low_params(const Eigen::VectorXd& q) const {
    return {std::exp(q(0)), std::exp(q(1)), spec_.nu, spec_.dim};
}

KernelParams MultiFidelityLatent::high_params(const Eigen::VectorXd& q) const {
    return {std::exp(q(2)), std::exp(q(3)), spec_.nu, spec_.dim};
}

Eigen::VectorXd MultiFidelityLatent::low_latent(const Eigen::VectorXd& q, std::span<const VertexId> at) const {
    const auto n = static_cast<Eigen::Index>(n_lat_);
    const auto amp = expansion_.amplitudes(std::exp(q(0)), std::exp(q(1)));
    return basis_->rows(at, n_lat_) * amp.value.cwiseProduct(q.segment(5, n));
}

Eigen::VectorXd MultiFidelityLatent::discrepancy_latent(const Eigen::VectorXd& q, std::span<const VertexId> at) const {
    const auto n = static_cast<Eigen::Index>(n_lat_);
    const auto amp = expansion_.amplitudes(std::exp(q(2)), std::exp(q(3)));
    return basis_->rows(at, n_lat_) * amp.value.cwiseProduct(q.segment(5 + n, n));
}

} // namespace mgpc
