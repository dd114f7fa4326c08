#include "mgpc/synth.hpp"

#include <cmath>
#include <memory>
#include <random>

#include "mgpc/error.hpp"
#include "mgpc/random.hpp"

namespace mgpc {

Eigen::VectorXd sample_prior_field(const SpectralBasis& basis, const KernelParams& params, std::uint64_t seed,
                                   KappaConvention convention) {
    params.validate();
    const Eigen::VectorXd s = spectral_weights(basis.eigenvalues(), params, convention);
    const double c = (s.array() * basis.mode_mean_square().array()).sum();
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd w(static_cast<Eigen::Index>(basis.n_eig()));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = normal(rng);
    const Eigen::VectorXd amp = (params.eta / std::sqrt(c)) * s.array().sqrt();
    return basis.eigenvectors() * amp.cwiseProduct(w);
}

std::vector<int> field_to_labels(const Eigen::VectorXd& field) {
    std::vector<int> labels(static_cast<std::size_t>(field.size()));
    for (Eigen::Index i = 0; i < field.size(); ++i) {
        if (!std::isfinite(field(i))) fail(ErrorCode::numerical, "non-finite field value at vertex " + std::to_string(i));
        labels[static_cast<std::size_t>(i)] = field(i) >= 0.0 ? 1 : 0;
    }
    return labels;
}

double label_agreement(const std::vector<int>& a, const std::vector<int>& b, const Eigen::VectorXd& areas) {
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(areas.size())) {
        fail(ErrorCode::argument, "label fields and areas differ in length");
    }
    double agree = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) agree += areas(static_cast<Eigen::Index>(i));
    }
    return agree / areas.sum();
}

LowFidelityLabels make_low_fidelity(const Eigen::VectorXd& high_field, const SpectralBasis& basis,
                                    const LowFidelityCorruption& corruption, std::uint64_t seed) {
    if (static_cast<std::size_t>(high_field.size()) != basis.vertex_count()) {
        fail(ErrorCode::argument, "field length does not match the basis vertex count");
    }
    const double target = corruption.agreement_target;
    const double tol = corruption.tolerance;
    if (!(target > 0.0 && target <= 1.0) || !(tol >= 0.0)) {
        fail(ErrorCode::calibration, "agreement target must lie in (0, 1]");
    }
    const auto high = field_to_labels(high_field);
    const Eigen::VectorXd& areas = basis.mass_diagonal();
    if (target == 1.0) return {high, 0.0, 1.0};

    const Eigen::VectorXd noise =
        sample_prior_field(basis, KernelParams{1.0, corruption.ell_noise, corruption.nu, 2}, seed, corruption.convention);
    const double scale = std::max(high_field.cwiseAbs().maxCoeff(), 1e-300);
    auto evaluate = [&](double a) {
        LowFidelityLabels r;
        r.labels = field_to_labels(high_field + a * noise);
        r.amplitude = a;
        r.agreement = label_agreement(r.labels, high, areas);
        return r;
    };

    // Agreement is non-increasing in the amplitude: each vertex flips once, when
    // a |noise| first exceeds |f| with opposing sign, and stays flipped.
    double lo = 0.0, hi = scale;
    LowFidelityLabels at_hi = evaluate(hi);
    for (int i = 0; i < 80 && at_hi.agreement > target; ++i) {
        lo = hi;
        hi *= 2.0;
        at_hi = evaluate(hi);
    }
    if (at_hi.agreement > target + tol) {
        fail(ErrorCode::calibration, "agreement target " + std::to_string(target) +
                                         " is unreachable; noise alone keeps agreement at " +
                                         std::to_string(at_hi.agreement));
    }
    LowFidelityLabels best = at_hi;
    for (int i = 0; i < 200 && std::abs(best.agreement - target) > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        LowFidelityLabels r = evaluate(mid);
        if (std::abs(r.agreement - target) < std::abs(best.agreement - target)) best = r;
        (r.agreement > target ? lo : hi) = mid;
    }
    if (std::abs(best.agreement - target) > tol) {
        fail(ErrorCode::calibration, "calibrated agreement " + std::to_string(best.agreement) + " misses target " +
                                         std::to_string(target) + " by more than " + std::to_string(tol));
    }
    return best;
}

} // namespace mgpc
