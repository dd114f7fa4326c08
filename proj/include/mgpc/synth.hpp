#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mgpc/kernel.hpp"

namespace mgpc {

/// One draw of the spectral Matern prior over every basis vertex,
/// f = sum_i sqrt(eta^2 s_i / C) w_i psi_i with w ~ N(0, I) from `seed`.
Eigen::VectorXd sample_prior_field(const SpectralBasis& basis, const KernelParams& params, std::uint64_t seed,
                                   KappaConvention convention = KappaConvention::inverse_square);

/// round(sigmoid(f)): 1 where f >= 0.
std::vector<int> field_to_labels(const Eigen::VectorXd& field);

struct LowFidelityCorruption {
    double ell_noise = 0.2;
    double agreement_target = 0.85;
    double tolerance = 0.02;
    double nu = 1.5;
    KappaConvention convention = KappaConvention::inverse_square;
};

struct LowFidelityLabels {
    std::vector<int> labels;
    double amplitude = 0.0;
    double agreement = 1.0;  ///< area-weighted agreement with the high labels
};

/// Area-weighted fraction of vertices where the two label fields agree.
double label_agreement(const std::vector<int>& a, const std::vector<int>& b, const Eigen::VectorXd& areas);

/// Labels of high_field + a * noise, with a found by bisection so the
/// agreement lies within the tolerance of the target.
LowFidelityLabels make_low_fidelity(const Eigen::VectorXd& high_field, const SpectralBasis& basis,
                                    const LowFidelityCorruption& corruption, std::uint64_t seed);

} // namespace mgpc
