#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "mgpc/gpc.hpp"

namespace mgpc::detail {

/**
 * Gaussian conditioning for a covariance with a feature factorization
 * K(a, b) = F_a diag(d) F_b^T. Training values f, jitter escalated by 10x from
 * `jitter` to `max_jitter` (both multiplied by `scale`) until Cholesky succeeds.
 */
DrawPrediction condition_features(const Eigen::MatrixXd& train_features, const Eigen::VectorXd& d,
                                  const Eigen::MatrixXd& query_features, const Eigen::VectorXd& f, double scale,
                                  double jitter, double max_jitter, std::size_t draw_index);

/// Running sums of per-draw moments.
struct MomentAccumulator {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    std::size_t count = 0;

    void add(const DrawPrediction& p);
    ClassProbabilityField finish(std::span<const VertexId> query) const;
};

} // namespace mgpc::detail
