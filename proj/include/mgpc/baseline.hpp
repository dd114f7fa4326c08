#pragma once

#include <span>
#include <vector>

#include "mgpc/dataset.hpp"
#include "mgpc/mesh.hpp"

namespace mgpc {

/// Label of the geodesically closest training vertex (high-fidelity entries);
/// ties go to the lowest training vertex id, and a query that is itself a
/// training vertex keeps its own label.
std::vector<int> nn_classify(const TriangleMesh& mesh, const LabeledDataset& data, std::span<const VertexId> query,
                             const DistanceProvider& distances);

/// Same, building a heat-method solver for the mesh.
std::vector<int> nn_classify(const TriangleMesh& mesh, const LabeledDataset& data, std::span<const VertexId> query);

/// Labels as a field: probability = label, mean = 2 label - 1, variance = 0.
ClassProbabilityField labels_to_field(std::span<const VertexId> query, const std::vector<int>& labels);

} // namespace mgpc
