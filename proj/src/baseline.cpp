#include "mgpc/baseline.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <string>

#include "mgpc/error.hpp"
#include "mgpc/geodesic.hpp"

namespace mgpc {

std::vector<int> nn_classify(const TriangleMesh& mesh, const LabeledDataset& data, std::span<const VertexId> query,
                             const DistanceProvider& distances) {
    data.validate(mesh.vertex_count());
    auto train_v = data.vertices(Fidelity::high);
    auto train_y = data.labels(Fidelity::high);
    if (train_v.empty()) fail(ErrorCode::argument, "nearest-neighbor classification needs at least one training point");

    // Sort by vertex id so the strict comparison below keeps the lowest id on ties.
    std::vector<std::size_t> order(train_v.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return train_v[a] < train_v[b]; });

    std::map<VertexId, int> own;
    for (std::size_t i = 0; i < train_v.size(); ++i) own[train_v[i]] = train_y[i];

    for (auto q : query) {
        if (q >= mesh.vertex_count()) fail(ErrorCode::argument, "query vertex " + std::to_string(q) + " out of range");
    }
    std::vector<double> best(query.size(), std::numeric_limits<double>::infinity());
    std::vector<int> out(query.size(), train_y[order[0]]);
    for (auto i : order) {
        const auto d = distances(train_v[i]);
        for (std::size_t k = 0; k < query.size(); ++k) {
            if (d[query[k]] < best[k]) {
                best[k] = d[query[k]];
                out[k] = train_y[i];
            }
        }
    }
    for (std::size_t k = 0; k < query.size(); ++k) {
        auto it = own.find(query[k]);
        if (it != own.end()) out[k] = it->second;
    }
    return out;
}

std::vector<int> nn_classify(const TriangleMesh& mesh, const LabeledDataset& data, std::span<const VertexId> query) {
    auto solver = std::make_shared<const HeatGeodesicSolver>(mesh);
    return nn_classify(mesh, data, query, heat_distance_provider(solver));
}

ClassProbabilityField labels_to_field(std::span<const VertexId> query, const std::vector<int>& labels) {
    if (labels.size() != query.size()) fail(ErrorCode::argument, "label count does not match query count");
    ClassProbabilityField f;
    f.vertices.assign(query.begin(), query.end());
    const auto n = static_cast<Eigen::Index>(labels.size());
    f.probability.resize(n);
    f.mean.resize(n);
    f.variance = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = labels[static_cast<std::size_t>(i)];
        f.probability(i) = y;
        f.mean(i) = 2.0 * y - 1.0;
    }
    f.samples_used = 0;
    return f;
}

} // namespace mgpc
