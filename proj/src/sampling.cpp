#include "mgpc/sampling.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "mgpc/error.hpp"
#include "mgpc/geodesic.hpp"
#include "mgpc/random.hpp"

namespace mgpc {

std::vector<VertexId> farthest_point_design(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed,
                                            const DistanceProvider& distances) {
    const std::size_t nv = mesh.vertex_count();
    if (n == 0 || n > nv) {
        fail(ErrorCode::argument, "design size must be in [1, " + std::to_string(nv) + "], got " + std::to_string(n));
    }
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, nv - 1);
    std::vector<VertexId> design{pick(rng)};
    std::vector<double> min_dist = distances(design[0]);
    std::vector<bool> chosen(nv, false);
    chosen[design[0]] = true;
    while (design.size() < n) {
        VertexId next = nv;
        double best = -1.0;
        for (VertexId v = 0; v < nv; ++v) {
            if (!chosen[v] && min_dist[v] > best) {
                best = min_dist[v];
                next = v;
            }
        }
        design.push_back(next);
        chosen[next] = true;
        if (design.size() == n) break;
        const auto d = distances(next);
        for (VertexId v = 0; v < nv; ++v) min_dist[v] = std::min(min_dist[v], d[v]);
    }
    return design;
}

std::vector<VertexId> farthest_point_design(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    auto solver = std::make_shared<const HeatGeodesicSolver>(mesh);
    return farthest_point_design(mesh, n, seed, [&](VertexId v) { return solver->solve(v).distances; });
}

VertexId acquire_next(const ClassProbabilityField& field, const TriangleMesh& mesh, bool exclude_boundary,
                      std::span<const VertexId> labeled) {
    const std::set<VertexId> taken(labeled.begin(), labeled.end());
    VertexId best_v = std::numeric_limits<VertexId>::max();
    double best = std::numeric_limits<double>::infinity();
    std::size_t skipped = 0;
    bool any = false;
    for (std::size_t k = 0; k < field.size(); ++k) {
        const VertexId v = field.vertices[k];
        if (v >= mesh.vertex_count()) fail(ErrorCode::argument, "field vertex out of range");
        if (taken.count(v) || (exclude_boundary && mesh.boundary_mask()[v])) continue;
        const auto kk = static_cast<Eigen::Index>(k);
        const double var = field.variance(kk);
        if (!(var > 0.0)) {
            ++skipped;
            continue;
        }
        const double score = std::abs(field.mean(kk)) / std::sqrt(var);
        if (score < best || (score == best && v < best_v)) {
            best = score;
            best_v = v;
            any = true;
        }
    }
    if (skipped > 0) spdlog::warn("acquisition skipped {} candidates with non-positive variance", skipped);
    if (!any) fail(ErrorCode::numerical, "no acquisition candidate with positive predictive variance");
    return best_v;
}

VectorOracle::VectorOracle(std::vector<int> labels, std::string description)
    : labels_(std::move(labels)), description_(std::move(description)) {}

int VectorOracle::label(VertexId v) const {
    if (v >= labels_.size()) fail(ErrorCode::oracle, "oracle has no label for vertex " + std::to_string(v));
    return labels_[v];
}

FileOracle::FileOracle(const std::filesystem::path& path) : path_(path.string()) {
    const auto data = read_dataset_csv(path);
    for (const auto& e : data.entries) {
        if (e.fidelity != Fidelity::high) continue;
        if (e.label != 0 && e.label != 1) fail(ErrorCode::format, path_ + ": labels must be 0 or 1");
        if (!labels_.emplace(e.vertex, e.label).second) {
            fail(ErrorCode::validation, path_ + ": duplicate label for vertex " + std::to_string(e.vertex));
        }
    }
}

int FileOracle::label(VertexId v) const {
    auto it = labels_.find(v);
    if (it == labels_.end()) fail(ErrorCode::oracle, path_ + " has no label for vertex " + std::to_string(v));
    return it->second;
}

ActiveLearningResult active_learning_loop(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                                          const LabelOracle& oracle, std::span<const VertexId> init, std::size_t budget,
                                          const PriorSpec& priors, std::uint64_t seed,
                                          const ActiveLearningConfig& config, const ActiveLearningObserver& observer) {
    if (init.empty()) fail(ErrorCode::argument, "active learning needs a non-empty initial design");
    if (budget < init.size()) fail(ErrorCode::argument, "budget is smaller than the initial design");
    if (budget > mesh.vertex_count()) fail(ErrorCode::argument, "budget exceeds the vertex count");

    ActiveLearningResult result;
    result.data.provenance = "active:" + oracle.description();
    std::vector<bool> labeled(mesh.vertex_count(), false);
    for (auto v : init) {
        if (v >= mesh.vertex_count()) fail(ErrorCode::argument, "initial vertex " + std::to_string(v) + " out of range");
        if (labeled[v]) fail(ErrorCode::argument, "initial design repeats vertex " + std::to_string(v));
        labeled[v] = true;
        result.data.entries.push_back({v, oracle.label(v), Fidelity::high});
    }

    std::uint64_t round = 0;
    const GpcConfig& first = (init.size() == budget || !config.acquisition_gpc) ? config.gpc : *config.acquisition_gpc;
    result.classifier.emplace(train(mesh, basis, result.data, priors, derive_seed(seed, round), first));
    if (observer) observer(result.data, *result.classifier);

    while (result.data.entries.size() < budget) {
        std::vector<VertexId> candidates;
        for (VertexId v = 0; v < mesh.vertex_count(); ++v) {
            if (!labeled[v] && !(config.exclude_boundary && mesh.boundary_mask()[v])) candidates.push_back(v);
        }
        if (candidates.empty()) fail(ErrorCode::numerical, "no acquisition candidates left");
        const auto field = result.classifier->predict(candidates);
        const VertexId next = acquire_next(field, mesh, config.exclude_boundary);
        int y = 0;
        try {
            y = oracle.label(next);
        } catch (const std::exception& e) {
            result.error = e.what();
            spdlog::error("active learning stopped after {} labels: {}", result.data.entries.size(), result.error);
            return result;
        }
        labeled[next] = true;
        result.acquired.push_back(next);
        result.data.entries.push_back({next, y, Fidelity::high});
        ++round;
        const bool final_round = result.data.entries.size() == budget;
        const GpcConfig& cfg = (final_round || !config.acquisition_gpc) ? config.gpc : *config.acquisition_gpc;
        result.classifier.emplace(train(mesh, basis, result.data, priors, derive_seed(seed, round), cfg));
        if (observer) observer(result.data, *result.classifier);
    }
    return result;
}

} // namespace mgpc
