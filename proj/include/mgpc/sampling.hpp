#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgpc/dataset.hpp"
#include "mgpc/gpc.hpp"
#include "mgpc/mesh.hpp"

namespace mgpc {

/// Greedy max-min design: a seeded uniform first vertex, then repeatedly the
/// vertex farthest (ties: lowest id) from everything already chosen.
std::vector<VertexId> farthest_point_design(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed,
                                            const DistanceProvider& distances);
std::vector<VertexId> farthest_point_design(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// argmin |mu| / sqrt(var) over the field's vertices, skipping labeled and
/// (optionally) boundary vertices; ties go to the lowest vertex id.
VertexId acquire_next(const ClassProbabilityField& field, const TriangleMesh& mesh, bool exclude_boundary = true,
                      std::span<const VertexId> labeled = {});

/// Label provider keyed by vertex id.
class LabelOracle {
public:
    virtual ~LabelOracle() = default;
    virtual int label(VertexId v) const = 0;
    virtual std::string description() const = 0;
};

/// Lookup into a full per-vertex label vector (e.g. a thresholded synthetic field).
class VectorOracle final : public LabelOracle {
public:
    VectorOracle(std::vector<int> labels, std::string description);
    int label(VertexId v) const override;
    std::string description() const override { return description_; }

private:
    std::vector<int> labels_;
    std::string description_;
};

/// Lookup into precomputed labels from a dataset CSV (high-fidelity entries);
/// a vertex without a label is an oracle error.
class FileOracle final : public LabelOracle {
public:
    explicit FileOracle(const std::filesystem::path& path);
    int label(VertexId v) const override;
    std::string description() const override { return "file:" + path_; }

private:
    std::map<VertexId, int> labels_;
    std::string path_;
};

struct ActiveLearningConfig {
    /// Settings of the classifier trained on the full budget.
    GpcConfig gpc;
    /// Optional cheaper settings for the intermediate retrains that only drive acquisition.
    std::optional<GpcConfig> acquisition_gpc;
    bool exclude_boundary = true;
};

/// Called after each (re)training with the current dataset and classifier.
using ActiveLearningObserver = std::function<void(const LabeledDataset&, const TrainedClassifier&)>;

struct ActiveLearningResult {
    LabeledDataset data;
    std::optional<TrainedClassifier> classifier;
    std::vector<VertexId> acquired;
    /// Set when the oracle failed; data holds the labels collected so far.
    std::string error;
};

/// Train on the initial labels, then acquire, query and retrain from scratch
/// until `budget` labels are held.
ActiveLearningResult active_learning_loop(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                                          const LabelOracle& oracle, std::span<const VertexId> init, std::size_t budget,
                                          const PriorSpec& priors, std::uint64_t seed,
                                          const ActiveLearningConfig& config = {},
                                          const ActiveLearningObserver& observer = {});

} // namespace mgpc
