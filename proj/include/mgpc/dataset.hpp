#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mgpc/mesh.hpp"

namespace mgpc {

enum class Fidelity { low, high };

const char* to_string(Fidelity fidelity) noexcept;
Fidelity fidelity_from_string(const std::string& text);

struct LabeledEntry {
    VertexId vertex = 0;
    int label = 0;
    Fidelity fidelity = Fidelity::high;
};

/// Labeled vertices of one or both fidelity levels.
struct LabeledDataset {
    std::vector<LabeledEntry> entries;
    std::string provenance;

    /// Labels binary, vertices below vertex_count, no repeated (vertex, fidelity).
    void validate(std::size_t vertex_count) const;

    std::size_t count(Fidelity fidelity) const;
    std::vector<VertexId> vertices(Fidelity fidelity) const;
    std::vector<int> labels(Fidelity fidelity) const;

    static LabeledDataset from_labels(const std::vector<VertexId>& vertices, const std::vector<int>& labels,
                                      Fidelity fidelity, std::string provenance = {});
};

/// CSV with header `vertex_id,label,fidelity`; an optional leading `# provenance: ...` line is kept.
LabeledDataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data);

/// Predictive summary at a set of vertices.
struct ClassProbabilityField {
    std::vector<VertexId> vertices;
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Eigen::VectorXd probability;
    std::size_t samples_used = 0;

    std::size_t size() const noexcept { return vertices.size(); }
};

/// PLY needs a field over every vertex in order; properties prob, mu, var.
void write_field_ply(const std::filesystem::path& path, const TriangleMesh& mesh, const ClassProbabilityField& field);
/// CSV mirror: vertex_id,prob,mu,var.
void write_field_csv(const std::filesystem::path& path, const ClassProbabilityField& field);
/// Field from a PLY written by write_field_ply; mu/var missing are reported as zero.
ClassProbabilityField read_field_ply(const std::filesystem::path& path, TriangleMesh* mesh = nullptr);

/// Per-vertex scalars from a CSV with header `vertex_id,<name>`; every vertex must appear once.
std::vector<double> read_vertex_scalars_csv(const std::filesystem::path& path, std::size_t vertex_count);

/// Vertex ids from a CSV whose first column is `vertex_id`, in file order.
std::vector<VertexId> read_vertex_list_csv(const std::filesystem::path& path);
void write_vertex_list_csv(const std::filesystem::path& path, const std::vector<VertexId>& vertices);

} // namespace mgpc
