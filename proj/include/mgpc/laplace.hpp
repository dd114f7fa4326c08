#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mgpc/mesh.hpp"

namespace mgpc {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class MassKind { lumped, consistent };

struct FemOperators {
    SparseMatrix stiffness; ///< cotangent Laplacian, integral of grad N_i . grad N_j
    SparseMatrix mass;      ///< integral of N_i N_j, or its row-sum lumping
    MassKind mass_kind = MassKind::lumped;
};

FemOperators assemble_operators(const TriangleMesh& mesh, MassKind mass = MassKind::lumped);

/**
 * Truncated Laplace-Beltrami spectrum: the n_eig smallest eigenpairs of
 * A v = lambda M v (pure Neumann), M-orthonormal, sorted ascending.
 *
 * Eigenvectors are stored column-wise (vertex_count x n_eig). The
 * mass diagonal holds the lumped vertex masses (row sums of M) and is the
 * area weighting used by the kernel normalization.
 */
class SpectralBasis {
public:
    SpectralBasis() = default;
    SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors, Eigen::VectorXd mass_diagonal);

    std::size_t n_eig() const noexcept { return static_cast<std::size_t>(eigenvalues_.size()); }
    std::size_t vertex_count() const noexcept { return static_cast<std::size_t>(mass_diagonal_.size()); }

    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
    const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
    const Eigen::VectorXd& mass_diagonal() const noexcept { return mass_diagonal_; }
    double total_mass() const noexcept { return total_mass_; }

    /// Mass-weighted mean of psi_i^2 over vertices, per mode.
    const Eigen::VectorXd& mode_mean_square() const noexcept { return mode_mean_square_; }

    /// Leading n modes (n <= n_eig).
    SpectralBasis truncated(std::size_t n) const;

    /// Rows of the eigenvector matrix for the given vertices, restricted to the first `modes` columns.
    Eigen::MatrixXd rows(std::span<const VertexId> vertices, std::size_t modes) const;

private:
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    Eigen::VectorXd mass_diagonal_;
    Eigen::VectorXd mode_mean_square_;
    double total_mass_ = 0.0;
};

enum class EigenMethod { automatic, dense, lanczos };

struct EigenSolverOptions {
    EigenMethod method = EigenMethod::automatic;
    /// Above this vertex count `automatic` switches from dense LAPACK to Lanczos.
    std::size_t dense_limit = 5000;
    double shift = -1e-8;
    double tolerance = 1e-10;
    /// Block Lanczos steps; 0 means 10 * n_eig.
    std::size_t max_iterations = 0;
    std::size_t block_size = 8;
    std::uint64_t seed = 0;
};

SpectralBasis solve_spectrum(const FemOperators& operators, std::size_t n_eig,
                             const EigenSolverOptions& options = {});

/// Max over returned pairs of ||A v - lambda M v|| / ||v||.
double max_relative_residual(const FemOperators& operators, const SpectralBasis& basis);

/// Little-endian cache: "MGPC-EIG1", u64 vertices, u64 n_eig, eigenvalues,
/// eigenvectors (eigenvector-major), mass diagonal; all float64.
void save_basis(const std::filesystem::path& path, const SpectralBasis& basis);
SpectralBasis load_basis(const std::filesystem::path& path);

} // namespace mgpc
