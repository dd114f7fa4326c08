#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "mgpc/geodesic.hpp"
#include "mgpc/inference.hpp"
#include "mgpc/laplace.hpp"
#include "mgpc/mesh.hpp"
#include "mgpc/meshgen.hpp"

namespace testing {

/// Full spectrum of a small mesh.
inline std::shared_ptr<const mgpc::SpectralBasis> full_basis(const mgpc::TriangleMesh& mesh) {
    const auto ops = mgpc::assemble_operators(mesh);
    mgpc::EigenSolverOptions opt;
    opt.method = mgpc::EigenMethod::dense;
    return std::make_shared<const mgpc::SpectralBasis>(mgpc::solve_spectrum(ops, mesh.vertex_count(), opt));
}

inline std::shared_ptr<const mgpc::SpectralBasis> basis_of(const mgpc::TriangleMesh& mesh, std::size_t n) {
    const auto ops = mgpc::assemble_operators(mesh);
    return std::make_shared<const mgpc::SpectralBasis>(mgpc::solve_spectrum(ops, n));
}

/// Normalized 4x3 grid: 12 vertices, small enough for dense oracles.
inline mgpc::TriangleMesh tiny_mesh() { return mgpc::normalize_coordinates(mgpc::meshgen::rectangle(4, 3, 3.0, 2.0)); }

/// Central finite-difference gradient.
inline Eigen::VectorXd numeric_gradient(const mgpc::LogDensityModel& model, const Eigen::VectorXd& q, double h = 1e-6) {
    Eigen::VectorXd g(q.size()), scratch;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        Eigen::VectorXd a = q, b = q;
        a(i) += h;
        b(i) -= h;
        g(i) = (model.log_density(a, scratch) - model.log_density(b, scratch)) / (2.0 * h);
    }
    return g;
}

/// Max over entries of |a - b| / max(1, |b|).
inline double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(1.0, std::abs(b(i))));
    }
    return worst;
}

inline double min_eigenvalue(const Eigen::MatrixXd& k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Exact provider from a heat solver, for tests that need many distance fields.
inline mgpc::DistanceProvider heat_provider(const mgpc::TriangleMesh& mesh) {
    return mgpc::heat_distance_provider(std::make_shared<const mgpc::HeatGeodesicSolver>(mesh));
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mgpc_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing

#include "mgpc/error.hpp"

/// Asserts that `expr` throws mgpc::Error with the given code.
#define CHECK_MGPC_ERROR(expr, expected)                                   \
    do {                                                                   \
        bool thrown_ = false;                                              \
        try {                                                              \
            (void)(expr);                                                  \
        } catch (const mgpc::Error& e_) {                                  \
            thrown_ = true;                                                \
            CHECK_MESSAGE(e_.code() == (expected), e_.what());             \
        }                                                                  \
        CHECK_MESSAGE(thrown_, "expected an mgpc::Error from " #expr);     \
    } while (0)
