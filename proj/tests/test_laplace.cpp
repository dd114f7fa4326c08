#include <doctest.h>

#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "mgpc/laplace.hpp"
#include "mgpc/meshgen.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

std::vector<double> sphere_errors(const SpectralBasis& b) {
    std::vector<double> err;
    int l = 1, left = 3;
    for (std::size_t i = 1; i <= 10; ++i) {
        const double exact = l * (l + 1.0);
        err.push_back(std::abs(b.eigenvalues()(static_cast<Eigen::Index>(i)) - exact) / exact);
        if (--left == 0) {
            ++l;
            left = 2 * l + 1;
        }
    }
    return err;
}

} // namespace

TEST_CASE("operator assembly") {
    const auto m = meshgen::demo_surface(8);
    for (auto kind : {MassKind::lumped, MassKind::consistent}) {
        const auto ops = assemble_operators(m, kind);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.vertex_count()));
        CHECK((ops.stiffness * ones).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(ones.dot(ops.mass * ones) - m.total_area()) < 1e-10 * m.total_area());
        const SparseMatrix at = ops.stiffness.transpose();
        CHECK((SparseMatrix(ops.stiffness - at)).norm() < 1e-12);
    }
    const auto tri = TriangleMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {Triangle{0, 1, 2}});
    const auto ops = assemble_operators(tri, MassKind::lumped);
    for (int i = 0; i < 3; ++i) CHECK(ops.mass.coeff(i, i) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    // Cotangent weights of the right triangle: 1/2 cot(45 deg) on the legs, 0 on the hypotenuse.
    CHECK(ops.stiffness.coeff(0, 1) == doctest::Approx(-0.5));
    CHECK(std::abs(ops.stiffness.coeff(1, 2)) < 1e-14);
}

TEST_CASE("sphere spectrum matches l(l+1)") {
    const auto b = solve_spectrum(assemble_operators(meshgen::icosphere(4)), 16);
    CHECK(std::abs(b.eigenvalues()(0)) <= 1e-8 * b.eigenvalues()(1));
    for (double e : sphere_errors(b)) CHECK(e < 0.02);
    // Refinement reduces the error.
    const auto coarse = solve_spectrum(assemble_operators(meshgen::icosphere(3)), 16);
    const auto ec = sphere_errors(coarse), ef = sphere_errors(b);
    double sc = 0, sf = 0;
    for (std::size_t i = 0; i < ec.size(); ++i) {
        sc += ec[i];
        sf += ef[i];
    }
    CHECK(sf < sc);
}

TEST_CASE("basis invariants: orthonormality, sorting, residuals, constant mode") {
    const auto m = meshgen::demo_surface(8);
    const auto ops = assemble_operators(m);
    const auto b = solve_spectrum(ops, 40);
    const Eigen::MatrixXd& v = b.eigenvectors();
    const Eigen::MatrixXd gram = v.transpose() * ops.mass * v;
    CHECK((gram - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index i = 1; i < 40; ++i) CHECK(b.eigenvalues()(i) >= b.eigenvalues()(i - 1));
    CHECK(max_relative_residual(ops, b) < 1e-8);
    CHECK(std::abs(b.eigenvalues()(0)) <= 1e-8 * b.eigenvalues()(1));
    const Eigen::VectorXd c = v.col(0);
    CHECK((c.array() - c.mean()).abs().maxCoeff() < 1e-8);
    // Sign convention: the largest-magnitude entry is positive.
    for (Eigen::Index j = 0; j < 40; ++j) {
        Eigen::Index k = 0;
        v.col(j).cwiseAbs().maxCoeff(&k);
        CHECK(v(k, j) > 0.0);
    }
}

TEST_CASE("full spectrum of a tiny mesh matches a dense generalized eigensolve") {
    const auto m = meshgen::rectangle(6, 5, 1.5, 1.0);
    for (auto kind : {MassKind::lumped, MassKind::consistent}) {
        const auto ops = assemble_operators(m, kind);
        const auto b = solve_spectrum(ops, m.vertex_count());
        const Eigen::MatrixXd a = Eigen::MatrixXd(ops.stiffness);
        const Eigen::MatrixXd mm = Eigen::MatrixXd(ops.mass);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, mm);
        CHECK((b.eigenvalues() - es.eigenvalues()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("Lanczos and dense solvers agree") {
    const auto m = meshgen::demo_surface(8);
    const auto ops = assemble_operators(m);
    EigenSolverOptions dense, lanczos;
    dense.method = EigenMethod::dense;
    lanczos.method = EigenMethod::lanczos;
    const auto a = solve_spectrum(ops, 30, dense);
    const auto b = solve_spectrum(ops, 30, lanczos);
    for (Eigen::Index i = 0; i < 30; ++i) {
        CHECK(std::abs(a.eigenvalues()(i) - b.eigenvalues()(i)) <= 1e-8 * std::max(1.0, a.eigenvalues()(i)));
    }
    CHECK(max_relative_residual(ops, b) < 1e-8);
    // Eigenvectors of simple eigenvalues agree including sign.
    for (Eigen::Index i = 1; i < 30; ++i) {
        const double gap_lo = a.eigenvalues()(i) - a.eigenvalues()(i - 1);
        const double gap_hi = i + 1 < 30 ? a.eigenvalues()(i + 1) - a.eigenvalues()(i) : 1.0;
        if (std::min(gap_lo, gap_hi) > 1e-3 * a.eigenvalues()(i)) {
            CHECK((a.eigenvectors().col(i) - b.eigenvectors().col(i)).cwiseAbs().maxCoeff() < 1e-5);
        }
    }
}

TEST_CASE("eigenvalues are invariant under rigid motion") {
    const auto m = meshgen::demo_surface(8);
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
    std::vector<Eigen::Vector3d> moved;
    for (const auto& v : m.vertices()) moved.push_back(r * v + Eigen::Vector3d(5, -2, 1));
    const auto a = solve_spectrum(assemble_operators(m), 20);
    const auto b = solve_spectrum(assemble_operators(TriangleMesh(moved, m.triangles())), 20);
    CHECK((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("basis cache round trip and determinism") {
    const auto m = meshgen::icosphere(2);
    const auto b = solve_spectrum(assemble_operators(m), 25);
    const auto dir = testing::scratch_dir("basis");
    save_basis(dir / "a.eig", b);
    save_basis(dir / "b.eig", solve_spectrum(assemble_operators(m), 25));
    std::ifstream fa(dir / "a.eig", std::ios::binary), fb(dir / "b.eig", std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa == sb);
    CHECK(sa.substr(0, 9) == "MGPC-EIG1");
    const auto back = load_basis(dir / "a.eig");
    CHECK(back.eigenvalues() == b.eigenvalues());
    CHECK(back.eigenvectors() == b.eigenvectors());
    CHECK(back.mass_diagonal() == b.mass_diagonal());

    std::ofstream(dir / "bad.eig", std::ios::binary) << "MGPC-EIG2xxxxxxxxxxxxxxxx";
    CHECK_MGPC_ERROR(load_basis(dir / "bad.eig"), ErrorCode::format);
    std::ofstream(dir / "short.eig", std::ios::binary) << sa.substr(0, sa.size() - 8);
    CHECK_MGPC_ERROR(load_basis(dir / "short.eig"), ErrorCode::format);
    CHECK_MGPC_ERROR(solve_spectrum(assemble_operators(m), m.vertex_count() + 1), ErrorCode::argument);
}

TEST_CASE("truncation keeps leading modes") {
    const auto m = meshgen::icosphere(2);
    const auto b = solve_spectrum(assemble_operators(m), 25);
    const auto t = b.truncated(10);
    CHECK(t.n_eig() == 10);
    CHECK(t.eigenvalues() == b.eigenvalues().head(10));
    CHECK(t.eigenvectors() == b.eigenvectors().leftCols(10));
    CHECK_MGPC_ERROR(b.truncated(26), ErrorCode::argument);
}
