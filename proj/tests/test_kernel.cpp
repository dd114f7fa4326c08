#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include "mgpc/kernel.hpp"
#include "mgpc/meshgen.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

/// Brute-force double loop over vertices and modes.
double oracle_constant(const SpectralBasis& b, const KernelParams& p) {
    const auto& m = b.mass_diagonal();
    double num = 0.0, den = 0.0;
    for (std::size_t v = 0; v < b.vertex_count(); ++v) {
        double diag = 0.0;
        for (std::size_t i = 0; i < b.n_eig(); ++i) {
            const double s = std::pow(1.0 / (p.ell * p.ell) + b.eigenvalues()(static_cast<Eigen::Index>(i)),
                                      -p.nu - p.dim / 2.0);
            const double psi = b.eigenvectors()(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(i));
            diag += s * psi * psi;
        }
        num += m(static_cast<Eigen::Index>(v)) * diag;
        den += m(static_cast<Eigen::Index>(v));
    }
    return num / den;
}

double oracle_kernel(const SpectralBasis& b, const KernelParams& p, VertexId x, VertexId y) {
    double k = 0.0;
    for (std::size_t i = 0; i < b.n_eig(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        k += std::pow(1.0 / (p.ell * p.ell) + b.eigenvalues()(ii), -p.nu - p.dim / 2.0) *
             b.eigenvectors()(static_cast<Eigen::Index>(x), ii) * b.eigenvectors()(static_cast<Eigen::Index>(y), ii);
    }
    return p.eta * p.eta * k / oracle_constant(b, p);
}

} // namespace

TEST_CASE("Euclidean Matern closed forms") {
    const Eigen::Vector3d o(0, 0, 0), x(1, 0, 0);
    CHECK(matern_euclidean(o, o, {2.0, 0.7, 1.5, 2}) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(matern_euclidean(o, x, {1.0, 1.0, 0.5, 2}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(matern_euclidean(o, x, {1.0, 1.0, 1.5, 2}) ==
          doctest::Approx((1 + std::sqrt(3.0)) * std::exp(-std::sqrt(3.0))).epsilon(1e-12));
    CHECK(matern_euclidean(o, x, {1.0, 1.0, 2.5, 2}) ==
          doctest::Approx((1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0))).epsilon(1e-12));
    // Continuity at r -> 0.
    CHECK(matern_euclidean(o, Eigen::Vector3d(1e-9, 0, 0), {1.0, 1.0, 1.3, 2}) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("normalization constant and brute-force oracle") {
    const auto mesh = testing::tiny_mesh();
    const auto basis = testing::full_basis(mesh);
    const SpectralMatern k(basis);
    for (double ell : {0.3, 1.0}) {
        const KernelParams p{1.7, ell, 1.5, 2};
        CHECK(k.normalization(p) == doctest::Approx(oracle_constant(*basis, p)).epsilon(1e-12));
        const std::vector<double> areas(mesh.vertex_areas());
        CHECK(normalization_constant(*basis, p, areas) == doctest::Approx(oracle_constant(*basis, p)).epsilon(1e-12));
        for (VertexId i = 0; i < mesh.vertex_count(); ++i) {
            for (VertexId j = 0; j < mesh.vertex_count(); ++j) {
                CHECK(std::abs(k(i, j, p) - oracle_kernel(*basis, p, i, j)) < 1e-12);
            }
        }
        // Area-weighted mean diagonal is eta^2.
        double mean = 0.0;
        for (VertexId i = 0; i < mesh.vertex_count(); ++i) mean += mesh.vertex_areas()[i] * k(i, i, p);
        CHECK(mean / mesh.total_area() == doctest::Approx(p.eta * p.eta).epsilon(1e-10));
    }
}

TEST_CASE("eta scaling, symmetry and positivity") {
    const auto mesh = normalize_coordinates(meshgen::icosphere(3));
    const auto basis = testing::basis_of(mesh, 100);
    const SpectralMatern k(basis);
    const KernelParams p{1.0, 0.5, 1.5, 2}, p2{2.0, 0.5, 1.5, 2};
    CHECK(k.normalization(p) == k.normalization(p2));
    for (VertexId i : {0u, 7u, 100u}) {
        CHECK(k(i, i, p) > 0.0);
        for (VertexId j : {3u, 50u}) {
            CHECK(k(i, j, p) == k(j, i, p));
            CHECK(k(i, j, p2) == doctest::Approx(4.0 * k(i, j, p)).epsilon(1e-14));
        }
    }
    const std::vector<VertexId> one{5};
    CHECK(k.gram(one, one, p)(0, 0) == k(5, 5, p));
}

TEST_CASE("grams are PSD and rank-limited") {
    const auto mesh = normalize_coordinates(meshgen::demo_surface(8));
    const auto basis = testing::basis_of(mesh, 150);
    const SpectralMatern k(basis);
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<VertexId> idx(mesh.vertex_count());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(50);
        const KernelParams p{1.0, 0.2 + 0.1 * rep, 1.5, 2};
        const Eigen::MatrixXd g = k.gram(idx, idx, p);
        CHECK(testing::min_eigenvalue(g) >= -1e-8 * g.trace() / 50.0);
        CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
    const auto tiny = testing::tiny_mesh();
    const auto tb = std::make_shared<const SpectralBasis>(testing::full_basis(tiny)->truncated(5));
    std::vector<VertexId> all(tiny.vertex_count());
    std::iota(all.begin(), all.end(), 0);
    const Eigen::MatrixXd g = SpectralMatern(tb).gram(all, all, {1.0, 1.0, 1.5, 2});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    int rank = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rank += es.eigenvalues()(i) > 1e-10 * g.trace();
    CHECK(rank <= 5);
}

TEST_CASE("sphere kernel depends on geodesic distance only") {
    const auto mesh = meshgen::icosphere(4);
    const auto basis = testing::basis_of(mesh, 400);
    const SpectralMatern k(basis);
    const KernelParams p{1.0, 0.5, 1.5, 2};
    // Pairs at equal great-circle angle: pick pairs whose dot product matches pair (0, j*).
    const auto& v = mesh.vertices();
    const double target = v[0].dot(v[mesh.neighbors()[0][0]]);
    std::vector<std::pair<VertexId, VertexId>> pairs;
    for (VertexId a = 0; a < mesh.vertex_count() && pairs.size() < 20; a += 37) {
        for (VertexId b : mesh.neighbors()[a]) {
            if (std::abs(v[a].dot(v[b]) - target) < 1e-4) pairs.emplace_back(a, b);
        }
    }
    REQUIRE(pairs.size() >= 3);
    const double ref = k(pairs[0].first, pairs[0].second, p);
    for (auto [a, b] : pairs) CHECK(std::abs(k(a, b, p) - ref) < 0.02 * std::abs(ref));
}

TEST_CASE("correlation grows with ell and truncation converges") {
    const auto mesh = meshgen::icosphere(4);
    const auto basis = testing::basis_of(mesh, 400);
    const VertexId a = 0, b = mesh.neighbors()[0][0];
    double prev = -1.0;
    for (double ell : {0.1, 0.2, 0.4, 0.8, 1.6}) {
        const SpectralMatern k(basis);
        const KernelParams p{1.0, ell, 1.5, 2};
        const double r = k(a, b, p) / k(a, a, p);
        CHECK(r >= prev);
        prev = r;
    }
    const KernelParams p{1.0, 0.3, 1.5, 2};
    double last = 1e300;
    for (std::size_t n : {100, 200}) {
        const SpectralMatern k1(std::make_shared<const SpectralBasis>(basis->truncated(n)));
        const SpectralMatern k2(std::make_shared<const SpectralBasis>(basis->truncated(2 * n)));
        const double d = std::abs(k1(a, b, p) - k2(a, b, p)) + std::abs(k1(a, a, p) - k2(a, a, p));
        CHECK(d < last);
        last = d;
    }
}

TEST_CASE("kappa conventions") {
    const KernelParams p{1.0, 0.5, 1.5, 2};
    CHECK(spectral_shift(p, KappaConvention::inverse_square) == doctest::Approx(4.0));
    CHECK(spectral_shift(p, KappaConvention::spde) == doctest::Approx(12.0));
    CHECK_MGPC_ERROR(KernelParams({0.0, 1.0, 1.5, 2}).validate(), ErrorCode::argument);
}
