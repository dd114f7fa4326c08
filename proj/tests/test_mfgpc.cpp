#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "mgpc/eval.hpp"
#include "mgpc/gpc.hpp"
#include "mgpc/mfgpc.hpp"
#include "mgpc/random.hpp"
#include "mgpc/sampling.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

std::vector<VertexId> all_vertices(std::size_t n) {
    std::vector<VertexId> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

Eigen::Index numeric_rank(const Eigen::MatrixXd& k) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(k);
    qr.setThreshold(1e-10);
    return qr.rank();
}

Eigen::MatrixXd random_draws(Eigen::Index rows, std::size_t n_lat, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd d(rows, 5 + 2 * static_cast<Eigen::Index>(n_lat));
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = normal(rng);
    for (Eigen::Index r = 0; r < rows; ++r) {
        d(r, 0) = 0.3 * d(r, 0);          // log eta_L
        d(r, 1) = -0.5 + 0.3 * d(r, 1);   // log ell_L
        d(r, 2) = -0.7 + 0.3 * d(r, 2);   // log eta_H
        d(r, 3) = -0.5 + 0.3 * d(r, 3);   // log ell_H
        d(r, 4) = 1.0 + 0.5 * d(r, 4);    // rho
    }
    return d;
}

GpcConfig mf_config(std::size_t n_lat) {
    GpcConfig c;
    c.nuts.n_warmup = 300;
    c.nuts.n_samples = 300;
    c.nuts.max_tree_depth = 8;
    c.latent.n_lat = n_lat;
    c.n_pred_draws = 50;
    return c;
}

} // namespace

TEST_CASE("block covariance matches a direct construction") {
    const auto mesh = normalize_coordinates(meshgen::rectangle(5, 5, 4.0, 4.0));
    const auto basis = testing::full_basis(mesh);
    const SpectralMatern kern(basis);
    const std::vector<VertexId> low{0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
    const std::vector<VertexId> high{1, 3, 5, 7, 9, 11, 13, 15, 17, 19};
    const MultiFidelityParams p{{1.3, 0.4, 1.5, 2}, {0.6, 0.7, 1.5, 2}, -0.8};
    const Eigen::MatrixXd k = block_covariance(low, high, kern, p);

    std::vector<VertexId> all = low;
    all.insert(all.end(), high.begin(), high.end());
    double worst = 0.0;
    for (std::size_t a = 0; a < all.size(); ++a) {
        for (std::size_t b = 0; b < all.size(); ++b) {
            const bool ha = a >= low.size(), hb = b >= low.size();
            const double kl = kern(all[a], all[b], p.low);
            double expect = kl;
            if (ha != hb) expect = p.rho * kl;
            if (ha && hb) expect = p.rho * p.rho * kl + kern(all[a], all[b], p.high);
            worst = std::max(worst, std::abs(k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) - expect));
        }
    }
    CHECK(worst < 1e-12);
    CHECK(k == k.transpose());

    SUBCASE("rho = 0 decouples the levels") {
        MultiFidelityParams p0 = p;
        p0.rho = 0.0;
        const Eigen::MatrixXd k0 = block_covariance(low, high, kern, p0);
        CHECK(k0.topRightCorner(10, 10).cwiseAbs().maxCoeff() == 0.0);
        CHECK((k0.bottomRightCorner(10, 10) - kern.gram(high, high, p.high)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((k0.topLeftCorner(10, 10) - kern.gram(low, low, p.low)).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("no discrepancy keeps the rank of the low gram") {
        MultiFidelityParams pd = p;
        pd.high.eta = 0.0;
        const Eigen::MatrixXd kd = block_covariance(low, high, kern, pd);
        CHECK((kd.bottomRightCorner(10, 10) - p.rho * p.rho * kern.gram(high, high, p.low)).cwiseAbs().maxCoeff() <
              1e-14);
        CHECK(numeric_rank(kd) <= numeric_rank(kern.gram(all, all, p.low)));
    }
}

TEST_CASE("multi-fidelity prediction matches a dense joint-GP oracle") {
    const auto mesh = normalize_coordinates(meshgen::rectangle(5, 4, 4.0, 3.0));
    REQUIRE(mesh.vertex_count() == 20);
    const auto basis = testing::full_basis(mesh);
    GpcConfig cfg;
    cfg.latent.n_lat = 12;
    const std::vector<VertexId> low{0, 2, 5, 7, 10, 13, 16, 18};
    const std::vector<int> low_y{1, 1, 0, 1, 0, 0, 1, 0};
    const std::vector<VertexId> high{2, 9, 14, 19};
    const std::vector<int> high_y{1, 0, 0, 1};
    const Eigen::MatrixXd draws = random_draws(3, 12, 21);
    const auto clf = TrainedMFClassifier::from_draws(basis, low, low_y, high, high_y, PriorSpec::multi_fidelity(),
                                                     cfg, draws);
    const auto query = all_vertices(20);
    const SpectralMatern& kern = clf.kernel();
    for (std::size_t s = 0; s < 3; ++s) {
        const auto pred = clf.predict_draw(s, query);
        const Eigen::VectorXd q = draws.row(static_cast<Eigen::Index>(s)).transpose();
        const MultiFidelityParams p = clf.params(s);
        const auto& m = clf.model();

        Eigen::MatrixXd k = block_covariance(low, high, kern, p);
        k.diagonal().array() += pred.jitter;
        Eigen::MatrixXd kq(20, low.size() + high.size());
        kq.leftCols(low.size()) = p.rho * kern.gram(query, low, p.low);
        kq.rightCols(high.size()) = p.rho * p.rho * kern.gram(query, high, p.low) + kern.gram(query, high, p.high);
        const Eigen::VectorXd prior =
            p.rho * p.rho * kern.diagonal(query, p.low) + kern.diagonal(query, p.high);
        Eigen::VectorXd f(low.size() + high.size());
        f.head(low.size()) = m.low_latent(q, low);
        f.tail(high.size()) = p.rho * m.low_latent(q, high) + m.discrepancy_latent(q, high);

        const Eigen::MatrixXd kinv = k.inverse();
        const Eigen::VectorXd mean = kq * kinv * f;
        const Eigen::VectorXd var = prior - (kq * kinv * kq.transpose()).diagonal();
        const double scale = p.rho * p.rho * p.low.eta * p.low.eta + p.high.eta * p.high.eta;
        CHECK(pred.jitter == doctest::Approx(1e-6 * scale));
        CHECK((pred.mean - mean).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((pred.variance - var.cwiseMax(0.0)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("rho = 0 draws reproduce the single-fidelity prediction") {
    const auto mesh = testing::tiny_mesh();
    const auto basis = testing::full_basis(mesh);
    GpcConfig cfg;
    cfg.latent.n_lat = 10;
    const std::vector<VertexId> low{0, 1, 4, 6, 8};
    const std::vector<int> low_y{1, 0, 0, 1, 1};
    const std::vector<VertexId> high{2, 7, 11};
    const std::vector<int> high_y{1, 1, 0};
    Eigen::MatrixXd draws = random_draws(3, 10, 4);
    draws.col(4).setZero();
    const auto mf = TrainedMFClassifier::from_draws(basis, low, low_y, high, high_y, PriorSpec::multi_fidelity(),
                                                    cfg, draws);
    // Single-fidelity draws: [log eta_H, log ell_H, w_delta].
    Eigen::MatrixXd sf_draws(3, 12);
    sf_draws.leftCols(2) = draws.middleCols(2, 2);
    sf_draws.rightCols(10) = draws.rightCols(10);
    const auto sf = TrainedClassifier::from_draws(basis, high, high_y, PriorSpec::multi_fidelity(), cfg, sf_draws);

    const auto query = all_vertices(mesh.vertex_count());
    const auto a = mf.predict(query), b = sf.predict(query);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((a.variance - b.variance).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("multi-fidelity training needs both levels") {
    const auto mesh = testing::tiny_mesh();
    const auto basis = testing::full_basis(mesh);
    const auto high_only = LabeledDataset::from_labels({0, 3}, {1, 0}, Fidelity::high);
    const auto low_only = LabeledDataset::from_labels({0, 3}, {1, 0}, Fidelity::low);
    CHECK_MGPC_ERROR(train_mf(mesh, basis, high_only, PriorSpec::multi_fidelity(), 0, mf_config(5)),
                     ErrorCode::argument);
    CHECK_MGPC_ERROR(train_mf(mesh, basis, low_only, PriorSpec::multi_fidelity(), 0, mf_config(5)),
                     ErrorCode::argument);
}

TEST_CASE("posterior rho follows the sign of the low/high relationship") {
    const auto mesh = normalize_coordinates(meshgen::icosphere(2));
    const auto basis = testing::basis_of(mesh, 60);
    std::vector<int> truth(mesh.vertex_count());
    for (std::size_t v = 0; v < truth.size(); ++v) {
        const auto& x = mesh.vertices()[v];
        truth[v] = x.x() + 0.5 * x.y() > 0.0;
    }
    const auto low = farthest_point_design(mesh, 100, 1);
    const std::vector<VertexId> high(low.begin(), low.begin() + 30);

    auto fit = [&](bool anti) {
        LabeledDataset data;
        for (auto v : low) data.entries.push_back({v, anti ? 1 - truth[v] : truth[v], Fidelity::low});
        for (auto v : high) data.entries.push_back({v, truth[v], Fidelity::high});
        const auto clf = train_mf(mesh, basis, data, PriorSpec::multi_fidelity(), 3, mf_config(40));
        const Eigen::VectorXd rho = clf.samples().constrained.col(4);
        const double mean = rho.mean();
        const double sd = std::sqrt((rho.array() - mean).square().sum() / static_cast<double>(rho.size() - 1));
        const double negative = (rho.array() < 0.0).cast<double>().mean();
        return std::array<double, 3>{mean, sd, negative};
    };

    SUBCASE("identical fields") {
        const auto [mean, sd, negative] = fit(false);
        MESSAGE("rho " << mean << " +- " << sd);
        CHECK(std::abs(mean) > 2.0 * sd);
        CHECK(mean > 0.0);
    }
    SUBCASE("anti-correlated fields") {
        const auto [mean, sd, negative] = fit(true);
        MESSAGE("rho " << mean << " +- " << sd << ", P(rho < 0) " << negative);
        CHECK(negative > 0.9);
    }
}

TEST_CASE("uninformative low data does not hurt the high-level fit much") {
    const auto mesh = normalize_coordinates(meshgen::icosphere(2));
    const auto basis = testing::basis_of(mesh, 60);
    std::vector<int> truth(mesh.vertex_count());
    for (std::size_t v = 0; v < truth.size(); ++v) truth[v] = mesh.vertices()[v].z() > 0.3;
    const auto design = farthest_point_design(mesh, 100, 2);
    const std::vector<VertexId> high(design.begin(), design.begin() + 30);

    Rng rng = make_rng(77);
    std::bernoulli_distribution coin(0.5);
    LabeledDataset mf_data, sf_data;
    for (auto v : design) mf_data.entries.push_back({v, coin(rng) ? 1 : 0, Fidelity::low});
    for (auto v : high) {
        mf_data.entries.push_back({v, truth[v], Fidelity::high});
        sf_data.entries.push_back({v, truth[v], Fidelity::high});
    }
    const auto cfg = mf_config(40);
    const auto mf = train_mf(mesh, basis, mf_data, PriorSpec::multi_fidelity(), 5, cfg);
    const auto sf = train(mesh, basis, sf_data, PriorSpec::multi_fidelity(), 5, cfg);

    std::vector<bool> used(mesh.vertex_count(), false);
    for (auto v : design) used[v] = true;
    std::vector<VertexId> test;
    std::vector<int> yt;
    for (VertexId v = 0; v < mesh.vertex_count(); ++v) {
        if (!used[v]) {
            test.push_back(v);
            yt.push_back(truth[v]);
        }
    }
    const double ba_mf = balanced_accuracy(yt, field_labels(mf.predict(test)));
    const double ba_sf = balanced_accuracy(yt, field_labels(sf.predict(test)));
    MESSAGE("mf " << ba_mf << " sf " << ba_sf);
    CHECK(std::abs(ba_mf - ba_sf) <= 0.05);
}
