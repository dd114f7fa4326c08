#include <doctest.h>

#include <cmath>

#include "mgpc/eval.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

ClassProbabilityField field_from_labels(const std::vector<int>& labels) {
    ClassProbabilityField f;
    for (std::size_t i = 0; i < labels.size(); ++i) f.vertices.push_back(i);
    f.probability = Eigen::VectorXd(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) f.probability(static_cast<Eigen::Index>(i)) = labels[i] ? 0.9 : 0.1;
    f.mean = f.probability.array() - 0.5;
    f.variance = Eigen::VectorXd::Ones(f.probability.size());
    return f;
}

GpcConfig quick_config() {
    GpcConfig c;
    c.nuts.n_warmup = 60;
    c.nuts.n_samples = 60;
    c.nuts.max_tree_depth = 5;
    c.latent.n_lat = 15;
    c.n_pred_draws = 10;
    return c;
}

} // namespace

TEST_CASE("balanced accuracy") {
    CHECK(balanced_accuracy({1, 0, 1}, {1, 0, 1}) == 1.0);
    CHECK(balanced_accuracy({1, 1, 1, 1, 0, 0}, {1, 1, 1, 0, 0, 1}) == doctest::Approx(0.625));
    CHECK(balanced_accuracy({1, 1, 0, 1, 1, 0, 0, 1}, std::vector<int>(8, 1)) == doctest::Approx(0.5));
    // Relabeling both vectors leaves the score unchanged.
    CHECK(balanced_accuracy({0, 0, 0, 0, 1, 1}, {0, 0, 0, 1, 1, 0}) == doctest::Approx(0.625));
    CHECK(balanced_accuracy({1, 1}, {1, 1}) == 1.0);
    CHECK_MGPC_ERROR(balanced_accuracy({1, 1}, {1, 0}), ErrorCode::undefined_metric);
    CHECK(plain_accuracy({1, 1}, {1, 0}) == 0.5);
    CHECK_MGPC_ERROR(balanced_accuracy({1}, {1, 0}), ErrorCode::argument);
}

TEST_CASE("inducibility") {
    const auto mesh = meshgen::icosphere(4);
    const std::size_t n = mesh.vertex_count();
    std::vector<int> half(n), ones(n, 1);
    for (std::size_t v = 0; v < n; ++v) half[v] = mesh.vertices()[v].z() >= 0.0;

    CHECK(std::abs(inducibility(half, mesh) - 0.5) < 0.02);
    CHECK(inducibility(ones, mesh) == 1.0);
    CHECK(inducibility(field_from_labels(ones), mesh) == 1.0);
    CHECK(inducibility(field_from_labels(half), mesh) == inducibility(half, mesh));

    double total = 0.0;
    for (double a : mesh.vertex_areas()) total += a;
    const std::vector<double> uniform(n, 1.0 / total);
    CHECK(inducibility(half, mesh, &uniform) == inducibility(half, mesh));

    std::vector<double> point(n, 0.0);
    VertexId positive = 0;
    while (!half[positive]) ++positive;
    point[positive] = 1.0 / mesh.vertex_areas()[positive];
    CHECK(inducibility(half, mesh, &point) == 1.0);

    const std::vector<double> bad(n, 2.0 / total);
    CHECK_MGPC_ERROR(inducibility(half, mesh, &bad), ErrorCode::argument);
    std::vector<double> negative = uniform;
    negative[0] = -1.0;
    CHECK_MGPC_ERROR(inducibility(half, mesh, &negative), ErrorCode::argument);
    CHECK_MGPC_ERROR(inducibility(std::vector<int>(3, 1), mesh), ErrorCode::argument);
}

TEST_CASE("config JSON round trips") {
    AssessmentConfig a;
    a.length_scales = {0.3};
    a.n_fields = 2;
    a.acquisition_gpc = quick_config();
    CHECK(to_json(assessment_config_from_json(to_json(a))) == to_json(a));
    MultiFidelityStudyConfig m;
    m.n_low = 30;
    CHECK(to_json(mf_study_config_from_json(to_json(m))) == to_json(m));
    CHECK(m.ell == 0.4);
}

TEST_CASE("small assessment is deterministic") {
    const auto mesh = normalize_coordinates(meshgen::icosphere(2));
    const auto basis = testing::basis_of(mesh, 40);
    AssessmentConfig cfg;
    cfg.length_scales = {0.5, 1.0};
    cfg.n_fields = 2;
    cfg.sample_grid = {10, 14};
    cfg.al_init = 10;
    cfg.gpc = quick_config();
    cfg.seed = 3;
    cfg.jobs = 2;
    const auto a = run_assessment(mesh, basis, cfg);
    cfg.jobs = 1;
    const auto b = run_assessment(mesh, basis, cfg);
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.rows.size() == 2 * 2 * 3 * 2);
    CHECK(a.to_csv().rfind("ell,replicate,classifier,n_samples,balanced_accuracy,status\n", 0) == 0);
    for (const auto& r : a.rows) {
        CHECK(r.status.rfind("error", 0) != 0);
        CHECK(r.balanced_accuracy >= 0.0);
        CHECK(r.balanced_accuracy <= 1.0);
    }
    CHECK(std::isfinite(a.mean(0.5, "gp", 14)));
    CHECK(std::isnan(a.mean(0.7, "gp", 14)));
    CHECK(!a.summary().empty());
}

TEST_CASE("small multi-fidelity study is deterministic") {
    const auto mesh = normalize_coordinates(meshgen::icosphere(2));
    const auto basis = testing::basis_of(mesh, 40);
    MultiFidelityStudyConfig cfg;
    cfg.n_fields = 2;
    cfg.n_low = 20;
    cfg.n_high = 8;
    cfg.gpc = quick_config();
    cfg.jobs = 1;
    const auto a = run_mf_study(mesh, basis, cfg);
    const auto b = run_mf_study(mesh, basis, cfg);
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.rows.size() == 6);
    for (const auto& r : a.rows) {
        CHECK(r.agreement >= 0.83);
        CHECK(r.agreement <= 0.87);
    }
}
