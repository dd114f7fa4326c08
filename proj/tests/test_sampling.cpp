#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "mgpc/geodesic.hpp"
#include "mgpc/random.hpp"
#include "mgpc/sampling.hpp"
#include "support.hpp"

using namespace mgpc;

namespace {

ClassProbabilityField make_field(std::vector<VertexId> v, std::vector<double> mean, std::vector<double> var) {
    ClassProbabilityField f;
    f.vertices = std::move(v);
    f.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    f.variance = Eigen::Map<Eigen::VectorXd>(var.data(), static_cast<Eigen::Index>(var.size()));
    f.probability = Eigen::VectorXd::Constant(f.mean.size(), 0.5);
    return f;
}

GpcConfig quick_config() {
    GpcConfig c;
    c.nuts.n_warmup = 100;
    c.nuts.n_samples = 100;
    c.nuts.max_tree_depth = 6;
    c.latent.n_lat = 20;
    return c;
}

class FailingOracle final : public LabelOracle {
public:
    explicit FailingOracle(std::size_t allowed) : allowed_(allowed) {}
    int label(VertexId v) const override {
        if (calls_++ >= allowed_) fail(ErrorCode::oracle, "simulator crashed at vertex " + std::to_string(v));
        return static_cast<int>(v % 2);
    }
    std::string description() const override { return "failing"; }

private:
    std::size_t allowed_;
    mutable std::size_t calls_ = 0;
};

} // namespace

TEST_CASE("farthest-point design") {
    const auto mesh = meshgen::icosphere(3);
    SUBCASE("n = 1 is the seeded uniform vertex") {
        Rng rng = make_rng(13);
        std::uniform_int_distribution<std::size_t> pick(0, mesh.vertex_count() - 1);
        CHECK(farthest_point_design(mesh, 1, 13) == std::vector<VertexId>{pick(rng)});
    }
    SUBCASE("n = 2 picks the antipode") {
        const auto d = farthest_point_design(mesh, 2, 4);
        const double dist = heat_geodesics(mesh, d[0]).distances[d[1]];
        const double angle = std::acos(std::clamp(mesh.vertices()[d[0]].dot(mesh.vertices()[d[1]]), -1.0, 1.0));
        CHECK(angle > 0.95 * std::numbers::pi);
        CHECK(std::abs(dist - std::numbers::pi) / std::numbers::pi < 0.05);
    }
    SUBCASE("distinct, deterministic, bounded") {
        const auto a = farthest_point_design(mesh, 50, 2);
        CHECK(std::set<VertexId>(a.begin(), a.end()).size() == 50);
        CHECK(a == farthest_point_design(mesh, 50, 2));
        CHECK(a != farthest_point_design(mesh, 50, 3));
        CHECK_MGPC_ERROR(farthest_point_design(mesh, mesh.vertex_count() + 1, 0), ErrorCode::argument);
        CHECK_MGPC_ERROR(farthest_point_design(mesh, 0, 0), ErrorCode::argument);
    }
}

TEST_CASE("design spacing on the normalized demonstration mesh") {
    const auto mesh = normalize_coordinates(meshgen::demo_surface());
    const auto provider = testing::heat_provider(mesh);
    const auto design = farthest_point_design(mesh, 100, 0, provider);
    double nn_sum = 0.0;
    for (auto a : design) {
        const auto d = provider(a);
        double best = 1e300;
        for (auto b : design) {
            if (b != a) best = std::min(best, d[b]);
        }
        nn_sum += best;
    }
    const double spacing = nn_sum / static_cast<double>(design.size());
    const double all_pairs = average_pairwise_geodesic(mesh, design, provider);
    MESSAGE("nearest-neighbour spacing " << spacing << ", all-pairs mean " << all_pairs);
    // Order-of-magnitude anchor for the reported 0.39.
    CHECK(spacing > 0.39 / 3.0);
    CHECK(spacing < 0.39 * 3.0);
}

TEST_CASE("acquisition rule") {
    const auto sphere = meshgen::icosphere(1);
    SUBCASE("zero mean wins") {
        const auto f = make_field({3, 4, 5}, {0.5, 0.0, -0.2}, {1.0, 1.0, 1.0});
        CHECK(acquire_next(f, sphere) == 4);
    }
    SUBCASE("score is |mu| / sigma") {
        const auto f = make_field({0, 1}, {1.0, 1.0}, {1.0, 4.0});
        CHECK(acquire_next(f, sphere) == 1);
    }
    SUBCASE("ties go to the lowest interior id") {
        const auto grid = meshgen::rectangle(4, 4, 1.0, 1.0);
        std::vector<VertexId> v(grid.vertex_count());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<VertexId>(v.size() - 1 - i);
        const auto f = make_field(v, std::vector<double>(v.size(), 0.3), std::vector<double>(v.size(), 2.0));
        CHECK(acquire_next(f, grid, true) == 5);
        CHECK(acquire_next(f, grid, false) == 0);
        const std::vector<VertexId> labeled{5};
        CHECK(acquire_next(f, grid, true, labeled) == 6);
    }
    SUBCASE("non-positive variance is skipped") {
        const auto f = make_field({0, 1, 2}, {0.0, 0.0, 1.0}, {0.0, -1.0, 1.0});
        CHECK(acquire_next(f, sphere) == 2);
        const auto none = make_field({0, 1}, {0.0, 0.0}, {0.0, 0.0});
        CHECK_MGPC_ERROR(acquire_next(none, sphere), ErrorCode::numerical);
    }
}

TEST_CASE("oracles") {
    const VectorOracle v({0, 1, 1}, "vec");
    CHECK(v.label(1) == 1);
    CHECK_MGPC_ERROR(v.label(3), ErrorCode::oracle);

    const auto dir = testing::scratch_dir("oracle");
    LabeledDataset data = LabeledDataset::from_labels({2, 7}, {1, 0}, Fidelity::high);
    data.entries.push_back({4, 1, Fidelity::low});
    write_dataset_csv(dir / "labels.csv", data);
    const FileOracle f(dir / "labels.csv");
    CHECK(f.label(2) == 1);
    CHECK(f.label(7) == 0);
    CHECK_MGPC_ERROR(f.label(4), ErrorCode::oracle);
}

TEST_CASE("active learning loop") {
    const auto mesh = normalize_coordinates(meshgen::icosphere(2));
    const auto basis = testing::basis_of(mesh, 40);
    std::vector<int> truth(mesh.vertex_count());
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = mesh.vertices()[i].y() > 0.0;
    const VectorOracle oracle(truth, "half");
    const auto init = farthest_point_design(mesh, 5, 1);
    ActiveLearningConfig cfg;
    cfg.gpc = quick_config();

    SUBCASE("budget equal to the initial design trains once") {
        std::size_t calls = 0;
        const auto r = active_learning_loop(mesh, basis, oracle, init, init.size(), PriorSpec::single_fidelity(), 9,
                                            cfg, [&](const LabeledDataset&, const TrainedClassifier&) { ++calls; });
        CHECK(calls == 1);
        CHECK(r.acquired.empty());
        const auto plain = train(mesh, basis, r.data, PriorSpec::single_fidelity(), derive_seed(9, 0), cfg.gpc);
        CHECK(r.classifier->samples().draws == plain.samples().draws);
    }
    SUBCASE("acquires up to the budget") {
        std::size_t calls = 0;
        const auto r = active_learning_loop(mesh, basis, oracle, init, 9, PriorSpec::single_fidelity(), 9, cfg,
                                            [&](const LabeledDataset& d, const TrainedClassifier& c) {
                                                CHECK(c.vertices().size() == d.entries.size());
                                                ++calls;
                                            });
        CHECK(calls == 5);
        CHECK(r.data.entries.size() == 9);
        CHECK(r.acquired.size() == 4);
        std::set<VertexId> seen(init.begin(), init.end());
        for (auto v : r.acquired) {
            CHECK(seen.insert(v).second);
            CHECK(r.data.entries[seen.size() - 1].label == truth[v]);
        }
        CHECK(r.error.empty());
    }
    SUBCASE("oracle failure returns the data so far") {
        const FailingOracle failing(7);
        const auto r = active_learning_loop(mesh, basis, failing, init, 10, PriorSpec::single_fidelity(), 9, cfg);
        CHECK(r.data.entries.size() == 7);
        CHECK(r.error.find("simulator crashed") != std::string::npos);
    }
    SUBCASE("argument checks") {
        CHECK_MGPC_ERROR(active_learning_loop(mesh, basis, oracle, init, 3, PriorSpec::single_fidelity(), 0, cfg),
                         ErrorCode::argument);
        const std::vector<VertexId> none;
        CHECK_MGPC_ERROR(active_learning_loop(mesh, basis, oracle, none, 3, PriorSpec::single_fidelity(), 0, cfg),
                         ErrorCode::argument);
    }
}
