#include "mgpc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "mgpc/baseline.hpp"
#include "mgpc/error.hpp"
#include "mgpc/geodesic.hpp"
#include "mgpc/mfgpc.hpp"
#include "mgpc/random.hpp"
#include "mgpc/sampling.hpp"
#include "mgpc/synth.hpp"

namespace mgpc {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

/// Runs task(i) for i in [0, n) on `jobs` threads; tasks must not throw.
template <class Task>
void parallel_for(std::size_t n, std::size_t jobs, Task&& task) {
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) task(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::vector<VertexId> complement(std::size_t n, const std::vector<VertexId>& train) {
    std::vector<bool> used(n, false);
    for (auto v : train) used[v] = true;
    std::vector<VertexId> out;
    for (VertexId v = 0; v < n; ++v) {
        if (!used[v]) out.push_back(v);
    }
    return out;
}

std::vector<int> gather(const std::vector<int>& labels, const std::vector<VertexId>& at) {
    std::vector<int> out(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) out[i] = labels[at[i]];
    return out;
}

/// Balanced accuracy, falling back to plain accuracy when undefined.
std::pair<double, std::string> score(const std::vector<int>& truth, const std::vector<int>& pred) {
    try {
        return {balanced_accuracy(truth, pred), "ok"};
    } catch (const Error& e) {
        if (e.code() != ErrorCode::undefined_metric) throw;
        return {plain_accuracy(truth, pred), "plain_accuracy"};
    }
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

struct Stats {
    double mean = nan_value;
    double stderr_ = nan_value;
    std::size_t count = 0;
};

Stats stats_of(const std::vector<double>& xs) {
    Stats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    } else {
        s.stderr_ = 0.0;
    }
    return s;
}

bool usable(const std::string& status) { return status == "ok" || status == "plain_accuracy"; }

} // namespace

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) fail(ErrorCode::argument, "label vectors differ in length");
    if (y_true.empty()) fail(ErrorCode::argument, "balanced accuracy of an empty set");
    std::size_t tp = 0, tn = 0, p = 0, n = 0, pred_pos = 0, pred_neg = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool t = y_true[i] != 0, q = y_pred[i] != 0;
        (t ? p : n)++;
        (q ? pred_pos : pred_neg)++;
        if (t && q) ++tp;
        if (!t && !q) ++tn;
    }
    double sens, spec;
    if (p > 0) {
        sens = static_cast<double>(tp) / static_cast<double>(p);
    } else if (pred_pos == 0) {
        sens = 1.0;
    } else {
        fail(ErrorCode::undefined_metric,
             "balanced accuracy undefined: no positives in truth but positives predicted; report plain accuracy");
    }
    if (n > 0) {
        spec = static_cast<double>(tn) / static_cast<double>(n);
    } else if (pred_neg == 0) {
        spec = 1.0;
    } else {
        fail(ErrorCode::undefined_metric,
             "balanced accuracy undefined: no negatives in truth but negatives predicted; report plain accuracy");
    }
    return 0.5 * (sens + spec);
}

double plain_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty()) fail(ErrorCode::argument, "label vectors differ in length");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) hit += (y_true[i] != 0) == (y_pred[i] != 0);
    return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

std::vector<int> field_labels(const ClassProbabilityField& field) {
    std::vector<int> out(field.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = field.probability(static_cast<Eigen::Index>(i)) > 0.5 ? 1 : 0;
    return out;
}

double inducibility(const std::vector<int>& labels, const TriangleMesh& mesh, const std::vector<double>* density) {
    const std::size_t n = mesh.vertex_count();
    if (labels.size() != n) fail(ErrorCode::argument, "inducibility needs a value for every vertex");
    const auto& areas = mesh.vertex_areas();
    bool uniform = true;
    if (density) {
        if (density->size() != n) fail(ErrorCode::argument, "density must have one value per vertex");
        double integral = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            const double r = (*density)[v];
            if (!(r >= 0.0) || !std::isfinite(r)) fail(ErrorCode::argument, "density must be finite and nonnegative");
            integral += areas[v] * r;
            uniform = uniform && r == (*density)[0];
        }
        if (std::abs(integral - 1.0) > 1e-6) {
            fail(ErrorCode::argument, "density integrates to " + format_double(integral) + ", expected 1");
        }
    }
    // A constant density factors out of the self-normalized sum.
    double num = 0.0, den = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        const double w = (density && !uniform) ? areas[v] * (*density)[v] : areas[v];
        den += w;
        if (labels[v] != 0) num += w;
    }
    return num / den;
}

double inducibility(const ClassProbabilityField& field, const TriangleMesh& mesh, const std::vector<double>* density) {
    const std::size_t n = mesh.vertex_count();
    if (field.size() != n) fail(ErrorCode::argument, "inducibility needs a field over every vertex");
    std::vector<int> labels(n, -1);
    for (std::size_t k = 0; k < n; ++k) {
        const VertexId v = field.vertices[k];
        if (v >= n || labels[v] != -1) fail(ErrorCode::argument, "field vertices must cover each vertex once");
        labels[v] = field.probability(static_cast<Eigen::Index>(k)) > 0.5 ? 1 : 0;
    }
    return inducibility(labels, mesh, density);
}

void AssessmentConfig::validate() const {
    if (length_scales.empty() || n_fields == 0 || sample_grid.empty()) {
        fail(ErrorCode::argument, "assessment needs length scales, replicates and a sample grid");
    }
    for (double l : length_scales) {
        if (!(l > 0.0)) fail(ErrorCode::argument, "length scales must be positive");
    }
    for (const auto& c : classifiers) {
        if (c != "nn" && c != "gp" && c != "al") fail(ErrorCode::argument, "unknown classifier '" + c + "'");
    }
    if (std::find(classifiers.begin(), classifiers.end(), "al") != classifiers.end()) {
        if (al_init == 0) fail(ErrorCode::argument, "al_init must be positive");
        if (*std::max_element(sample_grid.begin(), sample_grid.end()) < al_init) {
            fail(ErrorCode::argument, "sample grid must reach al_init for active learning");
        }
    }
    gpc.validate();
    if (acquisition_gpc) acquisition_gpc->validate();
    priors.validate();
}

nlohmann::json to_json(const AssessmentConfig& c) {
    nlohmann::json j = {{"length_scales", c.length_scales}, {"n_fields", c.n_fields},   {"sample_grid", c.sample_grid},
            {"seed", c.seed},                   {"classifiers", c.classifiers}, {"eta", c.eta},
            {"nu", c.nu},                       {"al_init", c.al_init},     {"exclude_boundary", c.exclude_boundary},
            {"gpc", to_json(c.gpc)},            {"priors", to_json(c.priors)}, {"jobs", c.jobs}};
    if (c.acquisition_gpc) j["acquisition_gpc"] = to_json(*c.acquisition_gpc);
    return j;
}

AssessmentConfig assessment_config_from_json(const nlohmann::json& j) {
    AssessmentConfig c;
    c.length_scales = j.value("length_scales", c.length_scales);
    c.n_fields = j.value("n_fields", c.n_fields);
    if (j.contains("sample_grid")) {
        const auto& g = j.at("sample_grid");
        if (g.is_object()) {
            // {"start": 20, "stop": 100, "step": 20}
            c.sample_grid.clear();
            const std::size_t start = g.value("start", 20), stop = g.value("stop", 100), step = g.value("step", 20);
            if (step == 0) fail(ErrorCode::argument, "sample_grid step must be positive");
            for (std::size_t n = start; n <= stop; n += step) c.sample_grid.push_back(n);
        } else {
            c.sample_grid = g.get<std::vector<std::size_t>>();
        }
    }
    c.seed = j.value("seed", c.seed);
    c.classifiers = j.value("classifiers", c.classifiers);
    c.eta = j.value("eta", c.eta);
    c.nu = j.value("nu", c.nu);
    c.al_init = j.value("al_init", c.al_init);
    c.exclude_boundary = j.value("exclude_boundary", c.exclude_boundary);
    if (j.contains("gpc")) c.gpc = gpc_config_from_json(j.at("gpc"));
    if (j.contains("acquisition_gpc")) c.acquisition_gpc = gpc_config_from_json(j.at("acquisition_gpc"));
    if (j.contains("priors")) c.priors = priors_from_json(j.at("priors"));
    c.jobs = j.value("jobs", c.jobs);
    c.validate();
    return c;
}

std::string AssessmentResult::to_csv() const {
    std::ostringstream out;
    out << "ell,replicate,classifier,n_samples,balanced_accuracy,status\n";
    for (const auto& r : rows) {
        out << format_double(r.ell) << ',' << r.replicate << ',' << r.classifier << ',' << r.n_samples << ','
            << format_double(r.balanced_accuracy) << ',' << r.status << '\n';
    }
    return out.str();
}

nlohmann::json AssessmentResult::summary() const {
    std::map<std::tuple<double, std::string, std::size_t>, std::vector<double>> groups;
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (usable(r.status)) {
            groups[{r.ell, r.classifier, r.n_samples}].push_back(r.balanced_accuracy);
        } else {
            ++failed;
        }
    }
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [key, xs] : groups) {
        const auto s = stats_of(xs);
        cells.push_back({{"ell", std::get<0>(key)},
                         {"classifier", std::get<1>(key)},
                         {"n_samples", std::get<2>(key)},
                         {"mean", s.mean},
                         {"stderr", s.stderr_},
                         {"count", s.count}});
    }
    return {{"cells", cells}, {"failed_cells", failed}};
}

double AssessmentResult::mean(double ell, const std::string& classifier, std::size_t n_samples) const {
    std::vector<double> xs;
    for (const auto& r : rows) {
        if (r.ell == ell && r.classifier == classifier && r.n_samples == n_samples && usable(r.status)) {
            xs.push_back(r.balanced_accuracy);
        }
    }
    return stats_of(xs).mean;
}

double AssessmentResult::mean_difference(double ell, const std::string& a, const std::string& b,
                                         std::size_t n_samples) const {
    std::map<std::size_t, double> va, vb;
    for (const auto& r : rows) {
        if (r.ell != ell || r.n_samples != n_samples || !usable(r.status)) continue;
        if (r.classifier == a) va[r.replicate] = r.balanced_accuracy;
        if (r.classifier == b) vb[r.replicate] = r.balanced_accuracy;
    }
    std::vector<double> d;
    for (const auto& [rep, x] : va) {
        auto it = vb.find(rep);
        if (it != vb.end()) d.push_back(x - it->second);
    }
    return stats_of(d).mean;
}

AssessmentResult run_assessment(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                                const AssessmentConfig& config) {
    config.validate();
    if (!basis || basis->vertex_count() != mesh.vertex_count()) {
        fail(ErrorCode::argument, "assessment needs a spectral basis built on the same mesh");
    }
    auto solver = std::make_shared<const HeatGeodesicSolver>(mesh);
    const auto has = [&](const char* c) {
        return std::find(config.classifiers.begin(), config.classifiers.end(), c) != config.classifiers.end();
    };
    std::vector<std::size_t> grid = config.sample_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const std::size_t max_n = grid.back();
    if (max_n > mesh.vertex_count()) fail(ErrorCode::argument, "sample grid exceeds the vertex count");

    const std::size_t n_ell = config.length_scales.size();
    const std::size_t n_cells = n_ell * config.n_fields;
    std::vector<std::vector<AssessmentRow>> cell_rows(n_cells);
    std::mutex log_mutex;
    std::atomic<std::size_t> done{0};

    parallel_for(n_cells, config.jobs, [&](std::size_t cell) {
        const std::size_t li = cell / config.n_fields;
        const std::size_t rep = cell % config.n_fields;
        const double ell = config.length_scales[li];
        auto& rows = cell_rows[cell];
        auto record = [&](const std::string& clf, std::size_t n, double ba, const std::string& status) {
            rows.push_back({ell, rep, clf, n, ba, status});
        };
        // Truth noise and design depend on the replicate only, pairing fields across length scales.
        const std::uint64_t rep_seed = derive_seed(config.seed, rep);
        const std::uint64_t cell_seed = derive_seed(rep_seed, 1000 + li);
        std::vector<int> truth;
        std::vector<VertexId> design;
        DistanceProvider distances = heat_distance_provider(solver);
        try {
            const KernelParams truth_params{config.eta, ell, config.nu, 2};
            truth = field_to_labels(
                sample_prior_field(*basis, truth_params, derive_seed(rep_seed, 1), config.gpc.latent.convention));
            design = farthest_point_design(mesh, max_n, derive_seed(rep_seed, 2), distances);
        } catch (const std::exception& e) {
            for (const auto& clf : config.classifiers) {
                for (auto n : grid) record(clf, n, nan_value, std::string("error: ") + e.what());
            }
            return;
        }

        auto score_on = [&](const std::vector<VertexId>& test, const std::vector<int>& pred) {
            return score(gather(truth, test), pred);
        };

        if (has("nn")) {
            for (auto n : grid) {
                try {
                    const std::vector<VertexId> tv(design.begin(), design.begin() + static_cast<long>(n));
                    const auto data = LabeledDataset::from_labels(tv, gather(truth, tv), Fidelity::high, "synthetic");
                    const auto test = complement(mesh.vertex_count(), tv);
                    const auto [ba, st] = score_on(test, nn_classify(mesh, data, test, distances));
                    record("nn", n, ba, st);
                } catch (const std::exception& e) {
                    record("nn", n, nan_value, std::string("error: ") + e.what());
                }
            }
        }
        if (has("gp")) {
            for (auto n : grid) {
                try {
                    const std::vector<VertexId> tv(design.begin(), design.begin() + static_cast<long>(n));
                    const auto data = LabeledDataset::from_labels(tv, gather(truth, tv), Fidelity::high, "synthetic");
                    const auto test = complement(mesh.vertex_count(), tv);
                    const auto clf = train(mesh, basis, data, config.priors, derive_seed(cell_seed, 100 + n), config.gpc);
                    const auto [ba, st] = score_on(test, field_labels(clf.predict(test)));
                    record("gp", n, ba, st);
                } catch (const std::exception& e) {
                    record("gp", n, nan_value, std::string("error: ") + e.what());
                }
            }
        }
        if (has("al")) {
            const std::vector<VertexId> init(design.begin(), design.begin() + static_cast<long>(config.al_init));
            const std::set<std::size_t> wanted(grid.begin(), grid.end());
            std::set<std::size_t> seen;
            try {
                VectorOracle oracle(truth, "synthetic truth");
                ActiveLearningConfig al;
                al.gpc = config.gpc;
                al.acquisition_gpc = config.acquisition_gpc;
                al.exclude_boundary = config.exclude_boundary;
                auto observe = [&](const LabeledDataset& data, const TrainedClassifier& clf) {
                    const std::size_t n = data.entries.size();
                    if (!wanted.count(n)) return;
                    const auto tv = data.vertices(Fidelity::high);
                    const auto test = complement(mesh.vertex_count(), tv);
                    const auto [ba, st] = score_on(test, field_labels(clf.predict(test)));
                    record("al", n, ba, st);
                    seen.insert(n);
                };
                const auto res = active_learning_loop(mesh, basis, oracle, init, max_n, config.priors,
                                                      derive_seed(cell_seed, 7), al, observe);
                if (!res.error.empty()) throw Error(ErrorCode::oracle, res.error);
            } catch (const std::exception& e) {
                for (auto n : grid) {
                    if (n >= config.al_init && !seen.count(n)) record("al", n, nan_value, std::string("error: ") + e.what());
                }
            }
        }
        std::lock_guard lock(log_mutex);
        spdlog::info("assessment cell ell={} replicate={} done ({}/{})", ell, rep, ++done, n_cells);
    });

    AssessmentResult result;
    for (auto& rows : cell_rows) {
        for (auto& r : rows) result.rows.push_back(std::move(r));
    }
    return result;
}

nlohmann::json to_json(const MultiFidelityStudyConfig& c) {
    return {{"ell", c.ell},
            {"n_fields", c.n_fields},
            {"n_low", c.n_low},
            {"n_high", c.n_high},
            {"agreement_target", c.agreement_target},
            {"ell_noise", c.ell_noise},
            {"seed", c.seed},
            {"eta", c.eta},
            {"nu", c.nu},
            {"gpc", to_json(c.gpc)},
            {"single_priors", to_json(c.single_priors)},
            {"multi_priors", to_json(c.multi_priors)},
            {"jobs", c.jobs}};
}

MultiFidelityStudyConfig mf_study_config_from_json(const nlohmann::json& j) {
    MultiFidelityStudyConfig c;
    c.ell = j.value("ell", c.ell);
    c.n_fields = j.value("n_fields", c.n_fields);
    c.n_low = j.value("n_low", c.n_low);
    c.n_high = j.value("n_high", c.n_high);
    c.agreement_target = j.value("agreement_target", c.agreement_target);
    c.ell_noise = j.value("ell_noise", c.ell_noise);
    c.seed = j.value("seed", c.seed);
    c.eta = j.value("eta", c.eta);
    c.nu = j.value("nu", c.nu);
    if (j.contains("gpc")) c.gpc = gpc_config_from_json(j.at("gpc"));
    if (j.contains("single_priors")) c.single_priors = priors_from_json(j.at("single_priors"));
    if (j.contains("multi_priors")) c.multi_priors = priors_from_json(j.at("multi_priors"));
    c.jobs = j.value("jobs", c.jobs);
    return c;
}

std::string MultiFidelityStudyResult::to_csv() const {
    std::ostringstream out;
    out << "replicate,classifier,balanced_accuracy,agreement,rho_mean,status\n";
    for (const auto& r : rows) {
        out << r.replicate << ',' << r.classifier << ',' << format_double(r.balanced_accuracy) << ','
            << format_double(r.agreement) << ',' << format_double(r.rho_mean) << ',' << r.status << '\n';
    }
    return out.str();
}

double MultiFidelityStudyResult::mean(const std::string& classifier) const {
    std::vector<double> xs;
    for (const auto& r : rows) {
        if (r.classifier == classifier && usable(r.status)) xs.push_back(r.balanced_accuracy);
    }
    return stats_of(xs).mean;
}

double MultiFidelityStudyResult::mean_difference(const std::string& a, const std::string& b) const {
    std::map<std::size_t, double> va, vb;
    for (const auto& r : rows) {
        if (!usable(r.status)) continue;
        if (r.classifier == a) va[r.replicate] = r.balanced_accuracy;
        if (r.classifier == b) vb[r.replicate] = r.balanced_accuracy;
    }
    std::vector<double> d;
    for (const auto& [rep, x] : va) {
        auto it = vb.find(rep);
        if (it != vb.end()) d.push_back(x - it->second);
    }
    return stats_of(d).mean;
}

nlohmann::json MultiFidelityStudyResult::summary() const {
    nlohmann::json out = nlohmann::json::object();
    for (const char* c : {"nn", "gp", "mf"}) {
        std::vector<double> xs;
        for (const auto& r : rows) {
            if (r.classifier == c && usable(r.status)) xs.push_back(r.balanced_accuracy);
        }
        const auto s = stats_of(xs);
        out[c] = {{"mean", s.mean}, {"stderr", s.stderr_}, {"count", s.count}};
    }
    out["mf_minus_gp"] = mean_difference("mf", "gp");
    out["mf_minus_nn"] = mean_difference("mf", "nn");
    return out;
}

MultiFidelityStudyResult run_mf_study(const TriangleMesh& mesh, std::shared_ptr<const SpectralBasis> basis,
                                      const MultiFidelityStudyConfig& config) {
    if (!basis || basis->vertex_count() != mesh.vertex_count()) {
        fail(ErrorCode::argument, "study needs a spectral basis built on the same mesh");
    }
    if (config.n_fields == 0 || config.n_high == 0 || config.n_low < config.n_high) {
        fail(ErrorCode::argument, "study needs n_fields > 0 and 0 < n_high <= n_low");
    }
    config.gpc.validate();
    auto solver = std::make_shared<const HeatGeodesicSolver>(mesh);
    std::vector<std::vector<MultiFidelityStudyRow>> cell_rows(config.n_fields);
    std::mutex log_mutex;

    parallel_for(config.n_fields, config.jobs, [&](std::size_t rep) {
        auto& rows = cell_rows[rep];
        const std::uint64_t rep_seed = derive_seed(config.seed, rep);
        double agreement = nan_value;
        try {
            const KernelParams truth_params{config.eta, config.ell, config.nu, 2};
            const Eigen::VectorXd field =
                sample_prior_field(*basis, truth_params, derive_seed(rep_seed, 1), config.gpc.latent.convention);
            const auto truth = field_to_labels(field);
            LowFidelityCorruption corruption;
            corruption.agreement_target = config.agreement_target;
            corruption.ell_noise = config.ell_noise;
            corruption.nu = config.nu;
            corruption.convention = config.gpc.latent.convention;
            const auto low = make_low_fidelity(field, *basis, corruption, derive_seed(rep_seed, 3));
            agreement = low.agreement;

            DistanceProvider distances = heat_distance_provider(solver);
            const auto design = farthest_point_design(mesh, config.n_low, derive_seed(rep_seed, 2), distances);
            const std::vector<VertexId> hv(design.begin(), design.begin() + static_cast<long>(config.n_high));
            const auto test = complement(mesh.vertex_count(), design);
            const auto truth_test = gather(truth, test);

            const auto high_data = LabeledDataset::from_labels(hv, gather(truth, hv), Fidelity::high, "synthetic high");
            LabeledDataset joint = high_data;
            for (auto v : design) joint.entries.push_back({v, low.labels[v], Fidelity::low});

            auto run = [&](const std::string& name, auto&& fn) {
                try {
                    double rho = nan_value;
                    const auto pred = fn(rho);
                    const auto [ba, st] = score(truth_test, pred);
                    rows.push_back({rep, name, ba, agreement, rho, st});
                } catch (const std::exception& e) {
                    rows.push_back({rep, name, nan_value, agreement, nan_value, std::string("error: ") + e.what()});
                }
            };
            run("nn", [&](double&) { return nn_classify(mesh, high_data, test, distances); });
            run("gp", [&](double&) {
                const auto clf =
                    train(mesh, basis, high_data, config.single_priors, derive_seed(rep_seed, 10), config.gpc);
                return field_labels(clf.predict(test));
            });
            run("mf", [&](double& rho) {
                const auto clf = train_mf(mesh, basis, joint, config.multi_priors, derive_seed(rep_seed, 11), config.gpc);
                rho = clf.samples().draws.col(4).mean();
                return field_labels(clf.predict(test));
            });
        } catch (const std::exception& e) {
            for (const char* c : {"nn", "gp", "mf"}) {
                rows.push_back({rep, c, nan_value, agreement, nan_value, std::string("error: ") + e.what()});
            }
        }
        std::lock_guard lock(log_mutex);
        spdlog::info("multi-fidelity replicate {} done", rep);
    });

    MultiFidelityStudyResult result;
    for (auto& rows : cell_rows) {
        for (auto& r : rows) result.rows.push_back(std::move(r));
    }
    return result;
}

} // namespace mgpc
