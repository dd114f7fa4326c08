#include "mgpc/mgpc.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mgpc/baseline.hpp"
#include "mgpc/dataset.hpp"
#include "mgpc/error.hpp"
#include "mgpc/eval.hpp"
#include "mgpc/geodesic.hpp"
#include "mgpc/gpc.hpp"
#include "mgpc/laplace.hpp"
#include "mgpc/mesh.hpp"
#include "mgpc/meshgen.hpp"
#include "mgpc/mfgpc.hpp"
#include "mgpc/model_io.hpp"
#include "mgpc/sampling.hpp"
#include "mgpc/synth.hpp"

using namespace mgpc;
using nlohmann::json;

struct mgpc_mesh {
    std::shared_ptr<const TriangleMesh> mesh;
    std::string path;  ///< absolute source path, empty if generated
    bool normalized = false;
    mutable std::shared_ptr<const HeatGeodesicSolver> solver;
    mutable DistanceProvider distances;

    const DistanceProvider& provider() const {
        if (!solver) {
            solver = std::make_shared<const HeatGeodesicSolver>(*mesh);
            distances = heat_distance_provider(solver);
        }
        return distances;
    }
};

struct mgpc_basis {
    std::shared_ptr<const SpectralBasis> basis;
    std::string path;
};

struct mgpc_dataset {
    LabeledDataset data;
};

struct mgpc_model {
    std::string kind;
    std::shared_ptr<mgpc_mesh> mesh;
    std::shared_ptr<const SpectralBasis> basis;
    std::string basis_path;
    std::string priors_name;
    PriorSpec priors;
    GpcConfig config;
    std::uint64_t seed = 0;
    LabeledDataset data;
    std::optional<TrainedClassifier> gp;
    std::optional<TrainedMFClassifier> mf;
};

struct mgpc_field {
    ClassProbabilityField field;
};

namespace {

thread_local std::string last_error;

mgpc_status code_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::argument: return MGPC_ERR_ARGUMENT;
        case ErrorCode::format: return MGPC_ERR_FORMAT;
        case ErrorCode::validation: return MGPC_ERR_VALIDATION;
        case ErrorCode::geometry: return MGPC_ERR_GEOMETRY;
        case ErrorCode::numerical: return MGPC_ERR_NUMERICAL;
        case ErrorCode::io: return MGPC_ERR_IO;
        case ErrorCode::calibration: return MGPC_ERR_CALIBRATION;
        case ErrorCode::undefined_metric: return MGPC_ERR_UNDEFINED_METRIC;
        case ErrorCode::oracle: return MGPC_ERR_ORACLE;
    }
    return MGPC_ERR_INTERNAL;
}

template <class F>
mgpc_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return MGPC_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return code_of(e.code());
    } catch (const json::exception& e) {
        last_error = std::string("invalid JSON: ") + e.what();
        return MGPC_ERR_FORMAT;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return MGPC_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return MGPC_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return MGPC_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) fail(ErrorCode::argument, std::string(what) + " must not be NULL");
}

json parse_options(const char* text) {
    if (!text || !*text) return json::object();
    json j = json::parse(text);
    if (!j.is_object()) fail(ErrorCode::format, "options must be a JSON object");
    return j;
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string absolute_path(const char* path) { return std::filesystem::absolute(path).lexically_normal().string(); }

PriorSpec priors_named(const std::string& name) {
    if (name == "single") return PriorSpec::single_fidelity();
    if (name == "mf") return PriorSpec::multi_fidelity();
    fail(ErrorCode::argument, "priors must be 'single' or 'mf', got '" + name + "'");
}

KappaConvention convention_named(const std::string& name) {
    if (name == "inverse-square") return KappaConvention::inverse_square;
    if (name == "spde") return KappaConvention::spde;
    fail(ErrorCode::argument, "kappa_convention must be 'inverse-square' or 'spde'");
}

std::shared_ptr<mgpc_mesh> open_mesh(const std::string& path, bool normalize) {
    auto m = std::make_shared<mgpc_mesh>();
    TriangleMesh mesh = load_mesh(path);
    m->mesh = std::make_shared<const TriangleMesh>(normalize ? normalize_coordinates(mesh) : std::move(mesh));
    m->path = path;
    m->normalized = normalize;
    return m;
}

void check_basis_matches(const TriangleMesh& mesh, const SpectralBasis& basis) {
    if (mesh.vertex_count() != basis.vertex_count()) {
        fail(ErrorCode::validation, "basis has " + std::to_string(basis.vertex_count()) + " vertices but the mesh has " +
                                        std::to_string(mesh.vertex_count()));
    }
}

json dataset_to_json(const LabeledDataset& d) {
    json v = json::array(), y = json::array(), f = json::array();
    for (const auto& e : d.entries) {
        v.push_back(e.vertex);
        y.push_back(e.label);
        f.push_back(to_string(e.fidelity));
    }
    return {{"vertex_id", v}, {"label", y}, {"fidelity", f}, {"provenance", d.provenance}};
}

LabeledDataset dataset_from_json(const json& j) {
    LabeledDataset d;
    const auto& v = j.at("vertex_id");
    const auto& y = j.at("label");
    const auto& f = j.at("fidelity");
    if (v.size() != y.size() || v.size() != f.size()) fail(ErrorCode::format, "model training data columns differ in length");
    for (std::size_t i = 0; i < v.size(); ++i) {
        d.entries.push_back({v[i].get<VertexId>(), y[i].get<int>(), fidelity_from_string(f[i].get<std::string>())});
    }
    d.provenance = j.value("provenance", std::string());
    return d;
}

void build_classifier(mgpc_model& m, std::optional<Eigen::MatrixXd> draws, double step_size) {
    if (m.kind == "gp") {
        if (draws) {
            m.gp.emplace(TrainedClassifier::from_draws(m.basis, m.data.vertices(Fidelity::high),
                                                       m.data.labels(Fidelity::high), m.priors, m.config,
                                                       std::move(*draws), step_size));
        } else {
            m.gp.emplace(train(*m.mesh->mesh, m.basis, m.data, m.priors, m.seed, m.config));
        }
    } else if (m.kind == "mf") {
        if (draws) {
            m.mf.emplace(TrainedMFClassifier::from_draws(
                m.basis, m.data.vertices(Fidelity::low), m.data.labels(Fidelity::low), m.data.vertices(Fidelity::high),
                m.data.labels(Fidelity::high), m.priors, m.config, std::move(*draws), step_size));
        } else {
            m.mf.emplace(train_mf(*m.mesh->mesh, m.basis, m.data, m.priors, m.seed, m.config));
        }
    } else if (m.kind == "nn") {
        m.data.validate(m.mesh->mesh->vertex_count());
        if (m.data.count(Fidelity::high) == 0) fail(ErrorCode::argument, "nearest-neighbour model needs high-fidelity labels");
    } else {
        fail(ErrorCode::argument, "model kind must be gp, mf or nn, got '" + m.kind + "'");
    }
}

std::vector<VertexId> to_ids(const size_t* p, size_t n) { return std::vector<VertexId>(p, p + n); }

/// "synth:ell=0.8,nu=1.5,eta=1,seed=3" or "file:labels.csv".
std::unique_ptr<LabelOracle> make_oracle(const std::string& spec, const SpectralBasis& basis, KappaConvention conv) {
    if (spec.rfind("file:", 0) == 0) return std::make_unique<FileOracle>(spec.substr(5));
    if (spec.rfind("synth:", 0) != 0) fail(ErrorCode::argument, "oracle must start with 'synth:' or 'file:'");
    KernelParams p;
    std::uint64_t seed = 0;
    std::stringstream ss(spec.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) fail(ErrorCode::argument, "oracle parameter '" + item + "' lacks '='");
        const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        try {
            std::size_t used = 0;
            if (key == "ell") p.ell = std::stod(val, &used);
            else if (key == "nu") p.nu = std::stod(val, &used);
            else if (key == "eta") p.eta = std::stod(val, &used);
            else if (key == "seed") seed = std::stoull(val, &used);
            else fail(ErrorCode::argument, "unknown oracle parameter '" + key + "'");
            if (used != val.size()) throw std::invalid_argument(val);
        } catch (const std::logic_error&) {
            fail(ErrorCode::argument, "bad value for oracle parameter '" + key + "': " + val);
        }
    }
    p.validate();
    auto labels = field_to_labels(sample_prior_field(basis, p, seed, conv));
    return std::make_unique<VectorOracle>(std::move(labels), spec);
}

} // namespace

extern "C" {

const char* mgpc_version(void) { return "1.0.0"; }

const char* mgpc_status_name(mgpc_status status) {
    switch (status) {
        case MGPC_OK: return "ok";
        case MGPC_ERR_ARGUMENT: return "argument";
        case MGPC_ERR_FORMAT: return "format";
        case MGPC_ERR_VALIDATION: return "validation";
        case MGPC_ERR_GEOMETRY: return "geometry";
        case MGPC_ERR_NUMERICAL: return "numerical";
        case MGPC_ERR_IO: return "io";
        case MGPC_ERR_CALIBRATION: return "calibration";
        case MGPC_ERR_UNDEFINED_METRIC: return "undefined_metric";
        case MGPC_ERR_ORACLE: return "oracle";
        case MGPC_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* mgpc_last_error(void) { return last_error.c_str(); }

void mgpc_string_free(char* text) { std::free(text); }

mgpc_status mgpc_set_log_level(const char* level) {
    return guarded([&] {
        require(level, "level");
        const std::string name(level);
        const auto lv = spdlog::level::from_str(name);
        if (lv == spdlog::level::off && name != "off") fail(ErrorCode::argument, "unknown log level '" + name + "'");
        spdlog::set_level(lv);
    });
}

// ---- meshes ----

mgpc_status mgpc_mesh_load(const char* path, int normalize, mgpc_mesh** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        auto m = open_mesh(absolute_path(path), normalize != 0);
        *out = new mgpc_mesh(std::move(*m));
    });
}

mgpc_status mgpc_mesh_generate(const char* kind, const char* options_json, int normalize, mgpc_mesh** out) {
    return guarded([&] {
        require(kind, "kind");
        require(out, "out");
        *out = nullptr;
        const json o = parse_options(options_json);
        const std::string k(kind);
        TriangleMesh mesh;
        if (k == "demo") mesh = meshgen::demo_surface(o.value("frequency", std::size_t{18}));
        else if (k == "icosphere") mesh = meshgen::icosphere(o.value("level", std::size_t{4}), o.value("radius", 1.0));
        else if (k == "rectangle") {
            mesh = meshgen::rectangle(o.value("nx", std::size_t{41}), o.value("ny", std::size_t{21}),
                                      o.value("width", 2.0), o.value("height", 1.0));
        } else {
            fail(ErrorCode::argument, "mesh kind must be demo, icosphere or rectangle");
        }
        auto m = std::make_unique<mgpc_mesh>();
        m->mesh = std::make_shared<const TriangleMesh>(normalize ? normalize_coordinates(mesh) : std::move(mesh));
        m->normalized = normalize != 0;
        *out = m.release();
    });
}

mgpc_status mgpc_mesh_save(const mgpc_mesh* mesh, const char* path) {
    return guarded([&] {
        require(mesh, "mesh");
        require(path, "path");
        const auto ext = std::filesystem::path(path).extension().string();
        if (ext == ".off") write_off(path, *mesh->mesh);
        else if (ext == ".ply") write_ply(path, *mesh->mesh);
        else fail(ErrorCode::argument, "mesh output must end in .off or .ply");
    });
}

void mgpc_mesh_free(mgpc_mesh* mesh) { delete mesh; }

size_t mgpc_mesh_vertex_count(const mgpc_mesh* mesh) { return mesh ? mesh->mesh->vertex_count() : 0; }
size_t mgpc_mesh_triangle_count(const mgpc_mesh* mesh) { return mesh ? mesh->mesh->triangle_count() : 0; }
size_t mgpc_mesh_boundary_count(const mgpc_mesh* mesh) { return mesh ? mesh->mesh->boundary_vertex_count() : 0; }

mgpc_status mgpc_mesh_geodesic(const mgpc_mesh* mesh, size_t source, double* out) {
    return guarded([&] {
        require(mesh, "mesh");
        require(out, "out");
        if (source >= mesh->mesh->vertex_count()) fail(ErrorCode::argument, "source vertex out of range");
        const auto d = mesh->provider()(source);
        std::copy(d.begin(), d.end(), out);
    });
}

// ---- spectral basis ----

mgpc_status mgpc_basis_compute(const mgpc_mesh* mesh, size_t n_eig, const char* options_json, mgpc_basis** out) {
    return guarded([&] {
        require(mesh, "mesh");
        require(out, "out");
        *out = nullptr;
        const json o = parse_options(options_json);
        const std::string mass = o.value("mass", std::string("lumped"));
        if (mass != "lumped" && mass != "consistent") fail(ErrorCode::argument, "mass must be lumped or consistent");
        EigenSolverOptions opt;
        const std::string method = o.value("method", std::string("auto"));
        if (method == "auto") opt.method = EigenMethod::automatic;
        else if (method == "dense") opt.method = EigenMethod::dense;
        else if (method == "lanczos") opt.method = EigenMethod::lanczos;
        else fail(ErrorCode::argument, "method must be auto, dense or lanczos");
        opt.seed = o.value("seed", opt.seed);
        opt.dense_limit = o.value("dense_limit", opt.dense_limit);
        const auto ops = assemble_operators(*mesh->mesh, mass == "lumped" ? MassKind::lumped : MassKind::consistent);
        auto b = std::make_unique<mgpc_basis>();
        b->basis = std::make_shared<const SpectralBasis>(solve_spectrum(ops, n_eig, opt));
        *out = b.release();
    });
}

mgpc_status mgpc_basis_load(const char* path, mgpc_basis** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        auto b = std::make_unique<mgpc_basis>();
        b->path = absolute_path(path);
        b->basis = std::make_shared<const SpectralBasis>(load_basis(b->path));
        *out = b.release();
    });
}

mgpc_status mgpc_basis_save(const mgpc_basis* basis, const char* path) {
    return guarded([&] {
        require(basis, "basis");
        require(path, "path");
        save_basis(path, *basis->basis);
    });
}

void mgpc_basis_free(mgpc_basis* basis) { delete basis; }
size_t mgpc_basis_n_eig(const mgpc_basis* basis) { return basis ? basis->basis->n_eig() : 0; }
size_t mgpc_basis_vertex_count(const mgpc_basis* basis) { return basis ? basis->basis->vertex_count() : 0; }

mgpc_status mgpc_basis_eigenvalues(const mgpc_basis* basis, double* out) {
    return guarded([&] {
        require(basis, "basis");
        require(out, "out");
        const auto& ev = basis->basis->eigenvalues();
        std::copy(ev.data(), ev.data() + ev.size(), out);
    });
}

// ---- datasets ----

mgpc_status mgpc_dataset_read(const char* path, mgpc_dataset** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        auto d = std::make_unique<mgpc_dataset>();
        d->data = read_dataset_csv(path);
        *out = d.release();
    });
}

mgpc_status mgpc_dataset_write(const mgpc_dataset* data, const char* path) {
    return guarded([&] {
        require(data, "data");
        require(path, "path");
        write_dataset_csv(path, data->data);
    });
}

mgpc_status mgpc_dataset_create(const size_t* vertices, const int* labels, const int* fidelity, size_t n,
                                const char* provenance, mgpc_dataset** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        if (n > 0) {
            require(vertices, "vertices");
            require(labels, "labels");
            require(fidelity, "fidelity");
        }
        auto d = std::make_unique<mgpc_dataset>();
        for (size_t i = 0; i < n; ++i) {
            if (fidelity[i] != 0 && fidelity[i] != 1) fail(ErrorCode::argument, "fidelity must be 0 (low) or 1 (high)");
            d->data.entries.push_back({vertices[i], labels[i], fidelity[i] ? Fidelity::high : Fidelity::low});
        }
        if (provenance) d->data.provenance = provenance;
        *out = d.release();
    });
}

void mgpc_dataset_free(mgpc_dataset* data) { delete data; }
size_t mgpc_dataset_size(const mgpc_dataset* data) { return data ? data->data.entries.size() : 0; }

mgpc_status mgpc_dataset_entry(const mgpc_dataset* data, size_t i, size_t* vertex, int* label, int* fidelity) {
    return guarded([&] {
        require(data, "data");
        if (i >= data->data.entries.size()) fail(ErrorCode::argument, "dataset index out of range");
        const auto& e = data->data.entries[i];
        if (vertex) *vertex = e.vertex;
        if (label) *label = e.label;
        if (fidelity) *fidelity = e.fidelity == Fidelity::high ? 1 : 0;
    });
}

mgpc_status mgpc_synth_labels(const mgpc_basis* basis, const char* options_json, mgpc_dataset** out) {
    return guarded([&] {
        require(basis, "basis");
        require(out, "out");
        *out = nullptr;
        const json o = parse_options(options_json);
        KernelParams p;
        p.ell = o.value("ell", 0.8);
        p.nu = o.value("nu", 1.5);
        p.eta = o.value("eta", 1.0);
        p.validate();
        const std::uint64_t seed = o.value("seed", std::uint64_t{0});
        const auto conv = convention_named(o.value("kappa_convention", std::string("inverse-square")));
        const auto& b = *basis->basis;
        const Eigen::VectorXd f = sample_prior_field(b, p, seed, conv);
        const auto high = field_to_labels(f);
        auto d = std::make_unique<mgpc_dataset>();
        std::ostringstream prov;
        prov << "synth:ell=" << p.ell << ",nu=" << p.nu << ",eta=" << p.eta << ",seed=" << seed;
        for (VertexId v = 0; v < high.size(); ++v) d->data.entries.push_back({v, high[v], Fidelity::high});
        if (o.contains("low_fidelity")) {
            const json& lo = o.at("low_fidelity");
            LowFidelityCorruption c;
            c.agreement_target = lo.value("agreement", c.agreement_target);
            c.ell_noise = lo.value("ell_noise", c.ell_noise);
            c.tolerance = lo.value("tolerance", c.tolerance);
            c.nu = p.nu;
            c.convention = conv;
            const std::uint64_t low_seed = lo.value("seed", seed + 1);
            const auto low = make_low_fidelity(f, b, c, low_seed);
            for (VertexId v = 0; v < low.labels.size(); ++v) d->data.entries.push_back({v, low.labels[v], Fidelity::low});
            prov << ";low:agreement=" << low.agreement << ",ell_noise=" << c.ell_noise << ",seed=" << low_seed;
        }
        d->data.provenance = prov.str();
        *out = d.release();
    });
}

mgpc_status mgpc_design(const mgpc_mesh* mesh, size_t n, uint64_t seed, size_t* out) {
    return guarded([&] {
        require(mesh, "mesh");
        require(out, "out");
        const auto d = farthest_point_design(*mesh->mesh, n, seed, mesh->provider());
        std::copy(d.begin(), d.end(), out);
    });
}

// ---- models ----

mgpc_status mgpc_model_train(const char* kind, const mgpc_mesh* mesh, const mgpc_basis* basis, const mgpc_dataset* data,
                             const char* priors, uint64_t seed, const char* config_json, mgpc_model** out) {
    return guarded([&] {
        require(kind, "kind");
        require(mesh, "mesh");
        require(data, "data");
        require(out, "out");
        *out = nullptr;
        auto m = std::make_unique<mgpc_model>();
        m->kind = kind;
        m->mesh = std::make_shared<mgpc_mesh>(*mesh);
        m->data = data->data;
        m->seed = seed;
        if (m->kind != "nn") {
            require(basis, "basis");
            check_basis_matches(*mesh->mesh, *basis->basis);
            m->basis = basis->basis;
            m->basis_path = basis->path;
            m->priors_name = priors ? priors : (m->kind == "mf" ? "mf" : "single");
            m->priors = priors_named(m->priors_name);
            m->config = gpc_config_from_json(parse_options(config_json));
        }
        build_classifier(*m, std::nullopt, 0.0);
        *out = m.release();
    });
}

mgpc_status mgpc_model_save(const mgpc_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        ModelFile f;
        f.header = {{"format", "mgpc-model"},
                    {"version", 1},
                    {"kind", model->kind},
                    {"mesh_path", model->mesh->path},
                    {"normalize", model->mesh->normalized},
                    {"vertex_count", model->mesh->mesh->vertex_count()},
                    {"seed", model->seed},
                    {"data", dataset_to_json(model->data)}};
        if (model->kind != "nn") {
            f.header["basis_path"] = model->basis_path;
            f.header["priors_name"] = model->priors_name;
            f.header["priors"] = to_json(model->priors);
            f.header["config"] = to_json(model->config);
            f.header["n_lat"] = model->config.latent.n_lat;
            const auto& s = model->gp ? model->gp->samples() : model->mf->samples();
            f.header["step_size"] = s.step_size;
            f.header["parameter_names"] = s.names;
            f.draws = s.draws;
        }
        write_model_file(path, f);
    });
}

mgpc_status mgpc_model_load(const char* path, const char* mesh_path, const char* basis_path, mgpc_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        ModelFile f = read_model_file(path);
        const json& h = f.header;
        if (h.value("format", std::string()) != "mgpc-model") fail(ErrorCode::format, std::string(path) + " is not a model file");
        auto m = std::make_unique<mgpc_model>();
        m->kind = h.at("kind").get<std::string>();
        const std::string mp = mesh_path ? absolute_path(mesh_path) : h.value("mesh_path", std::string());
        if (mp.empty()) fail(ErrorCode::argument, "model does not record a mesh path; pass one explicitly");
        m->mesh = open_mesh(mp, h.value("normalize", true));
        if (m->mesh->mesh->vertex_count() != h.value("vertex_count", m->mesh->mesh->vertex_count())) {
            fail(ErrorCode::validation, "mesh " + mp + " does not match the model's vertex count");
        }
        m->seed = h.value("seed", std::uint64_t{0});
        m->data = dataset_from_json(h.at("data"));
        double step = 0.0;
        std::optional<Eigen::MatrixXd> draws;
        if (m->kind != "nn") {
            const std::string bp = basis_path ? absolute_path(basis_path) : h.value("basis_path", std::string());
            if (bp.empty()) fail(ErrorCode::argument, "model does not record a basis path; pass one explicitly");
            m->basis = std::make_shared<const SpectralBasis>(load_basis(bp));
            m->basis_path = bp;
            check_basis_matches(*m->mesh->mesh, *m->basis);
            m->priors_name = h.value("priors_name", std::string("single"));
            m->priors = priors_from_json(h.at("priors"));
            m->config = gpc_config_from_json(h.at("config"));
            step = h.value("step_size", 0.0);
            draws = std::move(f.draws);
        }
        build_classifier(*m, std::move(draws), step);
        *out = m.release();
    });
}

void mgpc_model_free(mgpc_model* model) { delete model; }

const char* mgpc_model_kind(const mgpc_model* model) { return model ? model->kind.c_str() : ""; }

const mgpc_mesh* mgpc_model_mesh(const mgpc_model* model) { return model ? model->mesh.get() : nullptr; }

mgpc_status mgpc_model_diagnostics(const mgpc_model* model, char** json_out) {
    return guarded([&] {
        require(model, "model");
        require(json_out, "json_out");
        json j = {{"kind", model->kind}, {"n_high", model->data.count(Fidelity::high)},
                  {"n_low", model->data.count(Fidelity::low)}};
        if (model->gp) j["sampler"] = diagnostics_report(model->gp->samples());
        if (model->mf) j["sampler"] = diagnostics_report(model->mf->samples());
        *json_out = copy_string(j.dump(2));
    });
}

mgpc_status mgpc_model_predict(const mgpc_model* model, const size_t* query, size_t n_query, mgpc_field** out) {
    return guarded([&] {
        require(model, "model");
        require(out, "out");
        *out = nullptr;
        std::vector<VertexId> q;
        if (query) {
            q = to_ids(query, n_query);
        } else {
            q.resize(model->mesh->mesh->vertex_count());
            for (std::size_t i = 0; i < q.size(); ++i) q[i] = i;
        }
        auto f = std::make_unique<mgpc_field>();
        if (model->gp) f->field = model->gp->predict(q);
        else if (model->mf) f->field = model->mf->predict(q);
        else f->field = labels_to_field(q, nn_classify(*model->mesh->mesh, model->data, q, model->mesh->provider()));
        *out = f.release();
    });
}

// ---- fields ----

void mgpc_field_free(mgpc_field* field) { delete field; }
size_t mgpc_field_size(const mgpc_field* field) { return field ? field->field.size() : 0; }

mgpc_status mgpc_field_values(const mgpc_field* field, size_t* vertices, double* probability, double* mean,
                              double* variance) {
    return guarded([&] {
        require(field, "field");
        const auto& f = field->field;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            if (vertices) vertices[i] = f.vertices[i];
            if (probability) probability[i] = f.probability(k);
            if (mean) mean[i] = f.mean(k);
            if (variance) variance[i] = f.variance(k);
        }
    });
}

mgpc_status mgpc_field_write_ply(const mgpc_field* field, const mgpc_mesh* mesh, const char* path) {
    return guarded([&] {
        require(field, "field");
        require(mesh, "mesh");
        require(path, "path");
        write_field_ply(path, *mesh->mesh, field->field);
    });
}

mgpc_status mgpc_field_write_csv(const mgpc_field* field, const char* path) {
    return guarded([&] {
        require(field, "field");
        require(path, "path");
        write_field_csv(path, field->field);
    });
}

mgpc_status mgpc_field_read_ply(const char* path, mgpc_field** out, mgpc_mesh** mesh_out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        if (mesh_out) *mesh_out = nullptr;
        auto mesh = std::make_unique<mgpc_mesh>();
        TriangleMesh tm;
        auto f = std::make_unique<mgpc_field>();
        f->field = read_field_ply(path, &tm);
        if (mesh_out) {
            mesh->mesh = std::make_shared<const TriangleMesh>(std::move(tm));
            mesh->path = absolute_path(path);
            *mesh_out = mesh.release();
        }
        *out = f.release();
    });
}

mgpc_status mgpc_inducibility(const mgpc_field* field, const mgpc_mesh* mesh, const double* density, double* out) {
    return guarded([&] {
        require(field, "field");
        require(mesh, "mesh");
        require(out, "out");
        if (density) {
            const std::vector<double> rho(density, density + mesh->mesh->vertex_count());
            *out = inducibility(field->field, *mesh->mesh, &rho);
        } else {
            *out = inducibility(field->field, *mesh->mesh);
        }
    });
}

mgpc_status mgpc_read_vertex_scalars(const char* path, size_t vertex_count, double* out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        const auto v = read_vertex_scalars_csv(path, vertex_count);
        std::copy(v.begin(), v.end(), out);
    });
}

mgpc_status mgpc_read_vertex_list(const char* path, size_t** vertices, size_t* n) {
    return guarded([&] {
        require(path, "path");
        require(vertices, "vertices");
        require(n, "n");
        *vertices = nullptr;
        *n = 0;
        const auto v = read_vertex_list_csv(path);
        auto* buf = static_cast<size_t*>(std::malloc(std::max<std::size_t>(1, v.size()) * sizeof(size_t)));
        if (!buf) throw std::bad_alloc();
        std::copy(v.begin(), v.end(), buf);
        *vertices = buf;
        *n = v.size();
    });
}

void mgpc_vertex_list_free(size_t* vertices) { std::free(vertices); }

mgpc_status mgpc_write_vertex_list(const char* path, const size_t* vertices, size_t n) {
    return guarded([&] {
        require(path, "path");
        if (n > 0) require(vertices, "vertices");
        write_vertex_list_csv(path, to_ids(vertices, n));
    });
}

// ---- workflows ----

mgpc_status mgpc_active_learning(const mgpc_mesh* mesh, const mgpc_basis* basis, const char* oracle, const size_t* init,
                                 size_t n_init, size_t budget, const char* priors, uint64_t seed,
                                 const char* config_json, mgpc_model** model_out, mgpc_dataset** data_out) {
    mgpc_status status = MGPC_OK;
    std::string oracle_error;
    const mgpc_status s = guarded([&] {
        require(mesh, "mesh");
        require(basis, "basis");
        require(oracle, "oracle");
        require(init, "init");
        if (model_out) *model_out = nullptr;
        if (data_out) *data_out = nullptr;
        check_basis_matches(*mesh->mesh, *basis->basis);
        const json o = parse_options(config_json);
        ActiveLearningConfig cfg;
        if (o.contains("gpc")) {
            cfg.gpc = gpc_config_from_json(o.at("gpc"));
            if (o.contains("acquisition_gpc")) cfg.acquisition_gpc = gpc_config_from_json(o.at("acquisition_gpc"));
            cfg.exclude_boundary = o.value("exclude_boundary", cfg.exclude_boundary);
        } else {
            cfg.gpc = gpc_config_from_json(o);
        }
        const std::string pname = priors ? priors : "single";
        const PriorSpec pr = priors_named(pname);
        const auto orc = make_oracle(oracle, *basis->basis, cfg.gpc.latent.convention);
        const auto init_ids = to_ids(init, n_init);
        auto res = active_learning_loop(*mesh->mesh, basis->basis, *orc, init_ids, budget, pr, seed, cfg);
        if (model_out && res.classifier) {
            auto m = std::make_unique<mgpc_model>();
            m->kind = "gp";
            m->mesh = std::make_shared<mgpc_mesh>(*mesh);
            m->basis = basis->basis;
            m->basis_path = basis->path;
            m->priors_name = pname;
            m->priors = pr;
            m->config = res.classifier->config();
            m->seed = seed;
            m->data = res.data;
            m->gp.emplace(std::move(*res.classifier));
            *model_out = m.release();
        }
        if (data_out) {
            auto d = std::make_unique<mgpc_dataset>();
            d->data = std::move(res.data);
            *data_out = d.release();
        }
        if (!res.error.empty()) {
            status = MGPC_ERR_ORACLE;
            oracle_error = res.error;
        }
    });
    if (s != MGPC_OK) return s;
    if (status != MGPC_OK) last_error = oracle_error;
    return status;
}

mgpc_status mgpc_assess(const mgpc_mesh* mesh, const mgpc_basis* basis, const char* config_json, char** csv_out,
                        char** summary_out) {
    return guarded([&] {
        require(mesh, "mesh");
        require(basis, "basis");
        check_basis_matches(*mesh->mesh, *basis->basis);
        const auto cfg = assessment_config_from_json(parse_options(config_json));
        const auto res = run_assessment(*mesh->mesh, basis->basis, cfg);
        if (csv_out) *csv_out = copy_string(res.to_csv());
        if (summary_out) *summary_out = copy_string(json{{"config", to_json(cfg)}, {"summary", res.summary()}}.dump(2));
    });
}

mgpc_status mgpc_mf_study(const mgpc_mesh* mesh, const mgpc_basis* basis, const char* config_json, char** csv_out,
                          char** summary_out) {
    return guarded([&] {
        require(mesh, "mesh");
        require(basis, "basis");
        check_basis_matches(*mesh->mesh, *basis->basis);
        const auto cfg = mf_study_config_from_json(parse_options(config_json));
        const auto res = run_mf_study(*mesh->mesh, basis->basis, cfg);
        if (csv_out) *csv_out = copy_string(res.to_csv());
        if (summary_out) *summary_out = copy_string(json{{"config", to_json(cfg)}, {"summary", res.summary()}}.dump(2));
    });
}

} // extern "C"
