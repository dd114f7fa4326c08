// Command-line front end over the C interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mgpc/mgpc.h"

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(mgpc_status s, const std::string& what) {
    if (s != MGPC_OK) {
        throw Failure(what + " failed (" + mgpc_status_name(s) + "): " + mgpc_last_error());
    }
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Mesh = std::unique_ptr<mgpc_mesh, Deleter<mgpc_mesh, mgpc_mesh_free>>;
using Basis = std::unique_ptr<mgpc_basis, Deleter<mgpc_basis, mgpc_basis_free>>;
using Dataset = std::unique_ptr<mgpc_dataset, Deleter<mgpc_dataset, mgpc_dataset_free>>;
using Model = std::unique_ptr<mgpc_model, Deleter<mgpc_model, mgpc_model_free>>;
using Field = std::unique_ptr<mgpc_field, Deleter<mgpc_field, mgpc_field_free>>;
using Text = std::unique_ptr<char, Deleter<char, mgpc_string_free>>;

Mesh load_mesh(const std::string& path, bool raw) {
    mgpc_mesh* m = nullptr;
    check(mgpc_mesh_load(path.c_str(), raw ? 0 : 1, &m), "loading mesh " + path);
    return Mesh(m);
}

Basis load_basis(const std::string& path) {
    mgpc_basis* b = nullptr;
    check(mgpc_basis_load(path.c_str(), &b), "loading basis " + path);
    return Basis(b);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Failure("cannot write " + path);
    out << text;
}

std::vector<size_t> read_vertices(const std::string& path) {
    size_t* v = nullptr;
    size_t n = 0;
    check(mgpc_read_vertex_list(path.c_str(), &v, &n), "reading vertex list " + path);
    std::vector<size_t> out(v, v + n);
    mgpc_vertex_list_free(v);
    return out;
}

std::string config_text(const std::string& path) { return path.empty() ? std::string() : read_text(path); }

/// Mesh and basis named in a study config (flags win); a missing basis is computed.
std::pair<Mesh, Basis> study_inputs(const nlohmann::json& cfg, std::string mesh_path, std::string basis_path,
                                    bool raw) {
    if (mesh_path.empty()) mesh_path = cfg.value("mesh", std::string());
    if (basis_path.empty()) basis_path = cfg.value("basis", std::string());
    Mesh mesh;
    if (mesh_path.empty() || mesh_path == "demo") {
        mgpc_mesh* m = nullptr;
        check(mgpc_mesh_generate("demo", nullptr, raw ? 0 : 1, &m), "generating demo mesh");
        mesh.reset(m);
    } else {
        mesh = load_mesh(mesh_path, raw);
    }
    Basis basis;
    if (!basis_path.empty() && std::ifstream(basis_path).good()) {
        basis = load_basis(basis_path);
    } else {
        mgpc_basis* b = nullptr;
        const size_t n_eig = cfg.value("n_eig", size_t{1000});
        check(mgpc_basis_compute(mesh.get(), n_eig, nullptr, &b), "computing basis");
        basis.reset(b);
        if (!basis_path.empty()) check(mgpc_basis_save(b, basis_path.c_str()), "saving basis " + basis_path);
    }
    return {std::move(mesh), std::move(basis)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian process classification on triangulated surfaces"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mgpc_version()));
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

    // mesh
    auto* mesh_cmd = app.add_subcommand("mesh", "Generate a built-in mesh");
    std::string mesh_kind = "demo", mesh_out, mesh_opts;
    mesh_cmd->add_option("--kind", mesh_kind, "demo, icosphere or rectangle")->capture_default_str();
    mesh_cmd->add_option("--options", mesh_opts, "JSON generator options");
    mesh_cmd->add_option("--out", mesh_out, "Output .off or .ply")->required();

    // eigen
    auto* eigen_cmd = app.add_subcommand("eigen", "Compute and cache the Laplace-Beltrami spectrum");
    std::string eig_mesh, eig_out, eig_mass = "lumped", eig_method = "auto";
    size_t n_eig = 0;
    bool eig_raw = false;
    eigen_cmd->add_option("--mesh", eig_mesh, "Input mesh (.off/.ply)")->required()->check(CLI::ExistingFile);
    eigen_cmd->add_option("--n-eig", n_eig, "Number of eigenpairs")->required()->check(CLI::PositiveNumber);
    eigen_cmd->add_option("--out", eig_out, "Basis cache file")->required();
    eigen_cmd->add_option("--mass", eig_mass, "lumped or consistent")
        ->check(CLI::IsMember({"lumped", "consistent"}))
        ->capture_default_str();
    eigen_cmd->add_option("--method", eig_method, "auto, dense or lanczos")
        ->check(CLI::IsMember({"auto", "dense", "lanczos"}))
        ->capture_default_str();
    eigen_cmd->add_flag("--raw", eig_raw, "Do not normalize mesh coordinates");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Threshold a prior draw into ground-truth labels");
    std::string syn_basis, syn_out;
    double syn_ell = 0.8, syn_nu = 1.5, syn_eta = 1.0, syn_agree = 0.0, syn_noise = 0.2;
    uint64_t syn_seed = 0;
    synth_cmd->add_option("--basis", syn_basis, "Basis cache")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--ell", syn_ell, "Length scale")->required()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--nu", syn_nu, "Smoothness")->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--eta", syn_eta, "Amplitude")->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--seed", syn_seed, "Seed")->capture_default_str();
    synth_cmd->add_option("--low-agreement", syn_agree, "Also emit low-fidelity labels at this agreement")
        ->check(CLI::Range(0.0, 1.0));
    synth_cmd->add_option("--ell-noise", syn_noise, "Length scale of the low-fidelity corruption")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--out", syn_out, "Dataset CSV")->required();

    // design
    auto* design_cmd = app.add_subcommand("design", "Farthest-point sampling design");
    std::string des_mesh, des_out;
    size_t des_n = 0;
    uint64_t des_seed = 0;
    bool des_raw = false;
    design_cmd->add_option("--mesh", des_mesh, "Input mesh")->required()->check(CLI::ExistingFile);
    design_cmd->add_option("--n", des_n, "Number of points")->required()->check(CLI::PositiveNumber);
    design_cmd->add_option("--seed", des_seed, "Seed")->capture_default_str();
    design_cmd->add_option("--out", des_out, "Vertex list CSV")->required();
    design_cmd->add_flag("--raw", des_raw, "Do not normalize mesh coordinates");

    // train
    auto* train_cmd = app.add_subcommand("train", "Fit a classifier and store it");
    std::string tr_kind, tr_data, tr_basis, tr_mesh, tr_out, tr_priors, tr_config, tr_design;
    uint64_t tr_seed = 0;
    bool tr_raw = false;
    train_cmd->add_option("kind", tr_kind, "gp, mf or nn")->required()->check(CLI::IsMember({"gp", "mf", "nn"}));
    train_cmd->add_option("--data", tr_data, "Labeled dataset CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--mesh", tr_mesh, "Mesh the basis was built on")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--basis", tr_basis, "Basis cache (gp, mf)")->check(CLI::ExistingFile);
    train_cmd->add_option("--priors", tr_priors, "single or mf (default: mf for mf, else single)")
        ->check(CLI::IsMember({"single", "mf"}));
    train_cmd->add_option("--seed", tr_seed, "Seed")->capture_default_str();
    train_cmd->add_option("--config", tr_config, "Classifier settings JSON")->check(CLI::ExistingFile);
    train_cmd->add_option("--at", tr_design, "Keep only dataset entries at these vertices (vertex list CSV)")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", tr_out, "Model file")->required();
    train_cmd->add_flag("--raw", tr_raw, "Do not normalize mesh coordinates");

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "Predict on every vertex");
    std::string pr_model, pr_out, pr_csv, pr_mesh, pr_basis;
    pred_cmd->add_option("--model", pr_model, "Model file")->required()->check(CLI::ExistingFile);
    pred_cmd->add_option("--out", pr_out, "Field PLY")->required();
    pred_cmd->add_option("--csv", pr_csv, "Also write vertex_id,prob,mu,var");
    pred_cmd->add_option("--mesh", pr_mesh, "Override the recorded mesh path")->check(CLI::ExistingFile);
    pred_cmd->add_option("--basis", pr_basis, "Override the recorded basis path")->check(CLI::ExistingFile);

    // active
    auto* act_cmd = app.add_subcommand("active", "Active-learning loop");
    std::string al_oracle, al_init, al_mesh, al_basis, al_out, al_data, al_config, al_priors = "single";
    size_t al_budget = 0;
    uint64_t al_seed = 0;
    bool al_raw = false;
    act_cmd->add_option("--oracle", al_oracle, "synth:ell=L,nu=V,eta=E,seed=S or file:labels.csv")->required();
    act_cmd->add_option("--init", al_init, "Initial vertex list CSV")->required()->check(CLI::ExistingFile);
    act_cmd->add_option("--budget", al_budget, "Total labels")->required()->check(CLI::PositiveNumber);
    act_cmd->add_option("--mesh", al_mesh, "Mesh")->required()->check(CLI::ExistingFile);
    act_cmd->add_option("--basis", al_basis, "Basis cache")->required()->check(CLI::ExistingFile);
    act_cmd->add_option("--priors", al_priors, "single or mf")->check(CLI::IsMember({"single", "mf"}))->capture_default_str();
    act_cmd->add_option("--seed", al_seed, "Seed")->capture_default_str();
    act_cmd->add_option("--config", al_config, "Settings JSON ({gpc, acquisition_gpc, exclude_boundary})")
        ->check(CLI::ExistingFile);
    act_cmd->add_option("--out", al_out, "Final model file");
    act_cmd->add_option("--out-data", al_data, "Acquired dataset CSV");
    act_cmd->add_flag("--raw", al_raw, "Do not normalize mesh coordinates");

    // assess
    auto* assess_cmd = app.add_subcommand("assess", "Synthetic accuracy study");
    std::string as_config, as_mesh, as_basis, as_out = "assessment.csv", as_summary;
    size_t as_jobs = 0;
    bool as_raw = false;
    assess_cmd->add_option("--config", as_config, "Study JSON")->required()->check(CLI::ExistingFile);
    assess_cmd->add_option("--mesh", as_mesh, "Mesh (overrides config 'mesh'; default demo surface)");
    assess_cmd->add_option("--basis", as_basis, "Basis cache (overrides config 'basis'; computed if missing)");
    assess_cmd->add_option("--out", as_out, "Rows CSV")->capture_default_str();
    assess_cmd->add_option("--summary", as_summary, "Summary JSON");
    assess_cmd->add_option("--jobs", as_jobs, "Worker threads (0: all cores)")->capture_default_str();
    assess_cmd->add_flag("--raw", as_raw, "Do not normalize mesh coordinates");

    // mf-study
    auto* mfs_cmd = app.add_subcommand("mf-study", "Multi-fidelity versus single-fidelity study");
    std::string mf_config, mf_mesh, mf_basis, mf_out = "mf_study.csv", mf_summary;
    size_t mf_jobs = 0;
    bool mf_raw = false;
    mfs_cmd->add_option("--config", mf_config, "Study JSON")->check(CLI::ExistingFile);
    mfs_cmd->add_option("--mesh", mf_mesh, "Mesh (default demo surface)");
    mfs_cmd->add_option("--basis", mf_basis, "Basis cache (computed if missing)");
    mfs_cmd->add_option("--out", mf_out, "Rows CSV")->capture_default_str();
    mfs_cmd->add_option("--summary", mf_summary, "Summary JSON");
    mfs_cmd->add_option("--jobs", mf_jobs, "Worker threads (0: all cores)")->capture_default_str();
    mfs_cmd->add_flag("--raw", mf_raw, "Do not normalize mesh coordinates");

    // inducibility
    auto* ind_cmd = app.add_subcommand("inducibility", "Area fraction predicted inducible");
    std::string in_field, in_density;
    ind_cmd->add_option("--field", in_field, "Field PLY")->required()->check(CLI::ExistingFile);
    ind_cmd->add_option("--density", in_density, "Per-vertex density CSV (vertex_id,rho)")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        check(mgpc_set_log_level(log_level.c_str()), "setting log level");

        if (*mesh_cmd) {
            mgpc_mesh* m = nullptr;
            check(mgpc_mesh_generate(mesh_kind.c_str(), mesh_opts.c_str(), 0, &m), "generating mesh");
            Mesh mesh(m);
            check(mgpc_mesh_save(m, mesh_out.c_str()), "writing " + mesh_out);
            std::cout << mgpc_mesh_vertex_count(m) << " vertices, " << mgpc_mesh_triangle_count(m) << " triangles, "
                      << mgpc_mesh_boundary_count(m) << " boundary vertices\n";
        } else if (*eigen_cmd) {
            auto mesh = load_mesh(eig_mesh, eig_raw);
            const nlohmann::json opts{{"mass", eig_mass}, {"method", eig_method}};
            mgpc_basis* b = nullptr;
            check(mgpc_basis_compute(mesh.get(), n_eig, opts.dump().c_str(), &b), "eigen solve");
            Basis basis(b);
            check(mgpc_basis_save(b, eig_out.c_str()), "writing " + eig_out);
            std::vector<double> ev(mgpc_basis_n_eig(b));
            check(mgpc_basis_eigenvalues(b, ev.data()), "reading eigenvalues");
            std::cout << ev.size() << " eigenpairs; lambda range [" << ev.front() << ", " << ev.back() << "]\n";
        } else if (*synth_cmd) {
            auto basis = load_basis(syn_basis);
            nlohmann::json o{{"ell", syn_ell}, {"nu", syn_nu}, {"eta", syn_eta}, {"seed", syn_seed}};
            if (synth_cmd->count("--low-agreement")) {
                o["low_fidelity"] = {{"agreement", syn_agree}, {"ell_noise", syn_noise}};
            }
            mgpc_dataset* d = nullptr;
            check(mgpc_synth_labels(basis.get(), o.dump().c_str(), &d), "synthesizing labels");
            Dataset data(d);
            check(mgpc_dataset_write(d, syn_out.c_str()), "writing " + syn_out);
        } else if (*design_cmd) {
            auto mesh = load_mesh(des_mesh, des_raw);
            std::vector<size_t> pts(des_n);
            check(mgpc_design(mesh.get(), des_n, des_seed, pts.data()), "design");
            check(mgpc_write_vertex_list(des_out.c_str(), pts.data(), pts.size()), "writing " + des_out);
        } else if (*train_cmd) {
            auto mesh = load_mesh(tr_mesh, tr_raw);
            Basis basis;
            if (tr_kind != "nn") {
                if (tr_basis.empty()) throw CLI::RequiredError("--basis");
                basis = load_basis(tr_basis);
            }
            mgpc_dataset* d = nullptr;
            check(mgpc_dataset_read(tr_data.c_str(), &d), "reading " + tr_data);
            Dataset data(d);
            if (!tr_design.empty()) {
                const auto keep = read_vertices(tr_design);
                std::vector<bool> in(mgpc_mesh_vertex_count(mesh.get()), false);
                for (auto v : keep) {
                    if (v < in.size()) in[v] = true;
                }
                std::vector<size_t> vs;
                std::vector<int> ys, fs;
                for (size_t i = 0; i < mgpc_dataset_size(d); ++i) {
                    size_t v = 0;
                    int y = 0, f = 0;
                    check(mgpc_dataset_entry(d, i, &v, &y, &f), "reading dataset");
                    if (v < in.size() && in[v]) {
                        vs.push_back(v);
                        ys.push_back(y);
                        fs.push_back(f);
                    }
                }
                mgpc_dataset* sub = nullptr;
                check(mgpc_dataset_create(vs.data(), ys.data(), fs.data(), vs.size(), tr_data.c_str(), &sub),
                      "subsetting dataset");
                data.reset(sub);
            }
            const std::string priors = tr_priors.empty() ? (tr_kind == "mf" ? "mf" : "single") : tr_priors;
            const std::string cfg = config_text(tr_config);
            mgpc_model* m = nullptr;
            check(mgpc_model_train(tr_kind.c_str(), mesh.get(), basis.get(), data.get(), priors.c_str(), tr_seed,
                                   cfg.c_str(), &m),
                  "training");
            Model model(m);
            check(mgpc_model_save(m, tr_out.c_str()), "writing " + tr_out);
        } else if (*pred_cmd) {
            mgpc_model* m = nullptr;
            check(mgpc_model_load(pr_model.c_str(), pr_mesh.empty() ? nullptr : pr_mesh.c_str(),
                                  pr_basis.empty() ? nullptr : pr_basis.c_str(), &m),
                  "loading " + pr_model);
            Model model(m);
            mgpc_field* f = nullptr;
            check(mgpc_model_predict(m, nullptr, 0, &f), "prediction");
            Field field(f);
            check(mgpc_field_write_ply(f, mgpc_model_mesh(m), pr_out.c_str()), "writing " + pr_out);
            if (!pr_csv.empty()) check(mgpc_field_write_csv(f, pr_csv.c_str()), "writing " + pr_csv);
        } else if (*act_cmd) {
            auto mesh = load_mesh(al_mesh, al_raw);
            auto basis = load_basis(al_basis);
            const auto init = read_vertices(al_init);
            const std::string cfg = config_text(al_config);
            mgpc_model* m = nullptr;
            mgpc_dataset* d = nullptr;
            const mgpc_status s = mgpc_active_learning(mesh.get(), basis.get(), al_oracle.c_str(), init.data(),
                                                       init.size(), al_budget, al_priors.c_str(), al_seed,
                                                       cfg.c_str(), &m, &d);
            Model model(m);
            Dataset data(d);
            const std::string err = mgpc_last_error();
            if (d && !al_data.empty()) check(mgpc_dataset_write(d, al_data.c_str()), "writing " + al_data);
            if (m && !al_out.empty() && s == MGPC_OK) check(mgpc_model_save(m, al_out.c_str()), "writing " + al_out);
            if (s != MGPC_OK) throw Failure(std::string("active learning failed (") + mgpc_status_name(s) + "): " + err);
            std::cout << "acquired " << (d ? mgpc_dataset_size(d) : 0) << " labels\n";
        } else if (*assess_cmd || *mfs_cmd) {
            const bool assess = assess_cmd->parsed();
            const std::string path = assess ? as_config : mf_config;
            nlohmann::json cfg = path.empty() ? nlohmann::json::object() : nlohmann::json::parse(read_text(path));
            const size_t jobs = assess ? as_jobs : mf_jobs;
            if ((assess ? assess_cmd : mfs_cmd)->count("--jobs")) cfg["jobs"] = jobs;
            auto [mesh, basis] = study_inputs(cfg, assess ? as_mesh : mf_mesh, assess ? as_basis : mf_basis,
                                              assess ? as_raw : mf_raw);
            char* csv = nullptr;
            char* summary = nullptr;
            const std::string text = cfg.dump();
            if (assess) check(mgpc_assess(mesh.get(), basis.get(), text.c_str(), &csv, &summary), "assessment");
            else check(mgpc_mf_study(mesh.get(), basis.get(), text.c_str(), &csv, &summary), "multi-fidelity study");
            Text c(csv), s(summary);
            write_text(assess ? as_out : mf_out, csv);
            const std::string sp = assess ? as_summary : mf_summary;
            if (!sp.empty()) write_text(sp, summary);
            else std::cout << summary << "\n";
        } else if (*ind_cmd) {
            mgpc_field* f = nullptr;
            mgpc_mesh* m = nullptr;
            check(mgpc_field_read_ply(in_field.c_str(), &f, &m), "reading " + in_field);
            Field field(f);
            Mesh mesh(m);
            double value = 0.0;
            if (!in_density.empty()) {
                std::vector<double> rho(mgpc_mesh_vertex_count(m));
                check(mgpc_read_vertex_scalars(in_density.c_str(), rho.size(), rho.data()), "reading " + in_density);
                check(mgpc_inducibility(f, m, rho.data(), &value), "inducibility");
            } else {
                check(mgpc_inducibility(f, m, nullptr, &value), "inducibility");
            }
            std::printf("%.10g\n", value);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
