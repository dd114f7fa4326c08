#ifndef MGPC_H
#define MGPC_H

/*
 * C interface to the manifold GP classification library.
 *
 * Every function returns an mgpc_status; on failure a message for the calling
 * thread is available from mgpc_last_error(). Objects are opaque handles owned
 * by the caller and released with the matching *_free function (NULL is
 * accepted). Options are passed as JSON object strings; NULL or "" means
 * defaults. Strings returned through char** are freed with mgpc_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MGPC_BUILDING)
#    define MGPC_API __declspec(dllexport)
#  else
#    define MGPC_API __declspec(dllimport)
#  endif
#else
#  define MGPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mgpc_status {
    MGPC_OK = 0,
    MGPC_ERR_ARGUMENT = 1,
    MGPC_ERR_FORMAT = 2,
    MGPC_ERR_VALIDATION = 3,
    MGPC_ERR_GEOMETRY = 4,
    MGPC_ERR_NUMERICAL = 5,
    MGPC_ERR_IO = 6,
    MGPC_ERR_CALIBRATION = 7,
    MGPC_ERR_UNDEFINED_METRIC = 8,
    MGPC_ERR_ORACLE = 9,
    MGPC_ERR_INTERNAL = 10
} mgpc_status;

typedef struct mgpc_mesh mgpc_mesh;
typedef struct mgpc_basis mgpc_basis;
typedef struct mgpc_dataset mgpc_dataset;
typedef struct mgpc_model mgpc_model;
typedef struct mgpc_field mgpc_field;

MGPC_API const char* mgpc_version(void);
MGPC_API const char* mgpc_status_name(mgpc_status status);
/* Message of the last failure on this thread ("" if none). */
MGPC_API const char* mgpc_last_error(void);
MGPC_API void mgpc_string_free(char* text);
/* trace, debug, info, warn, error, off */
MGPC_API mgpc_status mgpc_set_log_level(const char* level);

/* ---- meshes ---- */

/* OFF or ASCII PLY; normalize != 0 centers and scales the coordinates. */
MGPC_API mgpc_status mgpc_mesh_load(const char* path, int normalize, mgpc_mesh** out);
/* kind: "demo" {"frequency"}, "icosphere" {"level","radius"},
   "rectangle" {"nx","ny","width","height"}. */
MGPC_API mgpc_status mgpc_mesh_generate(const char* kind, const char* options_json, int normalize, mgpc_mesh** out);
MGPC_API mgpc_status mgpc_mesh_save(const mgpc_mesh* mesh, const char* path);
MGPC_API void mgpc_mesh_free(mgpc_mesh* mesh);
MGPC_API size_t mgpc_mesh_vertex_count(const mgpc_mesh* mesh);
MGPC_API size_t mgpc_mesh_triangle_count(const mgpc_mesh* mesh);
MGPC_API size_t mgpc_mesh_boundary_count(const mgpc_mesh* mesh);
/* Heat-method distances from one vertex; out holds vertex_count values. */
MGPC_API mgpc_status mgpc_mesh_geodesic(const mgpc_mesh* mesh, size_t source, double* out);

/* ---- spectral basis ---- */

/* options: {"mass": "lumped"|"consistent", "method": "auto"|"dense"|"lanczos", "seed"} */
MGPC_API mgpc_status mgpc_basis_compute(const mgpc_mesh* mesh, size_t n_eig, const char* options_json,
                                        mgpc_basis** out);
MGPC_API mgpc_status mgpc_basis_load(const char* path, mgpc_basis** out);
MGPC_API mgpc_status mgpc_basis_save(const mgpc_basis* basis, const char* path);
MGPC_API void mgpc_basis_free(mgpc_basis* basis);
MGPC_API size_t mgpc_basis_n_eig(const mgpc_basis* basis);
MGPC_API size_t mgpc_basis_vertex_count(const mgpc_basis* basis);
MGPC_API mgpc_status mgpc_basis_eigenvalues(const mgpc_basis* basis, double* out);

/* ---- datasets ---- */

MGPC_API mgpc_status mgpc_dataset_read(const char* path, mgpc_dataset** out);
MGPC_API mgpc_status mgpc_dataset_write(const mgpc_dataset* data, const char* path);
/* fidelity: 0 low, 1 high. */
MGPC_API mgpc_status mgpc_dataset_create(const size_t* vertices, const int* labels, const int* fidelity, size_t n,
                                         const char* provenance, mgpc_dataset** out);
MGPC_API void mgpc_dataset_free(mgpc_dataset* data);
MGPC_API size_t mgpc_dataset_size(const mgpc_dataset* data);
MGPC_API mgpc_status mgpc_dataset_entry(const mgpc_dataset* data, size_t i, size_t* vertex, int* label, int* fidelity);

/*
 * Thresholded prior draw over every vertex.
 * options: {"ell", "nu", "eta", "seed", "kappa_convention",
 *           "low_fidelity": {"agreement", "ell_noise", "seed"}}
 * With low_fidelity the dataset also holds calibrated low labels at every vertex.
 */
MGPC_API mgpc_status mgpc_synth_labels(const mgpc_basis* basis, const char* options_json, mgpc_dataset** out);

/* Farthest-point design of n vertices; out holds n ids. */
MGPC_API mgpc_status mgpc_design(const mgpc_mesh* mesh, size_t n, uint64_t seed, size_t* out);

/* ---- models ---- */

/*
 * kind: "gp", "mf" or "nn". priors: "single" or "mf". config_json holds the
 * classifier settings ({"nuts": {...}, "latent": {...}, "n_pred_eig", ...});
 * "nn" ignores basis, priors, seed and config.
 */
MGPC_API mgpc_status mgpc_model_train(const char* kind, const mgpc_mesh* mesh, const mgpc_basis* basis,
                                      const mgpc_dataset* data, const char* priors, uint64_t seed,
                                      const char* config_json, mgpc_model** out);
/* The model file records mesh and basis paths when the handles came from files. */
MGPC_API mgpc_status mgpc_model_save(const mgpc_model* model, const char* path);
/* Reopens the recorded mesh and basis; either path argument overrides it. */
MGPC_API mgpc_status mgpc_model_load(const char* path, const char* mesh_path, const char* basis_path,
                                     mgpc_model** out);
MGPC_API void mgpc_model_free(mgpc_model* model);
MGPC_API const char* mgpc_model_kind(const mgpc_model* model);
/* Mesh the model was trained on; owned by the model. */
MGPC_API const mgpc_mesh* mgpc_model_mesh(const mgpc_model* model);
/* JSON diagnostics: sampler statistics and parameter quantiles. */
MGPC_API mgpc_status mgpc_model_diagnostics(const mgpc_model* model, char** json_out);
/* query == NULL predicts every vertex. */
MGPC_API mgpc_status mgpc_model_predict(const mgpc_model* model, const size_t* query, size_t n_query,
                                        mgpc_field** out);

/* ---- fields ---- */

MGPC_API void mgpc_field_free(mgpc_field* field);
MGPC_API size_t mgpc_field_size(const mgpc_field* field);
/* Any output pointer may be NULL. */
MGPC_API mgpc_status mgpc_field_values(const mgpc_field* field, size_t* vertices, double* probability, double* mean,
                                       double* variance);
MGPC_API mgpc_status mgpc_field_write_ply(const mgpc_field* field, const mgpc_mesh* mesh, const char* path);
MGPC_API mgpc_status mgpc_field_write_csv(const mgpc_field* field, const char* path);
/* Reads a field PLY; the mesh in the file is returned through mesh_out if non-NULL. */
MGPC_API mgpc_status mgpc_field_read_ply(const char* path, mgpc_field** out, mgpc_mesh** mesh_out);
/* density: NULL, or vertex_count values. */
MGPC_API mgpc_status mgpc_inducibility(const mgpc_field* field, const mgpc_mesh* mesh, const double* density,
                                       double* out);
/* Per-vertex scalar CSV (vertex_id,<name>); out holds vertex_count values. */
MGPC_API mgpc_status mgpc_read_vertex_scalars(const char* path, size_t vertex_count, double* out);
MGPC_API mgpc_status mgpc_read_vertex_list(const char* path, size_t** vertices, size_t* n);
MGPC_API void mgpc_vertex_list_free(size_t* vertices);
MGPC_API mgpc_status mgpc_write_vertex_list(const char* path, const size_t* vertices, size_t n);

/* ---- workflows ---- */

/*
 * Active learning from the initial vertices up to `budget` labels.
 * oracle: "synth:ell=L,nu=V,eta=E,seed=S" (thresholded prior draw on the basis)
 *         or "file:labels.csv" (high-fidelity entries of a dataset).
 * Returns the final model and the labeled dataset. When the oracle fails the
 * collected data is still returned with MGPC_ERR_ORACLE.
 */
MGPC_API mgpc_status mgpc_active_learning(const mgpc_mesh* mesh, const mgpc_basis* basis, const char* oracle,
                                          const size_t* init, size_t n_init, size_t budget, const char* priors,
                                          uint64_t seed, const char* config_json, mgpc_model** model_out,
                                          mgpc_dataset** data_out);

/* Synthetic assessment; returns the rows as CSV and a JSON summary. */
MGPC_API mgpc_status mgpc_assess(const mgpc_mesh* mesh, const mgpc_basis* basis, const char* config_json,
                                 char** csv_out, char** summary_out);

/* Multi-fidelity study; returns the rows as CSV and a JSON summary. */
MGPC_API mgpc_status mgpc_mf_study(const mgpc_mesh* mesh, const mgpc_basis* basis, const char* config_json,
                                   char** csv_out, char** summary_out);

#ifdef __cplusplus
}
#endif

#endif
