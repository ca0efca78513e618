/* C interface to the podnn library: parametric Galerkin solvers, empirical
 * POD, tanh-network regression of reduced coefficients, and the convergence
 * study harness. All state lives behind opaque handles; every fallible call
 * returns a status code and leaves a description in podnn_last_error().
 */
#ifndef PODNN_PODNN_H
#define PODNN_PODNN_H

#include <stdint.h>

#if defined(_WIN32)
#define PODNN_API __declspec(dllexport)
#else
#define PODNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum podnn_status {
  PODNN_OK = 0,
  PODNN_ERROR_INVALID_ARGUMENT = 1,
  PODNN_ERROR_CONFIG = 2,
  PODNN_ERROR_IO = 3,
  PODNN_ERROR_FORMAT = 4,
  PODNN_ERROR_NUMERIC = 5,
  PODNN_ERROR_INTERNAL = 6
} podnn_status;

typedef struct podnn_config podnn_config;       /* parsed run configuration */
typedef struct podnn_points podnn_points;       /* parameter samples in [-1,1]^s */
typedef struct podnn_snapshots podnn_snapshots; /* samples + Galerkin solutions */
typedef struct podnn_basis podnn_basis;         /* reduced basis + spectrum */
typedef struct podnn_model podnn_model;         /* trained coefficient network */
typedef struct podnn_report podnn_report;       /* convergence study results */

PODNN_API const char* podnn_version(void);
/* Message of the most recent failure on this thread. */
PODNN_API const char* podnn_last_error(void);
PODNN_API const char* podnn_status_name(podnn_status status);
/* Frees strings returned through char** output parameters. */
PODNN_API void podnn_string_free(char* text);

/* --- configuration ------------------------------------------------------ */

PODNN_API podnn_status podnn_config_load(const char* path, podnn_config** out);
PODNN_API podnn_status podnn_config_parse(const char* text, podnn_config** out);
PODNN_API void podnn_config_free(podnn_config* cfg);

/* --- parameter samples --------------------------------------------------- */

/* Halton points per the [qmc] section, rescaled onto [-1,1]^s. */
PODNN_API podnn_status podnn_qmc_generate(const podnn_config* cfg, podnn_points** out);
PODNN_API int64_t podnn_points_count(const podnn_points* pts);
PODNN_API int64_t podnn_points_dim(const podnn_points* pts);
PODNN_API podnn_status podnn_points_get(const podnn_points* pts, int64_t row,
                                        double* coords, int64_t dim);
PODNN_API podnn_status podnn_points_save_csv(const podnn_points* pts, const char* path);
PODNN_API void podnn_points_free(podnn_points* pts);

/* --- snapshots ------------------------------------------------------------ */

/* Solves the configured model problem at the first [qmc] n_points samples.
 * threads <= 0 uses all available cores. */
PODNN_API podnn_status podnn_sample(const podnn_config* cfg, int threads,
                                    podnn_snapshots** out);
PODNN_API podnn_status podnn_snapshots_save(const podnn_snapshots* snap,
                                            const char* path);
/* Loads a snapshot file and attaches the problem metadata from cfg; the file
 * must agree with the configuration on N_h, s, and realness. */
PODNN_API podnn_status podnn_snapshots_load(const char* path, const podnn_config* cfg,
                                            podnn_snapshots** out);
PODNN_API int64_t podnn_snapshots_dof(const podnn_snapshots* snap);
PODNN_API int64_t podnn_snapshots_count(const podnn_snapshots* snap);
PODNN_API int64_t podnn_snapshots_dim(const podnn_snapshots* snap);
PODNN_API int podnn_snapshots_is_complex(const podnn_snapshots* snap);
PODNN_API void podnn_snapshots_free(podnn_snapshots* snap);

/* --- reduced basis -------------------------------------------------------- */

/* Mass-weighted empirical POD of the snapshots, truncated per the [pod]
 * section (tolerance rule or a-priori rank). */
PODNN_API podnn_status podnn_pod(const podnn_snapshots* snap, const podnn_config* cfg,
                                 podnn_basis** out);
PODNN_API podnn_status podnn_basis_save(const podnn_basis* basis, const char* path);
PODNN_API podnn_status podnn_basis_load(const char* path, podnn_basis** out);
PODNN_API int64_t podnn_basis_rank(const podnn_basis* basis);
PODNN_API int64_t podnn_basis_dof(const podnn_basis* basis);
PODNN_API int64_t podnn_basis_spectrum_size(const podnn_basis* basis);
PODNN_API podnn_status podnn_basis_singular_values(const podnn_basis* basis,
                                                   double* values, int64_t count);
PODNN_API podnn_status podnn_basis_diagnostics_json(const podnn_basis* basis,
                                                    char** json_out);
PODNN_API void podnn_basis_free(podnn_basis* basis);

/* --- coefficient network --------------------------------------------------- */

/* Projects the snapshots onto the basis and trains the sized tanh network on
 * the split real/imaginary coefficients. */
PODNN_API podnn_status podnn_train(const podnn_snapshots* snap, const podnn_basis* basis,
                                   const podnn_config* cfg, podnn_model** out);
PODNN_API podnn_status podnn_model_save(const podnn_model* model, const char* basis_id,
                                        const char* path);
PODNN_API podnn_status podnn_model_load(const char* path, podnn_model** out);
PODNN_API podnn_status podnn_model_basis_id(const podnn_model* model, char** id_out);
/* CSV of per-epoch loss and learning rate; only available on freshly trained
 * models. */
PODNN_API podnn_status podnn_model_history_csv(const podnn_model* model, char** csv_out);
PODNN_API int64_t podnn_model_input_dim(const podnn_model* model);
PODNN_API int64_t podnn_model_output_dim(const podnn_model* model);
/* Predicted reduced coefficients (first half real parts, second half
 * imaginary parts). out_dim must equal the model output width. */
PODNN_API podnn_status podnn_model_predict(const podnn_model* model, const double* y,
                                           int64_t dim, double* coeffs, int64_t out_dim);
PODNN_API void podnn_model_free(podnn_model* model);

/* --- evaluation and studies ------------------------------------------------ */

/* Error metrics of a trained surrogate on the held-out sample segment,
 * as JSON. */
PODNN_API podnn_status podnn_eval(const podnn_model* model, const podnn_basis* basis,
                                  const podnn_config* cfg, int threads,
                                  char** metrics_json);

/* Full sweep over the [study] n_grid: sampling, POD, training, held-out
 * evaluation, and fitted convergence slopes. */
PODNN_API podnn_status podnn_study(const podnn_config* cfg, int threads,
                                   podnn_report** out);
PODNN_API int64_t podnn_report_rows(const podnn_report* report);
PODNN_API podnn_status podnn_report_csv(const podnn_report* report, char** csv_out);
PODNN_API podnn_status podnn_report_sidecar_json(const podnn_report* report,
                                                 char** json_out);
PODNN_API void podnn_report_free(podnn_report* report);

#ifdef __cplusplus
}
#endif

#endif /* PODNN_PODNN_H */
