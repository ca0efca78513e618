#include "podnn/podnn.h"

#include "analysis.hpp"
#include "common.hpp"
#include "config.hpp"
#include "nn.hpp"
#include "pod.hpp"
#include "problem.hpp"
#include "qmc.hpp"
#include "serial.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

struct podnn_config {
  podnn::config::RunConfig cfg;
};

struct podnn_points {
  podnn::Mat points;  // rescaled to [-1,1]^s
};

struct podnn_snapshots {
  podnn::pod::SnapshotSet snap;
};

struct podnn_basis {
  podnn::pod::ReducedBasis basis;
  podnn::pod::PodDiagnostics diagnostics;
  bool has_diagnostics = false;
};

struct podnn_model {
  podnn::nn::Mlp mlp;
  podnn::nn::TrainHistory history;
  bool has_history = false;
  std::string basis_id;  // from the file, for loaded models
};

struct podnn_report {
  podnn::analysis::StudyReport report;
};

namespace {

thread_local std::string g_last_error;

podnn_status map_code(podnn::Error::Code code) {
  switch (code) {
    case podnn::Error::Code::invalid_argument:
      return PODNN_ERROR_INVALID_ARGUMENT;
    case podnn::Error::Code::config:
      return PODNN_ERROR_CONFIG;
    case podnn::Error::Code::io:
      return PODNN_ERROR_IO;
    case podnn::Error::Code::format:
      return PODNN_ERROR_FORMAT;
    case podnn::Error::Code::numeric:
      return PODNN_ERROR_NUMERIC;
    case podnn::Error::Code::internal:
      return PODNN_ERROR_INTERNAL;
  }
  return PODNN_ERROR_INTERNAL;
}

template <typename Fn>
podnn_status guarded(Fn&& fn) {
  try {
    fn();
    return PODNN_OK;
  } catch (const podnn::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PODNN_ERROR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PODNN_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PODNN_ERROR_INTERNAL;
  }
}

void require_arg(bool ok, const char* message) {
  podnn::require(ok, podnn::Error::Code::invalid_argument, message);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  podnn::require(out != nullptr, podnn::Error::Code::internal, "out of memory");
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

unsigned resolve_thread_arg(int threads) {
  return threads <= 0 ? 0u : static_cast<unsigned>(threads);
}

// Rank selection per the [pod] section of the configuration.
podnn::pod::ReducedBasis select_rank(const podnn::pod::ReducedBasis& full,
                                     const podnn::config::RunConfig& cfg,
                                     long n_samples) {
  using podnn::pod::RankRule;
  if (cfg.rank_rule.mode == RankRule::apriori) {
    const int rank =
        std::min(podnn::pod::rank_apriori(n_samples, cfg.rates), full.rank);
    return full.truncated(rank, RankRule::apriori);
  }
  const double tau = cfg.rank_rule.tolerance > 0.0
                         ? cfg.rank_rule.tolerance
                         : podnn::analysis::coupled_tolerance(n_samples);
  return full.truncated(podnn::pod::rank_by_tolerance(full, tau),
                        RankRule::tolerance, tau);
}

}  // namespace

extern "C" {

const char* podnn_version(void) { return "0.1.0"; }

const char* podnn_last_error(void) { return g_last_error.c_str(); }

const char* podnn_status_name(podnn_status status) {
  switch (status) {
    case PODNN_OK: return "ok";
    case PODNN_ERROR_INVALID_ARGUMENT: return "invalid_argument";
    case PODNN_ERROR_CONFIG: return "config";
    case PODNN_ERROR_IO: return "io";
    case PODNN_ERROR_FORMAT: return "format";
    case PODNN_ERROR_NUMERIC: return "numeric";
    case PODNN_ERROR_INTERNAL: return "internal";
  }
  return "unknown";
}

void podnn_string_free(char* text) { std::free(text); }

podnn_status podnn_config_load(const char* path, podnn_config** out) {
  return guarded([&] {
    require_arg(path != nullptr && out != nullptr, "config_load: null argument");
    auto handle = std::make_unique<podnn_config>();
    handle->cfg = podnn::config::parse_file(path);
    *out = handle.release();
  });
}

podnn_status podnn_config_parse(const char* text, podnn_config** out) {
  return guarded([&] {
    require_arg(text != nullptr && out != nullptr, "config_parse: null argument");
    auto handle = std::make_unique<podnn_config>();
    handle->cfg = podnn::config::parse_text(text);
    *out = handle.release();
  });
}

void podnn_config_free(podnn_config* cfg) { delete cfg; }

podnn_status podnn_qmc_generate(const podnn_config* cfg, podnn_points** out) {
  return guarded([&] {
    require_arg(cfg != nullptr && out != nullptr, "qmc_generate: null argument");
    auto handle = std::make_unique<podnn_points>();
    handle->points =
        podnn::qmc::to_parameter_cube(podnn::qmc::halton_points(cfg->cfg.qmc));
    *out = handle.release();
  });
}

int64_t podnn_points_count(const podnn_points* pts) {
  return pts ? static_cast<int64_t>(pts->points.rows()) : 0;
}

int64_t podnn_points_dim(const podnn_points* pts) {
  return pts ? static_cast<int64_t>(pts->points.cols()) : 0;
}

podnn_status podnn_points_get(const podnn_points* pts, int64_t row, double* coords,
                              int64_t dim) {
  return guarded([&] {
    require_arg(pts != nullptr && coords != nullptr, "points_get: null argument");
    require_arg(row >= 0 && row < pts->points.rows(), "points_get: row out of range");
    require_arg(dim == pts->points.cols(), "points_get: dimension mismatch");
    for (int64_t j = 0; j < dim; ++j) coords[j] = pts->points(row, j);
  });
}

podnn_status podnn_points_save_csv(const podnn_points* pts, const char* path) {
  return guarded([&] {
    require_arg(pts != nullptr && path != nullptr, "points_save_csv: null argument");
    podnn::io::write_text_file(path, podnn::io::points_csv(pts->points));
  });
}

void podnn_points_free(podnn_points* pts) { delete pts; }

podnn_status podnn_sample(const podnn_config* cfg, int threads, podnn_snapshots** out) {
  return guarded([&] {
    require_arg(cfg != nullptr && out != nullptr, "sample: null argument");
    const podnn::Mat points =
        podnn::qmc::to_parameter_cube(podnn::qmc::halton_points(cfg->cfg.qmc));
    auto handle = std::make_unique<podnn_snapshots>();
    handle->snap = podnn::pod::assemble_snapshots(cfg->cfg.problem, points,
                                                  resolve_thread_arg(threads));
    *out = handle.release();
  });
}

podnn_status podnn_snapshots_save(const podnn_snapshots* snap, const char* path) {
  return guarded([&] {
    require_arg(snap != nullptr && path != nullptr, "snapshots_save: null argument");
    podnn::io::write_snapshots(snap->snap, path);
  });
}

podnn_status podnn_snapshots_load(const char* path, const podnn_config* cfg,
                                  podnn_snapshots** out) {
  return guarded([&] {
    require_arg(path != nullptr && cfg != nullptr && out != nullptr,
                "snapshots_load: null argument");
    podnn::io::SnapshotPayload payload = podnn::io::read_snapshots(path);
    podnn::require(payload.snapshots.rows() == cfg->cfg.problem.fem.n_dof,
                   podnn::Error::Code::format,
                   "snapshot file disagrees with the configuration on N_h");
    podnn::require(payload.params.cols() == cfg->cfg.qmc.s,
                   podnn::Error::Code::format,
                   "snapshot file disagrees with the configuration on s");
    podnn::require(payload.complex_valued == cfg->cfg.problem.is_complex(),
                   podnn::Error::Code::format,
                   "snapshot file disagrees with the configuration on realness");
    auto handle = std::make_unique<podnn_snapshots>();
    handle->snap.params = std::move(payload.params);
    handle->snap.snapshots = std::move(payload.snapshots);
    handle->snap.complex_valued = payload.complex_valued;
    handle->snap.problem_meta = cfg->cfg.problem;
    handle->snap.validate();
    *out = handle.release();
  });
}

int64_t podnn_snapshots_dof(const podnn_snapshots* snap) {
  return snap ? static_cast<int64_t>(snap->snap.n_h()) : 0;
}

int64_t podnn_snapshots_count(const podnn_snapshots* snap) {
  return snap ? static_cast<int64_t>(snap->snap.n_samples()) : 0;
}

int64_t podnn_snapshots_dim(const podnn_snapshots* snap) {
  return snap ? static_cast<int64_t>(snap->snap.param_dim()) : 0;
}

int podnn_snapshots_is_complex(const podnn_snapshots* snap) {
  return snap && snap->snap.complex_valued ? 1 : 0;
}

void podnn_snapshots_free(podnn_snapshots* snap) { delete snap; }

podnn_status podnn_pod(const podnn_snapshots* snap, const podnn_config* cfg,
                       podnn_basis** out) {
  return guarded([&] {
    require_arg(snap != nullptr && cfg != nullptr && out != nullptr,
                "pod: null argument");
    const podnn::problem::GramMatrix gram =
        podnn::problem::assemble_gram(snap->snap.problem_meta.fem);
    auto [full, diagnostics] = podnn::pod::pod_basis(snap->snap, gram);
    auto handle = std::make_unique<podnn_basis>();
    handle->basis =
        select_rank(full, cfg->cfg, static_cast<long>(snap->snap.n_samples()));
    handle->diagnostics = std::move(diagnostics);
    handle->diagnostics.empirical_error =
        handle->diagnostics.tail_per_rank(handle->basis.rank);
    handle->has_diagnostics = true;
    *out = handle.release();
  });
}

podnn_status podnn_basis_save(const podnn_basis* basis, const char* path) {
  return guarded([&] {
    require_arg(basis != nullptr && path != nullptr, "basis_save: null argument");
    podnn::io::write_basis(basis->basis, path);
  });
}

podnn_status podnn_basis_load(const char* path, podnn_basis** out) {
  return guarded([&] {
    require_arg(path != nullptr && out != nullptr, "basis_load: null argument");
    auto handle = std::make_unique<podnn_basis>();
    handle->basis = podnn::io::read_basis(path);
    // Tail energies are recoverable from the stored spectrum.
    handle->diagnostics.tail_per_rank.resize(handle->basis.singular_values.size() + 1);
    double tail = 0.0;
    handle->diagnostics.tail_per_rank(handle->basis.singular_values.size()) = 0.0;
    for (Eigen::Index i = handle->basis.singular_values.size() - 1; i >= 0; --i) {
      tail += handle->basis.singular_values(i) * handle->basis.singular_values(i);
      handle->diagnostics.tail_per_rank(i) = tail;
    }
    handle->diagnostics.empirical_error =
        handle->diagnostics.tail_per_rank(handle->basis.rank);
    handle->has_diagnostics = true;
    *out = handle.release();
  });
}

int64_t podnn_basis_rank(const podnn_basis* basis) {
  return basis ? basis->basis.rank : 0;
}

int64_t podnn_basis_dof(const podnn_basis* basis) {
  return basis ? static_cast<int64_t>(basis->basis.n_h()) : 0;
}

int64_t podnn_basis_spectrum_size(const podnn_basis* basis) {
  return basis ? static_cast<int64_t>(basis->basis.singular_values.size()) : 0;
}

podnn_status podnn_basis_singular_values(const podnn_basis* basis, double* values,
                                         int64_t count) {
  return guarded([&] {
    require_arg(basis != nullptr && values != nullptr,
                "basis_singular_values: null argument");
    require_arg(count == basis->basis.singular_values.size(),
                "basis_singular_values: count mismatch");
    for (int64_t i = 0; i < count; ++i) values[i] = basis->basis.singular_values(i);
  });
}

podnn_status podnn_basis_diagnostics_json(const podnn_basis* basis, char** json_out) {
  return guarded([&] {
    require_arg(basis != nullptr && json_out != nullptr,
                "basis_diagnostics_json: null argument");
    require_arg(basis->has_diagnostics, "basis_diagnostics_json: no diagnostics");
    *json_out = copy_string(
        podnn::io::pod_diagnostics_json(basis->basis, basis->diagnostics));
  });
}

void podnn_basis_free(podnn_basis* basis) { delete basis; }

podnn_status podnn_train(const podnn_snapshots* snap, const podnn_basis* basis,
                         const podnn_config* cfg, podnn_model** out) {
  return guarded([&] {
    require_arg(snap != nullptr && basis != nullptr && cfg != nullptr && out != nullptr,
                "train: null argument");
    podnn::require(basis->basis.rank >= 1, podnn::Error::Code::invalid_argument,
                   "train: basis rank must be at least 1");
    podnn::require(basis->basis.n_h() == snap->snap.n_h(),
                   podnn::Error::Code::invalid_argument,
                   "train: basis and snapshots disagree on N_h");

    const long n = static_cast<long>(snap->snap.n_samples());
    const int rank = basis->basis.rank;
    const podnn::problem::GramMatrix gram =
        podnn::problem::assemble_gram(snap->snap.problem_meta.fem);

    const podnn::CMat coeffs =
        basis->basis.basis.adjoint() * gram.apply(snap->snap.snapshots);
    podnn::Mat targets(2 * rank, n);
    targets.topRows(rank) = coeffs.real();
    targets.bottomRows(rank) = coeffs.imag();
    const podnn::Mat inputs = snap->snap.params.transpose();

    const podnn::nn::SizingConfig sizing = podnn::nn::size_apriori(n, cfg->cfg.rates);
    auto handle = std::make_unique<podnn_model>();
    handle->mlp = podnn::nn::mlp_init(
        podnn::nn::layer_dims(sizing, static_cast<int>(snap->snap.param_dim()),
                              2 * rank),
        cfg->cfg.train.seed);

    podnn::nn::TrainConfig train_cfg = cfg->cfg.train;
    if (train_cfg.stop_threshold <= 0.0) {
      train_cfg.stop_threshold =
          std::pow(static_cast<double>(n), -cfg->cfg.rates.alpha);
    }
    handle->history = podnn::nn::train(handle->mlp, inputs, targets, train_cfg);
    handle->has_history = true;
    *out = handle.release();
  });
}

podnn_status podnn_model_save(const podnn_model* model, const char* basis_id,
                              const char* path) {
  return guarded([&] {
    require_arg(model != nullptr && path != nullptr, "model_save: null argument");
    podnn::io::write_model(model->mlp, basis_id ? basis_id : "", path);
  });
}

podnn_status podnn_model_load(const char* path, podnn_model** out) {
  return guarded([&] {
    require_arg(path != nullptr && out != nullptr, "model_load: null argument");
    podnn::io::ModelPayload payload = podnn::io::read_model(path);
    auto handle = std::make_unique<podnn_model>();
    handle->mlp = std::move(payload.mlp);
    handle->has_history = false;
    handle->basis_id = std::move(payload.basis_id);
    *out = handle.release();
  });
}

podnn_status podnn_model_basis_id(const podnn_model* model, char** id_out) {
  return guarded([&] {
    require_arg(model != nullptr && id_out != nullptr, "model_basis_id: null argument");
    *id_out = copy_string(model->basis_id);
  });
}

podnn_status podnn_model_history_csv(const podnn_model* model, char** csv_out) {
  return guarded([&] {
    require_arg(model != nullptr && csv_out != nullptr,
                "model_history_csv: null argument");
    require_arg(model->has_history, "model_history_csv: model has no training history");
    *csv_out = copy_string(podnn::io::history_csv(model->history));
  });
}

int64_t podnn_model_input_dim(const podnn_model* model) {
  return model ? model->mlp.input_dim() : 0;
}

int64_t podnn_model_output_dim(const podnn_model* model) {
  return model ? model->mlp.output_dim() : 0;
}

podnn_status podnn_model_predict(const podnn_model* model, const double* y, int64_t dim,
                                 double* coeffs, int64_t out_dim) {
  return guarded([&] {
    require_arg(model != nullptr && y != nullptr && coeffs != nullptr,
                "model_predict: null argument");
    require_arg(dim == model->mlp.input_dim(), "model_predict: input dimension mismatch");
    require_arg(out_dim == model->mlp.output_dim(),
                "model_predict: output dimension mismatch");
    const podnn::Vec input = Eigen::Map<const podnn::Vec>(y, dim);
    const podnn::Vec output = podnn::nn::predict(model->mlp, input);
    for (int64_t i = 0; i < out_dim; ++i) coeffs[i] = output(i);
  });
}

void podnn_model_free(podnn_model* model) { delete model; }

podnn_status podnn_eval(const podnn_model* model, const podnn_basis* basis,
                        const podnn_config* cfg, int threads, char** metrics_json) {
  return guarded([&] {
    require_arg(model != nullptr && basis != nullptr && cfg != nullptr &&
                    metrics_json != nullptr,
                "eval: null argument");
    const podnn::config::RunConfig& run = cfg->cfg;
    podnn::require(model->mlp.output_dim() == 2 * basis->basis.rank,
                   podnn::Error::Code::invalid_argument,
                   "eval: model width does not match the basis rank");

    podnn::qmc::QmcConfig test_qmc = run.qmc;
    test_qmc.n_points = run.test_set_size;
    test_qmc.start_index = run.test_start_index > 0
                               ? run.test_start_index
                               : run.qmc.start_index + run.qmc.n_points;
    const podnn::Mat test_points =
        podnn::qmc::to_parameter_cube(podnn::qmc::halton_points(test_qmc));

    const podnn::problem::GramMatrix gram =
        podnn::problem::assemble_gram(run.problem.fem);
    const podnn::CMat test_solutions =
        podnn::pod::assemble_snapshots(run.problem, test_points,
                                       resolve_thread_arg(threads))
            .snapshots;

    const double pod_err = podnn::analysis::pod_generalization_error(
        basis->basis, test_solutions, gram);
    const double total_err = podnn::analysis::surrogate_l2_error(
        model->mlp, basis->basis, test_points, test_solutions, gram);

    const int rank = basis->basis.rank;
    const podnn::CMat true_coeffs =
        basis->basis.basis.adjoint() * gram.apply(test_solutions);
    double coeff_err2 = 0.0;
    for (Eigen::Index i = 0; i < test_points.rows(); ++i) {
      podnn::Vec truth(2 * rank);
      truth.head(rank) = true_coeffs.col(i).real();
      truth.tail(rank) = true_coeffs.col(i).imag();
      coeff_err2 +=
          (truth - podnn::nn::predict(model->mlp, test_points.row(i))).squaredNorm();
    }
    const double coeff_err =
        std::sqrt(coeff_err2 / static_cast<double>(test_points.rows()));

    nlohmann::ordered_json j;
    j["n_test"] = run.test_set_size;
    j["test_start_index"] = test_qmc.start_index;
    j["rank"] = rank;
    j["pod_generalization_error"] = pod_err;
    j["coefficient_rmse"] = coeff_err;
    j["surrogate_l2_error"] = total_err;
    *metrics_json = copy_string(j.dump(2) + "\n");
  });
}

podnn_status podnn_study(const podnn_config* cfg, int threads, podnn_report** out) {
  return guarded([&] {
    require_arg(cfg != nullptr && out != nullptr, "study: null argument");
    auto handle = std::make_unique<podnn_report>();
    handle->report = podnn::analysis::run_study(
        cfg->cfg.study_config(resolve_thread_arg(threads)));
    *out = handle.release();
  });
}

int64_t podnn_report_rows(const podnn_report* report) {
  return report ? static_cast<int64_t>(report->report.rows.size()) : 0;
}

podnn_status podnn_report_csv(const podnn_report* report, char** csv_out) {
  return guarded([&] {
    require_arg(report != nullptr && csv_out != nullptr, "report_csv: null argument");
    *csv_out = copy_string(podnn::io::report_csv(report->report));
  });
}

podnn_status podnn_report_sidecar_json(const podnn_report* report, char** json_out) {
  return guarded([&] {
    require_arg(report != nullptr && json_out != nullptr,
                "report_sidecar_json: null argument");
    *json_out = copy_string(podnn::io::report_sidecar_json(report->report));
  });
}

void podnn_report_free(podnn_report* report) { delete report; }

}  // extern "C"
