// Command-line front end for the podnn shared library. Every subcommand is a
// thin composition of C API calls; all numerics live behind the library
// boundary.
#include <podnn/podnn.h>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

namespace {

struct ConfigHandle {
  podnn_config* ptr = nullptr;
  ~ConfigHandle() { podnn_config_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { podnn_string_free(ptr); }
};

int fail(const std::string& stage, podnn_status status) {
  std::fprintf(stderr, "error: stage=%s status=%s msg=%s\n", stage.c_str(),
               podnn_status_name(status), podnn_last_error());
  return 1;
}

bool write_file(const std::string& path, const char* content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) return false;
  out << content;
  return out.good();
}

void note(bool verbose, const std::string& message) {
  if (verbose) std::fprintf(stderr, "%s\n", message.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galerkin POD neural-network surrogate pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string snapshots_path;
  std::string basis_path;
  std::string model_path;
  int threads = 0;
  bool verbose = false;

  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_flag("--verbose", verbose, "progress output on stderr");

  auto* cmd_qmc = app.add_subcommand("qmc", "write parameter samples as CSV");
  cmd_qmc->add_option("--out", out_path, "output CSV path")->required();

  auto* cmd_sample = app.add_subcommand("sample", "solve at the samples, write snapshots");
  cmd_sample->add_option("--out", out_path, "output snapshot file")->required();

  auto* cmd_pod = app.add_subcommand("pod", "reduced basis from a snapshot file");
  cmd_pod->add_option("--snapshots", snapshots_path, "snapshot file")->required();
  cmd_pod->add_option("--out", out_path, "output basis file")->required();

  auto* cmd_train = app.add_subcommand("train", "train the coefficient network");
  cmd_train->add_option("--snapshots", snapshots_path, "snapshot file")->required();
  cmd_train->add_option("--basis", basis_path, "basis file")->required();
  cmd_train->add_option("--out", out_path, "output model file")->required();

  auto* cmd_eval = app.add_subcommand("eval", "held-out error metrics of a model");
  cmd_eval->add_option("--model", model_path, "model file")->required();
  cmd_eval->add_option("--basis", basis_path, "basis file")->required();
  cmd_eval->add_option("--out", out_path, "optional metrics JSON path");

  auto* cmd_study = app.add_subcommand("study", "convergence study over the N grid");
  cmd_study->add_option("--out", out_path, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  ConfigHandle config;
  if (podnn_status st = podnn_config_load(config_path.c_str(), &config.ptr);
      st != PODNN_OK) {
    return fail("config", st);
  }

  if (cmd_qmc->parsed()) {
    podnn_points* points = nullptr;
    if (podnn_status st = podnn_qmc_generate(config.ptr, &points); st != PODNN_OK) {
      return fail("qmc", st);
    }
    std::unique_ptr<podnn_points, decltype(&podnn_points_free)> guard(points,
                                                                      podnn_points_free);
    if (podnn_status st = podnn_points_save_csv(points, out_path.c_str());
        st != PODNN_OK) {
      return fail("qmc", st);
    }
    note(verbose, "wrote " + std::to_string(podnn_points_count(points)) + " points to " +
                      out_path);
    return 0;
  }

  if (cmd_sample->parsed()) {
    podnn_snapshots* snapshots = nullptr;
    if (podnn_status st = podnn_sample(config.ptr, threads, &snapshots);
        st != PODNN_OK) {
      return fail("sample", st);
    }
    std::unique_ptr<podnn_snapshots, decltype(&podnn_snapshots_free)> guard(
        snapshots, podnn_snapshots_free);
    if (podnn_status st = podnn_snapshots_save(snapshots, out_path.c_str());
        st != PODNN_OK) {
      return fail("sample", st);
    }
    note(verbose, "wrote " + std::to_string(podnn_snapshots_count(snapshots)) +
                      " snapshots to " + out_path);
    return 0;
  }

  if (cmd_pod->parsed()) {
    podnn_snapshots* snapshots = nullptr;
    if (podnn_status st =
            podnn_snapshots_load(snapshots_path.c_str(), config.ptr, &snapshots);
        st != PODNN_OK) {
      return fail("pod", st);
    }
    std::unique_ptr<podnn_snapshots, decltype(&podnn_snapshots_free)> snap_guard(
        snapshots, podnn_snapshots_free);
    podnn_basis* basis = nullptr;
    if (podnn_status st = podnn_pod(snapshots, config.ptr, &basis); st != PODNN_OK) {
      return fail("pod", st);
    }
    std::unique_ptr<podnn_basis, decltype(&podnn_basis_free)> basis_guard(
        basis, podnn_basis_free);
    if (podnn_status st = podnn_basis_save(basis, out_path.c_str()); st != PODNN_OK) {
      return fail("pod", st);
    }
    OwnedString diagnostics;
    if (podnn_status st = podnn_basis_diagnostics_json(basis, &diagnostics.ptr);
        st != PODNN_OK) {
      return fail("pod", st);
    }
    const std::string json_path = out_path + ".json";
    if (!write_file(json_path, diagnostics.ptr)) {
      std::fprintf(stderr, "error: stage=pod status=io msg=cannot write %s\n",
                   json_path.c_str());
      return 1;
    }
    note(verbose, "rank " + std::to_string(podnn_basis_rank(basis)) + " basis to " +
                      out_path);
    return 0;
  }

  if (cmd_train->parsed()) {
    podnn_snapshots* snapshots = nullptr;
    if (podnn_status st =
            podnn_snapshots_load(snapshots_path.c_str(), config.ptr, &snapshots);
        st != PODNN_OK) {
      return fail("train", st);
    }
    std::unique_ptr<podnn_snapshots, decltype(&podnn_snapshots_free)> snap_guard(
        snapshots, podnn_snapshots_free);
    podnn_basis* basis = nullptr;
    if (podnn_status st = podnn_basis_load(basis_path.c_str(), &basis);
        st != PODNN_OK) {
      return fail("train", st);
    }
    std::unique_ptr<podnn_basis, decltype(&podnn_basis_free)> basis_guard(
        basis, podnn_basis_free);
    podnn_model* model = nullptr;
    if (podnn_status st = podnn_train(snapshots, basis, config.ptr, &model);
        st != PODNN_OK) {
      return fail("train", st);
    }
    std::unique_ptr<podnn_model, decltype(&podnn_model_free)> model_guard(
        model, podnn_model_free);
    if (podnn_status st = podnn_model_save(model, basis_path.c_str(), out_path.c_str());
        st != PODNN_OK) {
      return fail("train", st);
    }
    OwnedString history;
    if (podnn_status st = podnn_model_history_csv(model, &history.ptr);
        st != PODNN_OK) {
      return fail("train", st);
    }
    const std::string history_path = out_path + ".history.csv";
    if (!write_file(history_path, history.ptr)) {
      std::fprintf(stderr, "error: stage=train status=io msg=cannot write %s\n",
                   history_path.c_str());
      return 1;
    }
    note(verbose, "model written to " + out_path);
    return 0;
  }

  if (cmd_eval->parsed()) {
    podnn_model* model = nullptr;
    if (podnn_status st = podnn_model_load(model_path.c_str(), &model);
        st != PODNN_OK) {
      return fail("eval", st);
    }
    std::unique_ptr<podnn_model, decltype(&podnn_model_free)> model_guard(
        model, podnn_model_free);
    podnn_basis* basis = nullptr;
    if (podnn_status st = podnn_basis_load(basis_path.c_str(), &basis);
        st != PODNN_OK) {
      return fail("eval", st);
    }
    std::unique_ptr<podnn_basis, decltype(&podnn_basis_free)> basis_guard(
        basis, podnn_basis_free);
    OwnedString metrics;
    if (podnn_status st = podnn_eval(model, basis, config.ptr, threads, &metrics.ptr);
        st != PODNN_OK) {
      return fail("eval", st);
    }
    std::fputs(metrics.ptr, stdout);
    if (!out_path.empty() && !write_file(out_path, metrics.ptr)) {
      std::fprintf(stderr, "error: stage=eval status=io msg=cannot write %s\n",
                   out_path.c_str());
      return 1;
    }
    return 0;
  }

  if (cmd_study->parsed()) {
    std::error_code ec;
    std::filesystem::create_directories(out_path, ec);
    if (ec) {
      std::fprintf(stderr, "error: stage=study status=io msg=cannot create %s\n",
                   out_path.c_str());
      return 1;
    }
    podnn_report* report = nullptr;
    if (podnn_status st = podnn_study(config.ptr, threads, &report); st != PODNN_OK) {
      return fail("study", st);
    }
    std::unique_ptr<podnn_report, decltype(&podnn_report_free)> report_guard(
        report, podnn_report_free);
    OwnedString csv, json;
    if (podnn_status st = podnn_report_csv(report, &csv.ptr); st != PODNN_OK) {
      return fail("study", st);
    }
    if (podnn_status st = podnn_report_sidecar_json(report, &json.ptr);
        st != PODNN_OK) {
      return fail("study", st);
    }
    const std::string csv_path = (std::filesystem::path(out_path) / "report.csv").string();
    const std::string json_path =
        (std::filesystem::path(out_path) / "report.json").string();
    if (!write_file(csv_path, csv.ptr) || !write_file(json_path, json.ptr)) {
      std::fprintf(stderr, "error: stage=study status=io msg=cannot write outputs\n");
      return 1;
    }
    note(verbose, std::to_string(podnn_report_rows(report)) + " rows to " + csv_path);
    return 0;
  }

  return 1;
}
