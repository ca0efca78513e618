#pragma once

#include "analysis.hpp"
#include "nn.hpp"
#include "pod.hpp"

#include <string>

namespace podnn::io {

// Binary formats are little-endian f64 payloads behind a four-byte magic and
// a u32 version; see the README for the exact field order.

/// "PSNP": parameter rows and snapshot columns. Problem metadata is not part
/// of the file; loaders attach it from the active configuration.
void write_snapshots(const pod::SnapshotSet& snap, const std::string& path);

struct SnapshotPayload {
  Mat params;
  CMat snapshots;
  bool complex_valued = false;
};

SnapshotPayload read_snapshots(const std::string& path);

/// "PRBS": singular values and retained basis columns.
void write_basis(const pod::ReducedBasis& basis, const std::string& path);
pod::ReducedBasis read_basis(const std::string& path);

/// "PMLP": layer dimensions, parameters, normalization statistics, and the
/// identifier of the basis the model was trained against.
void write_model(const nn::Mlp& m, const std::string& basis_id, const std::string& path);

struct ModelPayload {
  nn::Mlp mlp;
  std::string basis_id;
};

ModelPayload read_model(const std::string& path);

/// One point per row, full double precision, '.' decimal separator.
std::string points_csv(const Mat& points);

std::string history_csv(const nn::TrainHistory& history);

/// Header: N,s,J,n,width,hidden_layers,pod_tail,pod_gen_err,nn_train_mse,
/// nn_gen_err,total_l2_err,sample_secs,pod_secs,train_secs.
std::string report_csv(const analysis::StudyReport& report);

/// Fitted slopes plus the full study configuration, as JSON.
std::string report_sidecar_json(const analysis::StudyReport& report);

std::string pod_diagnostics_json(const pod::ReducedBasis& basis,
                                 const pod::PodDiagnostics& diagnostics);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace podnn::io
