#pragma once

#include "common.hpp"
#include "problem.hpp"
#include "qmc.hpp"

#include <utility>

namespace podnn::pod {

/// Parameter samples together with the Galerkin solutions they produced.
struct SnapshotSet {
  Mat params;     // N x s, one sample per row
  CMat snapshots; // N_h x N, column n = coefficients of u_h(y^(n))
  bool complex_valued = false;
  problem::ModelProblemConfig problem_meta;

  Eigen::Index n_h() const { return snapshots.rows(); }
  Eigen::Index n_samples() const { return snapshots.cols(); }
  Eigen::Index param_dim() const { return params.cols(); }
  void validate() const;
};

/// How the retained rank of a ReducedBasis was chosen.
enum class RankRule { full, tolerance, apriori };

/// X-orthonormal reduced basis extracted from a snapshot set. The singular
/// values always cover the whole computed spectrum, independent of how many
/// columns are retained, so tail energies remain available after truncation.
struct ReducedBasis {
  CMat basis;           // N_h x rank
  Vec singular_values;  // nonincreasing, length min(N_h, N) at least rank
  int rank = 0;
  RankRule rank_rule = RankRule::full;
  double tolerance = 0.0;  // tau when rank_rule == tolerance
  long n_samples = 0;
  int param_dim = 0;
  bool complex_valued = false;

  Eigen::Index n_h() const { return basis.rows(); }
  /// Sum of squared singular values beyond index j (tail energy).
  double tail_energy(int j) const;
  /// Copy keeping the leading j columns; the singular-value list is preserved.
  ReducedBasis truncated(int j, RankRule rule, double tol = 0.0) const;
};

struct PodDiagnostics {
  double empirical_error = 0.0;  // tail energy beyond the retained rank
  Vec tail_per_rank;             // entry J = tail energy beyond rank J
};

/// Solves the model problem at every sample row and stores the solutions as
/// columns, in row order. Solves run in parallel; the output layout does not
/// depend on scheduling.
SnapshotSet assemble_snapshots(const problem::ModelProblemConfig& cfg,
                               const Mat& points, unsigned threads = 0);

/// C = (1/N) S^* M S, Hermitian positive semidefinite.
CMat correlation_matrix(const SnapshotSet& snap, const problem::GramMatrix& gram);

/// Empirical POD through the eigendecomposition of the correlation matrix.
/// Returns the basis at full numerical rank: columns with singular value
/// below 1e-12 times the largest are discarded.
std::pair<ReducedBasis, PodDiagnostics> pod_basis(const SnapshotSet& snap,
                                                  const problem::GramMatrix& gram);

/// Smallest J whose tail energy is at most tau^2, capped at the basis rank.
int rank_by_tolerance(const ReducedBasis& basis, double tau);

/// A-priori rank J = ceil(N^(alpha / (2 (1/p - 1)))).
int rank_apriori(long n_samples, const qmc::RateConfig& rates);

/// X-inner products of u with the retained basis columns: Phi^* M u.
CVec project_coeffs(const CVec& u, const ReducedBasis& basis,
                    const problem::GramMatrix& gram);

/// (Re c_1..Re c_J, Im c_1..Im c_J).
Vec split_real_imag(const CVec& coeffs);

/// Inverse of split_real_imag.
CVec merge_real_imag(const Vec& coeffs);

/// Linear combination of the basis columns with the split coefficients.
CVec reconstruct(const Vec& coeffs, const ReducedBasis& basis);

/// Mean squared X-projection error of the snapshots onto the retained basis,
/// evaluated by direct projection rather than through the singular values.
double empirical_pod_error(const SnapshotSet& snap, const ReducedBasis& basis,
                           const problem::GramMatrix& gram);

}  // namespace podnn::pod
