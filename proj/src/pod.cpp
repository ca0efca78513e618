#include "pod.hpp"

#include <cmath>
#include <string>

namespace podnn::pod {

namespace {

constexpr double kRankCutoffRel = 1e-12;

// Keeps the eigenpair ordering deterministic: rotate each eigenvector so its
// largest-magnitude entry is real and positive.
void fix_phase(CVec& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  const double mag = std::abs(v(k));
  if (mag > 0.0) v *= std::conj(v(k)) / mag;
}

void fix_sign(Vec& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) < 0.0) v = -v;
}

}  // namespace

void SnapshotSet::validate() const {
  require(snapshots.cols() == params.rows(), Error::Code::invalid_argument,
          "snapshots: column count must equal the number of sample rows");
  require(snapshots.allFinite() && params.allFinite(), Error::Code::numeric,
          "snapshots: non-finite entries");
}

double ReducedBasis::tail_energy(int j) const {
  require(j >= 0, Error::Code::invalid_argument, "tail_energy: negative rank");
  double tail = 0.0;
  for (Eigen::Index i = singular_values.size() - 1; i >= j; --i) {
    tail += singular_values(i) * singular_values(i);
  }
  return tail;
}

ReducedBasis ReducedBasis::truncated(int j, RankRule rule, double tol) const {
  require(j >= 0 && j <= rank, Error::Code::invalid_argument,
          "truncated: rank out of range");
  ReducedBasis out = *this;
  out.basis = basis.leftCols(j);
  out.rank = j;
  out.rank_rule = rule;
  out.tolerance = tol;
  return out;
}

SnapshotSet assemble_snapshots(const problem::ModelProblemConfig& cfg,
                               const Mat& points, unsigned threads) {
  require(points.rows() >= 1, Error::Code::invalid_argument,
          "assemble_snapshots: empty point set");
  const problem::DiscreteProblem discrete(cfg);

  SnapshotSet snap;
  snap.params = points;
  snap.complex_valued = cfg.is_complex();
  snap.problem_meta = cfg;
  snap.snapshots.resize(cfg.fem.n_dof, points.rows());

  const auto n = static_cast<std::size_t>(points.rows());
  parallel_for(n, threads, [&](std::size_t i) {
    try {
      snap.snapshots.col(static_cast<Eigen::Index>(i)) =
          discrete.solve(points.row(static_cast<Eigen::Index>(i))).coefficients;
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + std::to_string(i) + ": " + e.what());
    }
  });
  return snap;
}

CMat correlation_matrix(const SnapshotSet& snap, const problem::GramMatrix& gram) {
  snap.validate();
  require(gram.size() == snap.n_h(), Error::Code::invalid_argument,
          "correlation_matrix: Gram dimension mismatch");
  const double inv_n = 1.0 / static_cast<double>(snap.n_samples());
  if (!snap.complex_valued) {
    const Mat s = snap.snapshots.real();
    Mat c = (s.transpose() * gram.apply(s)) * inv_n;
    return c.cast<Complex>();
  }
  return (snap.snapshots.adjoint() * gram.apply(snap.snapshots)) * inv_n;
}

std::pair<ReducedBasis, PodDiagnostics> pod_basis(const SnapshotSet& snap,
                                                  const problem::GramMatrix& gram) {
  snap.validate();
  require(gram.size() == snap.n_h(), Error::Code::invalid_argument,
          "pod_basis: Gram dimension mismatch");
  const auto n = snap.n_samples();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

  Vec eigenvalues;   // descending
  CMat eigenvectors; // columns matching eigenvalues

  if (!snap.complex_valued) {
    const Mat s = snap.snapshots.real();
    Mat c = (s.transpose() * gram.apply(s)) / static_cast<double>(n);
    c = 0.5 * (c + c.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> solver(c);
    require(solver.info() == Eigen::Success, Error::Code::numeric,
            "pod_basis: eigendecomposition failed");
    eigenvalues = solver.eigenvalues().reverse();
    Mat vectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index i = 0; i < vectors.cols(); ++i) {
      Vec col = vectors.col(i);
      fix_sign(col);
      vectors.col(i) = col;
    }
    eigenvectors = vectors.cast<Complex>();
  } else {
    CMat c = (snap.snapshots.adjoint() * gram.apply(snap.snapshots)) /
             static_cast<double>(n);
    c = (0.5 * (c + c.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<CMat> solver(c);
    require(solver.info() == Eigen::Success, Error::Code::numeric,
            "pod_basis: eigendecomposition failed");
    eigenvalues = solver.eigenvalues().reverse();
    eigenvectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index i = 0; i < eigenvectors.cols(); ++i) {
      CVec col = eigenvectors.col(i);
      fix_phase(col);
      eigenvectors.col(i) = col;
    }
  }

  ReducedBasis basis;
  basis.singular_values = eigenvalues.cwiseMax(0.0).cwiseSqrt();
  basis.n_samples = n;
  basis.param_dim = static_cast<int>(snap.param_dim());
  basis.complex_valued = snap.complex_valued;
  basis.rank_rule = RankRule::full;

  const double sigma_max = basis.singular_values.size() > 0 ? basis.singular_values(0) : 0.0;
  const double cutoff = kRankCutoffRel * sigma_max;
  int rank = 0;
  while (rank < basis.singular_values.size() && basis.singular_values(rank) > cutoff) {
    ++rank;
  }
  basis.rank = rank;

  // zeta_i = S psi_i / (sigma_i sqrt(N)); X-orthonormal by construction.
  if (!snap.complex_valued) {
    const Mat s = snap.snapshots.real();
    Mat columns = s * eigenvectors.leftCols(rank).real();
    for (int i = 0; i < rank; ++i) {
      columns.col(i) *= inv_sqrt_n / basis.singular_values(i);
    }
    basis.basis = columns.cast<Complex>();
  } else {
    CMat columns = snap.snapshots * eigenvectors.leftCols(rank);
    for (int i = 0; i < rank; ++i) {
      columns.col(i) *= inv_sqrt_n / basis.singular_values(i);
    }
    basis.basis = std::move(columns);
  }

  PodDiagnostics diagnostics;
  diagnostics.tail_per_rank.resize(basis.singular_values.size() + 1);
  double tail = 0.0;
  diagnostics.tail_per_rank(basis.singular_values.size()) = 0.0;
  for (Eigen::Index i = basis.singular_values.size() - 1; i >= 0; --i) {
    tail += basis.singular_values(i) * basis.singular_values(i);
    diagnostics.tail_per_rank(i) = tail;
  }
  diagnostics.empirical_error = diagnostics.tail_per_rank(basis.rank);
  return {std::move(basis), std::move(diagnostics)};
}

int rank_by_tolerance(const ReducedBasis& basis, double tau) {
  require(tau > 0.0, Error::Code::invalid_argument, "rank_by_tolerance: tau must be > 0");
  const double budget = tau * tau;
  // Walk tails from the smallest singular value upward; the first rank whose
  // tail fits the budget is the answer.
  double tail = 0.0;
  int j = static_cast<int>(basis.singular_values.size());
  int best = j;
  while (j > 0) {
    if (tail <= budget) best = j;
    tail += basis.singular_values(j - 1) * basis.singular_values(j - 1);
    --j;
  }
  if (tail <= budget) best = 0;
  return std::min(best, basis.rank);
}

int rank_apriori(long n_samples, const qmc::RateConfig& rates) {
  rates.validate();
  require(n_samples >= 1, Error::Code::invalid_argument, "rank_apriori: N must be >= 1");
  const double exponent = rates.alpha / (2.0 * (1.0 / rates.p - 1.0));
  return static_cast<int>(std::ceil(std::pow(static_cast<double>(n_samples), exponent)));
}

CVec project_coeffs(const CVec& u, const ReducedBasis& basis,
                    const problem::GramMatrix& gram) {
  require(u.size() == basis.n_h(), Error::Code::invalid_argument,
          "project_coeffs: dimension mismatch");
  require(gram.size() == basis.n_h(), Error::Code::invalid_argument,
          "project_coeffs: Gram dimension mismatch");
  return basis.basis.adjoint() * gram.apply(u);
}

Vec split_real_imag(const CVec& coeffs) {
  Vec out(2 * coeffs.size());
  out.head(coeffs.size()) = coeffs.real();
  out.tail(coeffs.size()) = coeffs.imag();
  return out;
}

CVec merge_real_imag(const Vec& coeffs) {
  require(coeffs.size() % 2 == 0, Error::Code::invalid_argument,
          "merge_real_imag: length must be even");
  const auto j = coeffs.size() / 2;
  CVec out(j);
  out.real() = coeffs.head(j);
  out.imag() = coeffs.tail(j);
  return out;
}

CVec reconstruct(const Vec& coeffs, const ReducedBasis& basis) {
  require(coeffs.size() == 2 * basis.rank, Error::Code::invalid_argument,
          "reconstruct: coefficient length must equal twice the basis rank");
  if (basis.rank == 0) return CVec::Zero(basis.n_h());
  return basis.basis * merge_real_imag(coeffs);
}

double empirical_pod_error(const SnapshotSet& snap, const ReducedBasis& basis,
                           const problem::GramMatrix& gram) {
  snap.validate();
  require(basis.n_h() == snap.n_h(), Error::Code::invalid_argument,
          "empirical_pod_error: dimension mismatch");
  const CMat& s = snap.snapshots;
  CMat residual = s;
  if (basis.rank > 0) {
    const CMat coeffs = basis.basis.adjoint() * gram.apply(s);
    residual -= basis.basis * coeffs;
  }
  const CMat m_residual = gram.apply(residual);
  double total = 0.0;
  for (Eigen::Index c = 0; c < residual.cols(); ++c) {
    total += residual.col(c).dot(m_residual.col(c)).real();
  }
  return total / static_cast<double>(snap.n_samples());
}

}  // namespace podnn::pod
