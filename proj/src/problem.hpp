#pragma once

#include "common.hpp"

namespace podnn::problem {

enum class ProblemKind { real_diffusion, complex_reaction };

/// Affine coefficient expansion on (0,1): mode j is
///   psi_j(x) = amplitude * j^(-theta) * sin(j*pi*x),   j = 1..n_modes.
/// Amplitudes decay strictly, so truncating trailing coordinates is
/// controlled by the tail sum of amplitude * j^(-theta).
struct ExpansionField {
  double theta = 2.25;
  double amplitude = 0.4;
  int n_modes = 64;

  double mode_amplitude(int j) const;  // 1-based
  double amplitude_sum() const;        // sum of mode amplitudes
  void validate() const;
};

/// Summability exponent of the mode amplitudes and the decay rates it implies.
struct HolomorphyProfile {
  double p = 4.0 / 9.0;

  double truncation_rate() const { return 1.0 / p - 1.0; }
  double pod_rate() const { return 1.0 / p - 1.0; }
  void validate() const;
};

/// P1 space on the uniform grid of (0,1), zero boundary values.
struct FemSpace {
  int n_dof = 256;  // interior nodes

  double mesh_width() const { return 1.0 / (n_dof + 1); }
  Vec nodes() const;  // interior nodes only
  void validate() const;
};

/// Tridiagonal SPD matrix of the X inner product <u,v> = int u' conj(v)'
/// in the P1 hat basis. For the uniform mesh: diagonal 2/h, off-diagonal -1/h.
class GramMatrix {
public:
  GramMatrix(Vec diag, Vec off);

  int size() const { return static_cast<int>(diag_.size()); }
  const Vec& diag() const { return diag_; }
  const Vec& off() const { return off_; }

  Vec apply(const Vec& v) const;
  CVec apply(const CVec& v) const;
  Mat apply(const Mat& columns) const;
  CMat apply(const CMat& columns) const;
  Mat dense() const;

private:
  Vec diag_;
  Vec off_;
};

struct ModelProblemConfig {
  ProblemKind kind = ProblemKind::real_diffusion;
  FemSpace fem;
  ExpansionField field;
  HolomorphyProfile profile;
  double absorption = 1.0;      // eta of the complex reaction coefficient
  double reaction_scale = 1.0;  // scales the whole zeroth-order term

  bool is_complex() const { return kind == ProblemKind::complex_reaction; }
  void validate() const;
};

struct SolutionVector {
  CVec coefficients;
  Vec param;
};

GramMatrix assemble_gram(const FemSpace& fem);

/// Galerkin solution of the parametric problem at y in [-1,1]^s, s <= n_modes.
/// The assembled tridiagonal system is solved directly; one step of iterative
/// refinement keeps the relative residual below 1e-12.
SolutionVector solve(const ModelProblemConfig& cfg, const Vec& y);

/// Same as solve() with coordinates beyond s_sub set to zero.
SolutionVector solve_truncated(const ModelProblemConfig& cfg, const Vec& y, int s_sub);

double x_norm(const GramMatrix& g, const Vec& v);
double x_norm(const GramMatrix& g, const CVec& v);

/// Computable stand-in for the discretization error: max over the given
/// parameter rows of || u_fine - I(u_coarse) ||_X, where the fine mesh width
/// is the coarse one divided by `refinement` and I is nodal interpolation.
double galerkin_error_probe(const ModelProblemConfig& cfg, const Mat& y_set,
                            int refinement = 2);

/// Parametric tridiagonal Galerkin operator for one config. Assembly data
/// that does not depend on y (mode integrals against the P1 basis) is
/// precomputed once, so repeated solves are cheap. Immutable after
/// construction and safe to share across threads.
class DiscreteProblem {
public:
  explicit DiscreteProblem(const ModelProblemConfig& cfg);

  const ModelProblemConfig& config() const { return cfg_; }
  SolutionVector solve(const Vec& y) const;
  /// A(y) v for the assembled tridiagonal operator.
  CVec apply_operator(const Vec& y, const CVec& v) const;

private:
  void assemble(const Vec& y, CVec& diag, CVec& off) const;

  ModelProblemConfig cfg_;
  Mat stiffness_gemv_;  // (n_elem x s) element integrals of the diffusion modes
  Mat mass00_, mass01_, mass11_;  // (n_elem x s) local mass integrals of the modes
  Vec rhs_;
};

}  // namespace podnn::problem
