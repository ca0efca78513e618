#include "problem.hpp"

#include <cmath>

namespace podnn::problem {

namespace {

// 5-point Gauss-Legendre rule on [-1,1]; exact to degree 9, which resolves
// the sin modes against the P1 basis to well below solver tolerance for
// every mesh used here.
constexpr int kGaussOrder = 5;
constexpr double kGaussNode[kGaussOrder] = {
    -0.9061798459386640, -0.5384693101056831, 0.0,
    0.5384693101056831, 0.9061798459386640};
constexpr double kGaussWeight[kGaussOrder] = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
    0.4786286704993665, 0.2369268850561891};

// Symmetric tridiagonal solve (Thomas algorithm), complex-capable.
CVec tridiagonal_solve(const CVec& diag, const CVec& off, const CVec& rhs) {
  const auto n = diag.size();
  CVec upper(n > 0 ? n - 1 : 0);
  CVec scratch(n);
  CVec x(n);
  scratch(0) = rhs(0) / diag(0);
  if (n > 1) upper(0) = off(0) / diag(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Complex denom = diag(i) - off(i - 1) * upper(i - 1);
    if (i < n - 1) upper(i) = off(i) / denom;
    scratch(i) = (rhs(i) - off(i - 1) * scratch(i - 1)) / denom;
  }
  x(n - 1) = scratch(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    x(i) = scratch(i) - upper(i) * x(i + 1);
  }
  return x;
}

CVec tridiagonal_apply(const CVec& diag, const CVec& off, const CVec& v) {
  CVec out = diag.cwiseProduct(v);
  const auto n = v.size();
  out.head(n - 1) += off.cwiseProduct(v.tail(n - 1));
  out.tail(n - 1) += off.cwiseProduct(v.head(n - 1));
  return out;
}

}  // namespace

double ExpansionField::mode_amplitude(int j) const {
  return amplitude * std::pow(static_cast<double>(j), -theta);
}

double ExpansionField::amplitude_sum() const {
  double sum = 0.0;
  for (int j = 1; j <= n_modes; ++j) sum += mode_amplitude(j);
  return sum;
}

void ExpansionField::validate() const {
  require(theta > 1.0, Error::Code::config, "field: theta must be > 1");
  require(amplitude > 0.0, Error::Code::config, "field: amplitude must be > 0");
  require(n_modes >= 1, Error::Code::config, "field: n_modes must be >= 1");
}

void HolomorphyProfile::validate() const {
  require(p > 0.0 && p < 1.0, Error::Code::config, "profile: p must lie in (0,1)");
}

Vec FemSpace::nodes() const {
  const double h = mesh_width();
  Vec x(n_dof);
  for (int i = 0; i < n_dof; ++i) x(i) = (i + 1) * h;
  return x;
}

void FemSpace::validate() const {
  require(n_dof >= 2, Error::Code::config, "fem: n_dof must be >= 2");
}

GramMatrix::GramMatrix(Vec diag, Vec off) : diag_(std::move(diag)), off_(std::move(off)) {
  require(off_.size() == diag_.size() - 1 || (diag_.size() == 1 && off_.size() == 0),
          Error::Code::invalid_argument, "gram: inconsistent band sizes");
}

Vec GramMatrix::apply(const Vec& v) const {
  require(v.size() == diag_.size(), Error::Code::invalid_argument,
          "gram: dimension mismatch");
  Vec out = diag_.cwiseProduct(v);
  const auto n = v.size();
  if (n > 1) {
    out.head(n - 1) += off_.cwiseProduct(v.tail(n - 1));
    out.tail(n - 1) += off_.cwiseProduct(v.head(n - 1));
  }
  return out;
}

CVec GramMatrix::apply(const CVec& v) const {
  require(v.size() == diag_.size(), Error::Code::invalid_argument,
          "gram: dimension mismatch");
  const CVec diag_c = diag_.cast<Complex>();
  const CVec off_c = off_.cast<Complex>();
  CVec out = diag_c.cwiseProduct(v);
  const auto n = v.size();
  if (n > 1) {
    out.head(n - 1) += off_c.cwiseProduct(v.tail(n - 1));
    out.tail(n - 1) += off_c.cwiseProduct(v.head(n - 1));
  }
  return out;
}

Mat GramMatrix::apply(const Mat& columns) const {
  require(columns.rows() == diag_.size(), Error::Code::invalid_argument,
          "gram: dimension mismatch");
  Mat out = diag_.asDiagonal() * columns;
  const auto n = columns.rows();
  if (n > 1) {
    out.topRows(n - 1) += off_.asDiagonal() * columns.bottomRows(n - 1);
    out.bottomRows(n - 1) += off_.asDiagonal() * columns.topRows(n - 1);
  }
  return out;
}

CMat GramMatrix::apply(const CMat& columns) const {
  require(columns.rows() == diag_.size(), Error::Code::invalid_argument,
          "gram: dimension mismatch");
  const CVec diag_c = diag_.cast<Complex>();
  const CVec off_c = off_.cast<Complex>();
  CMat out = diag_c.asDiagonal() * columns;
  const auto n = columns.rows();
  if (n > 1) {
    out.topRows(n - 1) += off_c.asDiagonal() * columns.bottomRows(n - 1);
    out.bottomRows(n - 1) += off_c.asDiagonal() * columns.topRows(n - 1);
  }
  return out;
}

Mat GramMatrix::dense() const {
  Mat m = Mat::Zero(diag_.size(), diag_.size());
  for (Eigen::Index i = 0; i < diag_.size(); ++i) m(i, i) = diag_(i);
  for (Eigen::Index i = 0; i + 1 < diag_.size(); ++i) {
    m(i, i + 1) = off_(i);
    m(i + 1, i) = off_(i);
  }
  return m;
}

void ModelProblemConfig::validate() const {
  fem.validate();
  field.validate();
  profile.validate();
  require(profile.p >= 1.0 / field.theta, Error::Code::config,
          "profile: p must be at least 1/theta");
  require(absorption >= 0.0, Error::Code::config, "problem: absorption must be >= 0");
  require(reaction_scale >= 0.0, Error::Code::config,
          "problem: reaction_scale must be >= 0");
  const double sum = field.amplitude_sum();
  if (kind == ProblemKind::real_diffusion) {
    require(sum < 1.0, Error::Code::config,
            "problem: amplitude sum must stay below 1 to keep the diffusion "
            "coefficient positive");
  } else {
    require(sum <= 0.5, Error::Code::config,
            "problem: amplitude sum must stay below 1/2 for the reaction problem");
  }
}

GramMatrix assemble_gram(const FemSpace& fem) {
  require(fem.n_dof >= 1, Error::Code::invalid_argument, "gram: n_dof must be >= 1");
  const double h = fem.mesh_width();
  Vec diag = Vec::Constant(fem.n_dof, 2.0 / h);
  Vec off = Vec::Constant(std::max(0, fem.n_dof - 1), -1.0 / h);
  return GramMatrix(std::move(diag), std::move(off));
}

DiscreteProblem::DiscreteProblem(const ModelProblemConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int n = cfg_.fem.n_dof;
  const int n_elem = n + 1;
  const int modes = cfg_.field.n_modes;
  const double h = cfg_.fem.mesh_width();
  const double pi = std::acos(-1.0);

  rhs_ = Vec::Constant(n, h);  // load f = 1 against the hat functions

  if (cfg_.kind == ProblemKind::real_diffusion) {
    // Exact element integrals of the expansion modes:
    //   int_{x_k}^{x_{k+1}} psi_j = b_j (cos(j pi x_k) - cos(j pi x_{k+1})) / (j pi).
    stiffness_gemv_.resize(n_elem, modes);
    for (int j = 1; j <= modes; ++j) {
      const double w = cfg_.field.mode_amplitude(j) / (j * pi);
      double cos_left = 1.0;  // cos(0)
      for (int k = 0; k < n_elem; ++k) {
        const double cos_right = std::cos(j * pi * (k + 1) * h);
        stiffness_gemv_(k, j - 1) = w * (cos_left - cos_right);
        cos_left = cos_right;
      }
    }
  } else {
    // Local mass integrals of the modes against the P1 basis, per element.
    mass00_.resize(n_elem, modes);
    mass01_.resize(n_elem, modes);
    mass11_.resize(n_elem, modes);
    for (int k = 0; k < n_elem; ++k) {
      const double x_left = k * h;
      for (int j = 1; j <= modes; ++j) {
        const double b = cfg_.field.mode_amplitude(j);
        double m00 = 0.0, m01 = 0.0, m11 = 0.0;
        for (int q = 0; q < kGaussOrder; ++q) {
          const double t = kGaussNode[q];
          const double x = x_left + 0.5 * h * (t + 1.0);
          const double lam0 = 0.5 * (1.0 - t);
          const double lam1 = 0.5 * (1.0 + t);
          const double f = 0.5 * h * kGaussWeight[q] * b * std::sin(j * pi * x);
          m00 += f * lam0 * lam0;
          m01 += f * lam0 * lam1;
          m11 += f * lam1 * lam1;
        }
        mass00_(k, j - 1) = m00;
        mass01_(k, j - 1) = m01;
        mass11_(k, j - 1) = m11;
      }
    }
  }
}

void DiscreteProblem::assemble(const Vec& y, CVec& diag, CVec& off) const {
  const int n = cfg_.fem.n_dof;
  const double h = cfg_.fem.mesh_width();
  const auto s = y.size();

  if (cfg_.kind == ProblemKind::real_diffusion) {
    Vec elem = Vec::Constant(n + 1, h);
    elem += stiffness_gemv_.leftCols(s) * y;
    const double inv_h2 = 1.0 / (h * h);
    diag = ((elem.head(n) + elem.tail(n)) * inv_h2).cast<Complex>();
    off = (-elem.segment(1, n - 1) * inv_h2).cast<Complex>();
    return;
  }

  const Complex c0 = cfg_.reaction_scale * Complex(1.0, cfg_.absorption);
  Vec m00 = mass00_.leftCols(s) * y;
  Vec m01 = mass01_.leftCols(s) * y;
  Vec m11 = mass11_.leftCols(s) * y;
  diag.resize(n);
  off.resize(n - 1);
  const double k_diag = 2.0 / h;
  const double k_off = -1.0 / h;
  for (int i = 0; i < n; ++i) {
    diag(i) = k_diag + c0 * (2.0 * h / 3.0) +
              cfg_.reaction_scale * (m11(i) + m00(i + 1));
  }
  for (int i = 0; i + 1 < n; ++i) {
    off(i) = k_off + c0 * (h / 6.0) + cfg_.reaction_scale * m01(i + 1);
  }
}

SolutionVector DiscreteProblem::solve(const Vec& y) const {
  require(y.size() >= 1, Error::Code::invalid_argument, "solve: empty parameter");
  require(y.size() <= cfg_.field.n_modes, Error::Code::invalid_argument,
          "solve: parameter dimension exceeds the number of expansion modes");
  require((y.array() >= -1.0).all() && (y.array() <= 1.0).all(),
          Error::Code::invalid_argument, "solve: parameter outside [-1,1]");

  CVec diag, off;
  assemble(y, diag, off);
  require(diag.allFinite() && off.allFinite(), Error::Code::numeric,
          "solve: non-finite assembly values");

  const CVec rhs = rhs_.cast<Complex>();
  CVec u = tridiagonal_solve(diag, off, rhs);
  const double rhs_norm = rhs.norm();
  CVec residual = rhs - tridiagonal_apply(diag, off, u);
  if (residual.norm() > 1e-13 * rhs_norm) {
    u += tridiagonal_solve(diag, off, residual);
    residual = rhs - tridiagonal_apply(diag, off, u);
  }
  require(u.allFinite(), Error::Code::numeric, "solve: non-finite solution");
  require(residual.norm() <= 1e-12 * rhs_norm, Error::Code::numeric,
          "solve: linear-system residual above tolerance");
  return SolutionVector{std::move(u), y};
}

CVec DiscreteProblem::apply_operator(const Vec& y, const CVec& v) const {
  require(v.size() == cfg_.fem.n_dof, Error::Code::invalid_argument,
          "apply_operator: dimension mismatch");
  CVec diag, off;
  assemble(y, diag, off);
  return tridiagonal_apply(diag, off, v);
}

SolutionVector solve(const ModelProblemConfig& cfg, const Vec& y) {
  return DiscreteProblem(cfg).solve(y);
}

SolutionVector solve_truncated(const ModelProblemConfig& cfg, const Vec& y, int s_sub) {
  require(s_sub >= 0 && s_sub <= y.size(), Error::Code::invalid_argument,
          "solve_truncated: s_sub must lie in [0, dim(y)]");
  Vec truncated = y;
  truncated.tail(y.size() - s_sub).setZero();
  return solve(cfg, truncated);
}

double x_norm(const GramMatrix& g, const Vec& v) {
  return std::sqrt(std::max(0.0, v.dot(g.apply(v))));
}

double x_norm(const GramMatrix& g, const CVec& v) {
  return std::sqrt(std::max(0.0, v.dot(g.apply(v)).real()));
}

double galerkin_error_probe(const ModelProblemConfig& cfg, const Mat& y_set,
                            int refinement) {
  require(y_set.rows() >= 1, Error::Code::invalid_argument, "probe: empty point set");
  require(refinement >= 1, Error::Code::invalid_argument, "probe: refinement must be >= 1");

  ModelProblemConfig fine_cfg = cfg;
  fine_cfg.fem.n_dof = refinement * (cfg.fem.n_dof + 1) - 1;
  const DiscreteProblem coarse(cfg);
  const DiscreteProblem fine(fine_cfg);
  const GramMatrix fine_gram = assemble_gram(fine_cfg.fem);

  const int n_c = cfg.fem.n_dof;
  const int n_f = fine_cfg.fem.n_dof;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < y_set.rows(); ++r) {
    const Vec y = y_set.row(r);
    const CVec u_c = coarse.solve(y).coefficients;
    const CVec u_f = fine.solve(y).coefficients;

    // Nodal interpolation of the coarse P1 function onto the fine grid.
    CVec coarse_ext = CVec::Zero(n_c + 2);
    coarse_ext.segment(1, n_c) = u_c;
    CVec injected(n_f);
    for (int k = 1; k <= n_f; ++k) {
      const int cell = k / refinement;
      const double frac = static_cast<double>(k % refinement) / refinement;
      injected(k - 1) = coarse_ext(cell) * (1.0 - frac) + coarse_ext(cell + 1) * frac;
    }
    worst = std::max(worst, x_norm(fine_gram, CVec(u_f - injected)));
  }
  return worst;
}

}  // namespace podnn::problem
