#include <doctest.h>

#include "problem.hpp"
#include "qmc.hpp"

#include <cmath>
#include <limits>

using namespace podnn;

namespace {

problem::ModelProblemConfig real_config(int n_dof, int n_modes = 16) {
  problem::ModelProblemConfig cfg;
  cfg.kind = problem::ProblemKind::real_diffusion;
  cfg.fem.n_dof = n_dof;
  cfg.field.n_modes = n_modes;
  return cfg;
}

problem::ModelProblemConfig complex_config(int n_dof, int n_modes = 16) {
  problem::ModelProblemConfig cfg;
  cfg.kind = problem::ProblemKind::complex_reaction;
  cfg.fem.n_dof = n_dof;
  cfg.field.n_modes = n_modes;
  cfg.field.amplitude = 0.3;
  return cfg;
}

}  // namespace

TEST_CASE("stiffness Gram matrix of the uniform P1 space") {
  const problem::GramMatrix g2 = problem::assemble_gram(problem::FemSpace{2});
  CHECK(g2.diag()(0) == doctest::Approx(6.0));
  CHECK(g2.diag()(1) == doctest::Approx(6.0));
  CHECK(g2.off()(0) == doctest::Approx(-3.0));

  const problem::GramMatrix g1 = problem::assemble_gram(problem::FemSpace{1});
  CHECK(g1.size() == 1);
  CHECK(g1.diag()(0) == doctest::Approx(4.0));

  const Mat dense = problem::assemble_gram(problem::FemSpace{7}).dense();
  CHECK(dense.isApprox(dense.transpose()));
}

TEST_CASE("x_norm basics") {
  const problem::GramMatrix g = problem::assemble_gram(problem::FemSpace{1});
  CHECK(problem::x_norm(g, Vec::Zero(1)) == 0.0);
  CHECK(problem::x_norm(g, Vec::Ones(1)) == doctest::Approx(2.0));

  const problem::GramMatrix g8 = problem::assemble_gram(problem::FemSpace{8});
  CVec v = CVec::Random(8);
  const CVec rotated = Complex(0.0, 1.0) * v;
  CHECK(problem::x_norm(g8, v) == doctest::Approx(problem::x_norm(g8, rotated)));
  CHECK_THROWS_AS(problem::x_norm(g8, Vec::Ones(3)), Error);
}

TEST_CASE("zero parameter reproduces the Poisson solution at the nodes") {
  const int n_dof = 64;
  const auto cfg = real_config(n_dof);
  const problem::SolutionVector sol = problem::solve(cfg, Vec::Zero(4));
  const double h = cfg.fem.mesh_width();
  for (int i = 0; i < n_dof; ++i) {
    const double x = (i + 1) * h;
    CHECK(sol.coefficients(i).real() == doctest::Approx(x * (1 - x) / 2).epsilon(1e-13));
    CHECK(sol.coefficients(i).imag() == 0.0);
  }
}

TEST_CASE("sign of the parameter matters") {
  const auto cfg = real_config(64, 8);
  Vec y = Vec::Zero(8);
  y(0) = 0.9;
  const CVec up = problem::solve(cfg, y).coefficients;
  const CVec down = problem::solve(cfg, Vec(-y)).coefficients;
  const problem::GramMatrix gram = problem::assemble_gram(cfg.fem);
  CHECK(problem::x_norm(gram, CVec(up - down)) > 1e-4);
}

TEST_CASE("truncated solves") {
  const auto cfg = real_config(32, 8);
  qmc::QmcConfig qcfg;
  qcfg.s = 8;
  qcfg.n_points = 3;
  const Mat pts = qmc::to_parameter_cube(qmc::halton_points(qcfg));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec y = pts.row(i);
    const CVec full = problem::solve(cfg, y).coefficients;
    CHECK((problem::solve_truncated(cfg, y, 8).coefficients.array() == full.array()).all());
    const CVec origin = problem::solve(cfg, Vec(Vec::Zero(8))).coefficients;
    CHECK((problem::solve_truncated(cfg, y, 0).coefficients.array() == origin.array()).all());
    Vec half = y;
    half.tail(4).setZero();
    const CVec halved = problem::solve(cfg, half).coefficients;
    CHECK((problem::solve_truncated(cfg, y, 4).coefficients.array() == halved.array()).all());
  }
}

TEST_CASE("degenerate complex problem reduces to the Poisson problem") {
  auto cfg = complex_config(32);
  cfg.absorption = 0.0;
  cfg.reaction_scale = 0.0;
  const CVec u = problem::solve(cfg, Vec::Zero(4)).coefficients;
  const double h = cfg.fem.mesh_width();
  for (int i = 0; i < cfg.fem.n_dof; ++i) {
    const double x = (i + 1) * h;
    CHECK(u(i).real() == doctest::Approx(x * (1 - x) / 2).epsilon(1e-13));
    CHECK(u(i).imag() == 0.0);
  }
}

TEST_CASE("complex reaction solutions have positive real energy") {
  const auto cfg = complex_config(48, 8);
  const problem::DiscreteProblem discrete(cfg);
  qmc::QmcConfig qcfg;
  qcfg.s = 8;
  qcfg.n_points = 10;
  const Mat pts = qmc::to_parameter_cube(qmc::halton_points(qcfg));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vec y = pts.row(i);
    const CVec u = discrete.solve(y).coefficients;
    CHECK(u.imag().cwiseAbs().maxCoeff() > 0.0);
    CHECK(u.dot(discrete.apply_operator(y, u)).real() > 0.0);
  }
}

TEST_CASE("solutions stay uniformly bounded in the X norm") {
  qmc::QmcConfig qcfg;
  qcfg.s = 16;
  qcfg.n_points = 32;
  const Mat pts = qmc::to_parameter_cube(qmc::halton_points(qcfg));
  double previous = 0.0;
  for (int n_dof : {32, 128}) {
    const auto cfg = real_config(n_dof);
    const problem::DiscreteProblem discrete(cfg);
    const problem::GramMatrix gram = problem::assemble_gram(cfg.fem);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      worst = std::max(worst,
                       problem::x_norm(gram, discrete.solve(pts.row(i)).coefficients));
    }
    CHECK(worst < 1.0);
    if (previous > 0.0) CHECK(std::abs(worst - previous) / previous < 0.05);
    previous = worst;
  }
}

TEST_CASE("parameter validation in solve") {
  const auto cfg = real_config(16, 4);
  CHECK_THROWS_AS(problem::solve(cfg, Vec::Zero(5)), Error);  // beyond n_modes
  Vec bad = Vec::Zero(4);
  bad(2) = 1.5;
  CHECK_THROWS_AS(problem::solve(cfg, bad), Error);
  bad(2) = std::nan("");
  CHECK_THROWS_AS(problem::solve(cfg, bad), Error);
  CHECK_THROWS_AS(problem::solve(cfg, Vec()), Error);
}

TEST_CASE("coercivity margins are enforced") {
  auto cfg = real_config(16);
  cfg.field.amplitude = 0.9;  // amplitude sum exceeds 1
  CHECK_THROWS_AS(cfg.validate(), Error);

  auto ccfg = complex_config(16);
  ccfg.field.amplitude = 0.45;  // amplitude sum exceeds 1/2
  CHECK_THROWS_AS(ccfg.validate(), Error);

  auto small = real_config(1);  // n_dof below the FEM minimum
  CHECK_THROWS_AS(small.validate(), Error);
}

TEST_CASE("galerkin probe decays at first order") {
  const auto base = real_config(32, 4);
  const Mat origin = Mat::Zero(1, 4);
  double previous = 0.0;
  for (int n_dof : {32, 64, 128}) {
    auto cfg = base;
    cfg.fem.n_dof = n_dof;
    const double probe = problem::galerkin_error_probe(cfg, origin, 2);
    CHECK(probe > 0.0);
    if (previous > 0.0) {
      const double ratio = probe / previous;
      CHECK(ratio > 0.4);
      CHECK(ratio < 0.6);
    }
    previous = probe;
  }
}

TEST_CASE("galerkin probe vanishes without refinement") {
  const auto cfg = real_config(24, 4);
  qmc::QmcConfig qcfg;
  qcfg.s = 4;
  qcfg.n_points = 2;
  const Mat pts = qmc::to_parameter_cube(qmc::halton_points(qcfg));
  CHECK(problem::galerkin_error_probe(cfg, pts, 1) == 0.0);
}

TEST_CASE("galerkin probe decreases monotonically for a fixed parameter") {
  qmc::QmcConfig qcfg;
  qcfg.s = 8;
  qcfg.n_points = 1;
  qcfg.start_index = 7;
  const Mat pts = qmc::to_parameter_cube(qmc::halton_points(qcfg));
  double previous = std::numeric_limits<double>::infinity();
  for (int n_dof : {32, 64, 128}) {
    const double probe = problem::galerkin_error_probe(real_config(n_dof, 8), pts, 2);
    CHECK(probe < previous);
    previous = probe;
  }
}
