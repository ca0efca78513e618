#pragma once

#include "common.hpp"
#include "nn.hpp"
#include "pod.hpp"
#include "problem.hpp"
#include "qmc.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace podnn::analysis {

/// How the study selects the retained rank per sample count.
struct RankRuleConfig {
  pod::RankRule mode = pod::RankRule::tolerance;
  double tolerance = 0.0;  // <= 0: use the coupled rule 1/(100 sqrt(N))
};

double coupled_tolerance(long n_samples);  // 1 / (100 sqrt(N))

struct StudyConfig {
  problem::ModelProblemConfig problem;
  qmc::QmcConfig qmc;   // provides s and start_index; n_points is ignored
  qmc::RateConfig rates;
  std::vector<long> n_grid;
  RankRuleConfig rank_rule;
  long test_set_size = 256;
  long test_start_index = 0;  // 0: right after the largest training segment
  nn::TrainConfig train;      // stop_threshold <= 0: resolved to N^-alpha
  unsigned threads = 0;

  long resolved_test_start() const;
  void validate() const;
};

struct StudyRow {
  long n = 0;
  int s = 0;
  int rank = 0;
  int n_base = 0;
  int width = 0;
  int hidden_layers = 0;
  double pod_tail = 0.0;
  double pod_gen_err = 0.0;
  double nn_train_mse = 0.0;
  double nn_gen_err = 0.0;
  double total_l2_err = 0.0;
  double sample_secs = 0.0;
  double pod_secs = 0.0;
  double train_secs = 0.0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  std::map<std::string, double> slopes;  // error column -> fitted log-log slope
  StudyConfig config;
};

/// Root-mean-square X-projection error of held-out solutions onto the basis.
double pod_generalization_error(const pod::ReducedBasis& basis,
                                const problem::ModelProblemConfig& cfg,
                                const Mat& test_points, unsigned threads = 0);

/// Same estimator on precomputed held-out solutions.
double pod_generalization_error(const pod::ReducedBasis& basis,
                                const CMat& test_solutions,
                                const problem::GramMatrix& gram);

/// Root-mean-square X-error of the full surrogate (network plus
/// reconstruction) against the Galerkin solutions on held-out points.
double surrogate_l2_error(const nn::Mlp& model, const pod::ReducedBasis& basis,
                          const problem::ModelProblemConfig& cfg,
                          const Mat& test_points, unsigned threads = 0);

double surrogate_l2_error(const nn::Mlp& model, const pod::ReducedBasis& basis,
                          const Mat& test_points, const CMat& test_solutions,
                          const problem::GramMatrix& gram);

/// Least-squares slope of log(err) against log(n). Pairs with nonpositive
/// error are dropped with a warning; fewer than three usable pairs is an
/// error.
double fit_rate(std::span<const double> ns, std::span<const double> errs);

/// Full sampling -> POD -> training -> evaluation sweep over the N grid.
StudyReport run_study(const StudyConfig& cfg);

struct TruncationResult {
  std::vector<int> s_grid;
  std::vector<double> max_errors;
  bool has_slope = false;
  double slope = 0.0;
};

/// Max-over-probe-points X-distance between the solutions truncated to 2s'
/// and to s' coordinates, for each s' in the grid.
TruncationResult truncation_study(const problem::ModelProblemConfig& cfg,
                                  const std::vector<int>& s_grid,
                                  const Mat& probe_points);

}  // namespace podnn::analysis
