#include "analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

namespace podnn::analysis {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

CMat solve_all(const problem::ModelProblemConfig& cfg, const Mat& points,
               unsigned threads) {
  return pod::assemble_snapshots(cfg, points, threads).snapshots;
}

// Mean squared X-norm of the residual columns.
double mean_squared_x_norm(const CMat& columns, const problem::GramMatrix& gram) {
  const CMat weighted = gram.apply(columns);
  double total = 0.0;
  for (Eigen::Index c = 0; c < columns.cols(); ++c) {
    total += columns.col(c).dot(weighted.col(c)).real();
  }
  return total / static_cast<double>(columns.cols());
}

}  // namespace

double coupled_tolerance(long n_samples) {
  require(n_samples >= 1, Error::Code::invalid_argument,
          "coupled_tolerance: N must be >= 1");
  return 1.0 / (100.0 * std::sqrt(static_cast<double>(n_samples)));
}

long StudyConfig::resolved_test_start() const {
  if (test_start_index > 0) return test_start_index;
  const long max_n = n_grid.empty() ? 0 : n_grid.back();
  return qmc.start_index + max_n;
}

void StudyConfig::validate() const {
  problem.validate();
  qmc.validate();
  rates.validate();
  require(!n_grid.empty(), Error::Code::config, "study: n_grid must be nonempty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    require(n_grid[i] >= 1, Error::Code::config, "study: sample counts must be >= 1");
    if (i > 0) {
      require(n_grid[i] > n_grid[i - 1], Error::Code::config,
              "study: n_grid must be strictly increasing");
    }
  }
  require(test_set_size >= 1, Error::Code::config, "study: test_set_size must be >= 1");
  require(qmc.s <= problem.field.n_modes, Error::Code::config,
          "study: truncation dimension exceeds the number of expansion modes");
  // The test segment may not overlap any training segment.
  const long train_end = qmc.start_index + n_grid.back();
  const long test_begin = resolved_test_start();
  require(test_begin >= train_end || test_begin + test_set_size <= qmc.start_index,
          Error::Code::config, "study: test segment overlaps the training segments");
  if (rank_rule.mode == pod::RankRule::apriori) {
    require(rank_rule.tolerance <= 0.0, Error::Code::config,
            "study: a-priori rank selection does not take a tolerance");
  }
  nn::TrainConfig probe = train;
  if (probe.stop_threshold <= 0.0) probe.stop_threshold = 1.0;
  probe.validate();
}

double pod_generalization_error(const pod::ReducedBasis& basis,
                                const CMat& test_solutions,
                                const problem::GramMatrix& gram) {
  require(test_solutions.cols() >= 1, Error::Code::invalid_argument,
          "pod_generalization_error: empty test set");
  require(test_solutions.rows() == basis.n_h(), Error::Code::invalid_argument,
          "pod_generalization_error: dimension mismatch");
  CMat residual = test_solutions;
  if (basis.rank > 0) {
    const CMat coeffs = basis.basis.adjoint() * gram.apply(test_solutions);
    residual -= basis.basis * coeffs;
  }
  return std::sqrt(mean_squared_x_norm(residual, gram));
}

double pod_generalization_error(const pod::ReducedBasis& basis,
                                const problem::ModelProblemConfig& cfg,
                                const Mat& test_points, unsigned threads) {
  const problem::GramMatrix gram = problem::assemble_gram(cfg.fem);
  return pod_generalization_error(basis, solve_all(cfg, test_points, threads), gram);
}

double surrogate_l2_error(const nn::Mlp& model, const pod::ReducedBasis& basis,
                          const Mat& test_points, const CMat& test_solutions,
                          const problem::GramMatrix& gram) {
  require(test_points.rows() == test_solutions.cols(), Error::Code::invalid_argument,
          "surrogate_l2_error: points and solutions disagree");
  require(model.output_dim() == 2 * basis.rank, Error::Code::invalid_argument,
          "surrogate_l2_error: model width does not match the basis rank");
  CMat residual(test_solutions.rows(), test_solutions.cols());
  for (Eigen::Index i = 0; i < test_points.rows(); ++i) {
    const Vec coeffs = nn::predict(model, test_points.row(i));
    residual.col(i) = test_solutions.col(i) - pod::reconstruct(coeffs, basis);
  }
  return std::sqrt(mean_squared_x_norm(residual, gram));
}

double surrogate_l2_error(const nn::Mlp& model, const pod::ReducedBasis& basis,
                          const problem::ModelProblemConfig& cfg,
                          const Mat& test_points, unsigned threads) {
  const problem::GramMatrix gram = problem::assemble_gram(cfg.fem);
  return surrogate_l2_error(model, basis, test_points,
                            solve_all(cfg, test_points, threads), gram);
}

double fit_rate(std::span<const double> ns, std::span<const double> errs) {
  require(ns.size() == errs.size(), Error::Code::invalid_argument,
          "fit_rate: length mismatch");
  std::vector<double> log_n, log_e;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0.0) || !(errs[i] > 0.0)) {
      std::cerr << "fit_rate: dropping nonpositive pair (" << ns[i] << ", " << errs[i]
                << ")\n";
      continue;
    }
    log_n.push_back(std::log(ns[i]));
    log_e.push_back(std::log(errs[i]));
  }
  require(log_n.size() >= 3, Error::Code::invalid_argument,
          "fit_rate: need at least three usable points");
  const double n = static_cast<double>(log_n.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sx += log_n[i];
    sy += log_e[i];
    sxx += log_n[i] * log_n[i];
    sxy += log_n[i] * log_e[i];
  }
  const double denom = n * sxx - sx * sx;
  require(denom > 0.0, Error::Code::invalid_argument,
          "fit_rate: degenerate abscissae");
  return (n * sxy - sx * sy) / denom;
}

StudyReport run_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyReport report;
  report.config = cfg;

  const problem::GramMatrix gram = problem::assemble_gram(cfg.problem.fem);

  qmc::QmcConfig test_qmc = cfg.qmc;
  test_qmc.n_points = cfg.test_set_size;
  test_qmc.start_index = cfg.resolved_test_start();
  const Mat test_points = qmc::to_parameter_cube(qmc::halton_points(test_qmc));
  const CMat test_solutions = solve_all(cfg.problem, test_points, cfg.threads);

  // Coefficient targets of the held-out solutions are recomputed per row
  // because the basis changes with N.
  for (long n : cfg.n_grid) {
    StudyRow row;
    row.n = n;
    row.s = cfg.qmc.s;
    const std::string where = "study N=" + std::to_string(n);
    try {
      auto t_sample = Clock::now();
      qmc::QmcConfig train_qmc = cfg.qmc;
      train_qmc.n_points = n;
      const Mat train_points = qmc::to_parameter_cube(qmc::halton_points(train_qmc));
      const pod::SnapshotSet snapshots =
          pod::assemble_snapshots(cfg.problem, train_points, cfg.threads);
      row.sample_secs = seconds_since(t_sample);

      auto t_pod = Clock::now();
      auto [basis_full, diagnostics] = pod::pod_basis(snapshots, gram);
      int rank = 0;
      double tau = 0.0;
      if (cfg.rank_rule.mode == pod::RankRule::apriori) {
        rank = std::min(pod::rank_apriori(n, cfg.rates), basis_full.rank);
      } else {
        tau = cfg.rank_rule.tolerance > 0.0 ? cfg.rank_rule.tolerance
                                            : coupled_tolerance(n);
        rank = pod::rank_by_tolerance(basis_full, tau);
      }
      require(rank >= 1, Error::Code::numeric, "selected rank is zero");
      const pod::ReducedBasis basis =
          basis_full.truncated(rank, cfg.rank_rule.mode, tau);
      row.rank = rank;
      row.pod_tail = diagnostics.tail_per_rank(rank);
      row.pod_secs = seconds_since(t_pod);

      auto t_train = Clock::now();
      const CMat coeffs = basis.basis.adjoint() * gram.apply(snapshots.snapshots);
      Mat targets(2 * rank, n);
      targets.topRows(rank) = coeffs.real();
      targets.bottomRows(rank) = coeffs.imag();
      const Mat inputs = train_points.transpose();

      const nn::SizingConfig sizing = nn::size_apriori(n, cfg.rates);
      row.n_base = sizing.n;
      row.width = sizing.width;
      row.hidden_layers = sizing.hidden_layers;

      nn::Mlp model = nn::mlp_init(nn::layer_dims(sizing, cfg.qmc.s, 2 * rank),
                                   cfg.train.seed);
      nn::TrainConfig train_cfg = cfg.train;
      if (train_cfg.stop_threshold <= 0.0) {
        train_cfg.stop_threshold =
            std::pow(static_cast<double>(n), -cfg.rates.alpha);
      }
      const nn::TrainHistory history = nn::train(model, inputs, targets, train_cfg);
      row.nn_train_mse = history.best_loss;
      row.train_secs = seconds_since(t_train);

      row.pod_gen_err = pod_generalization_error(basis, test_solutions, gram);
      const CMat test_coeffs = basis.basis.adjoint() * gram.apply(test_solutions);
      double coeff_err2 = 0.0;
      for (Eigen::Index i = 0; i < test_points.rows(); ++i) {
        Vec truth(2 * rank);
        truth.head(rank) = test_coeffs.col(i).real();
        truth.tail(rank) = test_coeffs.col(i).imag();
        coeff_err2 += (truth - nn::predict(model, test_points.row(i))).squaredNorm();
      }
      row.nn_gen_err = std::sqrt(coeff_err2 / static_cast<double>(test_points.rows()));
      row.total_l2_err =
          surrogate_l2_error(model, basis, test_points, test_solutions, gram);
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    report.rows.push_back(row);
  }

  const auto fit_column = [&](const std::string& name, auto getter) {
    std::vector<double> ns, errs;
    for (const auto& row : report.rows) {
      ns.push_back(static_cast<double>(row.n));
      errs.push_back(getter(row));
    }
    try {
      report.slopes[name] = fit_rate(ns, errs);
    } catch (const Error&) {
      // Fewer than three usable points: no slope for this column.
    }
  };
  fit_column("pod_tail", [](const StudyRow& r) { return r.pod_tail; });
  fit_column("pod_gen_err", [](const StudyRow& r) { return r.pod_gen_err; });
  fit_column("nn_train_mse", [](const StudyRow& r) { return r.nn_train_mse; });
  fit_column("nn_gen_err", [](const StudyRow& r) { return r.nn_gen_err; });
  fit_column("total_l2_err", [](const StudyRow& r) { return r.total_l2_err; });
  return report;
}

TruncationResult truncation_study(const problem::ModelProblemConfig& cfg,
                                  const std::vector<int>& s_grid,
                                  const Mat& probe_points) {
  require(!s_grid.empty(), Error::Code::invalid_argument,
          "truncation_study: empty grid");
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    require(s_grid[i] >= 1, Error::Code::invalid_argument,
            "truncation_study: grid entries must be >= 1");
    if (i > 0) {
      require(s_grid[i] > s_grid[i - 1], Error::Code::invalid_argument,
              "truncation_study: grid must be increasing");
    }
  }
  require(probe_points.rows() >= 1, Error::Code::invalid_argument,
          "truncation_study: empty probe set");
  require(2 * s_grid.back() <= probe_points.cols(), Error::Code::invalid_argument,
          "truncation_study: probe points need at least 2*max(s') coordinates");
  require(probe_points.cols() <= cfg.field.n_modes, Error::Code::invalid_argument,
          "truncation_study: probe dimension exceeds the number of expansion modes");

  const problem::DiscreteProblem discrete(cfg);
  const problem::GramMatrix gram = problem::assemble_gram(cfg.fem);

  TruncationResult result;
  result.s_grid = s_grid;
  for (int s_sub : s_grid) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < probe_points.rows(); ++r) {
      Vec wide = probe_points.row(r);
      wide.tail(wide.size() - 2 * s_sub).setZero();
      Vec narrow = probe_points.row(r);
      narrow.tail(narrow.size() - s_sub).setZero();
      const CVec diff =
          discrete.solve(wide).coefficients - discrete.solve(narrow).coefficients;
      worst = std::max(worst, problem::x_norm(gram, diff));
    }
    result.max_errors.push_back(worst);
  }

  if (result.max_errors.size() >= 3) {
    std::vector<double> xs(s_grid.begin(), s_grid.end());
    try {
      result.slope = fit_rate(xs, result.max_errors);
      result.has_slope = true;
    } catch (const Error&) {
      result.has_slope = false;
    }
  }
  return result;
}

}  // namespace podnn::analysis
