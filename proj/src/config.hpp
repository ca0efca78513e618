#pragma once

#include "analysis.hpp"
#include "nn.hpp"
#include "problem.hpp"
#include "qmc.hpp"

#include <string>
#include <vector>

namespace podnn::config {

/// Validated contents of a run configuration file. Parsing rejects unknown
/// sections and keys, so an invalid file never reaches a compute stage.
struct RunConfig {
  problem::ModelProblemConfig problem;
  qmc::QmcConfig qmc;
  qmc::RateConfig rates;
  analysis::RankRuleConfig rank_rule;
  nn::TrainConfig train;  // stop_threshold <= 0 means "use N^-alpha"
  std::vector<long> n_grid = {64, 128, 256};
  long test_set_size = 256;
  long test_start_index = 0;  // 0: right after the largest training segment

  analysis::StudyConfig study_config(unsigned threads) const;
  void validate() const;
};

/// Parses `key = value` lines under [section] headers; '#' starts a comment.
RunConfig parse_text(const std::string& text);
RunConfig parse_file(const std::string& path);

}  // namespace podnn::config
