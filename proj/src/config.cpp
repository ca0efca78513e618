#include "config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace podnn::config {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_line(int line, const std::string& message) {
  throw Error(Error::Code::config, "config line " + std::to_string(line) + ": " + message);
}

double parse_double(const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) bad_line(line, "trailing characters in number '" + value + "'");
    return parsed;
  } catch (const std::logic_error&) {
    bad_line(line, "expected a number, got '" + value + "'");
  }
}

long parse_long(const std::string& value, int line) {
  long parsed = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_line(line, "expected an integer, got '" + value + "'");
  }
  return parsed;
}

std::vector<long> parse_long_list(const std::string& value, int line) {
  std::vector<long> out;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (item.empty()) bad_line(line, "empty entry in list");
    out.push_back(parse_long(item, line));
  }
  if (out.empty()) bad_line(line, "empty list");
  return out;
}

}  // namespace

analysis::StudyConfig RunConfig::study_config(unsigned threads) const {
  analysis::StudyConfig study;
  study.problem = problem;
  study.qmc = qmc;
  study.rates = rates;
  study.n_grid = n_grid;
  study.rank_rule = rank_rule;
  study.test_set_size = test_set_size;
  study.test_start_index = test_start_index;
  study.train = train;
  study.threads = threads;
  return study;
}

void RunConfig::validate() const {
  problem.validate();
  qmc.validate();
  rates.validate();
  require(qmc.s <= problem.field.n_modes, Error::Code::config,
          "config: [qmc] s exceeds [problem] n_modes");
  nn::TrainConfig probe = train;
  if (probe.stop_threshold <= 0.0) probe.stop_threshold = 1.0;
  probe.validate();
  study_config(1).validate();
}

RunConfig parse_text(const std::string& text) {
  RunConfig cfg;
  bool amplitude_set = false;

  std::istringstream stream(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(stream, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string content = trim(raw);
    if (content.empty()) continue;

    if (content.front() == '[') {
      if (content.back() != ']') bad_line(line, "unterminated section header");
      section = trim(content.substr(1, content.size() - 2));
      if (section != "problem" && section != "qmc" && section != "pod" &&
          section != "nn" && section != "study") {
        bad_line(line, "unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = content.find('=');
    if (eq == std::string::npos) bad_line(line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) bad_line(line, "empty key");
    if (value.empty()) bad_line(line, "empty value for '" + key + "'");
    if (section.empty()) bad_line(line, "key '" + key + "' outside any section");

    if (section == "problem") {
      if (key == "kind") {
        if (value == "real_diffusion") {
          cfg.problem.kind = problem::ProblemKind::real_diffusion;
        } else if (value == "complex_reaction") {
          cfg.problem.kind = problem::ProblemKind::complex_reaction;
        } else {
          bad_line(line, "unknown problem kind '" + value + "'");
        }
      } else if (key == "n_dof") {
        cfg.problem.fem.n_dof = static_cast<int>(parse_long(value, line));
      } else if (key == "theta") {
        cfg.problem.field.theta = parse_double(value, line);
      } else if (key == "amplitude") {
        cfg.problem.field.amplitude = parse_double(value, line);
        amplitude_set = true;
      } else if (key == "n_modes") {
        cfg.problem.field.n_modes = static_cast<int>(parse_long(value, line));
      } else if (key == "p") {
        cfg.problem.profile.p = parse_double(value, line);
        cfg.rates.p = cfg.problem.profile.p;
      } else if (key == "absorption") {
        cfg.problem.absorption = parse_double(value, line);
      } else {
        bad_line(line, "unknown key '" + key + "' in [problem]");
      }
    } else if (section == "qmc") {
      if (key == "s") {
        cfg.qmc.s = static_cast<int>(parse_long(value, line));
      } else if (key == "n_points") {
        cfg.qmc.n_points = parse_long(value, line);
      } else if (key == "start_index") {
        cfg.qmc.start_index = parse_long(value, line);
      } else if (key == "sequence") {
        if (value != "halton") bad_line(line, "unknown sequence '" + value + "'");
        cfg.qmc.sequence = qmc::Sequence::halton;
      } else if (key == "alpha") {
        cfg.rates.alpha = parse_double(value, line);
      } else {
        bad_line(line, "unknown key '" + key + "' in [qmc]");
      }
    } else if (section == "pod") {
      if (key == "rank_mode") {
        if (value == "tolerance") {
          cfg.rank_rule.mode = pod::RankRule::tolerance;
        } else if (value == "apriori") {
          cfg.rank_rule.mode = pod::RankRule::apriori;
        } else {
          bad_line(line, "unknown rank_mode '" + value + "'");
        }
      } else if (key == "tolerance") {
        cfg.rank_rule.tolerance = parse_double(value, line);
      } else {
        bad_line(line, "unknown key '" + key + "' in [pod]");
      }
    } else if (section == "nn") {
      if (key == "max_epochs") {
        cfg.train.max_epochs = parse_long(value, line);
      } else if (key == "batch_size") {
        cfg.train.batch_size = parse_long(value, line);
      } else if (key == "lr_initial") {
        cfg.train.lr_initial = parse_double(value, line);
      } else if (key == "adam_beta1") {
        cfg.train.adam_beta1 = parse_double(value, line);
      } else if (key == "adam_beta2") {
        cfg.train.adam_beta2 = parse_double(value, line);
      } else if (key == "adam_eps") {
        cfg.train.adam_eps = parse_double(value, line);
      } else if (key == "weight_decay") {
        cfg.train.weight_decay = parse_double(value, line);
      } else if (key == "plateau_patience") {
        cfg.train.plateau_patience = static_cast<int>(parse_long(value, line));
      } else if (key == "plateau_factor") {
        cfg.train.plateau_factor = parse_double(value, line);
      } else if (key == "plateau_eps") {
        cfg.train.plateau_eps = parse_double(value, line);
      } else if (key == "stop_threshold") {
        cfg.train.stop_threshold = parse_double(value, line);
      } else if (key == "seed") {
        cfg.train.seed = static_cast<std::uint64_t>(parse_long(value, line));
      } else {
        bad_line(line, "unknown key '" + key + "' in [nn]");
      }
    } else if (section == "study") {
      if (key == "n_grid") {
        cfg.n_grid = parse_long_list(value, line);
      } else if (key == "test_set_size") {
        cfg.test_set_size = parse_long(value, line);
      } else if (key == "test_start_index") {
        cfg.test_start_index = parse_long(value, line);
      } else {
        bad_line(line, "unknown key '" + key + "' in [study]");
      }
    }
  }

  if (!amplitude_set && cfg.problem.kind == problem::ProblemKind::complex_reaction) {
    cfg.problem.field.amplitude = 0.3;
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Error::Code::io, "config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

}  // namespace podnn::config
