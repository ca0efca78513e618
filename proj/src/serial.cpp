#include "serial.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace podnn::io {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kFlagComplex = 1u << 0;
constexpr std::uint32_t kFlagRankTolerance = 1u << 1;
constexpr std::uint32_t kFlagRankApriori = 1u << 2;

class Writer {
public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    require(out_.good(), Error::Code::io, "cannot open '" + path + "' for writing");
  }

  void magic(const char tag[5]) { out_.write(tag, 4); }

  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 4);
  }

  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(b), 8);
  }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void f64_array(const double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(data),
                 static_cast<std::streamsize>(count * sizeof(double)));
    } else {
      for (std::size_t i = 0; i < count; ++i) f64(data[i]);
    }
  }

  void bytes(const std::string& s) {
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void close() {
    out_.flush();
    require(out_.good(), Error::Code::io, "write to '" + path_ + "' failed");
    out_.close();
  }

private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    require(in_.good(), Error::Code::io, "cannot open '" + path + "' for reading");
  }

  void magic(const char tag[5]) {
    char buf[4];
    read_raw(buf, 4);
    require(std::memcmp(buf, tag, 4) == 0, Error::Code::format,
            "'" + path_ + "': bad magic, expected " + tag);
  }

  std::uint32_t u32() {
    unsigned char b[4];
    read_raw(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    unsigned char b[8];
    read_raw(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  void f64_array(double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
      read_raw(reinterpret_cast<char*>(data), count * sizeof(double));
    } else {
      for (std::size_t i = 0; i < count; ++i) data[i] = f64();
    }
  }

  std::string bytes(std::size_t count) {
    std::string s(count, '\0');
    read_raw(s.data(), count);
    return s;
  }

  std::size_t dimension(const char* what, std::uint64_t max = 1ull << 32) {
    const std::uint64_t v = u64();
    require(v <= max, Error::Code::format,
            "'" + path_ + "': implausible " + std::string(what));
    return static_cast<std::size_t>(v);
  }

  void expect_eof() {
    char c;
    in_.read(&c, 1);
    require(in_.eof(), Error::Code::format, "'" + path_ + "': trailing bytes");
  }

private:
  void read_raw(char* dst, std::size_t count) {
    in_.read(dst, static_cast<std::streamsize>(count));
    require(in_.gcount() == static_cast<std::streamsize>(count), Error::Code::format,
            "'" + path_ + "': truncated file");
  }

  std::ifstream in_;
  std::string path_;
};

void write_complex_columns(Writer& w, const CMat& m, bool complex_valued) {
  if (complex_valued) {
    // Column-major with re/im interleaved matches std::complex layout.
    w.f64_array(reinterpret_cast<const double*>(m.data()),
                static_cast<std::size_t>(m.size()) * 2);
  } else {
    const Mat real = m.real();
    w.f64_array(real.data(), static_cast<std::size_t>(real.size()));
  }
}

CMat read_complex_columns(Reader& r, std::size_t rows, std::size_t cols,
                          bool complex_valued) {
  CMat m(rows, cols);
  if (complex_valued) {
    r.f64_array(reinterpret_cast<double*>(m.data()), rows * cols * 2);
  } else {
    Mat real(rows, cols);
    r.f64_array(real.data(), rows * cols);
    m = real.cast<Complex>();
  }
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_snapshots(const pod::SnapshotSet& snap, const std::string& path) {
  snap.validate();
  Writer w(path);
  w.magic("PSNP");
  w.u32(kFormatVersion);
  w.u32(snap.complex_valued ? kFlagComplex : 0);
  w.u64(static_cast<std::uint64_t>(snap.n_h()));
  w.u64(static_cast<std::uint64_t>(snap.n_samples()));
  w.u64(static_cast<std::uint64_t>(snap.param_dim()));
  for (Eigen::Index i = 0; i < snap.params.rows(); ++i) {
    const Vec row = snap.params.row(i);
    w.f64_array(row.data(), static_cast<std::size_t>(row.size()));
  }
  write_complex_columns(w, snap.snapshots, snap.complex_valued);
  w.close();
}

SnapshotPayload read_snapshots(const std::string& path) {
  Reader r(path);
  r.magic("PSNP");
  const std::uint32_t version = r.u32();
  require(version == kFormatVersion, Error::Code::format,
          "'" + path + "': unsupported snapshot version");
  const std::uint32_t flags = r.u32();
  SnapshotPayload payload;
  payload.complex_valued = (flags & kFlagComplex) != 0;
  const std::size_t n_h = r.dimension("N_h");
  const std::size_t n = r.dimension("N");
  const std::size_t s = r.dimension("s");
  payload.params.resize(n, s);
  for (std::size_t i = 0; i < n; ++i) {
    Vec row(s);
    r.f64_array(row.data(), s);
    payload.params.row(static_cast<Eigen::Index>(i)) = row;
  }
  payload.snapshots = read_complex_columns(r, n_h, n, payload.complex_valued);
  r.expect_eof();
  return payload;
}

void write_basis(const pod::ReducedBasis& basis, const std::string& path) {
  Writer w(path);
  w.magic("PRBS");
  w.u32(kFormatVersion);
  std::uint32_t flags = basis.complex_valued ? kFlagComplex : 0;
  if (basis.rank_rule == pod::RankRule::tolerance) flags |= kFlagRankTolerance;
  if (basis.rank_rule == pod::RankRule::apriori) flags |= kFlagRankApriori;
  w.u32(flags);
  w.u64(static_cast<std::uint64_t>(basis.n_h()));
  w.u64(static_cast<std::uint64_t>(basis.rank));
  w.u64(static_cast<std::uint64_t>(basis.singular_values.size()));
  w.u64(static_cast<std::uint64_t>(basis.n_samples));
  w.u64(static_cast<std::uint64_t>(basis.param_dim));
  w.f64(basis.tolerance);
  w.f64_array(basis.singular_values.data(),
              static_cast<std::size_t>(basis.singular_values.size()));
  write_complex_columns(w, basis.basis, basis.complex_valued);
  w.close();
}

pod::ReducedBasis read_basis(const std::string& path) {
  Reader r(path);
  r.magic("PRBS");
  const std::uint32_t version = r.u32();
  require(version == kFormatVersion, Error::Code::format,
          "'" + path + "': unsupported basis version");
  const std::uint32_t flags = r.u32();
  pod::ReducedBasis basis;
  basis.complex_valued = (flags & kFlagComplex) != 0;
  basis.rank_rule = pod::RankRule::full;
  if (flags & kFlagRankTolerance) basis.rank_rule = pod::RankRule::tolerance;
  if (flags & kFlagRankApriori) basis.rank_rule = pod::RankRule::apriori;
  const std::size_t n_h = r.dimension("N_h");
  const std::size_t rank = r.dimension("rank");
  const std::size_t n_sigma = r.dimension("singular value count");
  basis.n_samples = static_cast<long>(r.dimension("N"));
  basis.param_dim = static_cast<int>(r.dimension("s"));
  basis.tolerance = r.f64();
  basis.rank = static_cast<int>(rank);
  basis.singular_values.resize(static_cast<Eigen::Index>(n_sigma));
  r.f64_array(basis.singular_values.data(), n_sigma);
  basis.basis = read_complex_columns(r, n_h, rank, basis.complex_valued);
  r.expect_eof();
  require(rank <= n_sigma, Error::Code::format, "'" + path + "': rank exceeds spectrum");
  return basis;
}

void write_model(const nn::Mlp& m, const std::string& basis_id, const std::string& path) {
  m.validate();
  Writer w(path);
  w.magic("PMLP");
  w.u32(kFormatVersion);
  w.u64(m.weights.size());
  for (int d : m.dims) w.u64(static_cast<std::uint64_t>(d));
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    const Mat& weight = m.weights[k];
    for (Eigen::Index i = 0; i < weight.rows(); ++i) {
      const Vec row = weight.row(i);
      w.f64_array(row.data(), static_cast<std::size_t>(row.size()));
    }
    w.f64_array(m.biases[k].data(), static_cast<std::size_t>(m.biases[k].size()));
  }
  w.f64_array(m.input_norm.shift.data(), static_cast<std::size_t>(m.input_norm.dim()));
  w.f64_array(m.input_norm.scale.data(), static_cast<std::size_t>(m.input_norm.dim()));
  w.f64_array(m.output_norm.shift.data(), static_cast<std::size_t>(m.output_norm.dim()));
  w.f64_array(m.output_norm.scale.data(), static_cast<std::size_t>(m.output_norm.dim()));
  w.u64(basis_id.size());
  w.bytes(basis_id);
  w.close();
}

ModelPayload read_model(const std::string& path) {
  Reader r(path);
  r.magic("PMLP");
  const std::uint32_t version = r.u32();
  require(version == kFormatVersion, Error::Code::format,
          "'" + path + "': unsupported model version");
  const std::size_t layers = r.dimension("layer count", 1u << 20);
  require(layers >= 1, Error::Code::format, "'" + path + "': no layers");

  ModelPayload payload;
  nn::Mlp& m = payload.mlp;
  m.dims.resize(layers + 1);
  for (auto& d : m.dims) d = static_cast<int>(r.dimension("layer width"));
  for (std::size_t k = 0; k < layers; ++k) {
    Mat weight(m.dims[k + 1], m.dims[k]);
    for (Eigen::Index i = 0; i < weight.rows(); ++i) {
      Vec row(weight.cols());
      r.f64_array(row.data(), static_cast<std::size_t>(row.size()));
      weight.row(i) = row;
    }
    Vec bias(m.dims[k + 1]);
    r.f64_array(bias.data(), static_cast<std::size_t>(bias.size()));
    m.weights.push_back(std::move(weight));
    m.biases.push_back(std::move(bias));
  }
  const auto read_norm = [&](Eigen::Index dim) {
    nn::AffineNorm norm;
    norm.shift.resize(dim);
    norm.scale.resize(dim);
    r.f64_array(norm.shift.data(), static_cast<std::size_t>(dim));
    r.f64_array(norm.scale.data(), static_cast<std::size_t>(dim));
    return norm;
  };
  m.input_norm = read_norm(m.dims.front());
  m.output_norm = read_norm(m.dims.back());
  const std::size_t id_len = r.dimension("identifier length", 1u << 20);
  payload.basis_id = r.bytes(id_len);
  r.expect_eof();
  m.validate();
  return payload;
}

std::string points_csv(const Mat& points) {
  std::string out;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(points(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string history_csv(const nn::TrainHistory& history) {
  std::string out = "epoch,l_mse,learning_rate\n";
  for (std::size_t i = 0; i < history.loss.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_double(history.loss[i]);
    out += ',';
    out += format_double(history.learning_rate[i]);
    out += '\n';
  }
  return out;
}

std::string report_csv(const analysis::StudyReport& report) {
  std::string out =
      "N,s,J,n,width,hidden_layers,pod_tail,pod_gen_err,nn_train_mse,"
      "nn_gen_err,total_l2_err,sample_secs,pod_secs,train_secs\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.n) + ',' + std::to_string(row.s) + ',' +
           std::to_string(row.rank) + ',' + std::to_string(row.n_base) + ',' +
           std::to_string(row.width) + ',' + std::to_string(row.hidden_layers) + ',' +
           format_double(row.pod_tail) + ',' + format_double(row.pod_gen_err) + ',' +
           format_double(row.nn_train_mse) + ',' + format_double(row.nn_gen_err) + ',' +
           format_double(row.total_l2_err) + ',' + format_double(row.sample_secs) +
           ',' + format_double(row.pod_secs) + ',' + format_double(row.train_secs) +
           '\n';
  }
  return out;
}

std::string report_sidecar_json(const analysis::StudyReport& report) {
  const analysis::StudyConfig& cfg = report.config;
  json j;
  j["slopes"] = report.slopes;
  json& c = j["config"];
  c["problem"] = {
      {"kind", cfg.problem.kind == problem::ProblemKind::real_diffusion
                   ? "real_diffusion"
                   : "complex_reaction"},
      {"n_dof", cfg.problem.fem.n_dof},
      {"theta", cfg.problem.field.theta},
      {"amplitude", cfg.problem.field.amplitude},
      {"n_modes", cfg.problem.field.n_modes},
      {"p", cfg.problem.profile.p},
      {"absorption", cfg.problem.absorption},
  };
  c["qmc"] = {
      {"s", cfg.qmc.s},
      {"start_index", cfg.qmc.start_index},
      {"sequence", "halton"},
      {"alpha", cfg.rates.alpha},
  };
  c["pod"] = {
      {"rank_mode",
       cfg.rank_rule.mode == pod::RankRule::apriori ? "apriori" : "tolerance"},
      {"tolerance", cfg.rank_rule.tolerance},
  };
  c["nn"] = {
      {"max_epochs", cfg.train.max_epochs},
      {"batch_size", cfg.train.batch_size},
      {"lr_initial", cfg.train.lr_initial},
      {"adam_beta1", cfg.train.adam_beta1},
      {"adam_beta2", cfg.train.adam_beta2},
      {"adam_eps", cfg.train.adam_eps},
      {"weight_decay", cfg.train.weight_decay},
      {"plateau_patience", cfg.train.plateau_patience},
      {"plateau_factor", cfg.train.plateau_factor},
      {"plateau_eps", cfg.train.plateau_eps},
      {"stop_threshold", cfg.train.stop_threshold},
      {"seed", cfg.train.seed},
  };
  c["study"] = {
      {"n_grid", cfg.n_grid},
      {"test_set_size", cfg.test_set_size},
      {"test_start_index", cfg.resolved_test_start()},
  };
  return j.dump(2) + "\n";
}

std::string pod_diagnostics_json(const pod::ReducedBasis& basis,
                                 const pod::PodDiagnostics& diagnostics) {
  json j;
  j["rank"] = basis.rank;
  j["n_samples"] = basis.n_samples;
  j["s"] = basis.param_dim;
  j["complex"] = basis.complex_valued;
  switch (basis.rank_rule) {
    case pod::RankRule::tolerance:
      j["rank_rule"] = "tolerance";
      j["tolerance"] = basis.tolerance;
      break;
    case pod::RankRule::apriori:
      j["rank_rule"] = "apriori";
      break;
    case pod::RankRule::full:
      j["rank_rule"] = "full";
      break;
  }
  j["empirical_error"] = diagnostics.empirical_error;
  j["singular_values"] =
      std::vector<double>(basis.singular_values.data(),
                          basis.singular_values.data() + basis.singular_values.size());
  j["tail_per_rank"] =
      std::vector<double>(diagnostics.tail_per_rank.data(),
                          diagnostics.tail_per_rank.data() + diagnostics.tail_per_rank.size());
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Error::Code::io, "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  require(out.good(), Error::Code::io, "write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Error::Code::io, "cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace podnn::io
