#include "soilsim/checkpoint.hpp"

#include "soilsim/errors.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace soilsim {

namespace {

constexpr const char* kMagic = "soilsim-model v1";

void write_value(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

void write_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
  os << "[" << name << "] " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << " ";
      write_value(os, m(r, c));
    }
    os << "\n";
  }
}

void write_vector(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
  os << "[" << name << "] " << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << " ";
    write_value(os, v(i));
  }
  os << "\n";
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& is) : is_(is) {}

  std::string next() {
    std::string tok;
    if (!(is_ >> tok)) throw ParseError("unexpected end of checkpoint");
    return tok;
  }

  double next_double() {
    const std::string tok = next();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError("unparseable number '" + tok + "' in checkpoint");
    return v;
  }

  long next_long() {
    const std::string tok = next();
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError("unparseable integer '" + tok + "' in checkpoint");
    return v;
  }

  std::uint64_t next_u64() {
    const std::string tok = next();
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError("unparseable seed '" + tok + "' in checkpoint");
    return v;
  }

  void expect(const std::string& want) {
    const std::string got = next();
    if (got != want)
      throw ParseError("expected '" + want + "' in checkpoint, found '" + got + "'");
  }

 private:
  std::istream& is_;
};

Eigen::MatrixXd read_matrix(TokenReader& r, const std::string& name) {
  r.expect("[" + name + "]");
  const long rows = r.next_long();
  const long cols = r.next_long();
  if (rows < 0 || cols < 0) throw ParseError("negative dimension in checkpoint");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.next_double();
  return m;
}

Eigen::VectorXd read_vector(TokenReader& r, const std::string& name) {
  r.expect("[" + name + "]");
  const long n = r.next_long();
  if (n < 0) throw ParseError("negative dimension in checkpoint");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = r.next_double();
  return v;
}

} // namespace

void save_checkpoint(const ModelBundle& bundle, const std::string& path) {
  bundle.params.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path + " for writing");

  os << kMagic << "\n";
  os << "seed " << bundle.seed << "\n";
  write_vector(os, "feat_mean", bundle.params.feat_mean);
  write_vector(os, "feat_std", bundle.params.feat_std);
  write_matrix(os, "w1", bundle.params.w1);
  write_vector(os, "b1", bundle.params.b1);
  write_matrix(os, "w2", bundle.params.w2);
  write_vector(os, "b2", bundle.params.b2);
  write_vector(os, "z0", bundle.directions.z0);
  write_matrix(os, "directions", bundle.directions.directions);
  os << "[group_counts] " << kNumComponents << "\n";
  for (int g = 0; g < kNumComponents; ++g) {
    if (g) os << " ";
    os << bundle.directions.group_counts[static_cast<std::size_t>(g)];
  }
  os << "\n";
  os << "[norm] " << kNumComponents << "\n";
  for (int g = 0; g < kNumComponents; ++g) {
    write_value(os, bundle.norm.ranges[static_cast<std::size_t>(g)].first);
    os << " ";
    write_value(os, bundle.norm.ranges[static_cast<std::size_t>(g)].second);
    os << "\n";
  }
  Eigen::VectorXd ref = bundle.ref_norm_labels;
  write_vector(os, "ref_norm_labels", ref);
  os << "[calibration] " << kNumComponents << "\n";
  for (int g = 0; g < kNumComponents; ++g) {
    write_value(os, bundle.calibration[static_cast<std::size_t>(g)].slope);
    os << " ";
    write_value(os, bundle.calibration[static_cast<std::size_t>(g)].intercept);
    os << "\n";
  }
  os << "end\n";
  if (!os) throw ConfigError("short write to " + path);
}

ModelBundle load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path);

  std::string magic_word, magic_ver;
  if (!(is >> magic_word >> magic_ver) || magic_word + " " + magic_ver != kMagic)
    throw ParseError("not a soilsim model checkpoint");

  TokenReader r(is);
  ModelBundle bundle;
  r.expect("seed");
  bundle.seed = r.next_u64();
  bundle.params.feat_mean = read_vector(r, "feat_mean");
  bundle.params.feat_std = read_vector(r, "feat_std");
  bundle.params.w1 = read_matrix(r, "w1");
  bundle.params.b1 = read_vector(r, "b1");
  bundle.params.w2 = read_matrix(r, "w2");
  bundle.params.b2 = read_vector(r, "b2");
  bundle.directions.z0 = read_vector(r, "z0");
  const Eigen::MatrixXd dirs = read_matrix(r, "directions");
  if (dirs.rows() != kNumComponents)
    throw ParseError("direction set must have six rows");
  bundle.directions.directions = dirs;
  r.expect("[group_counts]");
  if (r.next_long() != kNumComponents) throw ParseError("bad group_counts size");
  for (int g = 0; g < kNumComponents; ++g)
    bundle.directions.group_counts[static_cast<std::size_t>(g)] =
        static_cast<int>(r.next_long());
  r.expect("[norm]");
  if (r.next_long() != kNumComponents) throw ParseError("bad norm size");
  for (int g = 0; g < kNumComponents; ++g) {
    bundle.norm.ranges[static_cast<std::size_t>(g)].first = r.next_double();
    bundle.norm.ranges[static_cast<std::size_t>(g)].second = r.next_double();
  }
  const Eigen::VectorXd ref = read_vector(r, "ref_norm_labels");
  if (ref.size() != kNumComponents) throw ParseError("bad ref_norm_labels size");
  bundle.ref_norm_labels = ref;
  r.expect("[calibration]");
  if (r.next_long() != kNumComponents) throw ParseError("bad calibration size");
  for (int g = 0; g < kNumComponents; ++g) {
    bundle.calibration[static_cast<std::size_t>(g)].slope = r.next_double();
    bundle.calibration[static_cast<std::size_t>(g)].intercept = r.next_double();
  }
  r.expect("end");

  bundle.params.validate();
  bundle.norm.validate();
  if (bundle.directions.z0.size() != bundle.params.w2.rows())
    throw ParseError("embedding dimension mismatch in checkpoint");
  return bundle;
}

} // namespace soilsim
