#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scca/evaluation.hpp"

namespace scca {

/// Shortest-round-trip decimal rendering: parsing the result recovers
/// the exact double.
inline std::string fmt_real17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string at_line(const std::string& path, int64_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

inline void ensure_line_consumed(std::istringstream& in,
                                 const std::string& path, int64_t line) {
  std::string tail;
  if (in >> tail)
    throw input_error(at_line(path, line) + "unexpected trailing content '" +
                      tail + "'");
}

inline std::string getline_or_fail(std::istream& in, const std::string& path,
                                   int64_t& line, const char* what) {
  std::string row;
  if (!std::getline(in, row))
    throw input_error(at_line(path, line + 1) + "file ends before " + what);
  line += 1;
  return row;
}

/* strtod-based so nan/inf/overflowing tokens parse and are then rejected
   as non-finite, rather than tripping stream failbits */
inline Vector parse_row(const std::string& row, Index count,
                        const std::string& path, int64_t line) {
  Vector v(count);
  const char* p = row.c_str();
  for (Index i = 0; i < count; ++i) {
    char* end = nullptr;
    const double val = std::strtod(p, &end);
    if (end == p)
      throw input_error(at_line(path, line) + "expected a real number");
    if (!std::isfinite(val))
      throw input_error(at_line(path, line) + "non-finite value");
    v[i] = val;
    p = end;
  }
  while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
  if (*p != '\0')
    throw input_error(at_line(path, line) + "unexpected trailing content '" +
                      std::string(p) + "'");
  return v;
}

inline void write_row(std::ostream& out, const double* values, Index count) {
  for (Index i = 0; i < count; ++i) {
    if (i > 0) out << ' ';
    out << fmt_real17(values[i]);
  }
  out << '\n';
}

}  // namespace detail

/// Streams samples out of a dataset file without loading it whole.
/// Header line: `dx dy n`; then n rows of dx+dy reals (x first).
class DatasetReader final : public SampleSource {
 public:
  explicit DatasetReader(std::string path)
      : path_(std::move(path)), in_(path_, std::ios::binary) {
    if (!in_) throw input_error("cannot open dataset file: " + path_);
    std::string header;
    if (!std::getline(in_, header))
      throw input_error(path_ + ":1: empty dataset file");
    line_ = 1;
    std::istringstream h(header);
    long long dx = 0, dy = 0, n = 0;
    if (!(h >> dx >> dy >> n))
      throw input_error(path_ + ":1: header must be 'dx dy n'");
    detail::ensure_line_consumed(h, path_, 1);
    if (dx < 1 || dy < 1 || n < 0)
      throw input_error(path_ + ":1: header values out of range");
    dx_ = static_cast<Index>(dx);
    dy_ = static_cast<Index>(dy);
    count_ = n;
  }

  Index dx() const { return dx_; }
  Index dy() const { return dy_; }
  int64_t count() const { return count_; }

  std::optional<PairedSample> next() override {
    if (emitted_ == count_) return std::nullopt;
    std::string row;
    if (!std::getline(in_, row))
      throw input_error(path_ + ": file ends after " +
                        std::to_string(emitted_) + " samples but the header "
                        "declares " + std::to_string(count_));
    line_ += 1;
    const Vector joint = detail::parse_row(row, dx_ + dy_, path_, line_);
    emitted_ += 1;
    return PairedSample{joint.head(dx_), joint.tail(dy_)};
  }

 private:
  std::string path_;
  std::ifstream in_;
  Index dx_ = 0;
  Index dy_ = 0;
  int64_t count_ = 0;
  int64_t emitted_ = 0;
  int64_t line_ = 0;
};

/// A dataset held fully in memory.
struct Dataset {
  Index dx = 0;
  Index dy = 0;
  std::vector<PairedSample> samples;
};

inline Dataset read_dataset(const std::string& path) {
  DatasetReader reader(path);
  Dataset out;
  out.dx = reader.dx();
  out.dy = reader.dy();
  out.samples.reserve(static_cast<std::size_t>(reader.count()));
  while (auto s = reader.next()) out.samples.push_back(std::move(*s));
  return out;
}

inline void write_dataset(const std::string& path, Index dx, Index dy,
                          const std::vector<PairedSample>& samples) {
  if (dx < 1 || dy < 1)
    throw input_error("write_dataset: dimensions must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open file for writing: " + path);
  out << dx << ' ' << dy << ' ' << samples.size() << '\n';
  Vector joint(dx + dy);
  for (const PairedSample& s : samples) {
    if (s.x.size() != dx || s.y.size() != dy)
      throw input_error("write_dataset: sample dimension mismatch");
    require_finite(s.x, "write_dataset");
    require_finite(s.y, "write_dataset");
    joint.head(dx) = s.x;
    joint.tail(dy) = s.y;
    detail::write_row(out, joint.data(), joint.size());
  }
  if (!out) throw input_error("write failed: " + path);
}

/// Ground-truth file: `dx dy k_true`, the correlations on one line, then
/// C_x (dx rows), C_y (dy rows), C_xy (dx rows).
inline void write_truth(const std::string& path, const GroundTruth& g) {
  validate(g);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open file for writing: " + path);
  out << g.dx() << ' ' << g.dy() << ' ' << g.rho.size() << '\n';
  detail::write_row(out, g.rho.data(), g.rho.size());
  const auto write_matrix = [&out](const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      const Vector row = m.row(i);
      detail::write_row(out, row.data(), row.size());
    }
  };
  write_matrix(g.c_x);
  write_matrix(g.c_y);
  write_matrix(g.c_xy);
  if (!out) throw input_error("write failed: " + path);
}

inline GroundTruth read_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open ground-truth file: " + path);
  int64_t line = 0;
  const std::string header =
      detail::getline_or_fail(in, path, line, "the header");
  std::istringstream h(header);
  long long dx = 0, dy = 0, k_true = 0;
  if (!(h >> dx >> dy >> k_true))
    throw input_error(path + ":1: header must be 'dx dy k_true'");
  detail::ensure_line_consumed(h, path, 1);
  if (dx < 1 || dy < 1 || k_true < 1 || k_true > std::min(dx, dy))
    throw input_error(path + ":1: header values out of range");

  GroundTruth g;
  g.rho = detail::parse_row(
      detail::getline_or_fail(in, path, line, "the correlations"),
      static_cast<Index>(k_true), path, line);
  const auto read_matrix = [&](Index rows, Index cols, const char* what) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      m.row(i) = detail::parse_row(detail::getline_or_fail(in, path, line, what),
                                   cols, path, line);
    return m;
  };
  g.c_x = read_matrix(dx, dx, "the x covariance");
  g.c_y = read_matrix(dy, dy, "the y covariance");
  g.c_xy = read_matrix(dx, dy, "the cross covariance");
  validate(g);
  return g;
}

/// Solution file: `dx dy selected heuristic`, then the whitened-space
/// directions U (dx rows) and V (dy rows) followed by the extracted
/// factors (same shapes).
inline void write_solution(const std::string& path, const CcaSolution& s,
                           Index dx, Index dy) {
  const Index sel = s.selected_count;
  if (s.u.rows() != dx || s.v.rows() != dy || s.u.cols() != sel ||
      s.v.cols() != sel || s.u_tilde.rows() != dx || s.v_tilde.rows() != dy ||
      s.u_tilde.cols() != sel || s.v_tilde.cols() != sel)
    throw input_error("write_solution: factor dimensions are inconsistent");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open file for writing: " + path);
  out << dx << ' ' << dy << ' ' << sel << ' ' << (s.heuristic ? 1 : 0)
      << '\n';
  const auto write_matrix = [&out](const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
      const Vector row = m.row(i);
      detail::write_row(out, row.data(), row.size());
    }
  };
  write_matrix(s.u);
  write_matrix(s.v);
  write_matrix(s.u_tilde);
  write_matrix(s.v_tilde);
  if (!out) throw input_error("write failed: " + path);
}

struct SolutionFile {
  Index dx = 0;
  Index dy = 0;
  CcaSolution solution;
};

inline SolutionFile read_solution(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open solution file: " + path);
  int64_t line = 0;
  const std::string header =
      detail::getline_or_fail(in, path, line, "the header");
  std::istringstream h(header);
  long long dx = 0, dy = 0, sel = 0, heuristic = 0;
  if (!(h >> dx >> dy >> sel >> heuristic))
    throw input_error(path + ":1: header must be 'dx dy selected heuristic'");
  detail::ensure_line_consumed(h, path, 1);
  if (dx < 1 || dy < 1 || sel < 0 || (heuristic != 0 && heuristic != 1))
    throw input_error(path + ":1: header values out of range");

  SolutionFile out;
  out.dx = static_cast<Index>(dx);
  out.dy = static_cast<Index>(dy);
  out.solution.selected_count = static_cast<Index>(sel);
  out.solution.heuristic = heuristic == 1;
  const auto read_matrix = [&](Index rows, const char* what) {
    Matrix m(rows, static_cast<Index>(sel));
    for (Index i = 0; i < rows; ++i)
      m.row(i) = detail::parse_row(detail::getline_or_fail(in, path, line, what),
                                   static_cast<Index>(sel), path, line);
    return m;
  };
  out.solution.u = read_matrix(out.dx, "the U block");
  out.solution.v = read_matrix(out.dy, "the V block");
  out.solution.u_tilde = read_matrix(out.dx, "the extracted U block");
  out.solution.v_tilde = read_matrix(out.dy, "the extracted V block");
  return out;
}

}  // namespace scca
