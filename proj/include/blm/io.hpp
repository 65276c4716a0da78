#pragma once

// Dataset CSV export/ingest and small text helpers shared by the writers.
//
// CSV layout: header x_1,...,x_p,y then one sample per line, every value
// printed with 17 significant digits so doubles round-trip exactly.

#include "blm/common.hpp"
#include "blm/synth.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace blm {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest-safe text form: 17 significant digits, general notation.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

inline void check_written(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write failed for " + path.string());
}

inline void write_csv(std::ostream& os, const Matrix& X, const Vector& y) {
  require(X.rows() == y.size(), "write_csv: dimension mismatch");
  for (Index j = 0; j < X.cols(); ++j) os << "x_" << (j + 1) << ',';
  os << "y\n";
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) os << format_double(X(i, j)) << ',';
    os << format_double(y[i]) << '\n';
  }
}

inline void export_csv(const std::filesystem::path& path, const Matrix& X, const Vector& y) {
  auto os = open_output(path);
  write_csv(os, X, y);
  check_written(os, path);
}

/// Companion metadata: seed, distribution, link, sparsity and the nonzeros
/// of beta.
inline void write_metadata(std::ostream& os, const SyntheticDataset& ds) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  tree.put("dataset.n", ds.n());
  tree.put("dataset.p", ds.p());
  tree.put("dataset.s", ds.sparsity);
  tree.put("dataset.seed", ds.seed);
  tree.put("dataset.dist", distribution_name(ds.dist));
  tree.put("dataset.link", link_name(ds.link.kind));
  tree.put("dataset.noise_std", format_double(ds.link.noise_std));
  std::string support, values;
  for (Index j = 0; j < ds.beta.size(); ++j) {
    if (ds.beta[j] == 0.0) continue;
    if (!support.empty()) {
      support += ' ';
      values += ' ';
    }
    support += std::to_string(j + 1);
    values += format_double(ds.beta[j]);
  }
  tree.put("beta.support", support);
  tree.put("beta.values", values);
  pt::write_ini(os, tree);
}

inline void export_dataset(const std::filesystem::path& csv_path, const SyntheticDataset& ds) {
  export_csv(csv_path, ds.X, ds.y);
  auto meta_path = csv_path;
  meta_path.replace_extension(".meta.ini");
  auto os = open_output(meta_path);
  write_metadata(os, ds);
  check_written(os, meta_path);
}

struct IngestedData {
  Matrix X;
  Vector y;
};

/// Parses the CSV layout above. The header must read x_1,...,x_p,y.
inline IngestedData read_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError("empty file: missing header", 1);
  ++lineno;
  const auto header = split(line, ',');
  if (header.empty() || header.back() != "y")
    throw ParseError("header '" + trim(line) + "' has no trailing y column", lineno);
  const auto p = static_cast<Index>(header.size()) - 1;
  if (p < 1) throw ParseError("header '" + trim(line) + "' has no feature columns", lineno);
  for (Index j = 0; j < p; ++j)
    if (header[static_cast<std::size_t>(j)] != "x_" + std::to_string(j + 1))
      throw ParseError("header column " + std::to_string(j + 1) + " is '" +
                           header[static_cast<std::size_t>(j)] + "', expected x_" +
                           std::to_string(j + 1),
                       lineno);

  std::vector<double> values;
  Index rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<Index>(cells.size()) != p + 1)
      throw ParseError("expected " + std::to_string(p + 1) + " columns, found " +
                           std::to_string(cells.size()),
                       lineno);
    for (const auto& c : cells) {
      double v = 0.0;
      auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size())
        throw ParseError("non-numeric cell '" + c + "'", lineno);
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) throw InvalidArgument("empty dataset: header but no rows");

  IngestedData out;
  out.X.resize(rows, p);
  out.y.resize(rows);
  for (Index i = 0; i < rows; ++i) {
    const double* row = values.data() + i * (p + 1);
    for (Index j = 0; j < p; ++j) out.X(i, j) = row[j];
    out.y[i] = row[p];
  }
  return out;
}

inline IngestedData ingest_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_csv(is);
}

}  // namespace blm
