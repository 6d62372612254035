#include "lrmr/matrix_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace lrmr {

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

namespace {

double parse_real(std::string_view text, std::filesystem::path const &path, std::size_t line)
{
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) { text.remove_prefix(1); }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) { text.remove_suffix(1); }
  double value = 0.0;
  auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::domain_error(fmt::format("{}:{}: cannot parse '{}' as a number", path.string(), line, text));
  }
  if (!std::isfinite(value)) {
    throw std::domain_error(fmt::format("{}:{}: non-finite value '{}'", path.string(), line, text));
  }
  return value;
}

} // namespace

Matrix read_matrix_csv(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError(fmt::format("cannot open '{}' for reading", path.string())); }
  std::vector<std::vector<double>> rows;
  std::string                      line;
  std::size_t                      lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") { continue; }
    std::vector<double> row;
    std::size_t         start = 0;
    while (true) {
      auto const comma = line.find(',', start);
      row.push_back(parse_real(std::string_view(line).substr(start, comma - start), path, lineno));
      if (comma == std::string::npos) { break; }
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::domain_error(fmt::format("{}:{}: row has {} fields, expected {}", path.string(), lineno, row.size(),
                                          rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) { throw std::domain_error(fmt::format("{}: no data", path.string())); }
  Matrix M(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return M;
}

void write_matrix_csv(std::filesystem::path const &path, Matrix const &M)
{
  std::ostringstream out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) { out << ','; }
      out << format_real(M(i, j));
    }
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) { throw IoError(fmt::format("cannot open '{}' for writing", path.string())); }
  file << out.str();
  if (!file) { throw IoError(fmt::format("write to '{}' failed", path.string())); }
}

Vector read_vector_csv(std::filesystem::path const &path)
{
  Matrix const M = read_matrix_csv(path);
  if (M.cols() != 1) {
    throw std::domain_error(fmt::format("{}: expected a single-column vector, found {} columns", path.string(), M.cols()));
  }
  return M.col(0);
}

void write_vector_csv(std::filesystem::path const &path, Vector const &v) { write_matrix_csv(path, Matrix(v)); }

} // namespace lrmr
