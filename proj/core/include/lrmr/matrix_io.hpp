#pragma once

#include "lrmr/numerics.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace lrmr {

/// File-system failures (missing file, unwritable path). Parse errors in
/// readable files are std::domain_error.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trippable text for a double (17 significant digits).
std::string format_real(double value);

/// CSV, one matrix row per line, no header.
Matrix read_matrix_csv(std::filesystem::path const &path);
void   write_matrix_csv(std::filesystem::path const &path, Matrix const &M);

/// Vectors are single-column CSV files.
Vector read_vector_csv(std::filesystem::path const &path);
void   write_vector_csv(std::filesystem::path const &path, Vector const &v);

} // namespace lrmr
