#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hpglm/expfam.hpp"

namespace hpglm {

/// A numeric table with named columns, as read from or written to CSV.
struct Table {
  std::vector<std::string> columns;
  Matrix values;

  // Index of a column; throws DataError naming the missing column.
  Eigen::Index column_index(const std::string& name) const;
  Vector column(const std::string& name) const;
};

/// Reads a comma-separated file with a header row. Every field must parse as
/// a finite decimal number; errors name the file, line and column.
Table read_csv(const std::filesystem::path& path);

// Shortest decimal text that round-trips: 17 significant digits.
std::string format_double(double value);

std::string to_csv(const Table& table);

// Writes the whole file to a temporary sibling, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace hpglm
