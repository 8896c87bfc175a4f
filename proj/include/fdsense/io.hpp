#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdsense/model_scores.hpp"

namespace fdsense::io {

/// A delimiter-separated numeric table with a header row.
struct Table {
  std::vector<std::string> header;
  RowMatrix values;
};

/// Reads a comma- or tab-separated file (delimiter taken from the header
/// line). Rejects ragged rows, empty bodies and non-finite or non-numeric
/// cells, naming the line and column.
Table read_table(const std::filesystem::path& path);

/// Samples file: one draw per line; an optional column named "chain" holds
/// integer chain ids.
SampleSet load_samples(const std::filesystem::path& path, SampleOrigin origin = SampleOrigin::iid);

/// Score matrix aligned with a sample set of shape expected_m x expected_d.
PrecomputedScores load_score_matrix(const std::filesystem::path& path, std::size_t expected_m,
                                    std::size_t expected_d);

/// Writes a matrix with the given column names (shortest round-trip number
/// formatting).
void write_matrix(const std::filesystem::path& path, const std::vector<std::string>& header, const RowMatrix& values);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

}  // namespace fdsense::io
