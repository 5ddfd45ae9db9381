#pragma once

#include "vcsurv/data.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vcsurv {

/// Header plus rows of an RFC-4180 file; line numbers are 1-based physical lines.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  /// Index of a header column; throws ErrorCode::ingest naming the file.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  /// Parses a numeric cell or throws ErrorCode::ingest with row/column context.
  [[nodiscard]] double number(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::string_view text, std::string source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

/// Subjects file: id, time, event (0/1). Longitudinal file: id, obs_time, z1..zp.
/// Subjects are ordered by id (numerically when ids are numbers) and
/// observations by time, so row order in either file does not matter.
/// tau defaults to the largest follow-up time.
Dataset ingest(const std::filesystem::path& subjects, const std::filesystem::path& longitudinal,
               std::optional<double> tau = std::nullopt);
Dataset ingest_text(std::string_view subjects, std::string_view longitudinal,
                    std::optional<double> tau = std::nullopt);

/// Inverse of ingest, full precision.
void write_dataset(const Dataset& data, const std::filesystem::path& subjects,
                   const std::filesystem::path& longitudinal);
void write_dataset(const Dataset& data, std::ostream& subjects, std::ostream& longitudinal);

/// Shortest round-trip decimal form.
std::string format_exact(double x);
/// Six significant digits, for result tables.
std::string format_value(double x);
/// Quotes a field when it contains a comma, quote, or line break.
std::string csv_escape(std::string_view field);

}  // namespace vcsurv
