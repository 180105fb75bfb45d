#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace avcross::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // index of a required column; throws ParseError naming it otherwise
  size_t column(const std::string& name) const;
};

// Reads a numeric CSV with a header row. Lines starting with '#' are
// metadata comments and are skipped.
CsvTable read_csv(const std::filesystem::path& path);

// Writes header + numeric rows; comment lines (without '#') are emitted
// first as '# <line>'.
void write_csv(const std::filesystem::path& path, std::span<const std::string> comments,
               std::span<const std::string> header,
               const std::vector<std::vector<double>>& rows);

std::string format_double(double v);

}  // namespace avcross::io
