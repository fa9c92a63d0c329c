#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fvpinn {

/// Missing or unreadable input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);

/// Writes to a sibling temp file and renames it over `path`, so readers never
/// observe a truncated file. Creates missing parent directories.
void write_file_atomic(const std::string& path, const std::string& contents);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws when absent.
  std::size_t column(const std::string& name) const;
};

/// Minimal CSV reader: comma separated, no quoting, header row required.
CsvTable parse_csv(const std::string& text, const std::string& source = "csv");
CsvTable read_csv(const std::string& path);

/// Parses a full-string double; throws std::invalid_argument naming `what`.
double parse_double(const std::string& s, const std::string& what);
long parse_long(const std::string& s, const std::string& what);

}  // namespace fvpinn
