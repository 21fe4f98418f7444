#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slasso/error.hpp"
#include "slasso/fda.hpp"

namespace fof {

/// Malformed input file; the message names the file and line.
class ParseError : public slasso::Error {
 public:
  using slasso::Error::Error;
};

/// Bad command-line usage or configuration.
class UsageError : public slasso::Error {
 public:
  using slasso::Error::Error;
};

struct CurveFile {
  slasso::FunctionalSample sample;
  std::vector<std::string> ids;  ///< empty when the file has no id column
};

/// CSV: the first row holds the grid, every later row one curve. An optional
/// leading column headed "id" carries curve labels. Numbers are parsed
/// locale-independently.
CurveFile parse_curve_csv(const std::string& text, const std::string& name = "<input>");
CurveFile read_curve_file(const std::filesystem::path& path);

std::string curve_csv(const slasso::FunctionalSample& sample, const std::vector<std::string>& ids = {});
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Parse one number, rejecting trailing characters.
std::optional<double> parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace fof
