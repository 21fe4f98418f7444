#include "curve_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "slasso/format.hpp"

namespace fof {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_id_header(std::string_view cell) {
  return cell.size() == 2 && (cell[0] == 'i' || cell[0] == 'I') && (cell[1] == 'd' || cell[1] == 'D');
}

}  // namespace

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

CurveFile parse_curve_csv(const std::string& text, const std::string& name) {
  std::vector<std::pair<int, std::string>> lines;
  {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (trim(line).empty()) continue;
      lines.emplace_back(no, line);
    }
  }
  if (lines.empty()) throw ParseError(name + ": empty file");
  const auto where = [&](int line) { return name + ":" + std::to_string(line) + ": "; };

  std::vector<std::string> header = split_csv_line(lines[0].second);
  const bool has_ids = is_id_header(header[0]);
  const std::size_t first = has_ids ? 1 : 0;
  if (header.size() - first < 2) throw ParseError(where(lines[0].first) + "grid row needs at least two points");
  std::vector<double> grid;
  for (std::size_t j = first; j < header.size(); ++j) {
    const auto v = parse_double(header[j]);
    if (!v) throw ParseError(where(lines[0].first) + "grid value '" + header[j] + "' in column " +
                             std::to_string(j + 1) + " is not a number");
    if (!grid.empty() && !(*v > grid.back()))
      throw ParseError(where(lines[0].first) + "grid is not strictly increasing at column " + std::to_string(j + 1));
    grid.push_back(*v);
  }
  if (lines.size() < 2) throw ParseError(name + ": no curves after the grid row");

  CurveFile out;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i].second);
    if (cells.size() != header.size())
      throw ParseError(where(lines[i].first) + "row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(header.size()));
    if (has_ids) out.ids.push_back(cells[0]);
    for (std::size_t j = first; j < cells.size(); ++j) {
      const auto v = parse_double(cells[j]);
      if (!v || !std::isfinite(*v))
        throw ParseError(where(lines[i].first) + "value '" + cells[j] + "' in column " + std::to_string(j + 1) +
                         " is not a finite number");
      values(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - first)) = *v;
    }
  }
  out.sample = slasso::FunctionalSample(slasso::Grid(std::move(grid)), std::move(values));
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CurveFile read_curve_file(const std::filesystem::path& path) { return parse_curve_csv(read_text(path), path.string()); }

std::string curve_csv(const slasso::FunctionalSample& sample, const std::vector<std::string>& ids) {
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != sample.n())
    throw slasso::ShapeError("curve_csv: id count does not match the number of curves");
  std::string out;
  if (!ids.empty()) out += "id,";
  for (std::size_t j = 0; j < sample.grid.size(); ++j) {
    if (j) out += ',';
    out += slasso::format_double(sample.grid[j]);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (!ids.empty()) out += ids[static_cast<std::size_t>(i)] + ',';
    for (Eigen::Index j = 0; j < sample.values.cols(); ++j) {
      if (j) out += ',';
      out += slasso::format_double(sample.values(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw slasso::Error("write failed for " + path.string());
}

}  // namespace fof
