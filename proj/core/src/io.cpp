#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "countewa/errors.hpp"
#include "countewa/harness.hpp"

namespace countewa {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

CsvDataset parse_csv(std::string_view text, const std::string& response_column,
                     bool add_intercept) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::pair<std::size_t, std::string_view>> lines;  // (line number, content)
  std::size_t line_no = 0;
  for (std::size_t start = 0; start <= text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.emplace_back(line_no, line);
    start = end + 1;
  }
  if (lines.empty()) throw ValidationError("CSV is empty: no header row");

  const auto header = split_commas(lines.front().second);
  std::set<std::string_view> seen;
  for (const auto& h : header) {
    if (!seen.insert(h).second) {
      throw ValidationError("duplicate column name '" + std::string(h) + "' in CSV header");
    }
  }
  std::size_t response_idx = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == response_column) response_idx = c;
  }
  if (response_idx == header.size()) {
    throw ValidationError("response column '" + response_column + "' not found in CSV header");
  }
  if (header.size() < 2 && !add_intercept) {
    throw ValidationError("CSV has no feature columns besides the response");
  }

  const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
  if (rows < 1) throw ValidationError("CSV has a header but no data rows");
  const auto d = static_cast<Eigen::Index>(header.size() - 1 + (add_intercept ? 1 : 0));
  Matrix x(rows, d);
  Vector y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& [ln, line] = lines[static_cast<std::size_t>(i) + 1];
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ValidationError("line " + std::to_string(ln) + ": expected " +
                            std::to_string(header.size()) + " cells, found " +
                            std::to_string(cells.size()));
    }
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw ValidationError("line " + std::to_string(ln) + ", column '" +
                              std::string(header[c]) + "': cannot parse '" +
                              std::string(cells[c]) + "' as a number");
      }
      if (c == response_idx) {
        if (*v < 0.0 || *v != std::floor(*v)) {
          throw ValidationError("line " + std::to_string(ln) + ", column '" +
                                std::string(header[c]) + "': response must be a nonnegative "
                                "integer, got '" + std::string(cells[c]) + "'");
        }
        y[i] = *v;
      } else {
        x(i, col++) = *v;
      }
    }
    if (add_intercept) x(i, col) = 1.0;
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != response_idx) names.emplace_back(header[c]);
  }
  if (add_intercept) names.emplace_back("(intercept)");
  return {Dataset(std::move(x), std::move(y)), std::move(names)};
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CsvDataset load_csv_named(const std::string& path, const std::string& response_column,
                          bool add_intercept) {
  return parse_csv(read_text_file(path), response_column, add_intercept);
}

Dataset load_csv(const std::string& path, const std::string& response_column,
                 bool add_intercept) {
  return load_csv_named(path, response_column, add_intercept).data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  for (Eigen::Index j = 0; j < data.d(); ++j) f << 'x' << (j + 1) << ',';
  f << "y\n";
  char buf[32];
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.d(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, data.x()(i, j));
      f.write(buf, res.ptr - buf);
      f << ',';
    }
    f << static_cast<long long>(data.y()[i]) << '\n';
  }
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace countewa
