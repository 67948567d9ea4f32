#include "scorelab/io.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

namespace scorelab {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Header {
  std::size_t dim = 0;
  std::size_t count = 0;
  std::optional<std::uint64_t> seed;
  std::optional<DatasetSource> source;
};

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool looks_like_header(std::string_view line) { return line.starts_with("d="); }

bool looks_like_columns(std::string_view line) {
  return !line.empty() && line.front() == 'x';
}

Header parse_header(std::string_view line, const std::filesystem::path& path, std::size_t lineno) {
  Header h;
  bool have_d = false, have_n = false;
  for (const auto field : split_commas(line)) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) fail(path, lineno, "header field without '=': " + std::string(field));
    const auto key = trim(field.substr(0, eq));
    const auto value = trim(field.substr(eq + 1));
    if (key == "d") {
      have_d = parse_number(value, h.dim) && h.dim > 0;
      if (!have_d) fail(path, lineno, "header: bad dimension '" + std::string(value) + "'");
    } else if (key == "N") {
      have_n = parse_number(value, h.count);
      if (!have_n) fail(path, lineno, "header: bad count '" + std::string(value) + "'");
    } else if (key == "seed") {
      std::uint64_t s = 0;
      if (!parse_number(value, s)) fail(path, lineno, "header: bad seed '" + std::string(value) + "'");
      h.seed = s;
    } else if (key == "source") {
      try {
        h.source = dataset_source_from_string(std::string(value));
      } catch (const std::exception& e) {
        fail(path, lineno, std::string("header: ") + e.what());
      }
    } else {
      fail(path, lineno, "header: unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_d || !have_n) fail(path, lineno, "header must give both d and N");
  return h;
}

std::string render_points(const PointSet& points, const std::vector<std::string>& comments,
                          const std::string& header) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  if (!header.empty()) out += header + "\n";
  for (std::size_t k = 0; k < points.dim(); ++k) out += (k ? ",x" : "x") + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto row = points[i];
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_double(row[k]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open dataset file");
  std::optional<Header> header;
  std::size_t dim = 0;
  std::vector<double> flat;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  bool body_started = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (!body_started && !header && looks_like_header(text)) {
      header = parse_header(text, path, lineno);
      dim = header->dim;
      continue;
    }
    if (!body_started && looks_like_columns(text)) {
      const auto cols = split_commas(text).size();
      if (dim != 0 && cols != dim)
        fail(path, lineno, "column line has " + std::to_string(cols) + " columns, header says d=" +
                               std::to_string(dim));
      dim = cols;
      body_started = true;
      continue;
    }
    body_started = true;
    ++rows;
    const auto fields = split_commas(text);
    if (dim == 0) dim = fields.size();
    if (fields.size() != dim)
      fail(path, lineno, "row " + std::to_string(rows) + " has " + std::to_string(fields.size()) +
                             " values, expected " + std::to_string(dim));
    for (std::size_t k = 0; k < fields.size(); ++k) {
      double v = 0.0;
      if (!parse_number(fields[k], v))
        fail(path, lineno, "row " + std::to_string(rows) + ", column " + std::to_string(k + 1) +
                               ": cannot parse '" + std::string(fields[k]) + "'");
      if (!std::isfinite(v))
        fail(path, lineno, "row " + std::to_string(rows) + ", column " + std::to_string(k + 1) +
                               ": non-finite value");
      flat.push_back(v);
    }
  }
  if (in.bad()) throw IoError(path.string() + ": read error");
  if (header && rows != header->count)
    throw IoError(path.string() + ": header says N=" + std::to_string(header->count) + " but file has " +
                  std::to_string(rows) + " rows");
  if (rows == 0) throw IoError(path.string() + ": dataset has no rows");
  const auto source = header && header->source ? *header->source : DatasetSource::file;
  return Dataset(PointSet(dim, std::move(flat)), header ? header->seed : std::nullopt, source);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  const std::vector<std::string>& comments) {
  std::string header = "d=" + std::to_string(dataset.dim()) + ",N=" + std::to_string(dataset.size());
  if (dataset.seed()) header += ",seed=" + std::to_string(*dataset.seed());
  header += ",source=" + to_string(dataset.source());
  write_text_file(path, render_points(dataset.points(), comments, header));
}

void save_points(const PointSet& points, const std::filesystem::path& path,
                 const std::vector<std::string>& comments) {
  write_text_file(path, render_points(points, comments, {}));
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace scorelab
