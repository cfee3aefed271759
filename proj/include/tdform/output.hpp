#pragma once

// Deterministic CSV / JSON writers. Floats always go through format_double
// (17 significant digits, scientific), lines end in LF, and files are
// written to a temporary sibling and renamed into place.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdform/config.hpp"

namespace tdform {

using Json = nlohmann::ordered_json;

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  // Cells are preformatted; use cell() for numbers.
  void add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw std::invalid_argument("CSV row width does not match header");
    rows_.push_back(std::move(row));
  }

  static std::string cell(double x) { return format_double(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }

  std::size_t rows() const { return rows_.size(); }

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t j = 0; j < cells.size(); ++j) out += (j ? "," : "") + csv_field(cells[j]);
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

namespace detail {

inline void dump_json(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump_json(it.value(), out, indent, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) out += ",\n";
        out += pad;
        dump_json(j[k], out, indent, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format_double(x) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

// Stable key order (insertion order), floats at 17 significant digits,
// non-finite floats as null, trailing LF.
inline std::string json_text(const Json& j) {
  std::string out;
  detail::dump_json(j, out, 2, 0);
  return out + "\n";
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Series of one completed run, tagged with the run's config hash.
struct PlotRecord {
  std::string config_hash;
  std::vector<PlotSeries> series;
};

// Long-format (series, x, y). Series names are "<hash>/<name>" so several
// runs can share one file.
inline std::string emit_plotdata(const std::vector<PlotRecord>& records) {
  CsvTable table({"series", "x", "y"});
  for (const auto& rec : records)
    for (const auto& s : rec.series) {
      if (s.x.size() != s.y.size()) throw std::invalid_argument("plot series '" + s.name + "' has mismatched x/y");
      const std::string name = rec.config_hash + "/" + s.name;
      for (std::size_t j = 0; j < s.x.size(); ++j) table.add_row({name, format_double(s.x[j]), format_double(s.y[j])});
    }
  return table.str();
}

}  // namespace tdform
