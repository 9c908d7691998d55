#include "fractal/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fractal {

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    if (!out.good()) throw std::runtime_error("short write to '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void csv_line(std::string& out, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
}

}  // namespace

std::string csv_format(const CsvTable& table) {
  std::string out;
  csv_line(out, table.header);
  for (const auto& row : table.rows) csv_line(out, row);
  return out;
}

CsvTable csv_parse(const std::string& text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      any = true;
    } else if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        field.clear();
        lines.push_back(std::move(row));
        row.clear();
        any = false;
      }
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    lines.push_back(std::move(row));
  }
  CsvTable t;
  if (!lines.empty()) {
    t.header = std::move(lines.front());
    t.rows.assign(std::make_move_iterator(lines.begin() + 1),
                  std::make_move_iterator(lines.end()));
  }
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  write_text_atomic(path, csv_format(table));
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return csv_parse(buf.str());
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

void write_plot_data(const std::string& path, const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("plot data: length mismatch");
  std::ostringstream out;
  out.precision(17);
  for (size_t i = 0; i < x.size(); ++i) out << x[i] << ' ' << y[i] << '\n';
  write_text_atomic(path, out.str());
}

uint64_t fnv1a(const std::string& data) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["version"] = version;
  j["subcommand"] = subcommand;
  j["input_hash"] = input_hash;
  j["seconds"] = seconds;
  j["invariants"] = invariants;
  return j;
}

void write_manifest(const std::string& path, const RunManifest& m) {
  write_json(path, m.to_json());
}

}  // namespace fractal
