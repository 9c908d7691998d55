#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace fractal {

// All writers are atomic: content goes to "<path>.tmp" and is renamed into
// place, so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180-ish: fields holding commas, quotes or newlines are quoted.
std::string csv_format(const CsvTable& table);
CsvTable csv_parse(const std::string& text);

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

void write_json(const std::string& path, const nlohmann::json& j);

// Two-column whitespace-separated series for external plotting tools.
void write_plot_data(const std::string& path, const std::vector<double>& x,
                     const std::vector<double>& y);

// FNV-1a, used to stamp run manifests with a hash of the inputs.
uint64_t fnv1a(const std::string& data);

struct RunManifest {
  std::string version;
  std::string subcommand;
  uint64_t input_hash = 0;
  double seconds = 0.0;
  nlohmann::json invariants;  // name -> pass/fail summary

  nlohmann::json to_json() const;
};

void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace fractal
