#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ionwalk/cli.hpp"
#include "ionwalk/error.hpp"

namespace ionwalk::cli {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : file_(path), columns_(header.size()) {
  if (!file_) throw Error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& values) {
  if (values.size() != columns_) throw Error("CsvWriter: row width differs from header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) file_ << ',';
    file_ << values[i];
  }
  file_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<interferometry::FringeScan> read_scans(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scan file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("tau_us,phi,p_hat,shots", 0) != 0) {
    throw ConfigError(path.string() + ": expected header 'tau_us,phi,p_hat,shots'");
  }
  std::vector<interferometry::FringeScan> scans;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() != 4) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 4 columns");
    const double tau = us_to_s(v[0]);
    if (scans.empty() || scans.back().tau != tau) {
      scans.push_back({});
      scans.back().tau = tau;
    }
    scans.back().points.push_back({v[1], v[2], static_cast<int>(v[3])});
  }
  for (const auto& s : scans) s.validate();
  return scans;
}

double TableRow::omega0_kHz() const { return 536.0 * std::pow(0.244 / eta, 2); }

const std::vector<TableRow>& table_rows() {
  static const std::vector<TableRow> rows{
      {1, 1.45, 89, 2.0, 2.15, 4.48, 0.07, 0.244, 139, 145, 10, 10.1, 2.2, 2.4, 2.1, 2.7},
      {2, 2.27, 147, 4.1, 3.24, 4.49, 0.07, 0.244, 139, 145, 5, 5.3, 4.5, 4.2, 3.1, 4.0},
      {3, 3.12, 192, 5.6, 4.27, 4.46, 0.07, 0.244, 139, 145, 3.5, 3.4, 6.4, 6.8, 4.0, 5.1},
      {4, 1.50, 91, 3.5, 2.03, 7.36, 0.04, 0.199, 151, 185, 10, 10.2, 2.0, 2.3, 2.1, 2.7},
      {5, 1.88, 160, 4.6, 2.72, 4.27, 0.02, 0.245, 137, 142, -5.5, -5.2, 4.0, 3.4, 2.7, 3.5},
  };
  return rows;
}

}  // namespace ionwalk::cli
