#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ionwalk/classical.hpp"
#include "ionwalk/empirics.hpp"
#include "ionwalk/interferometry.hpp"
#include "ionwalk/quantum.hpp"

namespace ionwalk::cli {

using json = nlohmann::ordered_json;

// Frequencies are in kHz (cycles), times in microseconds, decay rates in 1/ms.

struct TrapConfig {
  double omega0_kHz = 536.0;
  double eta = 0.244;
};

struct DriveConfig {
  double Omega_kHz = 93.0;
  double delta_kHz = 3.4;
  double phi_up = 0.705;
  double phi_down = -0.705;
  double Delta_pi_kHz = 0.0;
};

struct SimConfig {
  int n_max = 100;
  double rel_tol = 1e-7;
  std::string mode = "exact";
  int sideband_order = 3;
  double t_end_us = 286.0;
  int samples_per_loop = 200;
  double classical_tol = 1e-8;
  double alpha_init_re = 0.0;
  double alpha_init_im = 0.0;
  std::vector<double> wigner_times_us;
  double wigner_half_width = 0.0;  // 0: 2 alpha0 + 4
  int wigner_points = 121;
};

struct ScanConfig {
  double tau_start_us = 2.0;
  double tau_stop_us = 0.0;  // 0: 1.1 loop periods
  int tau_count = 0;         // 0: 48 per loop period
  int phi_count = 16;
  int shots = 500;
  std::uint64_t seed = 1;
  double gamma_per_ms = 0.0;
  double nbar0 = 0.0;
};

struct EmpiricsConfig {
  std::vector<double> etas{0.15, 0.2, 0.25, 0.3};
  std::vector<double> alpha0s{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0};
  double omega0_kHz = 536.0;
  double Omega_kHz = 93.0;
};

struct InferenceConfig {
  double Phi_w = 1.41;
  double nbar0 = 0.07;
  int detuning_sign = 1;
  std::string route = "empirical";
  std::string separation = "quantum";
};

struct OutputConfig {
  std::string directory = ".";
  std::vector<std::string> formats{"csv", "summary"};
};

struct RunConfig {
  TrapConfig trap;
  DriveConfig drive;
  SimConfig sim;
  ScanConfig scan;
  EmpiricsConfig empirics;
  InferenceConfig inference;
  OutputConfig outputs;

  classical::DriveParams drive_params() const;
  quantum::PropagatorConfig propagator() const;
  classical::EmpiricsGrid empirics_grid() const;
  interferometry::InferenceOptions inference_options() const;
  /// tau grid in seconds.
  std::vector<double> tau_grid() const;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError.
RunConfig parse_config(const json& doc);
RunConfig load_config(const std::filesystem::path& path);
json to_json(const RunConfig& cfg);

/// Comma-separated table with a single header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& values);

 private:
  std::ofstream file_;
  std::size_t columns_;
};

std::string format_number(double v);
void write_json(const std::filesystem::path& path, const json& doc);

/// Reads scans written by `synth` (tau_us, phi, p_hat, shots).
std::vector<interferometry::FringeScan> read_scans(const std::filesystem::path& path);

/// Published fit results and derived columns of one data set.
struct TableRow {
  int set = 0;
  double D = 0.0, t_r_us = 0.0, gamma_per_ms = 0.0, B = 0.0, Delta_pi_kHz = 0.0, nbar0 = 0.0, eta = 0.0;
  double Omega_c_a = 0.0, Omega_c_b = 0.0;
  double delta_c = 0.0, delta_d = 0.0;  // kHz
  double alpha0_e = 0.0, alpha0_f = 0.0;
  double alpha_max = 0.0, delta_alpha_max = 0.0;

  /// Trap frequency scaled from 536 kHz at eta = 0.244 (eta ~ omega0^-1/2).
  double omega0_kHz() const;
};

const std::vector<TableRow>& table_rows();

struct Options {
  RunConfig config;
  std::filesystem::path out;
  bool csv = true;
  std::optional<int> set;
  std::filesystem::path input;
};

int cmd_simulate(const Options& opts, std::ostream& log);
int cmd_reproduce_fig1(const Options& opts, std::ostream& log);
int cmd_reproduce_table1(const Options& opts, std::ostream& log);
int cmd_sweep_empirics(const Options& opts, std::ostream& log);
int cmd_synth(const Options& opts, std::ostream& log);
int cmd_fit(const Options& opts, std::ostream& log);

}  // namespace ionwalk::cli
