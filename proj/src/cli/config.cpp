#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ionwalk/cli.hpp"
#include "ionwalk/error.hpp"

namespace ionwalk::cli {

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) fail("expected an object");
  }
  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + where_ + "." + item.key() + "'");
    }
  }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void get(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) fail(key, "expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }
  [[noreturn]] void fail(const char* key, const std::string& msg) const {
    throw ConfigError(where_ + "." + key + ": " + msg);
  }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

RunConfig parse_config(const json& doc) {
  RunConfig c;
  Reader top(doc, "config");
  if (const json* v = top.find("trap")) {
    Reader r(*v, "trap");
    r.get("omega0_kHz", c.trap.omega0_kHz);
    r.get("eta", c.trap.eta);
    r.finish();
  }
  if (const json* v = top.find("drive")) {
    Reader r(*v, "drive");
    r.get("Omega_kHz", c.drive.Omega_kHz);
    r.get("delta_kHz", c.drive.delta_kHz);
    r.get("phi_up", c.drive.phi_up);
    r.get("phi_down", c.drive.phi_down);
    r.get("Delta_pi_kHz", c.drive.Delta_pi_kHz);
    r.finish();
  }
  if (const json* v = top.find("sim")) {
    Reader r(*v, "sim");
    r.get("n_max", c.sim.n_max);
    r.get("rel_tol", c.sim.rel_tol);
    r.get("mode", c.sim.mode);
    r.get("sideband_order", c.sim.sideband_order);
    r.get("t_end_us", c.sim.t_end_us);
    r.get("samples_per_loop", c.sim.samples_per_loop);
    r.get("classical_tol", c.sim.classical_tol);
    r.get("alpha_init_re", c.sim.alpha_init_re);
    r.get("alpha_init_im", c.sim.alpha_init_im);
    r.get("wigner_times_us", c.sim.wigner_times_us);
    r.get("wigner_half_width", c.sim.wigner_half_width);
    r.get("wigner_points", c.sim.wigner_points);
    r.finish();
  }
  if (const json* v = top.find("scan")) {
    Reader r(*v, "scan");
    r.get("tau_start_us", c.scan.tau_start_us);
    r.get("tau_stop_us", c.scan.tau_stop_us);
    r.get("tau_count", c.scan.tau_count);
    r.get("phi_count", c.scan.phi_count);
    r.get("shots", c.scan.shots);
    r.get("seed", c.scan.seed);
    r.get("gamma_per_ms", c.scan.gamma_per_ms);
    r.get("nbar0", c.scan.nbar0);
    r.finish();
  }
  if (const json* v = top.find("empirics")) {
    Reader r(*v, "empirics");
    r.get("etas", c.empirics.etas);
    r.get("alpha0s", c.empirics.alpha0s);
    r.get("omega0_kHz", c.empirics.omega0_kHz);
    r.get("Omega_kHz", c.empirics.Omega_kHz);
    r.finish();
  }
  if (const json* v = top.find("inference")) {
    Reader r(*v, "inference");
    r.get("Phi_w", c.inference.Phi_w);
    r.get("nbar0", c.inference.nbar0);
    r.get("detuning_sign", c.inference.detuning_sign);
    r.get("route", c.inference.route);
    r.get("separation", c.inference.separation);
    r.finish();
  }
  if (const json* v = top.find("outputs")) {
    Reader r(*v, "outputs");
    r.get("directory", c.outputs.directory);
    r.get("formats", c.outputs.formats);
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

void RunConfig::validate() const {
  require(trap.omega0_kHz > 0.0, "trap.omega0_kHz must be positive");
  require(trap.eta > 0.0, "trap.eta must be positive");
  require(drive.Omega_kHz >= 0.0, "drive.Omega_kHz must be non-negative");
  require(sim.n_max >= 20, "sim.n_max must be at least 20");
  require(sim.rel_tol > 0.0, "sim.rel_tol must be positive");
  require(sim.mode == "exact" || sim.mode == "sideband", "sim.mode must be 'exact' or 'sideband'");
  require(sim.sideband_order >= 0 && sim.sideband_order <= 3, "sim.sideband_order must be in 0..3");
  require(sim.t_end_us > 0.0, "sim.t_end_us must be positive");
  require(sim.samples_per_loop >= 10, "sim.samples_per_loop must be at least 10");
  require(sim.classical_tol > 0.0, "sim.classical_tol must be positive");
  require(sim.wigner_points >= 3, "sim.wigner_points must be at least 3");
  for (double t : sim.wigner_times_us) require(t >= 0.0, "sim.wigner_times_us must be non-negative");
  require(scan.tau_start_us > 0.0, "scan.tau_start_us must be positive");
  require(scan.tau_stop_us == 0.0 || scan.tau_stop_us > scan.tau_start_us, "scan.tau_stop_us must exceed tau_start_us");
  require(scan.tau_count == 0 || scan.tau_count >= 6, "scan.tau_count must be at least 6");
  require(scan.phi_count >= 4, "scan.phi_count must be at least 4");
  require(scan.shots >= 1, "scan.shots must be at least 1");
  require(scan.gamma_per_ms >= 0.0, "scan.gamma_per_ms must be non-negative");
  require(scan.nbar0 >= 0.0, "scan.nbar0 must be non-negative");
  require(!empirics.etas.empty() && !empirics.alpha0s.empty(), "empirics grid is empty");
  for (double e : empirics.etas) require(e > 0.0, "empirics.etas must be positive");
  for (double a : empirics.alpha0s) require(a > 0.0, "empirics.alpha0s must be positive");
  require(inference.Phi_w > 0.0 && inference.Phi_w < kPi, "inference.Phi_w must lie in (0, pi)");
  require(inference.nbar0 >= 0.0, "inference.nbar0 must be non-negative");
  require(inference.detuning_sign == 1 || inference.detuning_sign == -1, "inference.detuning_sign must be 1 or -1");
  require(inference.route == "empirical" || inference.route == "calibrated",
          "inference.route must be 'empirical' or 'calibrated'");
  require(inference.separation == "quantum" || inference.separation == "classical",
          "inference.separation must be 'quantum' or 'classical'");
  for (const auto& f : outputs.formats) require(f == "csv" || f == "summary", "outputs.formats: unknown format " + f);
}

classical::DriveParams RunConfig::drive_params() const {
  return classical::DriveParams::from_khz(trap.omega0_kHz, trap.eta, drive.Omega_kHz, drive.delta_kHz,
                                          drive.phi_up, drive.phi_down, drive.Delta_pi_kHz);
}

quantum::PropagatorConfig RunConfig::propagator() const {
  quantum::PropagatorConfig p;
  p.n_max = sim.n_max;
  p.rel_tol = sim.rel_tol;
  p.mode = sim.mode == "sideband" ? quantum::PropagationMode::sideband : quantum::PropagationMode::exact;
  p.sideband_order = sim.sideband_order;
  return p;
}

classical::EmpiricsGrid RunConfig::empirics_grid() const {
  classical::EmpiricsGrid g;
  g.etas = empirics.etas;
  g.alpha0s = empirics.alpha0s;
  g.omega0 = khz_to_rad_s(empirics.omega0_kHz);
  g.Omega = khz_to_rad_s(empirics.Omega_kHz);
  return g;
}

interferometry::InferenceOptions RunConfig::inference_options() const {
  interferometry::InferenceOptions o;
  o.detuning_sign = inference.detuning_sign;
  o.omega0 = khz_to_rad_s(trap.omega0_kHz);
  o.separation = inference.separation == "classical" ? interferometry::SeparationSource::classical
                                                      : interferometry::SeparationSource::quantum;
  o.route = inference.route == "calibrated" ? interferometry::InferenceRoute::calibrated
                                            : interferometry::InferenceRoute::empirical;
  o.propagator = propagator();
  return o;
}

std::vector<double> RunConfig::tau_grid() const {
  const double period_us = drive.delta_kHz != 0.0 ? 1e3 / std::abs(drive.delta_kHz) : sim.t_end_us;
  const double stop = scan.tau_stop_us > 0.0 ? scan.tau_stop_us : 1.1 * period_us;
  if (!(stop > scan.tau_start_us)) throw ConfigError("scan: tau range is empty");
  const int count = scan.tau_count > 0 ? scan.tau_count
                                       : std::max(6, static_cast<int>(std::lround(48.0 * stop / period_us)));
  std::vector<double> out;
  for (double t : interferometry::linear_grid(scan.tau_start_us, stop, count)) out.push_back(us_to_s(t));
  return out;
}

json to_json(const RunConfig& c) {
  json j;
  j["trap"] = {{"omega0_kHz", c.trap.omega0_kHz}, {"eta", c.trap.eta}};
  j["drive"] = {{"Omega_kHz", c.drive.Omega_kHz},
                {"delta_kHz", c.drive.delta_kHz},
                {"phi_up", c.drive.phi_up},
                {"phi_down", c.drive.phi_down},
                {"Delta_pi_kHz", c.drive.Delta_pi_kHz}};
  j["sim"] = {{"n_max", c.sim.n_max},
              {"rel_tol", c.sim.rel_tol},
              {"mode", c.sim.mode},
              {"sideband_order", c.sim.sideband_order},
              {"t_end_us", c.sim.t_end_us},
              {"samples_per_loop", c.sim.samples_per_loop},
              {"classical_tol", c.sim.classical_tol},
              {"alpha_init_re", c.sim.alpha_init_re},
              {"alpha_init_im", c.sim.alpha_init_im},
              {"wigner_times_us", c.sim.wigner_times_us},
              {"wigner_half_width", c.sim.wigner_half_width},
              {"wigner_points", c.sim.wigner_points}};
  j["scan"] = {{"tau_start_us", c.scan.tau_start_us},
               {"tau_stop_us", c.scan.tau_stop_us},
               {"tau_count", c.scan.tau_count},
               {"phi_count", c.scan.phi_count},
               {"shots", c.scan.shots},
               {"seed", c.scan.seed},
               {"gamma_per_ms", c.scan.gamma_per_ms},
               {"nbar0", c.scan.nbar0}};
  j["empirics"] = {{"etas", c.empirics.etas},
                   {"alpha0s", c.empirics.alpha0s},
                   {"omega0_kHz", c.empirics.omega0_kHz},
                   {"Omega_kHz", c.empirics.Omega_kHz}};
  j["inference"] = {{"Phi_w", c.inference.Phi_w},
                    {"nbar0", c.inference.nbar0},
                    {"detuning_sign", c.inference.detuning_sign},
                    {"route", c.inference.route},
                    {"separation", c.inference.separation}};
  j["outputs"] = {{"directory", c.outputs.directory}, {"formats", c.outputs.formats}};
  return j;
}

}  // namespace ionwalk::cli
