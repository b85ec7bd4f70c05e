#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "ionwalk/cli.hpp"
#include "ionwalk/error.hpp"
#include "ionwalk/wigner.hpp"

namespace ionwalk::cli {

namespace {

namespace fs = std::filesystem;
using classical::Spin;
using interferometry::AmplitudeFit;
using interferometry::PhaseFit;

constexpr double kGammaS = 1.7e3;  // pulse-induced decay, 1/s

std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path prepare(const Options& opts) {
  fs::create_directories(opts.out);
  return opts.out;
}

void finish(const Options& opts, const std::string& command, json metrics, std::vector<std::string> files,
            std::ostream& log) {
  json doc;
  doc["command"] = command;
  doc["config"] = to_json(opts.config);
  doc["metrics"] = std::move(metrics);
  doc["files"] = files;
  write_json(opts.out / "summary.json", doc);
  log << "wrote " << (opts.out / "summary.json").string() << '\n';
}

std::size_t nearest_index(const std::vector<double>& times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  if (it == times.end()) return times.size() - 1;
  const auto i = static_cast<std::size_t>(it - times.begin());
  return (t - times[i - 1] < times[i] - t) ? i - 1 : i;
}

/// Linear interpolation of |O| at time t.
double abs_overlap_at(const quantum::BranchEvolution& ev, double t) {
  const auto it = std::upper_bound(ev.times.begin(), ev.times.end(), t);
  if (it == ev.times.begin()) return std::abs(ev.motional_overlaps.front());
  if (it == ev.times.end()) return std::abs(ev.motional_overlaps.back());
  const auto i = static_cast<std::size_t>(it - ev.times.begin());
  const double w = (t - ev.times[i - 1]) / (ev.times[i] - ev.times[i - 1]);
  return (1.0 - w) * std::abs(ev.motional_overlaps[i - 1]) + w * std::abs(ev.motional_overlaps[i]);
}

json amplitude_json(const AmplitudeFit& f) {
  return {{"D", f.D},
          {"sigma_D", finite_or_null(f.sigma_D)},
          {"t_r_us", s_to_us(f.t_r)},
          {"sigma_t_r_us", finite_or_null(s_to_us(f.sigma_t_r))},
          {"gamma_per_ms", per_s_to_per_ms(f.gamma)},
          {"sigma_gamma_per_ms", finite_or_null(per_s_to_per_ms(f.sigma_gamma))},
          {"residual", f.residual},
          {"converged", f.converged},
          {"flags", f.flags}};
}

json phase_json(const PhaseFit& f) {
  return {{"constant", f.constant},
          {"Delta_pi_kHz", rad_s_to_khz(f.Delta_pi)},
          {"sigma_Delta_pi_kHz", finite_or_null(rad_s_to_khz(f.sigma_Delta_pi))},
          {"B", f.B},
          {"sigma_B", finite_or_null(f.sigma_B)},
          {"b2", f.b2},
          {"t_r_us", s_to_us(f.t_r)},
          {"sigma_t_r_us", finite_or_null(s_to_us(f.sigma_t_r))},
          {"residual", f.residual},
          {"converged", f.converged},
          {"flags", f.flags}};
}

json inference_json(const interferometry::Inference& inf) {
  return {{"R_alpha0", inf.R_alpha0},
          {"R", inf.R},
          {"delta_kHz", rad_s_to_khz(inf.delta)},
          {"alpha0", inf.alpha0},
          {"Omega_kHz", rad_s_to_khz(inf.Omega)},
          {"alpha_max", inf.alpha_max},
          {"delta_alpha_max", inf.delta_alpha_max},
          {"iterations", inf.iterations},
          {"flags", inf.flags}};
}

void write_wigner(CsvWriter& csv, const core::MotionalState& s, const core::PhaseSpaceGrid& grid, double t_us,
                  Spin spin, json& report) {
  const core::WignerField w = core::wigner(s, grid);
  for (int j = 0; j < grid.np; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      csv.row(std::vector<std::string>{format_number(t_us), classical::to_string(spin), format_number(grid.x(i)),
                                       format_number(grid.p(j)), format_number(w.values(j, i))});
    }
  }
  report.push_back({{"t_us", t_us}, {"spin", classical::to_string(spin)}, {"integral", w.integral()},
                    {"max", w.max()}, {"squeezing", core::squeezing_ratio(s)}});
}

/// Classical and quantum evolution of both branches plus optional Wigner
/// grids; returns the metrics block.
json run_simulation(const Options& opts, const std::string& command, std::ostream& log) {
  const RunConfig& cfg = opts.config;
  const auto params = cfg.drive_params();
  const auto pc = cfg.propagator();
  const double t_end = us_to_s(cfg.sim.t_end_us);
  const core::cplx alpha_init(cfg.sim.alpha_init_re, cfg.sim.alpha_init_im);
  const fs::path dir = prepare(opts);
  std::vector<std::string> files;
  json metrics;

  log << command << ": classical trajectories\n";
  const auto cl_up = classical::integrate_classical(alpha_init, Spin::up, params, t_end, cfg.sim.classical_tol);
  const auto cl_down = classical::integrate_classical(alpha_init, Spin::down, params, t_end, cfg.sim.classical_tol);
  if (opts.csv) {
    CsvWriter csv(dir / "classical.csv", {"t_us", "spin", "re_alpha", "im_alpha"});
    for (const auto* tr : {&cl_up, &cl_down}) {
      for (std::size_t i = 0; i < tr->size(); ++i) {
        csv.row(std::vector<std::string>{format_number(s_to_us(tr->times[i])), classical::to_string(tr->spin),
                                         format_number(tr->alphas[i].real()), format_number(tr->alphas[i].imag())});
      }
    }
    files.push_back("classical.csv");
  }

  log << command << ": quantum branches (n_max " << pc.n_max << ", " << cfg.sim.mode << ")\n";
  const auto psi0 = core::coherent_state(alpha_init, pc.n_max);
  const auto times = quantum::sample_grid(params, t_end, cfg.sim.samples_per_loop);
  const auto ev = quantum::evolve_cat(psi0, params, times, pc);
  std::vector<double> sq_up, sq_down;
  double drift = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    sq_up.push_back(core::squeezing_ratio(ev.up[i]));
    sq_down.push_back(core::squeezing_ratio(ev.down[i]));
    drift = std::max({drift, std::abs(ev.up[i].norm() - 1.0), std::abs(ev.down[i].norm() - 1.0)});
  }
  if (opts.csv) {
    CsvWriter csv(dir / "quantum.csv", {"t_us", "re_alpha_up", "im_alpha_up", "re_alpha_down", "im_alpha_down",
                                        "re_overlap", "im_overlap", "abs_overlap", "squeezing_up",
                                        "squeezing_down"});
    for (std::size_t i = 0; i < times.size(); ++i) {
      csv.row(std::vector<double>{s_to_us(times[i]), ev.centroids_up[i].real(), ev.centroids_up[i].imag(),
                                  ev.centroids_down[i].real(), ev.centroids_down[i].imag(), ev.overlaps[i].real(),
                                  ev.overlaps[i].imag(), std::abs(ev.overlaps[i]), sq_up[i], sq_down[i]});
    }
    files.push_back("quantum.csv");
  }

  metrics["alpha0"] = finite_or_null(params.alpha0());
  metrics["loop_period_us"] = finite_or_null(s_to_us(params.loop_period()));
  metrics["max_norm_drift"] = drift;
  metrics["delta_alpha_max"] = quantum::max_branch_separation(ev);
  json flags = json::array();
  try {
    const auto m = classical::trajectory_metrics(cl_up, params);
    const auto at_return = std::abs(cl_up.alphas[nearest_index(cl_up.times, m.t_r)]);
    metrics["classical"] = {{"t_r_us", s_to_us(m.t_r)},
                            {"alpha_max", m.alpha_max},
                            {"R", m.R},
                            {"closure", at_return / m.alpha_max},
                            {"flags", m.flags}};
  } catch (const NoReturn& e) {
    metrics["classical"] = nullptr;
    flags.push_back(std::string("classical: ") + e.what());
  }
  try {
    const auto centroids = quantum::centroid_trajectory(ev);
    const double t_r = classical::return_time(centroids.up);
    double amax = 0.0;
    for (std::size_t i = 0; i < times.size() && times[i] <= t_r; ++i) amax = std::max(amax, std::abs(ev.centroids_up[i]));
    const std::size_t half = nearest_index(times, 0.5 * t_r);
    metrics["quantum"] = {{"t_r_us", s_to_us(t_r)},
                          {"alpha_max", amax},
                          {"squeezing_half_return", sq_up[half]},
                          {"half_return_us", s_to_us(times[half])},
                          {"abs_overlap_at_return", abs_overlap_at(ev, t_r)}};
  } catch (const NoReturn& e) {
    metrics["quantum"] = nullptr;
    flags.push_back(std::string("quantum: ") + e.what());
  }
  metrics["flags"] = flags;

  if (!cfg.sim.wigner_times_us.empty()) {
    log << command << ": Wigner grids\n";
    double hw = cfg.sim.wigner_half_width;
    if (!(hw > 0.0)) hw = 2.0 * std::max(cl_up.max_abs(), cl_down.max_abs()) + 4.0;
    const auto grid = core::PhaseSpaceGrid::square(hw, cfg.sim.wigner_points);
    std::vector<double> wt;
    for (double t : cfg.sim.wigner_times_us) wt.push_back(us_to_s(t));
    json report = json::array();
    std::optional<CsvWriter> csv;
    if (opts.csv) {
      csv.emplace(dir / "wigner.csv", std::vector<std::string>{"t_us", "spin", "x", "p", "W"});
      files.push_back("wigner.csv");
    }
    for (Spin spin : {Spin::up, Spin::down}) {
      const auto hist = quantum::propagate_states({psi0}, spin, params, wt, pc);
      for (std::size_t k = 0; k < wt.size(); ++k) {
        if (csv) {
          write_wigner(*csv, hist.states[0][k], grid, cfg.sim.wigner_times_us[k], spin, report);
        } else {
          const auto w = core::wigner(hist.states[0][k], grid);
          report.push_back({{"t_us", cfg.sim.wigner_times_us[k]}, {"spin", classical::to_string(spin)},
                            {"integral", w.integral()}, {"max", w.max()},
                            {"squeezing", core::squeezing_ratio(hist.states[0][k])}});
        }
      }
    }
    metrics["wigner"] = report;
  }
  finish(opts, command, metrics, files, log);
  return metrics;
}

void print_metrics(const json& m, std::ostream& log) {
  if (m.contains("classical") && !m["classical"].is_null()) {
    log << "classical: t_r = " << m["classical"]["t_r_us"].get<double>() << " us, alpha_max = "
        << m["classical"]["alpha_max"].get<double>() << '\n';
  }
  if (m.contains("quantum") && !m["quantum"].is_null()) {
    log << "quantum:   t_r = " << m["quantum"]["t_r_us"].get<double>() << " us, squeezing(t_r/2) = "
        << m["quantum"]["squeezing_half_return"].get<double>() << ", |O(t_r)| = "
        << m["quantum"]["abs_overlap_at_return"].get<double>() << '\n';
  }
}

}  // namespace

int cmd_simulate(const Options& opts, std::ostream& log) {
  print_metrics(run_simulation(opts, "simulate", log), log);
  return 0;
}

int cmd_reproduce_fig1(const Options& base, std::ostream& log) {
  Options opts = base;
  RunConfig& c = opts.config;
  c.trap = TrapConfig{536.0, 0.244};
  c.drive = DriveConfig{93.0, 3.4, 0.705, -0.705, 0.0};
  c.sim.t_end_us = 286.0;
  c.sim.alpha_init_re = c.sim.alpha_init_im = 0.0;
  c.sim.wigner_times_us = {0.0, 96.0, 286.0};
  json m = run_simulation(opts, "reproduce-fig1", log);

  // Squeezing at the 96 us snapshot.
  const auto params = c.drive_params();
  const auto hist = quantum::propagate_states({core::MotionalState::vacuum(c.sim.n_max)}, Spin::up, params,
                                              {us_to_s(96.0)}, c.propagator());
  const double sq96 = core::squeezing_ratio(hist.states[0][0]);
  m["squeezing_96us"] = sq96;
  json doc;
  doc["command"] = "reproduce-fig1";
  doc["config"] = to_json(c);
  doc["metrics"] = m;
  std::vector<std::string> files;
  if (opts.csv) files = {"classical.csv", "quantum.csv", "wigner.csv"};
  doc["files"] = files;
  write_json(opts.out / "summary.json", doc);
  print_metrics(m, log);
  log << "squeezing(96 us) = " << sq96 << '\n';
  return 0;
}

int cmd_reproduce_table1(const Options& opts, std::ostream& log) {
  const fs::path dir = prepare(opts);
  const RunConfig& cfg = opts.config;
  std::optional<CsvWriter> csv;
  if (opts.csv) csv.emplace(dir / "table1.csv", std::vector<std::string>{"set", "quantity", "published", "inferred", "deviation_pct"});
  json sets = json::array();
  int failures = 0;
  for (const TableRow& row : table_rows()) {
    if (opts.set && *opts.set != row.set) continue;
    json entry;
    entry["set"] = row.set;
    entry["omega0_kHz"] = row.omega0_kHz();
    try {
      AmplitudeFit amp;
      amp.D = row.D;
      amp.t_r = us_to_s(row.t_r_us);
      amp.gamma = per_ms_to_per_s(row.gamma_per_ms);
      auto io = cfg.inference_options();
      io.omega0 = khz_to_rad_s(row.omega0_kHz());
      io.detuning_sign = row.delta_c < 0.0 ? -1 : 1;
      io.skip_separation = true;
      auto inf = interferometry::infer_parameters(amp, nullptr, cfg.inference.Phi_w, row.nbar0, row.eta, io);

      const auto params = inf.drive(row.eta, io.omega0, cfg.inference.Phi_w);
      const double t_end = 1.15 * amp.t_r;
      double a = 1.0;
      if (io.separation == interferometry::SeparationSource::quantum) {
        const auto ev = quantum::evolve_cat(core::MotionalState::vacuum(io.propagator.n_max), params, t_end,
                                            io.propagator);
        inf.delta_alpha_max = quantum::max_branch_separation(ev);
        a = abs_overlap_at(ev, classical::return_time(quantum::centroid_trajectory(ev).up));
      } else {
        const auto up = classical::integrate_classical(0.0, Spin::up, params, t_end);
        const auto down = classical::integrate_classical(0.0, Spin::down, params, t_end);
        for (std::size_t i = 0; i < std::min(up.size(), down.size()); ++i) {
          inf.delta_alpha_max = std::max(inf.delta_alpha_max, std::abs(up.alphas[i] - down.alphas[i]));
        }
      }
      const auto budget = interferometry::decoherence_budget(amp.gamma, kGammaS, std::min(a, 1.0), amp.t_r);

      const std::vector<std::tuple<std::string, double, double>> cmp{
          {"delta_kHz", row.delta_d, rad_s_to_khz(inf.delta)},
          {"alpha0", row.alpha0_f, inf.alpha0},
          {"alpha_max", row.alpha_max, inf.alpha_max},
          {"delta_alpha_max", row.delta_alpha_max, inf.delta_alpha_max},
      };
      log << "set " << row.set << ":";
      json devs;
      for (const auto& [name, published, got] : cmp) {
        const double dev = 100.0 * (got - published) / std::abs(published);
        log << "  " << name << " " << brief(got) << " (" << published << ", " << brief(dev) << "%)";
        if (csv) {
          csv->row(std::vector<std::string>{std::to_string(row.set), name, format_number(published), format_number(got),
                                            format_number(dev)});
        }
        devs[name] = {{"published", published}, {"inferred", got}, {"deviation_pct", dev}};
      }
      log << "  gamma_m " << brief(per_s_to_per_ms(budget.gamma_m)) << " /ms  T2 " << brief(s_to_us(budget.T2))
          << " us\n";
      entry["inference"] = inference_json(inf);
      entry["comparison"] = devs;
      entry["a"] = a;
      entry["gamma_m_per_ms"] = per_s_to_per_ms(budget.gamma_m);
      entry["T2_us"] = finite_or_null(s_to_us(budget.T2));
      entry["budget_flags"] = budget.flags;
    } catch (const Error& e) {
      ++failures;
      entry["error"] = e.what();
      log << "set " << row.set << ": failed: " << e.what() << '\n';
    }
    sets.push_back(entry);
  }
  if (sets.empty()) throw ConfigError("reproduce-table1: no such data set");
  json m;
  m["sets"] = sets;
  m["gamma_s_per_ms"] = per_s_to_per_ms(kGammaS);
  m["failures"] = failures;
  std::vector<std::string> files;
  if (opts.csv) files.push_back("table1.csv");
  finish(opts, "reproduce-table1", m, files, log);
  return failures ? 3 : 0;
}

int cmd_sweep_empirics(const Options& opts, std::ostream& log) {
  const fs::path dir = prepare(opts);
  const auto grid = opts.config.empirics_grid();
  if (grid.etas.empty() || grid.alpha0s.empty()) throw ConfigError("sweep-empirics: empty grid");
  log << "sweep-empirics: " << grid.etas.size() * grid.alpha0s.size() << " grid points\n";
  const auto res = classical::regenerate_empirics(grid, opts.config.sim.classical_tol);
  std::vector<std::string> files;
  if (opts.csv) {
    CsvWriter csv(dir / "empirics.csv", {"eta", "alpha0", "x", "alpha_max", "t_r_us", "R", "ok"});
    for (const auto& p : res.points) {
      csv.row(std::vector<double>{p.eta, p.alpha0, p.x, p.alpha_max, s_to_us(p.t_r), p.R, p.ok ? 1.0 : 0.0});
    }
    files.push_back("empirics.csv");
  }
  const classical::EmpiricalLaws published;
  json m;
  m["cubic"] = res.cubic;
  m["published_cubic"] = published.cubic;
  m["cubic_rms"] = res.cubic_rms;
  m["cubic_loo_rms_rel"] = res.cubic_loo_rms_rel;
  m["published_cubic_rms_rel_x_0.3_1.8"] = res.relative_rms(published, 0.3, 1.8);
  m["slope"] = res.slope;
  m["intercept"] = res.intercept;
  m["slope_rms"] = res.slope_rms;
  m["slope_through_origin"] = res.slope_through_origin;
  m["published_slope"] = published.slope;
  m["failures"] = res.failures;
  log << "cubic " << res.cubic[0] << ' ' << res.cubic[1] << ' ' << res.cubic[2] << ' ' << res.cubic[3]
      << "  slope " << res.slope << " (intercept " << res.intercept << ")  published cubic rms "
      << res.relative_rms(published, 0.3, 1.8) << "  failures " << res.failures << '\n';
  finish(opts, "sweep-empirics", m, files, log);
  return 0;
}

int cmd_synth(const Options& opts, std::ostream& log) {
  const fs::path dir = prepare(opts);
  const RunConfig& cfg = opts.config;
  interferometry::SynthConfig sc;
  sc.taus = cfg.tau_grid();
  sc.phis = interferometry::uniform_phases(cfg.scan.phi_count);
  sc.shots = cfg.scan.shots;
  sc.seed = cfg.scan.seed;
  sc.gamma = per_ms_to_per_s(cfg.scan.gamma_per_ms);
  sc.nbar0 = cfg.scan.nbar0;
  sc.propagator = cfg.propagator();
  log << "synth: " << sc.taus.size() << " scans x " << sc.phis.size() << " phases\n";
  const auto ds = interferometry::synthesize_dataset(cfg.drive_params(), sc);
  std::vector<std::string> files;
  if (opts.csv) {
    CsvWriter scans(dir / "scans.csv", {"tau_us", "phi", "p_hat", "shots"});
    for (const auto& s : ds.scans) {
      for (const auto& p : s.points) {
        scans.row(std::vector<double>{s_to_us(s.tau), p.phi, p.p_hat, static_cast<double>(p.shots)});
      }
    }
    CsvWriter ov(dir / "overlaps.csv", {"tau_us", "re_overlap", "im_overlap", "abs_overlap"});
    for (std::size_t i = 0; i < sc.taus.size(); ++i) {
      ov.row(std::vector<double>{s_to_us(sc.taus[i]), ds.overlaps[i].real(), ds.overlaps[i].imag(),
                                 std::abs(ds.overlaps[i])});
    }
    files = {"scans.csv", "overlaps.csv"};
  }
  json m;
  m["scans"] = ds.scans.size();
  m["phases"] = sc.phis.size();
  m["seed"] = sc.seed;
  finish(opts, "synth", m, files, log);
  return 0;
}

int cmd_fit(const Options& opts, std::ostream& log) {
  if (opts.input.empty()) throw ConfigError("fit: an input scan file is required");
  const fs::path dir = prepare(opts);
  const RunConfig& cfg = opts.config;
  const auto scans = read_scans(opts.input);
  log << "fit: " << scans.size() << " scans from " << opts.input.string() << '\n';
  const auto fit = interferometry::fit_dataset(scans);
  std::vector<std::string> files;
  if (opts.csv) {
    CsvWriter csv(dir / "sinusoids.csv", {"tau_us", "A", "sigma_A", "phi0", "sigma_phi0", "residual"});
    for (std::size_t i = 0; i < fit.taus.size(); ++i) {
      const auto& s = fit.sinusoids[i];
      csv.row(std::vector<double>{s_to_us(fit.taus[i]), s.A, s.sigma_A, s.phi0, s.sigma_phi0, s.residual});
    }
    files.push_back("sinusoids.csv");
  }
  json m;
  m["amplitude"] = amplitude_json(fit.amplitude);
  m["phase"] = phase_json(fit.phase);
  log << "amplitude: D = " << fit.amplitude.D << ", t_r = " << s_to_us(fit.amplitude.t_r)
      << " us, gamma = " << per_s_to_per_ms(fit.amplitude.gamma) << " /ms\n";
  int code = 0;
  try {
    auto io = cfg.inference_options();
    for (std::size_t i = 0; i < fit.taus.size(); ++i) {
      io.amplitude_points.push_back({fit.taus[i], fit.sinusoids[i].A, fit.sinusoids[i].sigma_A});
    }
    const auto inf = interferometry::infer_parameters(fit.amplitude, fit.phase.converged ? &fit.phase : nullptr,
                                                      cfg.inference.Phi_w, cfg.inference.nbar0, cfg.trap.eta, io);
    m["inference"] = inference_json(inf);
    log << "inference: delta = " << rad_s_to_khz(inf.delta) << " kHz, alpha0 = " << inf.alpha0
        << ", alpha_max = " << inf.alpha_max << ", delta_alpha_max = " << inf.delta_alpha_max << '\n';
  } catch (const NumericalError& e) {
    m["inference"] = nullptr;
    m["inference_error"] = e.what();
    log << "inference failed: " << e.what() << '\n';
    code = 3;
  }
  finish(opts, "fit", m, files, log);
  return code;
}

}  // namespace ionwalk::cli
