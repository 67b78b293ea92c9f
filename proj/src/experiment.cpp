#include "iongate/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "json.hpp"

#include "iongate/atomic.hpp"
#include "iongate/comb.hpp"
#include "iongate/dynamics.hpp"
#include "iongate/gates.hpp"
#include "iongate/noise.hpp"

namespace iongate {
namespace experiment {

using json = nlohmann::json;
using constants::pi;
using constants::two_pi;

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Strict config access
// ---------------------------------------------------------------------------

void require_keys_subset(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object())
    throw SchemaError(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw SchemaError(where + ": unknown key '" + key + "'");
}

const json& require_key(const json& obj, const std::string& key,
                        const std::string& where) {
  if (!obj.contains(key))
    throw SchemaError(where + ": missing required key '" + key + "'");
  return obj.at(key);
}

double require_number(const json& obj, const std::string& key,
                      const std::string& where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_number())
    throw SchemaError(where + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw SchemaError(key + ": expected a number");
  return obj.at(key).get<double>();
}

int int_or(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer())
    throw SchemaError(key + ": expected an integer");
  return obj.at(key).get<int>();
}

std::string require_string(const json& obj, const std::string& key,
                           const std::string& where) {
  const json& v = require_key(obj, key, where);
  if (!v.is_string())
    throw SchemaError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

struct CsvWriter {
  std::ofstream out;
  explicit CsvWriter(const std::filesystem::path& path,
                     const std::string& header)
      : out(path) {
    if (!out) throw SchemaError("cannot open output file " + path.string());
    out << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i)
      out << cells[i] << (i + 1 < cells.size() ? "," : "");
    out << "\n";
  }
};

struct RunContext {
  json config;
  std::filesystem::path out_dir;
  std::string prefix;
  std::uint64_t seed = 0;
  int workers = 1;
  json manifest_extra = json::object();
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> artifacts;

  std::filesystem::path artifact(const std::string& suffix) {
    auto p = out_dir / (prefix + suffix);
    artifacts.push_back(p);
    return p;
  }
};

// ---------------------------------------------------------------------------
// Trap block
// ---------------------------------------------------------------------------

dynamics::TrapConfig parse_trap(const json& p,
                                std::vector<std::string>& warnings) {
  const json& t = require_key(p, "trap", "parameters");
  require_keys_subset(t, {"omega_1_hz", "ion_mass_amu", "eta_2",
                          "spacing_periods"},
                      "trap");
  const double omega1 = hz_to_rad(require_number(t, "omega_1_hz", "trap"));
  const double mass =
      require_number(t, "ion_mass_amu", "trap") * constants::atomic_mass_unit;
  const double eta2 = require_number(t, "eta_2", "trap");
  if (eta2 <= 0) throw SchemaError("trap.eta_2 must be positive");
  auto trap = dynamics::TrapConfig::make(omega1, mass, 1.0);
  // back out delta_k from the requested stretch-mode Lamb-Dicke parameter
  trap.delta_k = eta2 * std::sqrt(2.0) / trap.mode_spread(2);
  const double spacing_periods = number_or(t, "spacing_periods", 0.0);
  const double spacing = spacing_periods * two_pi / trap.delta_k;
  trap.ion_positions = {spacing / 2, -spacing / 2};
  if (std::abs(spacing_periods - std::round(spacing_periods)) > 1e-12)
    warnings.push_back("trap.spacing_periods is not an integer; the sigma_z "
                       "spacing condition does not hold");
  return trap;
}

void check_rwa(double detuning, const dynamics::TrapConfig& trap,
               std::vector<std::string>& warnings) {
  if (std::abs(detuning) > 0.1 * trap.omega_1)
    warnings.push_back("detuning is not small against the trap frequency; "
                       "the resolved-sideband approximation degrades");
}

// ---------------------------------------------------------------------------
// gate_truth_table
// ---------------------------------------------------------------------------

json table_to_json(const gates::TruthTable& t) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c)
      row.push_back({t(r, c).real(), t(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

void write_gate_run(RunContext& ctx, const gates::GateRun& run,
                    const gates::TruthTable& ideal,
                    const std::string& ideal_name, json extra_summary) {
  static const char* kInputs[4] = {"up_up", "up_down", "down_up", "down_down"};
  const auto rows = gates::row_fidelities(run.table, ideal);

  CsvWriter csv(ctx.artifact("_truthtable.csv"),
                "input,row_fidelity,purity,ground_overlap");
  for (int k = 0; k < 4; ++k)
    csv.row({kInputs[k], format_number(rows[k]), format_number(run.purity[k]),
             format_number(run.ground_overlap[k])});

  json summary;
  summary["ideal"] = ideal_name;
  summary["table_fidelity"] = gates::table_fidelity(run.table, ideal);
  summary["row_fidelities"] = rows;
  summary["purity"] = run.purity;
  summary["table"] = table_to_json(run.table);
  summary["truncation"] = {
      {"max_populated_n1", run.truncation.max_populated_n1},
      {"max_populated_n2", run.truncation.max_populated_n2},
      {"tail_population", run.truncation.tail_population}};
  for (auto& [k, v] : extra_summary.items()) summary[k] = v;
  std::ofstream(ctx.artifact("_summary.json")) << summary.dump(2) << "\n";

  ctx.manifest_extra["truncation"] = summary["truncation"];
}

void run_gate_truth_table(RunContext& ctx) {
  const json& p = require_key(ctx.config, "parameters", "config");
  const std::string scheme = require_string(p, "scheme", "parameters");

  if (scheme == "sigma_z" || scheme == "sigma_phi" ||
      scheme == "sigma_phi_wrapped") {
    require_keys_subset(p,
                        {"scheme", "n_max", "trap", "detuning_hz",
                         "optical_phase", "geometry", "phase_red",
                         "phase_blue", "path_shift"},
                        "parameters");
  } else if (scheme == "cirac_zoller_phase" || scheme == "cirac_zoller_cnot") {
    require_keys_subset(p, {"scheme", "n_max", "trap", "rabi_hz", "mode",
                            "phi"},
                        "parameters");
  } else if (scheme == "fast_kick") {
    require_keys_subset(p, {"scheme", "n_max", "trap", "schedule_seed"},
                        "parameters");
  } else {
    throw SchemaError("unknown gate scheme '" + scheme + "'");
  }

  const int n_max = int_or(p, "n_max", 30);
  const hilbert::FockBasis basis(n_max);
  auto trap = parse_trap(p, ctx.warnings);

  if (scheme == "sigma_z") {
    const double delta = hz_to_rad(require_number(p, "detuning_hz", "parameters"));
    check_rwa(delta, trap, ctx.warnings);
    gates::SigmaZGateParams gp;
    gp.detuning = delta;
    gp.rabi_up = gates::sigma_z_required_rabi_diff(trap, delta);
    gp.optical_phase = number_or(p, "optical_phase", 0.0);
    auto run = gates::run_truth_table(
        [&](const dynamics::SpinMotionState& s) {
          return gates::sigma_z_gate(trap, gp, s);
        },
        basis);
    write_gate_run(ctx, run, gates::sigma_z_table(), "sigma_z_eq25",
                   json::object());
  } else if (scheme == "sigma_phi" || scheme == "sigma_phi_wrapped") {
    const double delta = hz_to_rad(require_number(p, "detuning_hz", "parameters"));
    check_rwa(delta, trap, ctx.warnings);
    const std::string geom = require_string(p, "geometry", "parameters");
    const double rabi = gates::sigma_phi_required_rabi(trap, delta);
    auto geometry = geom == "sensitive"
                        ? noise::make_phase_sensitive(
                              trap, number_or(p, "phase_red", 0.0),
                              number_or(p, "phase_blue", 0.0))
                    : geom == "insensitive"
                        ? noise::make_phase_insensitive(
                              trap, number_or(p, "phase_red", 0.0),
                              number_or(p, "phase_blue", 0.0))
                        : throw SchemaError("geometry must be sensitive or "
                                            "insensitive");
    if (scheme == "sigma_phi_wrapped") {
      auto run = gates::ramsey_wrapped_gate(
          trap, geometry, delta, rabi, number_or(p, "path_shift", 0.0),
          geom == "sensitive" ? gates::RotationReference::shared_path
                              : gates::RotationReference::copropagating,
          basis);
      write_gate_run(ctx, run, gates::sigma_z_table(), "sigma_z_eq25",
                     json::object());
    } else {
      auto params = gates::sigma_phi_params_from_geometry(geometry, delta,
                                                          rabi);
      auto run = gates::run_truth_table(
          [&](const dynamics::SpinMotionState& s) {
            return gates::sigma_phi_gate(trap, params, s);
          },
          basis);
      const auto analytic = gates::sigma_phi_gate_analytic(trap, params);
      // rotating into the spin-phase basis must recover the sigma_z table
      const auto eff = gates::sigma_phi_effective_phases(trap, params);
      json extra;
      extra["fidelity_vs_eq28_rotated"] = gates::table_fidelity(
          run.table, gates::sigma_phi_table(eff[0].psi, eff[1].psi));
      write_gate_run(ctx, run, analytic, "sigma_phi_analytic", extra);
    }
  } else if (scheme == "cirac_zoller_phase" || scheme == "cirac_zoller_cnot") {
    gates::CiracZollerParams cz;
    cz.mode = int_or(p, "mode", 1);
    cz.rabi = hz_to_rad(number_or(p, "rabi_hz", 2.0e4));
    const double phi = number_or(p, "phi", 0.0);
    const bool cnot = scheme == "cirac_zoller_cnot";
    auto run = gates::run_truth_table(
        [&](const dynamics::SpinMotionState& s) {
          return cnot ? gates::cirac_zoller_cnot(s, trap, phi, cz)
                      : gates::cirac_zoller_phase_gate(s, trap, cz);
        },
        basis);
    write_gate_run(ctx, run,
                   cnot ? gates::cz_cnot_table(phi) : gates::cz_phase_table(),
                   cnot ? "cz_cnot_eq11" : "cz_phase_eq10", json::object());
  } else {  // fast_kick
    const auto seed = std::uint64_t(int_or(p, "schedule_seed", 1));
    const auto schedule = gates::solve_fast_gate_schedule(trap, seed);
    const auto analysis = gates::fast_gate_analysis(schedule, trap);
    auto run = gates::run_truth_table(
        [&](const dynamics::SpinMotionState& s) {
          return gates::fast_gate(schedule, trap, s);
        },
        basis);
    json extra;
    extra["schedule"] = json::parse(gates::schedule_to_json(schedule));
    extra["max_excursion"] = analysis.max_excursion;
    double resid = 0;
    for (int s = 0; s < 4; ++s)
      resid = std::max({resid, std::abs(analysis.residual_alpha_1[s]),
                        std::abs(analysis.residual_alpha_2[s])});
    extra["max_residual_alpha"] = resid;
    write_gate_run(ctx, run, gates::sigma_z_table(), "sigma_z_eq25", extra);
  }
}

// ---------------------------------------------------------------------------
// phase_sweep
// ---------------------------------------------------------------------------

void run_phase_sweep(RunContext& ctx) {
  const json& p = require_key(ctx.config, "parameters", "config");
  require_keys_subset(p,
                      {"scheme", "n_max", "trap", "detuning_hz", "points",
                       "geometry"},
                      "parameters");
  const std::string scheme = require_string(p, "scheme", "parameters");
  const int n_max = int_or(p, "n_max", 20);
  const int points = int_or(p, "points", 16);
  const hilbert::FockBasis basis(n_max);
  auto trap = parse_trap(p, ctx.warnings);
  const double delta = hz_to_rad(require_number(p, "detuning_hz", "parameters"));
  check_rwa(delta, trap, ctx.warnings);

  auto table_at = [&](double phase) -> gates::TruthTable {
    if (scheme == "sigma_z") {
      gates::SigmaZGateParams gp;
      gp.detuning = delta;
      gp.rabi_up = gates::sigma_z_required_rabi_diff(trap, delta);
      gp.optical_phase = phase;
      return gates::run_truth_table(
                 [&](const dynamics::SpinMotionState& s) {
                   return gates::sigma_z_gate(trap, gp, s);
                 },
                 basis)
          .table;
    }
    if (scheme == "sigma_phi_wrapped" || scheme == "sigma_phi_unwrapped") {
      const std::string geom = require_string(p, "geometry", "parameters");
      const double rabi = gates::sigma_phi_required_rabi(trap, delta);
      auto geometry = geom == "sensitive" ? noise::make_phase_sensitive(trap)
                                          : noise::make_phase_insensitive(trap);
      if (scheme == "sigma_phi_wrapped")
        return gates::ramsey_wrapped_gate(
                   trap, geometry, delta, rabi, phase,
                   geom == "sensitive"
                       ? gates::RotationReference::shared_path
                       : gates::RotationReference::copropagating,
                   basis)
            .table;
      auto params = gates::sigma_phi_params_from_geometry(
          noise::apply_path_shift(geometry, phase), delta, rabi);
      return gates::run_truth_table(
                 [&](const dynamics::SpinMotionState& s) {
                   return gates::sigma_phi_gate(trap, params, s);
                 },
                 basis)
          .table;
    }
    throw SchemaError("unknown phase_sweep scheme '" + scheme + "'");
  };

  const gates::TruthTable reference = table_at(0.0);
  const gates::TruthTable ideal = gates::sigma_z_table();

  CsvWriter csv(ctx.artifact("_sweep.csv"),
                "phase,fidelity_vs_zero_shift,fidelity_vs_ideal");
  double min_self = 1.0, max_self = 0.0;
  for (int k = 0; k < points; ++k) {
    const double phase = two_pi * k / points;
    const auto t = table_at(phase);
    const double self = gates::table_fidelity(t, reference);
    min_self = std::min(min_self, self);
    max_self = std::max(max_self, self);
    csv.row({format_number(phase), format_number(self),
             format_number(gates::table_fidelity(t, ideal))});
  }
  json summary;
  summary["scheme"] = scheme;
  summary["points"] = points;
  summary["fidelity_variation"] = max_self - min_self;
  std::ofstream(ctx.artifact("_summary.json")) << summary.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// fast_scaling
// ---------------------------------------------------------------------------

void run_fast_scaling(RunContext& ctx) {
  const json& p = require_key(ctx.config, "parameters", "config");
  require_keys_subset(p,
                      {"cycles", "parameter_grid", "trials", "omega_hz",
                       "delta_k_sigma_x"},
                      "parameters");
  const json& cycles = require_key(p, "cycles", "parameters");
  const json& grid = require_key(p, "parameter_grid", "parameters");
  if (!cycles.is_array() || !grid.is_array())
    throw SchemaError("cycles and parameter_grid must be arrays");

  noise::ScalingExperimentSpec spec;
  spec.workers = ctx.workers;
  spec.trials = int_or(p, "trials", 10000);
  spec.trap_omega = hz_to_rad(require_number(p, "omega_hz", "parameters"));
  spec.delta_k_sigma_x = number_or(p, "delta_k_sigma_x", 10.0);
  for (const auto& g : grid) spec.parameter_grid.push_back(g.get<double>());

  CsvWriter csv(ctx.artifact("_scaling.csv"),
                "cycles,parameter,mean_infidelity");
  json summary = json::array();
  for (const auto& c : cycles) {
    spec.cycles = c.get<int>();
    const auto result = noise::infidelity_scaling_experiment(spec, ctx.seed);
    for (const auto& pt : result.points)
      csv.row({std::to_string(spec.cycles), format_number(pt.parameter),
               format_number(pt.mean_infidelity)});
    summary.push_back({{"cycles", spec.cycles},
                       {"slope", result.slope},
                       {"slope_ci_low", result.slope_ci_low},
                       {"slope_ci_high", result.slope_ci_high}});
  }
  std::ofstream(ctx.artifact("_summary.json"))
      << json{{"slopes", summary}}.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// clock_states
// ---------------------------------------------------------------------------

void run_clock_states(RunContext& ctx) {
  const json& p = require_key(ctx.config, "parameters", "config");
  require_keys_subset(p,
                      {"nuclear_spin", "hyperfine_ghz", "g_j", "g_i",
                       "b_max_tesla", "grid_points", "stark"},
                      "parameters");
  atomic::HyperfineSystem sys;
  sys.nuclear_spin = require_number(p, "nuclear_spin", "parameters");
  sys.hyperfine_constant =
      hz_to_rad(require_number(p, "hyperfine_ghz", "parameters") * 1e9);
  sys.g_j = number_or(p, "g_j", 2.002);
  sys.g_i = number_or(p, "g_i", -2.002e-3);
  const double b_max = number_or(p, "b_max_tesla", 0.05);
  const int grid = int_or(p, "grid_points", 256);
  sys.validate();

  // level diagram CSV
  sys.field = 0;
  auto labels = atomic::eigensystem(sys);
  std::string header = "b_tesla";
  for (const auto& l : labels) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), ",E_mF%+g_br%d_ghz", l.m_f, l.branch);
    header += buf;
  }
  CsvWriter csv(ctx.artifact("_levels.csv"), header);
  for (int k = 0; k <= grid; ++k) {
    sys.field = b_max * k / grid;
    const auto levels = atomic::eigensystem(sys);
    std::vector<std::string> cells{format_number(sys.field)};
    for (const auto& ref : labels)
      cells.push_back(format_number(
          rad_to_hz(atomic::find_level(levels, ref.m_f, ref.branch).energy) /
          1e9));
    csv.row(cells);
  }

  const auto pairs = atomic::field_insensitive_pairs(sys, 0.0, b_max, grid);
  json jp = json::array();
  for (const auto& pr : pairs)
    jp.push_back({{"m_f_1", pr.m_f_1},
                  {"branch_1", pr.branch_1},
                  {"m_f_2", pr.m_f_2},
                  {"branch_2", pr.branch_2},
                  {"field_tesla", pr.field},
                  {"degenerate_root", pr.degenerate_root}});

  json summary;
  summary["insensitive_pairs"] = jp;

  if (p.contains("stark")) {
    const json& st = p.at("stark");
    require_keys_subset(st,
                        {"delta_over_hf_min", "delta_over_hf_max", "points",
                         "coupling_plus", "coupling_minus"},
                        "stark");
    const double lo = number_or(st, "delta_over_hf_min", 10.0);
    const double hi = number_or(st, "delta_over_hf_max", 1e4);
    const int n = int_or(st, "points", 25);
    const double sp = number_or(st, "coupling_plus", 1.0);
    const double sm = number_or(st, "coupling_minus", 1.0);

    sys.field = 0;
    const auto levels = atomic::eigensystem(sys);
    // the two m_F = 0 levels are the clock pair at B* = 0
    const auto l1 = atomic::find_level(levels, 0.0, 1);
    const auto l2 = atomic::find_level(levels, 0.0, 0);
    CsvWriter scsv(ctx.artifact("_stark.csv"),
                   "delta_over_hf,differential_ratio");
    std::vector<double> lx, ly;
    for (int k = 0; k < n; ++k) {
      const double ratio = lo * std::pow(hi / lo, double(k) / (n - 1));
      const double delta = ratio * sys.hyperfine_constant;
      const double c1 = atomic::stark_shift(l1, delta, sp, sm, l1.energy);
      const double c2 = atomic::stark_shift(l2, delta, sp, sm, l1.energy);
      const double rel = std::abs(c1 - c2) / (0.5 * std::abs(c1 + c2));
      scsv.row({format_number(ratio), format_number(rel)});
      lx.push_back(std::log(ratio));
      ly.push_back(std::log(rel));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= lx.size();
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    summary["stark_scaling_slope"] = sxy / sxx;
  }
  std::ofstream(ctx.artifact("_summary.json")) << summary.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// comb_spectrum
// ---------------------------------------------------------------------------

void run_comb_spectrum(RunContext& ctx) {
  const json& p = require_key(ctx.config, "parameters", "config");
  require_keys_subset(p,
                      {"omega_1_mhz", "omega_2_mhz", "beat_offset_mhz",
                       "resolution_mhz", "rate_scan"},
                      "parameters");
  const double f1 = require_number(p, "omega_1_mhz", "parameters");
  const double f2 = require_number(p, "omega_2_mhz", "parameters");
  const double off = require_number(p, "beat_offset_mhz", "parameters");
  const double res = number_or(p, "resolution_mhz", 0.0);

  const auto lines = comb::raman_spectrum(hz_to_rad(f1 * 1e6),
                                          hz_to_rad(f2 * 1e6),
                                          hz_to_rad(off * 1e6),
                                          hz_to_rad(res * 1e6));
  CsvWriter csv(ctx.artifact("_spectrum.csv"), "frequency_mhz,label,overlaps");
  for (const auto& l : lines)
    csv.row({format_number(rad_to_hz(l.frequency) / 1e6), l.label,
             l.overlaps ? "1" : "0"});

  if (p.contains("rate_scan")) {
    const json& rs = p.at("rate_scan");
    require_keys_subset(rs, {"modulation_index", "k_max", "theta_points"},
                        "rate_scan");
    const double phi = number_or(rs, "modulation_index", 1.0);
    const int kmax = int_or(rs, "k_max", 4);
    const int nt = int_or(rs, "theta_points", 64);
    CsvWriter rcsv(ctx.artifact("_rates.csv"), "theta,k,rate");
    for (int k = 0; k <= kmax; ++k)
      for (int i = 0; i < nt; ++i) {
        const double theta = two_pi * i / nt;
        rcsv.row({format_number(theta), std::to_string(k),
                  format_number(comb::transition_rate(k, phi, theta))});
      }
  }
}

// ---------------------------------------------------------------------------
// trajectory
// ---------------------------------------------------------------------------

void run_trajectory(RunContext& ctx) {
  const json& p = require_key(ctx.config, "parameters", "config");
  require_keys_subset(p, {"detuning_hz", "radius", "samples"}, "parameters");
  const double delta = hz_to_rad(require_number(p, "detuning_hz", "parameters"));
  const double radius = require_number(p, "radius", "parameters");
  const int samples = int_or(p, "samples", 10000);
  if (delta == 0) throw PhysicsError("trajectory: detuning must be non-zero");

  // force such that F x0 / (2 hbar delta) = radius
  const complexd coupling = radius * delta;  // F x0 / (2 hbar)
  const double t_final = two_pi / delta;

  CsvWriter csv(ctx.artifact("_trajectory.csv"), "t,re_alpha,im_alpha,phase");
  std::vector<complexd> loop;
  loop.reserve(samples + 1);
  for (int k = 0; k <= samples; ++k) {
    const double t = t_final * k / samples;
    const complexd a = dynamics::alpha_from_coupling(coupling, delta, t);
    loop.push_back(a);
    csv.row({format_number(t), format_number(a.real()),
             format_number(a.imag()),
             format_number(
                 dynamics::running_phase_from_coupling(coupling, delta, t))});
  }

  json summary;
  summary["phi0_analytic"] = two_pi * radius * radius;
  loop.pop_back();  // closed loop: last sample repeats the first
  summary["phi0_shoelace"] = dynamics::shoelace_phase(loop);
  summary["closure_residual"] = std::abs(
      dynamics::alpha_from_coupling(coupling, delta, t_final));
  std::ofstream(ctx.artifact("_summary.json")) << summary.dump(2) << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

std::filesystem::path config_directory() {
  if (const char* env = std::getenv("IONGATE_CONFIG_DIR")) return env;
  return IONGATE_CONFIG_DIR;
}

RunResult run_config(const std::filesystem::path& config_path,
                     const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();

  std::ifstream in(config_path);
  if (!in)
    throw SchemaError("cannot read config file " + config_path.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config JSON parse error: ") + e.what());
  }
  require_keys_subset(config,
                      {"schema_version", "experiment", "description", "seed",
                       "output", "parameters"},
                      "config");
  const int schema_version = int_or(config, "schema_version", kSchemaVersion);
  if (schema_version != kSchemaVersion)
    throw SchemaError("unsupported schema_version");
  const std::string experiment =
      require_string(config, "experiment", "config");
  require_key(config, "parameters", "config");

  RunContext ctx;
  ctx.config = config;
  ctx.out_dir = options.output_dir;
  ctx.workers = options.workers;
  ctx.seed = options.seed_overridden
                 ? options.seed
                 : std::uint64_t(int_or(config, "seed", 0));
  ctx.prefix = config_path.stem().string();
  if (config.contains("output")) {
    require_keys_subset(config.at("output"), {"prefix"}, "output");
    ctx.prefix = require_string(config.at("output"), "prefix", "output");
  }
  std::filesystem::create_directories(ctx.out_dir);

  if (experiment == "gate_truth_table")
    run_gate_truth_table(ctx);
  else if (experiment == "phase_sweep")
    run_phase_sweep(ctx);
  else if (experiment == "fast_scaling")
    run_fast_scaling(ctx);
  else if (experiment == "clock_states")
    run_clock_states(ctx);
  else if (experiment == "comb_spectrum")
    run_comb_spectrum(ctx);
  else if (experiment == "trajectory")
    run_trajectory(ctx);
  else
    throw SchemaError("unknown experiment '" + experiment + "'");

  const auto end = std::chrono::steady_clock::now();

  json manifest;
  manifest["version"] = kVersion;
  manifest["schema_version"] = kSchemaVersion;
  manifest["experiment"] = experiment;
  manifest["config_path"] = config_path.string();
  manifest["resolved_parameters"] = config;
  manifest["seed"] = ctx.seed;
  manifest["workers"] = ctx.workers;
  manifest["warnings"] = ctx.warnings;
  manifest["runtime_seconds"] =
      std::chrono::duration<double>(end - start).count();
  manifest["timestamp_utc"] = []() {
    char buf[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ",
                  std::gmtime(&now));
    return std::string(buf);
  }();
  json arts = json::array();
  for (const auto& a : ctx.artifacts) arts.push_back(a.string());
  manifest["artifacts"] = arts;
  for (auto& [k, v] : ctx.manifest_extra.items()) manifest[k] = v;

  const auto manifest_path = ctx.out_dir / (ctx.prefix + "_manifest.json");
  std::ofstream(manifest_path) << manifest.dump(2) << "\n";

  RunResult result;
  result.artifacts = ctx.artifacts;
  result.artifacts.push_back(manifest_path);
  result.summary = experiment + " -> " + std::to_string(ctx.artifacts.size()) +
                   " artifact(s) + manifest in " + ctx.out_dir.string();
  return result;
}

std::vector<CatalogEntry> list_experiments() {
  std::vector<CatalogEntry> entries;
  const auto dir = config_directory();
  if (!std::filesystem::is_directory(dir)) return entries;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".json") continue;
    CatalogEntry entry;
    entry.name = e.path().stem().string();
    entry.path = e.path();
    try {
      json j = json::parse(std::ifstream(e.path()));
      entry.experiment = j.value("experiment", "?");
      entry.description = j.value("description", "");
    } catch (...) {
      entry.experiment = "?";
      entry.description = "(unparseable)";
    }
    entries.push_back(entry);
  }
  std::sort(entries.begin(), entries.end(),
            [](const CatalogEntry& a, const CatalogEntry& b) {
              return a.name < b.name;
            });
  return entries;
}

}  // namespace experiment
}  // namespace iongate
