#pragma once

#include "catsim/partition.hpp"

#include <optional>
#include <string>
#include <vector>

namespace catsim {

/// Machine parameters of the analytic time-per-step model. b_net empty
/// means a switched (or supercomputer) topology where the shared-medium
/// term vanishes structurally.
struct HardwareProfile {
  std::string label;
  double t_lt_s = 0.8e-3;              // message latency, seconds
  double b_nd_bits = 50e6;             // node (point-to-point) bandwidth, bit/s
  std::optional<double> b_net_bits;    // network bandwidth, bit/s; empty = infinite
  double t1_s = 1.0;                   // single-CPU seconds per simulated second
};

/// Scenario parameters: boundary exchanges per step, bytes per split link
/// per exchange, the split-link scaling, and the overhead/imbalance hooks.
struct ScenarioProfile {
  std::string label;
  int n_sub = 2;
  double s_bnd_bytes = 200.0;
  SplitFit nspl_fit{140.0, 0.59, true, 0.0};
  std::vector<std::pair<int, double>> nspl_table; // preferred over the fit if set
  std::vector<std::pair<int, double>> f_dmn_table; // (p, e_dmn) from metrics
  double f_ovr = 0.0;

  double nspl(int p) const;
  double f_dmn(int p) const; // 1/e_dmn - 1, 0 when no table entry applies
};

struct PredictionRow {
  int p = 1;
  double t_cmp = 0.0;
  double t_lat = 0.0;
  double t_bnd_node = 0.0;
  double t_bnd_net = 0.0;
  double t_total = 0.0;
  double rtr = 0.0;        // 1 s / t_total
  double speedup = 0.0;    // T(1)/T(p), filled when a p=1 row exists
  double efficiency = 0.0; // speedup / p
};

/// Expected neighbour-domain count: 2 (3 sqrt(p) - 1)(sqrt(p) - 1) / p.
double n_nb(int p);

/// One row of the time-per-step decomposition for p CPUs.
PredictionRow predict_step_time(const HardwareProfile& hw,
                                const ScenarioProfile& sc, int p);

enum class AsymptoticRegime { LatencyPlateau, BandwidthGrowth };

struct PredictionCurve {
  std::vector<PredictionRow> rows;
  AsymptoticRegime regime = AsymptoticRegime::LatencyPlateau;
  bool rtr_non_monotone = false; // rtr rises then falls within the row range
  double saturation_rtr = 0.0;   // best rtr over a wide p sweep
};

PredictionCurve predict_curve(const HardwareProfile& hw,
                              const ScenarioProfile& sc,
                              const std::vector<int>& p_list);

/// Fills speedup/efficiency columns; requires a p=1 row.
void speedup_efficiency(std::vector<PredictionRow>& rows);

struct CalibrationUnknowns {
  bool t1 = false;
  bool t_lt = false;
  bool s_bnd = false;
};

struct CalibrationResult {
  HardwareProfile hw;
  ScenarioProfile sc;
  double rms_residual_s = 0.0;
};

/// Linear least squares over the unknown subset of {T_1, T_lt, S_bnd};
/// the model is linear in each once N_spl(p) and n_nb(p) are fixed.
CalibrationResult calibrate(const std::vector<std::pair<int, double>>& measured,
                            const HardwareProfile& hw, const ScenarioProfile& sc,
                            const CalibrationUnknowns& unknowns);

/// Solves T_1 so that rtr(p_ref) == rtr_ref under (hw, sc).
double back_solve_t1(const HardwareProfile& hw, const ScenarioProfile& sc,
                     int p_ref, double rtr_ref);

// ---- profile presets and files ----

/// Named presets: 10mbit-shared, 10mbit-switched, 100mbit-switched,
/// gbit-shared, gbit-switched, supercomputer.
HardwareProfile hardware_preset(const std::string& name);
std::vector<std::string> hardware_preset_names();

/// key=value text: label, t_lt_ms, b_nd_mbit, b_net_mbit (or `inf`), t1_s.
HardwareProfile load_hardware_profile(const std::string& text);
HardwareProfile load_hardware_profile_file(const std::string& path);
std::string serialize_hardware_profile(const HardwareProfile& hw);

/// key=value text: label, n_sub, s_bnd_bytes, nspl_a, nspl_alpha,
/// nspl_offset (0|1), f_ovr.
ScenarioProfile load_scenario_profile(const std::string& text);
ScenarioProfile load_scenario_profile_file(const std::string& path);
std::string serialize_scenario_profile(const ScenarioProfile& sc);

/// CSV: p,T_cmp,T_lat,T_bnd_node,T_bnd_net,T_total,rtr,speedup,efficiency
std::string prediction_csv(const std::vector<PredictionRow>& rows);

} // namespace catsim
