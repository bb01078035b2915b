#pragma once

#include "catsim/parengine.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace catsim {

struct FlowMeasurement {
  double density = 0.0;        // vehicles per cell per lane
  double flow_vph = 0.0;       // vehicles/hour/lane past a point
  double flow_vpcs = 0.0;      // vehicles/cell/step (per lane)
  double mean_speed_cells = 0.0; // cells/step
  int window_steps = 0;
  int lanes = 1;
};

struct ValidateConfig {
  double p_brake = 0.2;
  std::uint64_t seed = 0;
  int ring_cells = 1000;
  int p = 1; // domains; every experiment must give identical results for any p
  int warmup_steps = -1; // <0: max(10 * ring_cells / v_max, 1000)
  int stop_required_gap = kInteractionRange;
};

/// Closed-ring fundamental diagram: one measurement per density, exact
/// density control, space-mean speed over the sampling window.
std::vector<FlowMeasurement> ring_diagram(int lanes,
                                          const std::vector<double>& densities,
                                          int steps, const ValidateConfig& cfg);

struct MergeRow {
  double priority_demand_vps = 0.0;  // injected vehicles/step on the major road
  double priority_flow_vph = 0.0;    // measured at the junction
  double minor_flow_vph = 0.0;       // stop-controlled approach throughput
};

/// Stop-sign merge onto a two-lane roadway. Demand levels are vehicles/step
/// on the priority street; a saturated standing jam (level >= 1) uses a
/// closed loop so the priority queue never drains.
std::vector<MergeRow> merge_capacity(const std::vector<double>& demand_levels,
                                     int steps, const ValidateConfig& cfg);

struct SignalResult {
  double throughput_vph = 0.0;
  double saturation_vph = 0.0; // same setup, signal always green
  double green_fraction = 0.0;
};

/// Saturated queue discharging through a fixed-time signal; measured hourly
/// flow through the stop line plus the all-green reference.
SignalResult signal_throughput(int red_s, int green_s, int steps,
                               const ValidateConfig& cfg);

struct LaneUsageRow {
  int lane = 0;
  double flow_vph = 0.0;
  double mean_speed_cells = 0.0;
  double occupancy = 0.0; // mean vehicles present per cell
};

struct LaneUsage {
  std::vector<LaneUsageRow> per_lane;
  FlowMeasurement aggregate;
};

/// Multi-lane ring at one density; per-lane flows and speeds.
LaneUsage lane_usage(int lanes, double density, int steps,
                     const ValidateConfig& cfg);

// CSV emission (one file per experiment) and a manifest listing artifacts.
std::string ring_diagram_csv(const std::vector<FlowMeasurement>& rows);
std::string merge_csv(const std::vector<MergeRow>& rows);
std::string signal_csv(const SignalResult& r);
std::string lane_usage_csv(const LaneUsage& r);
std::string manifest_text(const std::vector<std::string>& files,
                          std::uint64_t seed);

/// Evenly spaced vehicles with circular routes on a ring network built by
/// generate_ring; exposed for tests that need exact-density closed systems.
std::vector<Plan> ring_plans(const Network& ring, int vehicle_count);

} // namespace catsim
