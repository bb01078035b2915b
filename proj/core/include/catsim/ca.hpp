#pragma once

#include "catsim/ids.hpp"
#include "catsim/network.hpp"
#include "catsim/plans.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace catsim {

struct SimConfig {
  double p_brake = 0.2;     // random-slowdown probability per vehicle step
  int stop_required_gap = kInteractionRange; // cells, in [1, 5]
  std::uint64_t seed = 0;
};

enum class SubStep : std::uint8_t { LaneChange = 0, Move = 1 };

struct SimClock {
  int time = 0; // seconds; one full step advances it by 1
  SubStep sub_step = SubStep::LaneChange;
};

struct Cell {
  VehicleId vid = kNoVehicle;
  std::int8_t velocity = 0;
};

inline bool operator==(const Cell& a, const Cell& b) {
  return a.vid == b.vid && a.velocity == b.velocity;
}

struct VehicleState {
  VehicleId id = kNoVehicle;
  int velocity = 0;
  std::size_t link_idx = 0;
  int lane = 0;
  int cell = 0;
  int plan_idx = 0;  // into SimState::plans
  int route_pos = 0; // index of the current link within the route
};

/// One link as seen by one domain. Lane-major full-size grid; only cells in
/// [view_begin, view_end) carry meaning. The owned range is a sub-range of
/// the view; the rest of the view is the mirror of remote cells adjacent to
/// the cut, refreshed by boundary exchanges.
struct LinkView {
  std::size_t link_idx = 0;
  int lanes = 1;
  int cell_count = 0;
  int own_begin = 0, own_end = 0;
  int view_begin = 0, view_end = 0;

  std::vector<Cell> cells;

  Cell& at(int lane, int cell) { return cells[lane * cell_count + cell]; }
  const Cell& at(int lane, int cell) const {
    return cells[lane * cell_count + cell];
  }
  bool owns(int cell) const { return cell >= own_begin && cell < own_end; }
  bool in_view(int cell) const { return cell >= view_begin && cell < view_end; }
  bool whole() const { return own_begin == 0 && own_end == cell_count; }
};

/// Vehicle handed to a neighbouring domain after the move sub-step placed it
/// in remote-owned cells.
struct Migrant {
  VehicleState veh;
  Plan plan; // full plan travels with the vehicle
};

/// Complete state of one simulation domain (or of the whole simulation when
/// the domain owns everything). Pure value type; the network is shared and
/// immutable.
struct SimState {
  const Network* net = nullptr;
  SimConfig cfg;
  SimClock clock;
  DomainId domain = 0;

  std::vector<int> view_of_link; // link_idx -> index into views, -1 if absent
  std::vector<LinkView> views;

  std::vector<Plan> plans;
  std::vector<int> pending; // plan indices sorted by (departure, vehicle id)
  std::map<VehicleId, VehicleState> vehicles; // owned vehicles only

  std::int64_t injected = 0;
  std::int64_t exited = 0;

  std::vector<std::uint64_t> link_work; // by link index, vehicle updates
  std::vector<std::uint64_t> node_work; // by node index, crossings handled
  std::uint64_t step_work = 0;          // work units of the current step

  std::vector<Migrant> outbox; // filled by move_substep, drained by the engine

  LinkView* view(std::size_t link_idx) {
    const int v = view_of_link[link_idx];
    return v < 0 ? nullptr : &views[v];
  }
  const LinkView* view(std::size_t link_idx) const {
    const int v = view_of_link[link_idx];
    return v < 0 ? nullptr : &views[v];
  }
};

/// Single-domain state owning the whole network.
SimState make_full_state(const Network& net, std::vector<Plan> plans,
                         const SimConfig& cfg);

/// True while the signal shows red; the cycle starts red at t = 0.
bool signal_is_red(const Turn& turn, int time);

/// Gap acceptance at an unprotected turn. `upstream_window` is the priority
/// street occupancy ordered away from the conflict point (index 0 touches
/// it). True iff the first required_gap cells are all empty.
bool gap_acceptance(std::span<const Cell> upstream_window, int required_gap);

/// Sideways movement only; decisions are synchronous over the pre-substep
/// state, conflicts on a target cell resolved by vehicle id.
void lane_change_substep(SimState& s);

/// Places due plans on their entry cells (retrying occupied ones next step).
void inject_pending(SimState& s);

/// Car following: accelerate, clamp to gap, random slowdown, advance;
/// node crossings serialized per node. Cross-cut placements land in
/// s.outbox instead of s.vehicles.
void move_substep(SimState& s);

/// Full step for a state that owns everything: lane changes, injection,
/// movement, clock advance.
void single_domain_step(SimState& s);

// --- introspection used by tests, the engine and the validate module ---

struct VehicleRow {
  VehicleId id;
  LinkId link;
  int lane, cell, velocity;
};
inline bool operator==(const VehicleRow& a, const VehicleRow& b) {
  return a.id == b.id && a.link == b.link && a.lane == b.lane &&
         a.cell == b.cell && a.velocity == b.velocity;
}

/// Owned vehicles as rows sorted by vehicle id.
std::vector<VehicleRow> collect_rows(const SimState& s);

std::uint64_t digest_rows(std::span<const VehicleRow> rows, int time);

/// Asserts the vehicle registry and the owned grid cells agree; throws
/// InternalError on any mismatch. Test/debug helper.
void check_grid_consistency(const SimState& s);

} // namespace catsim
