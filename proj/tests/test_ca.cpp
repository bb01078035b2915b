#include <doctest.h>

#include "catsim/ca.hpp"
#include "catsim/errors.hpp"
#include "catsim/network.hpp"
#include "catsim/rng.hpp"

#include <algorithm>
#include <map>
#include <set>

using namespace catsim;

namespace {

SimConfig no_brake(std::uint64_t seed = 0) {
  SimConfig cfg;
  cfg.p_brake = 0.0;
  cfg.seed = seed;
  return cfg;
}

// Global-cell layout of a ring built by generate_ring (links chain in id
// order).
struct RingMap {
  std::vector<int> link_start;
  int total = 0;

  explicit RingMap(const Network& ring) {
    for (const Link& l : ring.links()) {
      link_start.push_back(total);
      total += l.cell_count;
    }
  }
  std::pair<int, int> locate(int global) const {
    for (int i = static_cast<int>(link_start.size()) - 1; i >= 0; --i)
      if (global >= link_start[i]) return {i, global - link_start[i]};
    return {0, global};
  }
};

std::vector<Plan> ring_plans_at(const Network& ring, const RingMap& map,
                                const std::vector<int>& cells) {
  std::vector<Plan> plans;
  const int k = static_cast<int>(ring.links().size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [li, cell] = map.locate(cells[i]);
    Plan p;
    p.vehicle_id = static_cast<int>(i);
    p.departure_s = 0;
    p.entry_cell = cell;
    p.circular = true;
    for (int j = 0; j < k; ++j)
      p.route.push_back(ring.links()[(li + j) % k].id);
    plans.push_back(std::move(p));
  }
  return plans;
}

std::map<VehicleId, int> global_positions(const SimState& s, const Network& ring,
                                          const RingMap& map) {
  std::map<VehicleId, int> out;
  for (const VehicleRow& r : collect_rows(s)) {
    const std::size_t li = ring.link_index(r.link);
    out[r.id] = map.link_start[li] + r.cell;
  }
  return out;
}

void set_velocity(SimState& s, VehicleId vid, int v) {
  VehicleState& veh = s.vehicles.at(vid);
  veh.velocity = v;
  s.view(veh.link_idx)->at(veh.lane, veh.cell).velocity =
      static_cast<std::int8_t>(v);
}

// Independent brute-force car-following oracle on a flat circular array;
// written against the published update rules, not against the simulator's
// data structures.
struct FlatRingOracle {
  int cells = 0;
  int vmax = 5;
  std::map<VehicleId, int> pos;
  std::map<VehicleId, int> vel;

  void step() {
    std::map<int, VehicleId> occ;
    for (const auto& [vid, p] : pos) occ[p] = vid;
    std::map<VehicleId, int> new_pos, new_vel;
    for (const auto& [vid, p] : pos) {
      int gap = 0;
      while (gap < vmax + 1 && occ.count((p + 1 + gap) % cells) == 0) ++gap;
      int v = std::min(vel.at(vid) + 1, vmax);
      v = std::min(v, gap);
      new_pos[vid] = (p + v) % cells;
      new_vel[vid] = v;
    }
    pos = new_pos;
    vel = new_vel;
  }
};

} // namespace

TEST_CASE("move substep: acceleration from rest on an empty road") {
  const Network ring = generate_ring(100, 1);
  const RingMap map(ring);
  SimState s = make_full_state(ring, ring_plans_at(ring, map, {10}), no_brake());
  single_domain_step(s); // injects at cell 10, then moves with v=1
  CHECK(global_positions(s, ring, map).at(0) == 11);
  CHECK(s.vehicles.at(0).velocity == 1);
}

TEST_CASE("move substep: velocity clamps to the gap") {
  // v=4 with two empty cells ahead: v becomes 2, advances 2 cells
  const Network ring = generate_ring(100, 1);
  const RingMap map(ring);
  SimState s = make_full_state(ring, ring_plans_at(ring, map, {10, 13, 14}),
                               no_brake());
  lane_change_substep(s);
  inject_pending(s);
  set_velocity(s, 0, 4);
  move_substep(s);
  CHECK(global_positions(s, ring, map).at(0) == 12);
  CHECK(s.vehicles.at(0).velocity == 2);
}

TEST_CASE("move substep: lone vehicle cruises at v_max") {
  const Network ring = generate_ring(100, 1);
  const RingMap map(ring);
  SimState s = make_full_state(ring, ring_plans_at(ring, map, {0}), no_brake());
  for (int t = 0; t < 20; ++t) single_domain_step(s);
  CHECK(s.vehicles.at(0).velocity == 5); // 5 cells/step = 135 km/h
  const int before = global_positions(s, ring, map).at(0);
  single_domain_step(s);
  const int after = global_positions(s, ring, map).at(0);
  CHECK((after - before + 100) % 100 == 5);
}

TEST_CASE("brute-force oracle matches the simulator on small rings") {
  for (int ring_cells : {10, 17, 30}) {
    for (int n_veh : {1, 2, 3, 5}) {
      if (n_veh >= ring_cells / 2) continue;
      const Network ring = generate_ring(ring_cells, 1);
      const RingMap map(ring);
      std::set<int> cells;
      std::uint64_t k = 0;
      while (static_cast<int>(cells.size()) < n_veh)
        cells.insert(static_cast<int>(
            rng::below(ring_cells, 99, ring_cells, n_veh, k++)));
      std::vector<int> cell_list(cells.begin(), cells.end());

      SimState s = make_full_state(ring, ring_plans_at(ring, map, cell_list),
                                   no_brake());
      FlatRingOracle oracle;
      oracle.cells = ring_cells;
      for (std::size_t i = 0; i < cell_list.size(); ++i) {
        oracle.pos[static_cast<int>(i)] = cell_list[i];
        oracle.vel[static_cast<int>(i)] = 0;
      }

      for (int t = 0; t < 100; ++t) {
        single_domain_step(s);
        oracle.step();
        const auto pos = global_positions(s, ring, map);
        REQUIRE(pos.size() == oracle.pos.size());
        for (const auto& [vid, p] : oracle.pos) {
          REQUIRE(pos.at(vid) == p);
          REQUIRE(s.vehicles.at(vid).velocity == oracle.vel.at(vid));
        }
      }
    }
  }
}

TEST_CASE("random braking keeps bounds, consistency and vehicle count") {
  const Network ring = generate_ring(60, 1);
  const RingMap map(ring);
  std::vector<int> cells;
  for (int i = 0; i < 20; ++i) cells.push_back(i * 3);
  SimConfig cfg;
  cfg.p_brake = 0.3;
  cfg.seed = 7;
  SimState s = make_full_state(ring, ring_plans_at(ring, map, cells), cfg);
  for (int t = 0; t < 200; ++t) {
    single_domain_step(s);
    check_grid_consistency(s);
    CHECK(s.vehicles.size() == 20);
    for (const auto& [vid, v] : s.vehicles) {
      CHECK(v.velocity >= 0);
      CHECK(v.velocity <= 5);
    }
  }
}

TEST_CASE("determinism: identical seeds give identical trajectories") {
  const Network ring = generate_ring(80, 1);
  const RingMap map(ring);
  std::vector<int> cells;
  for (int i = 0; i < 15; ++i) cells.push_back(i * 5);
  SimConfig cfg;
  cfg.p_brake = 0.25;
  cfg.seed = 1234;
  SimState a = make_full_state(ring, ring_plans_at(ring, map, cells), cfg);
  SimState b = make_full_state(ring, ring_plans_at(ring, map, cells), cfg);
  for (int t = 0; t < 100; ++t) {
    single_domain_step(a);
    single_domain_step(b);
    const auto ra = collect_rows(a);
    const auto rb = collect_rows(b);
    REQUIRE(digest_rows(ra, a.clock.time) == digest_rows(rb, b.clock.time));
  }
}

TEST_CASE("interaction locality: a perturbation 6+ cells away has no one-step effect") {
  const Network ring = generate_ring(100, 1);
  const RingMap map(ring);
  SimState a = make_full_state(ring, ring_plans_at(ring, map, {10, 40}), no_brake());
  SimState b = make_full_state(ring, ring_plans_at(ring, map, {10, 41}), no_brake());
  single_domain_step(a);
  single_domain_step(b);
  CHECK(global_positions(a, ring, map).at(0) ==
        global_positions(b, ring, map).at(0));
  CHECK(a.vehicles.at(0).velocity == b.vehicles.at(0).velocity);
}

TEST_CASE("signals: red places a virtual blocker past the last cell") {
  Network net;
  net.add_node(0, 0, 0);
  net.add_node(1, 150, 0);
  net.add_node(2, 300, 0);
  net.add_link(0, 0, 1, 150, 1, 5); // 20 cells
  net.add_link(1, 1, 2, 150, 1, 5);
  net.add_turn({1, 0, 1, TurnControl::Signal, 30, 30}); // red first
  net.finalize();

  Plan p;
  p.vehicle_id = 0;
  p.departure_s = 0;
  p.entry_cell = 17; // cells 18, 19 ahead of it
  p.route = {0, 1};

  SUBCASE("red phase clamps to the stop line") {
    SimState s = make_full_state(net, {p}, no_brake());
    lane_change_substep(s);
    inject_pending(s);
    set_velocity(s, 0, 3);
    move_substep(s);
    CHECK(s.vehicles.at(0).velocity == 2); // gap 2: blocker beyond cell 19
    CHECK(s.vehicles.at(0).cell == 19);
  }
  SUBCASE("green phase lets it exit the link") {
    SimState s = make_full_state(net, {p}, no_brake());
    s.clock.time = 30; // 30 % 60 >= 30: green
    lane_change_substep(s);
    inject_pending(s);
    set_velocity(s, 0, 3);
    move_substep(s);
    CHECK(net.links()[s.vehicles.at(0).link_idx].id == 1); // crossed the node
  }
  SUBCASE("phase flips at t=30 for a 30s red / 30s green signal") {
    const Turn* t = net.turn(0, 1);
    REQUIRE(t != nullptr);
    CHECK(signal_is_red(*t, 0));
    CHECK(signal_is_red(*t, 29));
    CHECK(!signal_is_red(*t, 30));
    CHECK(!signal_is_red(*t, 59));
    CHECK(signal_is_red(*t, 60)); // cycle repeats
  }
}

TEST_CASE("gap acceptance over an occupancy window") {
  std::vector<Cell> window(8, Cell{});
  CHECK(gap_acceptance(window, 5)); // empty priority street

  window[1].vid = 7; // vehicle 2 cells upstream of the conflict point
  CHECK(!gap_acceptance(window, 5));

  std::vector<Cell> window6(8, Cell{});
  window6[5].vid = 7; // vehicle 6 cells upstream
  CHECK(gap_acceptance(window6, 5));
}

TEST_CASE("injection and removal semantics") {
  Network net;
  net.add_node(0, 0, 0);
  net.add_node(1, 150, 0);
  net.add_link(0, 0, 1, 150, 1, 5); // 20 cells
  net.finalize();

  SUBCASE("vehicle appears at its departure time") {
    Plan p;
    p.vehicle_id = 0;
    p.departure_s = 10;
    p.entry_cell = 0;
    p.route = {0};
    SimState s = make_full_state(net, {p}, no_brake());
    for (int t = 0; t < 10; ++t) {
      single_domain_step(s); // steps simulating seconds 0..9
      CHECK(s.injected == 0);
    }
    single_domain_step(s); // the step simulating second 10 injects
    CHECK(s.injected == 1);
  }

  SUBCASE("occupied entry cell retries next step") {
    Plan a;
    a.vehicle_id = 0;
    a.departure_s = 10;
    a.entry_cell = 5;
    a.route = {0};
    Plan b = a;
    b.vehicle_id = 1;
    SimState s = make_full_state(net, {a, b}, no_brake());
    for (int t = 0; t <= 10; ++t) single_domain_step(s);
    CHECK(s.injected == 1); // only one fits at t=10
    single_domain_step(s);
    CHECK(s.injected == 2); // first moved off; second follows at t=11
  }

  SUBCASE("reaching the final cell of the last link removes the vehicle") {
    Plan p;
    p.vehicle_id = 0;
    p.departure_s = 0;
    p.entry_cell = 15;
    p.route = {0};
    SimState s = make_full_state(net, {p}, no_brake());
    for (int t = 0; t < 6; ++t) single_domain_step(s);
    CHECK(s.exited == 1);
    CHECK(s.vehicles.empty());
  }
}

TEST_CASE("vehicle conservation across a whole run") {
  const Network g = generate_grid(4, 4, 75.0, 1);
  std::vector<Plan> plans = generate_random_plans(g, 60, 50, 5);
  SimConfig cfg;
  cfg.p_brake = 0.2;
  cfg.seed = 5;
  SimState s = make_full_state(g, plans, cfg);
  for (int t = 0; t < 600; ++t) {
    single_domain_step(s);
    check_grid_consistency(s);
    const auto driving = static_cast<std::int64_t>(s.vehicles.size());
    const auto waiting = static_cast<std::int64_t>(s.pending.size());
    CHECK(s.injected == driving + s.exited);
    CHECK(s.injected + waiting == 60);
  }
  CHECK(s.exited == 60); // everyone arrives eventually on an open grid
}

TEST_CASE("lane changing: turn-motivated move toward the required lane") {
  // Left turn ahead; a vehicle in the right lane with a clear target
  // neighbourhood slides left without advancing.
  Network net;
  net.add_node(0, -75, 0);
  net.add_node(1, 0, 0);
  net.add_node(2, 0, 75); // left-turn target
  net.add_link(0, 0, 1, 75, 2, 5); // 10 cells, 2 lanes
  net.add_link(1, 1, 2, 75, 1, 5);
  net.finalize();
  REQUIRE(net.classify_turn(0, 1) == TurnDir::Left);

  Plan p;
  p.vehicle_id = 0;
  p.departure_s = 0;
  p.entry_cell = 3;
  p.route = {0, 1};
  SimState s = make_full_state(net, {p}, no_brake());
  inject_pending(s); // lands in lane 0 (rightmost)
  REQUIRE(s.vehicles.at(0).lane == 0);
  lane_change_substep(s);
  CHECK(s.vehicles.at(0).lane == 1); // the leftmost lane
  CHECK(s.vehicles.at(0).cell == 3); // same cell index
}

TEST_CASE("lane changing: the other lane is faster") {
  Network net;
  net.add_node(0, 0, 0);
  net.add_node(1, 225, 0);
  net.add_link(0, 0, 1, 225, 2, 5); // 30 cells, 2 lanes
  net.finalize();

  Plan mover;
  mover.vehicle_id = 0;
  mover.departure_s = 0;
  mover.entry_cell = 10;
  mover.route = {0};
  Plan blocker;
  blocker.vehicle_id = 1;
  blocker.departure_s = 0;
  blocker.entry_cell = 11;
  blocker.route = {0};
  SimState s = make_full_state(net, {mover, blocker}, no_brake());
  inject_pending(s);
  REQUIRE(s.vehicles.at(0).lane == 0);
  REQUIRE(s.vehicles.at(1).lane == 0);
  lane_change_substep(s);
  CHECK(s.vehicles.at(0).lane == 1); // gap 0 ahead, open lane next door
  CHECK(s.vehicles.at(0).cell == 10);
  CHECK(s.vehicles.at(1).lane == 0); // front vehicle had no reason to move
}

TEST_CASE("lane changing: single-lane links never change") {
  const Network ring = generate_ring(50, 1);
  const RingMap map(ring);
  SimState s = make_full_state(ring, ring_plans_at(ring, map, {0, 10, 20}),
                               no_brake());
  inject_pending(s);
  lane_change_substep(s);
  for (const auto& [vid, v] : s.vehicles) CHECK(v.lane == 0);
}

TEST_CASE("node crossings from two approaches serialize without collision") {
  Network net;
  net.add_node(0, -75, 0);
  net.add_node(1, -75, -75);
  net.add_node(2, 0, 0);
  net.add_node(3, 75, 0);
  net.add_link(0, 0, 2, 75, 1, 5); // approach A
  net.add_link(1, 1, 2, 75, 1, 5); // approach C
  net.add_link(2, 2, 3, 75, 1, 5); // outbound B
  net.finalize();

  Plan a;
  a.vehicle_id = 0;
  a.departure_s = 0;
  a.entry_cell = 8;
  a.route = {0, 2};
  Plan c = a;
  c.vehicle_id = 1;
  c.route = {1, 2};
  SimState s = make_full_state(net, {a, c}, no_brake());
  lane_change_substep(s);
  inject_pending(s);
  set_velocity(s, 0, 2);
  set_velocity(s, 1, 2);
  move_substep(s);
  // both aimed at cell 1 of link 2; the lower in-link id lands first
  const auto& va = s.vehicles.at(0);
  const auto& vc = s.vehicles.at(1);
  CHECK(net.links()[va.link_idx].id == 2);
  CHECK(net.links()[vc.link_idx].id == 2);
  CHECK(va.cell == 1);
  CHECK(vc.cell == 0);
  CHECK(va.velocity == 3);
  CHECK(vc.velocity == 2);
  check_grid_consistency(s);
}

TEST_CASE("no vehicle passes another within a lane") {
  const Network ring = generate_ring(40, 1);
  const RingMap map(ring);
  const std::vector<int> cells = {0, 2, 4, 6, 9, 12, 20, 30};
  SimConfig cfg;
  cfg.p_brake = 0.4;
  cfg.seed = 3;
  SimState s = make_full_state(ring, ring_plans_at(ring, map, cells), cfg);
  single_domain_step(s);
  auto prev = global_positions(s, ring, map);
  // cyclic successor by position must stay the same vehicle throughout
  auto successor_of = [&](const std::map<VehicleId, int>& pos, VehicleId vid) {
    int best = 1000;
    VehicleId out = -1;
    for (const auto& [ovid, op] : pos) {
      if (ovid == vid) continue;
      const int dist = (op - pos.at(vid) + 40) % 40;
      if (dist < best) {
        best = dist;
        out = ovid;
      }
    }
    return out;
  };
  std::map<VehicleId, VehicleId> succ0;
  for (const auto& [vid, p] : prev) succ0[vid] = successor_of(prev, vid);
  for (int t = 0; t < 150; ++t) {
    single_domain_step(s);
    auto cur = global_positions(s, ring, map);
    for (const auto& [vid, p] : cur)
      CHECK(successor_of(cur, vid) == succ0.at(vid));
  }
}
