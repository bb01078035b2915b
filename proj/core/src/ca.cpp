#include "catsim/ca.hpp"

#include "catsim/errors.hpp"
#include "catsim/rng.hpp"

#include <algorithm>
#include <cassert>
#include <map>

namespace catsim {

namespace {

constexpr std::uint64_t kBrakeStream = 1;

struct LaneBand {
  int lo, hi;
};

bool is_last_link(const Plan& p, int route_pos) {
  return !p.circular &&
         route_pos + 1 == static_cast<int>(p.route.size());
}

LinkId next_link_id(const Plan& p, int route_pos) {
  return p.route[(route_pos + 1) % p.route.size()];
}

// Lanes a vehicle may exit from for the movement cur -> next; lane 0 is the
// rightmost. Left turns leave from the leftmost lane, right turns from the
// rightmost, straight movements from anywhere.
LaneBand allowed_exit_lanes(const Network& net, const Link& cur, LinkId next) {
  switch (net.classify_turn(cur.id, next)) {
    case TurnDir::Left: return {cur.lane_count - 1, cur.lane_count - 1};
    case TurnDir::Right: return {0, 0};
    case TurnDir::Straight: break;
  }
  return {0, cur.lane_count - 1};
}

// Empty cells directly ahead within the link, capped at `limit`; cells past
// the link end count as empty (the caller deals with the exit separately).
int within_forward_gap(const LinkView& lv, int lane, int cell, int limit) {
  int g = 0;
  while (g < limit) {
    const int k = cell + 1 + g;
    if (k <= lv.cell_count - 1 && lv.at(lane, k).vid != kNoVehicle) break;
    ++g;
  }
  return g;
}

// Empty cells directly behind within the link, capped at `limit`; cells
// before the link start count as empty.
int within_backward_gap(const LinkView& lv, int lane, int cell, int limit) {
  int g = 0;
  while (g < limit) {
    const int k = cell - 1 - g;
    if (k >= 0 && lv.at(lane, k).vid != kNoVehicle) break;
    ++g;
  }
  return g;
}

enum class ExitKind { Blocked, Open, Arrive };

// Whether the link end is passable for this vehicle at the current time:
// arrival on the last route link, an open turn, or blocked (red signal,
// rejected gap, wrong lane). Pure over the pre-substep state.
ExitKind exit_kind(const SimState& s, const VehicleState& v, int lane) {
  const Plan& plan = s.plans[v.plan_idx];
  if (is_last_link(plan, v.route_pos)) return ExitKind::Arrive;
  const Link& cur = s.net->links()[v.link_idx];
  const LinkId next = next_link_id(plan, v.route_pos);
  if (!s.net->turn_allowed(cur.id, next)) return ExitKind::Blocked;
  const LaneBand band = allowed_exit_lanes(*s.net, cur, next);
  if (lane < band.lo || lane > band.hi) return ExitKind::Blocked;
  const Turn* t = s.net->turn(cur.id, next);
  if (t == nullptr || t->control == TurnControl::Uncontrolled)
    return ExitKind::Open;
  if (t->control == TurnControl::Signal)
    return signal_is_red(*t, s.clock.time) ? ExitKind::Blocked : ExitKind::Open;

  // Stop / yield: need an acceptable gap on every priority approach.
  const int required = std::clamp(s.cfg.stop_required_gap, 1, kInteractionRange);
  const std::size_t node_idx = s.net->node_index(cur.to_node);
  for (LinkId in : s.net->in_links(node_idx)) {
    if (in == cur.id) continue;
    bool priority = false;
    for (LinkId out : s.net->out_links(node_idx)) {
      if (!s.net->turn_allowed(in, out)) continue;
      const Turn* pt = s.net->turn(in, out);
      if (pt == nullptr || pt->control != TurnControl::Stop) {
        priority = true;
        break;
      }
    }
    if (!priority) continue;
    const LinkView* plv = s.view(s.net->link_index(in));
    if (plv == nullptr)
      throw InternalError("stop turn: priority approach not in domain view");
    const int n = plv->cell_count;
    for (int pl = 0; pl < plv->lanes; ++pl)
      for (int k = 1; k <= std::min(required, n); ++k)
        if (plv->at(pl, n - k).vid != kNoVehicle) return ExitKind::Blocked;
  }
  return ExitKind::Open;
}

struct PathGap {
  int gap;        // maximum advance in cells, through at most one node
  bool open_exit; // meaningful only when the scan reached the link end
};

// Forward gap along the vehicle's route in `lane`: empty cells on the
// current link, then (if the exit is open) the empty head of the next link.
// Capped at `limit` cells and at the end of the next link.
PathGap forward_path_gap(const SimState& s, const VehicleState& v, int limit,
                         int lane) {
  const LinkView& lv = *s.view(v.link_idx);
  const int n = lv.cell_count;
  const int d_end = n - 1 - v.cell;
  const int steps = std::min(limit, d_end);
  for (int k = 1; k <= steps; ++k)
    if (lv.at(lane, v.cell + k).vid != kNoVehicle) return {k - 1, false};
  if (limit <= d_end) return {limit, false};

  switch (exit_kind(s, v, lane)) {
    case ExitKind::Blocked: return {d_end, false};
    case ExitKind::Arrive: return {limit, true};
    case ExitKind::Open: break;
  }
  const Plan& plan = s.plans[v.plan_idx];
  const LinkView* nv = s.view(s.net->link_index(next_link_id(plan, v.route_pos)));
  if (nv == nullptr) throw InternalError("open exit: next link not in view");
  const int entry_lane = std::min(lane, nv->lanes - 1);
  const int extra = std::min(limit - d_end, nv->cell_count);
  int q = 0;
  while (q < extra && nv->at(entry_lane, q).vid == kNoVehicle) ++q;
  return {d_end + q, true};
}

} // namespace

bool signal_is_red(const Turn& turn, int time) {
  const int cycle = turn.red_s + turn.green_s;
  if (cycle <= 0) return false;
  return time % cycle < turn.red_s;
}

bool gap_acceptance(std::span<const Cell> upstream_window, int required_gap) {
  const int n = std::min<int>(required_gap, upstream_window.size());
  for (int i = 0; i < n; ++i)
    if (upstream_window[i].vid != kNoVehicle) return false;
  return true;
}

SimState make_full_state(const Network& net, std::vector<Plan> plans,
                         const SimConfig& cfg) {
  SimState s;
  s.net = &net;
  s.cfg = cfg;
  s.plans = std::move(plans);
  s.view_of_link.assign(net.links().size(), -1);
  s.views.reserve(net.links().size());
  for (std::size_t i = 0; i < net.links().size(); ++i) {
    const Link& l = net.links()[i];
    LinkView lv;
    lv.link_idx = i;
    lv.lanes = l.lane_count;
    lv.cell_count = l.cell_count;
    lv.own_begin = 0;
    lv.own_end = l.cell_count;
    lv.view_begin = 0;
    lv.view_end = l.cell_count;
    lv.cells.assign(static_cast<std::size_t>(l.lane_count) * l.cell_count, Cell{});
    s.view_of_link[i] = static_cast<int>(s.views.size());
    s.views.push_back(std::move(lv));
  }
  s.pending.resize(s.plans.size());
  for (std::size_t i = 0; i < s.plans.size(); ++i) s.pending[i] = static_cast<int>(i);
  std::sort(s.pending.begin(), s.pending.end(), [&](int a, int b) {
    const Plan &pa = s.plans[a], &pb = s.plans[b];
    if (pa.departure_s != pb.departure_s) return pa.departure_s < pb.departure_s;
    return pa.vehicle_id < pb.vehicle_id;
  });
  s.link_work.assign(net.links().size(), 0);
  s.node_work.assign(net.nodes().size(), 0);
  return s;
}

void lane_change_substep(SimState& s) {
  if (s.clock.sub_step != SubStep::LaneChange)
    throw InternalError("lane_change_substep: wrong sub-step");

  struct LcMove {
    VehicleId vid;
    std::size_t link_idx;
    int cell, from_lane, to_lane;
  };
  std::vector<LcMove> moves;

  for (const auto& [vid, v] : s.vehicles) {
    const Link& L = s.net->links()[v.link_idx];
    s.link_work[v.link_idx] += 1;
    s.step_work += 1;
    if (L.lane_count == 1) continue;
    const LinkView& lv = *s.view(v.link_idx);
    const Plan& plan = s.plans[v.plan_idx];

    LaneBand band{0, L.lane_count - 1};
    if (!is_last_link(plan, v.route_pos))
      band = allowed_exit_lanes(*s.net, L, next_link_id(plan, v.route_pos));

    int target = -1;
    if (v.lane < band.lo || v.lane > band.hi) {
      // Getting into the turn lane; the accepted gap shrinks as the link
      // end approaches.
      const int tgt = v.lane + (v.lane < band.lo ? 1 : -1);
      const int d = L.cell_count - 1 - v.cell;
      const int f_base = std::min(v.velocity + 1, kInteractionRange);
      const int b_base = L.v_max;
      int f_req = f_base, b_req = b_base;
      if (d < 10) {
        f_req = std::max(1, (f_base * d + 9) / 10);
        b_req = std::max(1, (b_base * d + 9) / 10);
      }
      if (lv.at(tgt, v.cell).vid == kNoVehicle &&
          within_forward_gap(lv, tgt, v.cell, f_req) >= f_req &&
          within_backward_gap(lv, tgt, v.cell, b_req) >= b_req)
        target = tgt;
    } else {
      // The other lane is faster: current progress is limited and the
      // target lane offers strictly more room.
      const int g_cur = forward_path_gap(s, v, kInteractionRange, v.lane).gap;
      if (g_cur < v.velocity + 1) {
        int best_gap = g_cur;
        for (int tgt : {v.lane - 1, v.lane + 1}) {
          if (tgt < band.lo || tgt > band.hi) continue;
          if (lv.at(tgt, v.cell).vid != kNoVehicle) continue;
          if (within_backward_gap(lv, tgt, v.cell, L.v_max) < L.v_max) continue;
          const int g_tgt = forward_path_gap(s, v, kInteractionRange, tgt).gap;
          if (g_tgt > best_gap) {
            best_gap = g_tgt;
            target = tgt;
          }
        }
      }
    }
    if (target >= 0)
      moves.push_back({vid, v.link_idx, v.cell, v.lane, target});
  }

  // First claimant (vehicle id order) wins a contested target cell.
  std::map<std::tuple<std::size_t, int, int>, VehicleId> claims;
  for (const LcMove& m : moves) {
    auto [it, fresh] =
        claims.emplace(std::make_tuple(m.link_idx, m.cell, m.to_lane), m.vid);
    if (!fresh) continue;
    LinkView& lv = *s.view(m.link_idx);
    VehicleState& v = s.vehicles.at(m.vid);
    lv.at(m.from_lane, m.cell) = Cell{};
    lv.at(m.to_lane, m.cell) = Cell{m.vid, static_cast<std::int8_t>(v.velocity)};
    v.lane = m.to_lane;
  }

  s.clock.sub_step = SubStep::Move;
}

void inject_pending(SimState& s) {
  std::vector<int> still;
  still.reserve(s.pending.size());
  for (std::size_t i = 0; i < s.pending.size(); ++i) {
    const int idx = s.pending[i];
    const Plan& p = s.plans[idx];
    if (p.departure_s > s.clock.time) {
      // pending is sorted by departure; the rest is not due yet
      still.insert(still.end(), s.pending.begin() + i, s.pending.end());
      break;
    }
    LinkView* lv = s.view(s.net->link_index(p.route.front()));
    if (lv == nullptr || !lv->owns(p.entry_cell))
      throw InternalError("plan assigned to a domain that does not own its entry cell");
    int lane = -1;
    for (int l = 0; l < lv->lanes; ++l)
      if (lv->at(l, p.entry_cell).vid == kNoVehicle) {
        lane = l;
        break;
      }
    if (lane < 0) {
      still.push_back(idx); // entry occupied; retry next step
      continue;
    }
    VehicleState v;
    v.id = p.vehicle_id;
    v.velocity = 0;
    v.link_idx = s.net->link_index(p.route.front());
    v.lane = lane;
    v.cell = p.entry_cell;
    v.plan_idx = idx;
    v.route_pos = 0;
    lv->at(lane, p.entry_cell) = Cell{v.id, 0};
    s.vehicles.emplace(v.id, v);
    s.injected += 1;
  }
  s.pending = std::move(still);
}

void move_substep(SimState& s) {
  if (s.clock.sub_step != SubStep::Move)
    throw InternalError("move_substep: wrong sub-step");

  enum class Kind { Within, Arrive, Cross };
  struct Decision {
    VehicleId vid;
    Kind kind;
    int v_new;
    int overshoot; // Cross only
  };
  std::vector<Decision> decisions;
  decisions.reserve(s.vehicles.size());

  // Phase A: synchronous decisions over the pre-substep state.
  for (const auto& [vid, v] : s.vehicles) {
    const Link& L = s.net->links()[v.link_idx];
    s.link_work[v.link_idx] += 1;
    s.step_work += 1;
    const int v1 = std::min(v.velocity + 1, L.v_max);
    const PathGap pg = forward_path_gap(s, v, v1, v.lane);
    int v2 = std::min(v1, pg.gap);
    if (s.cfg.p_brake > 0.0 &&
        rng::uniform01(s.cfg.seed, static_cast<std::uint64_t>(vid),
                       static_cast<std::uint64_t>(s.clock.time),
                       kBrakeStream) < s.cfg.p_brake)
      v2 = std::max(v2 - 1, 0);
    const int target = v.cell + v2;
    const Plan& plan = s.plans[v.plan_idx];
    Decision d{vid, Kind::Within, v2, 0};
    if (is_last_link(plan, v.route_pos) && target >= L.cell_count - 1)
      d.kind = Kind::Arrive;
    else if (target <= L.cell_count - 1)
      d.kind = Kind::Within;
    else {
      d.kind = Kind::Cross;
      d.overshoot = target - L.cell_count;
    }
    decisions.push_back(d);
  }

  // Phase B: apply within-link moves and arrivals.
  for (const Decision& d : decisions) {
    VehicleState& v = s.vehicles.at(d.vid);
    LinkView& lv = *s.view(v.link_idx);
    switch (d.kind) {
      case Kind::Arrive:
        lv.at(v.lane, v.cell) = Cell{};
        s.vehicles.erase(d.vid);
        s.exited += 1;
        break;
      case Kind::Within: {
        lv.at(v.lane, v.cell) = Cell{};
        v.velocity = d.v_new;
        v.cell += d.v_new;
        lv.at(v.lane, v.cell) = Cell{v.id, static_cast<std::int8_t>(v.velocity)};
        if (!lv.owns(v.cell)) {
          // crossed the domain cut; hand over to the downstream owner
          s.outbox.push_back({v, s.plans[v.plan_idx]});
          s.vehicles.erase(d.vid);
        }
        break;
      }
      case Kind::Cross:
        break; // handled per node below
    }
  }

  // Phase C: node crossings, serialized per node in (link, lane) order.
  struct Candidate {
    std::size_t node_idx;
    LinkId in_link;
    int lane;
    VehicleId vid;
    int overshoot;
  };
  std::vector<Candidate> cands;
  for (const Decision& d : decisions) {
    if (d.kind != Kind::Cross) continue;
    const VehicleState& v = s.vehicles.at(d.vid);
    const Link& L = s.net->links()[v.link_idx];
    cands.push_back(
        {s.net->node_index(L.to_node), L.id, v.lane, d.vid, d.overshoot});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.node_idx != b.node_idx) return a.node_idx < b.node_idx;
    if (a.in_link != b.in_link) return a.in_link < b.in_link;
    return a.lane < b.lane;
  });

  std::map<std::pair<std::size_t, int>, std::uint32_t> entry_claims;
  for (const Candidate& c : cands) {
    VehicleState v = s.vehicles.at(c.vid);
    const Link& cur = s.net->links()[v.link_idx];
    const Plan& plan = s.plans[v.plan_idx];
    const int next_pos =
        (v.route_pos + 1) % static_cast<int>(plan.route.size());
    const std::size_t next_idx = s.net->link_index(next_link_id(plan, v.route_pos));
    LinkView& nv = *s.view(next_idx);
    const int entry_lane = std::min(v.lane, nv.lanes - 1);
    const int d_end = cur.cell_count - 1 - v.cell;

    std::uint32_t& mask = entry_claims[{next_idx, entry_lane}];
    int landing = -1;
    for (int k = 0; k <= c.overshoot; ++k) {
      if (mask & (1u << k)) break;
      landing = k;
    }
    s.node_work[c.node_idx] += 1;
    s.step_work += 1;

    LinkView& lv = *s.view(v.link_idx);
    if (landing < 0) {
      // the far side filled up this step; stop at the end of the link
      lv.at(v.lane, v.cell) = Cell{};
      VehicleState& ref = s.vehicles.at(c.vid);
      ref.velocity = d_end;
      ref.cell = cur.cell_count - 1;
      lv.at(ref.lane, ref.cell) =
          Cell{ref.id, static_cast<std::int8_t>(ref.velocity)};
      continue;
    }

    mask |= 1u << landing;
    lv.at(v.lane, v.cell) = Cell{};
    s.vehicles.erase(c.vid);

    const Plan& np = plan;
    if (is_last_link(np, next_pos) && landing >= nv.cell_count - 1) {
      s.exited += 1; // crossed straight onto the final cell of the last link
      continue;
    }
    v.velocity = d_end + 1 + landing;
    v.link_idx = next_idx;
    v.lane = entry_lane;
    v.cell = landing;
    v.route_pos = next_pos;
    nv.at(v.lane, v.cell) = Cell{v.id, static_cast<std::int8_t>(v.velocity)};
    if (nv.owns(v.cell))
      s.vehicles.emplace(v.id, v);
    else
      s.outbox.push_back({v, s.plans[v.plan_idx]});
  }
}

void single_domain_step(SimState& s) {
  lane_change_substep(s);
  inject_pending(s);
  move_substep(s);
  if (!s.outbox.empty())
    throw InternalError("single-domain step produced migrants");
  s.clock.time += 1;
  s.clock.sub_step = SubStep::LaneChange;
}

std::vector<VehicleRow> collect_rows(const SimState& s) {
  std::vector<VehicleRow> rows;
  rows.reserve(s.vehicles.size());
  for (const auto& [vid, v] : s.vehicles)
    rows.push_back({vid, s.net->links()[v.link_idx].id, v.lane, v.cell,
                    v.velocity});
  return rows;
}

std::uint64_t digest_rows(std::span<const VehicleRow> rows, int time) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ull;
  };
  mix(static_cast<std::uint64_t>(time));
  for (const VehicleRow& r : rows) {
    mix(static_cast<std::uint64_t>(r.id));
    mix(static_cast<std::uint64_t>(r.link));
    mix(static_cast<std::uint64_t>(r.lane));
    mix(static_cast<std::uint64_t>(r.cell));
    mix(static_cast<std::uint64_t>(r.velocity));
  }
  return h;
}

void check_grid_consistency(const SimState& s) {
  std::size_t occupied = 0;
  for (const LinkView& lv : s.views) {
    for (int lane = 0; lane < lv.lanes; ++lane)
      for (int cell = lv.own_begin; cell < lv.own_end; ++cell) {
        const Cell& c = lv.at(lane, cell);
        if (c.vid == kNoVehicle) continue;
        ++occupied;
        auto it = s.vehicles.find(c.vid);
        if (it == s.vehicles.end())
          throw InternalError("grid cell holds unknown vehicle");
        const VehicleState& v = it->second;
        if (v.link_idx != lv.link_idx || v.lane != lane || v.cell != cell ||
            v.velocity != c.velocity)
          throw InternalError("grid/registry mismatch");
      }
  }
  if (occupied != s.vehicles.size())
    throw InternalError("vehicle count mismatch between grid and registry");
}

} // namespace catsim
