#include "catsim/validate.hpp"

#include "catsim/errors.hpp"
#include "catsim/loadbal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace catsim {

namespace {

Partition trivial_partition(const Network& net) {
  Partition part;
  part.p = 1;
  part.domain_of.assign(net.nodes().size(), 0);
  return part;
}

Partition partition_for(const Network& net, int p) {
  if (p <= 1) return trivial_partition(net);
  return orthogonal_bisection(net, length_weights(net), p);
}

int default_warmup(const ValidateConfig& cfg) {
  if (cfg.warmup_steps >= 0) return cfg.warmup_steps;
  return std::max(10 * cfg.ring_cells / kMaxVmax, 1000);
}

SimConfig sim_config(const ValidateConfig& cfg) {
  SimConfig sc;
  sc.p_brake = cfg.p_brake;
  sc.seed = cfg.seed;
  sc.stop_required_gap = cfg.stop_required_gap;
  return sc;
}

struct RingGeometry {
  std::vector<int> link_start; // global cell offset of each ring link
  int total_cells = 0;
};

RingGeometry ring_geometry(const Network& ring) {
  RingGeometry g;
  g.link_start.resize(ring.links().size());
  int cursor = 0;
  for (std::size_t i = 0; i < ring.links().size(); ++i) {
    g.link_start[i] = cursor;
    cursor += ring.links()[i].cell_count;
  }
  g.total_cells = cursor;
  return g;
}

} // namespace

std::vector<Plan> ring_plans(const Network& ring, int vehicle_count) {
  const RingGeometry geo = ring_geometry(ring);
  const int lanes = ring.links().front().lane_count;
  const int slots = geo.total_cells * lanes;
  if (vehicle_count > slots)
    throw UserError("ring_plans: more vehicles than cells");
  std::vector<Plan> plans;
  plans.reserve(vehicle_count);
  const int k = static_cast<int>(ring.links().size());
  for (int i = 0; i < vehicle_count; ++i) {
    const long long slot =
        static_cast<long long>(i) * slots / std::max(1, vehicle_count);
    const int cell = static_cast<int>(slot / lanes) % geo.total_cells;
    // find the link containing this global cell
    int li = k - 1;
    for (int j = 0; j < k; ++j)
      if (cell < geo.link_start[j] + ring.links()[j].cell_count) {
        li = j;
        break;
      }
    Plan p;
    p.vehicle_id = i;
    p.departure_s = 0;
    p.entry_cell = cell - geo.link_start[li];
    p.circular = true;
    for (int j = 0; j < k; ++j)
      p.route.push_back(ring.links()[(li + j) % k].id);
    plans.push_back(std::move(p));
  }
  return plans;
}

std::vector<FlowMeasurement> ring_diagram(int lanes,
                                          const std::vector<double>& densities,
                                          int steps, const ValidateConfig& cfg) {
  std::vector<FlowMeasurement> out;
  const Network ring = generate_ring(cfg.ring_cells, lanes);
  const int total_slots = cfg.ring_cells * lanes;
  const int warmup = default_warmup(cfg);

  for (double density : densities) {
    if (density < 0.0 || density > 1.0)
      throw UserError("ring_diagram: density must be in [0, 1]");
    const int n = static_cast<int>(std::lround(density * total_slots));
    FlowMeasurement m;
    m.lanes = lanes;
    m.window_steps = steps;
    m.density = static_cast<double>(n) / total_slots;
    if (n == 0) {
      out.push_back(m);
      continue;
    }
    EngineConfig ec;
    ec.sim = sim_config(cfg);
    Engine eng(ring, partition_for(ring, cfg.p), ring_plans(ring, n), ec);
    eng.run(warmup);
    long long speed_sum = 0;
    for (int t = 0; t < steps; ++t) {
      eng.step();
      for (const VehicleRow& r : eng.global_rows()) speed_sum += r.velocity;
    }
    m.mean_speed_cells =
        static_cast<double>(speed_sum) / (static_cast<double>(n) * steps);
    m.flow_vpcs = m.density * m.mean_speed_cells;
    m.flow_vph = m.flow_vpcs * 3600.0;
    out.push_back(m);
  }
  return out;
}

namespace {

// Counts vehicles entering `target_link`, split by the link they came from.
class EntryCounter {
public:
  explicit EntryCounter(LinkId target) : target_(target) {}

  void observe(const std::vector<VehicleRow>& rows) {
    for (const VehicleRow& r : rows) {
      auto it = prev_.find(r.id);
      if (it != prev_.end() && r.link == target_ && it->second != target_)
        counts_[it->second] += 1;
      prev_[r.id] = r.link;
    }
  }

  long long from(LinkId source) const {
    auto it = counts_.find(source);
    return it == counts_.end() ? 0 : it->second;
  }

  void reset_counts() { counts_.clear(); }

private:
  LinkId target_;
  std::unordered_map<VehicleId, LinkId> prev_;
  std::unordered_map<LinkId, long long> counts_;
};

} // namespace

std::vector<MergeRow> merge_capacity(const std::vector<double>& demand_levels,
                                     int steps, const ValidateConfig& cfg) {
  std::vector<MergeRow> out;
  const int warmup = cfg.warmup_steps >= 0 ? cfg.warmup_steps : 500;

  for (double demand : demand_levels) {
    MergeRow row;
    row.priority_demand_vps = demand;

    if (demand >= 1.0) {
      // Bumper-to-bumper priority street: a closed loop at density one, so
      // the jam never drains. No gap ever opens for the minor street.
      Network net;
      net.add_node(0, 0.0, 0.0);     // junction
      net.add_node(1, 300.0, 0.0);   // far side of the loop
      net.add_node(2, 0.0, -300.0);  // minor origin
      net.add_link(0, 0, 1, 300.0, 1, kMaxVmax); // loop forward (40 cells)
      net.add_link(1, 1, 0, 300.0, 1, kMaxVmax); // loop back
      net.add_link(2, 2, 0, 300.0, 1, kMaxVmax); // minor approach
      net.add_turn({0, 1, 0, TurnControl::Uncontrolled, 0, 0});
      net.add_turn({0, 2, 0, TurnControl::Stop, 0, 0});
      net.add_turn({1, 0, 1, TurnControl::Uncontrolled, 0, 0});
      net.finalize();

      const int loop_cells = net.link(0).cell_count + net.link(1).cell_count;
      std::vector<Plan> plans;
      for (int i = 0; i < loop_cells; ++i) {
        Plan p;
        p.vehicle_id = i;
        p.departure_s = 0;
        const int c0 = net.link(0).cell_count;
        p.circular = true;
        if (i < c0) {
          p.entry_cell = i;
          p.route = {0, 1};
        } else {
          p.entry_cell = i - c0;
          p.route = {1, 0};
        }
        plans.push_back(std::move(p));
      }
      for (int i = 0; i < steps; ++i) {
        Plan p;
        p.vehicle_id = loop_cells + i;
        p.departure_s = i;
        p.entry_cell = 0;
        p.route = {2, 0};
        plans.push_back(std::move(p));
      }
      EngineConfig ec;
      ec.sim = sim_config(cfg);
      Engine eng(net, partition_for(net, cfg.p), std::move(plans), ec);
      EntryCounter counter(0);
      eng.set_step_observer([&counter](Engine& e) { counter.observe(e.global_rows()); });
      eng.run(warmup);
      counter.reset_counts();
      eng.run(steps);
      row.priority_flow_vph = counter.from(1) * 3600.0 / steps;
      row.minor_flow_vph = counter.from(2) * 3600.0 / steps;
      out.push_back(row);
      continue;
    }

    // Open merge: major street A -> B (two lanes), stop-controlled minor C.
    Network net;
    net.add_node(0, -1125.0, 0.0); // major origin
    net.add_node(1, 0.0, 0.0);     // junction
    net.add_node(2, 1125.0, 0.0);  // sink side
    net.add_node(3, 0.0, -450.0);  // minor origin
    net.add_link(0, 0, 1, 1125.0, 1, kMaxVmax); // A, 150 cells
    net.add_link(1, 1, 2, 1125.0, 2, kMaxVmax); // B, 150 cells, 2 lanes
    net.add_link(2, 3, 1, 450.0, 1, kMaxVmax);  // C, 60 cells
    net.add_turn({1, 0, 1, TurnControl::Uncontrolled, 0, 0});
    net.add_turn({1, 2, 1, TurnControl::Stop, 0, 0});
    net.finalize();

    std::vector<Plan> plans;
    int vid = 0;
    if (demand > 0.0) {
      const int period = std::max(1, static_cast<int>(std::lround(1.0 / demand)));
      for (int t = 0; t * period < warmup + steps + 100; ++t) {
        Plan p;
        p.vehicle_id = vid++;
        p.departure_s = t * period;
        p.entry_cell = 0;
        p.route = {0, 1};
        plans.push_back(std::move(p));
      }
    }
    for (int t = 0; t < warmup + steps; ++t) {
      Plan p;
      p.vehicle_id = vid++;
      p.departure_s = t;
      p.entry_cell = 0;
      p.route = {2, 1};
      plans.push_back(std::move(p));
    }

    EngineConfig ec;
    ec.sim = sim_config(cfg);
    Engine eng(net, partition_for(net, cfg.p), std::move(plans), ec);
    EntryCounter counter(1);
    eng.set_step_observer([&counter](Engine& e) { counter.observe(e.global_rows()); });
    eng.run(warmup);
    counter.reset_counts();
    eng.run(steps);
    row.priority_flow_vph = counter.from(0) * 3600.0 / steps;
    row.minor_flow_vph = counter.from(2) * 3600.0 / steps;
    out.push_back(row);
  }
  return out;
}

namespace {

double measure_signal_vph(int red_s, int green_s, int steps,
                          const ValidateConfig& cfg) {
  Network net;
  net.add_node(0, -750.0, 0.0);
  net.add_node(1, 0.0, 0.0);
  net.add_node(2, 750.0, 0.0);
  net.add_link(0, 0, 1, 750.0, 1, kMaxVmax); // approach, 100 cells
  net.add_link(1, 1, 2, 750.0, 1, kMaxVmax); // departure
  if (red_s > 0)
    net.add_turn({1, 0, 1, TurnControl::Signal, red_s, green_s});
  net.finalize();

  const int warmup = cfg.warmup_steps >= 0 ? cfg.warmup_steps : 300;
  const int cycle = std::max(1, red_s + green_s);
  const int window = std::max(cycle, steps / cycle * cycle);

  std::vector<Plan> plans;
  for (int t = 0; t < warmup + window; ++t) {
    Plan p;
    p.vehicle_id = t;
    p.departure_s = t;
    p.entry_cell = 0;
    p.route = {0, 1};
    plans.push_back(std::move(p));
  }
  EngineConfig ec;
  ec.sim = sim_config(cfg);
  Engine eng(net, partition_for(net, cfg.p), std::move(plans), ec);
  EntryCounter counter(1);
  eng.set_step_observer([&counter](Engine& e) { counter.observe(e.global_rows()); });
  eng.run(warmup);
  counter.reset_counts();
  eng.run(window);
  return counter.from(0) * 3600.0 / window;
}

} // namespace

SignalResult signal_throughput(int red_s, int green_s, int steps,
                               const ValidateConfig& cfg) {
  if (red_s < 0 || green_s < 0 || red_s + green_s == 0)
    throw UserError("signal_throughput: cycle must be positive");
  SignalResult r;
  r.green_fraction = static_cast<double>(green_s) / (red_s + green_s);
  if (green_s == 0) {
    r.throughput_vph = 0.0; // never green; nothing ever crosses
  } else {
    r.throughput_vph = measure_signal_vph(red_s, green_s, steps, cfg);
  }
  r.saturation_vph = measure_signal_vph(0, 1, steps, cfg);
  return r;
}

LaneUsage lane_usage(int lanes, double density, int steps,
                     const ValidateConfig& cfg) {
  if (lanes < 2) throw UserError("lane_usage: needs at least 2 lanes");
  const Network ring = generate_ring(cfg.ring_cells, lanes);
  const int total_slots = cfg.ring_cells * lanes;
  const int n = static_cast<int>(std::lround(density * total_slots));
  const int warmup = default_warmup(cfg);

  EngineConfig ec;
  ec.sim = sim_config(cfg);
  Engine eng(ring, partition_for(ring, cfg.p), ring_plans(ring, n), ec);
  eng.run(warmup);

  std::vector<long long> speed_sum(lanes, 0), count(lanes, 0);
  for (int t = 0; t < steps; ++t) {
    eng.step();
    for (const VehicleRow& r : eng.global_rows()) {
      speed_sum[r.lane] += r.velocity;
      count[r.lane] += 1;
    }
  }

  LaneUsage u;
  long long all_speed = 0, all_count = 0;
  for (int l = 0; l < lanes; ++l) {
    LaneUsageRow row;
    row.lane = l;
    row.flow_vph = static_cast<double>(speed_sum[l]) /
                   (static_cast<double>(cfg.ring_cells) * steps) * 3600.0;
    row.mean_speed_cells =
        count[l] > 0 ? static_cast<double>(speed_sum[l]) / count[l] : 0.0;
    row.occupancy = static_cast<double>(count[l]) /
                    (static_cast<double>(cfg.ring_cells) * steps);
    u.per_lane.push_back(row);
    all_speed += speed_sum[l];
    all_count += count[l];
  }
  u.aggregate.lanes = lanes;
  u.aggregate.window_steps = steps;
  u.aggregate.density = static_cast<double>(n) / total_slots;
  u.aggregate.mean_speed_cells =
      all_count > 0 ? static_cast<double>(all_speed) / all_count : 0.0;
  u.aggregate.flow_vpcs = u.aggregate.density * u.aggregate.mean_speed_cells;
  u.aggregate.flow_vph = u.aggregate.flow_vpcs * 3600.0;
  return u;
}

std::string ring_diagram_csv(const std::vector<FlowMeasurement>& rows) {
  std::ostringstream os;
  os.precision(9);
  os << "density,flow_vph,flow_vpcs,mean_speed\n";
  for (const FlowMeasurement& m : rows)
    os << m.density << ',' << m.flow_vph << ',' << m.flow_vpcs << ','
       << m.mean_speed_cells << '\n';
  return os.str();
}

std::string merge_csv(const std::vector<MergeRow>& rows) {
  std::ostringstream os;
  os.precision(9);
  os << "priority_demand_vps,priority_flow_vph,minor_flow_vph\n";
  for (const MergeRow& r : rows)
    os << r.priority_demand_vps << ',' << r.priority_flow_vph << ','
       << r.minor_flow_vph << '\n';
  return os.str();
}

std::string signal_csv(const SignalResult& r) {
  std::ostringstream os;
  os.precision(9);
  os << "green_fraction,throughput_vph,saturation_vph\n";
  os << r.green_fraction << ',' << r.throughput_vph << ',' << r.saturation_vph
     << '\n';
  return os.str();
}

std::string lane_usage_csv(const LaneUsage& u) {
  std::ostringstream os;
  os.precision(9);
  os << "lane,flow_vph,mean_speed,occupancy\n";
  for (const LaneUsageRow& r : u.per_lane)
    os << r.lane << ',' << r.flow_vph << ',' << r.mean_speed_cells << ','
       << r.occupancy << '\n';
  return os.str();
}

std::string manifest_text(const std::vector<std::string>& files,
                          std::uint64_t seed) {
  std::ostringstream os;
  os << "seed=" << seed << '\n';
  for (const std::string& f : files) os << f << '\n';
  return os.str();
}

} // namespace catsim
