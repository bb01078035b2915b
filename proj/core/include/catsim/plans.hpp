#pragma once

#include "catsim/ids.hpp"
#include "catsim/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace catsim {

struct Plan {
  VehicleId vehicle_id = 0;
  int departure_s = 0;
  int entry_cell = 0;                // cell index on the first route link
  std::vector<LinkId> route;         // ordered, consecutive links share a node
  bool circular = false;             // in-memory only: cursor wraps (ring runs)
};

/// Parses `vehicle_id departure_s entry_cell link_1 ... link_n` records.
std::vector<Plan> load_plans(const std::string& text);
std::vector<Plan> load_plans_file(const std::string& path);
std::string serialize_plans(const std::vector<Plan>& plans);
void save_plans_file(const std::vector<Plan>& plans, const std::string& path);

/// Checks route connectivity, entry cell bounds and id uniqueness against
/// the network. Throws UserError on the first violation.
void validate_plans(const std::vector<Plan>& plans, const Network& net);

/// Seeded random trips on a network: BFS shortest routes between distinct
/// nodes, departures uniform in [0, depart_window_s).
std::vector<Plan> generate_random_plans(const Network& net, int count,
                                        int depart_window_s,
                                        std::uint64_t seed);

} // namespace catsim
