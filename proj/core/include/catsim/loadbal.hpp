#pragma once

#include "catsim/network.hpp"
#include "catsim/partition.hpp"

#include <string>
#include <vector>

namespace catsim {

/// Accumulated per-element work of one or more completed runs.
struct LoadProfile {
  std::vector<double> link_work; // by link index
  std::vector<double> node_work; // by node index
  double total() const;
};

/// Parses (and accumulates over) per-element load files:
/// `L link_id work_units` / `N node_id work_units` lines. Elements may
/// repeat; their work adds up.
LoadProfile collect(const Network& net, const std::string& load_file_text);
LoadProfile collect_file(const Network& net, const std::string& path);

/// Merges b into a (additivity over runs).
void accumulate(LoadProfile& a, const LoadProfile& b);

struct WeightConversion {
  NodeWeights weights;
  double imputed_work = 0.0;  // work invented for elements missing data
  double floor_added = 0.0;   // weight added by the minimum-weight floor
};

/// Execution-time feedback: node weight = node work + half of each attached
/// link's work. Elements missing from the profile get the smallest positive
/// recorded work; each final node weight is floored at 1 so proportional
/// cuts never see zero-weight regions.
WeightConversion to_weights(const LoadProfile& profile, const Network& net);

/// First-iteration estimate: node weight = sum of attached half-link lengths.
NodeWeights length_weights(const Network& net);

} // namespace catsim
