#pragma once

#include "catsim/ids.hpp"
#include "catsim/network.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace catsim {

/// Node weights by node index (same order as Network::nodes()).
using NodeWeights = std::vector<double>;

struct Partition {
  int p = 1;
  std::vector<DomainId> domain_of;  // by node index
  std::vector<LinkId> split_links;  // links with endpoints in two domains, sorted
};

struct PartitionMetrics {
  int n_spl = 0;
  double e_dmn = 1.0; // (total load / p) / max domain load
  double max_load = 0.0;
  double mean_neighbors = 0.0;
  std::vector<double> domain_load;
  std::vector<int> neighbor_count;
};

/// Derives the split-link set from a node->domain assignment.
std::vector<LinkId> derive_split_links(const Network& net,
                                       const std::vector<DomainId>& domain_of);

/// Orthogonal recursive bisection: alternating vertical/horizontal cut lines
/// through the node cloud, the heaviest piece cut next, proportional load
/// targets when a piece must yield an odd number of domains.
Partition orthogonal_bisection(const Network& net, const NodeWeights& weights,
                               int p);

/// Multilevel partitioning: coarsen by random matching, partition the
/// coarsest graph by greedy growing, refine boundary nodes at every
/// uncoarsening level. Recursive bisection down to p parts.
Partition multilevel_partition(const Network& net, const NodeWeights& weights,
                               int p, std::uint64_t seed);

PartitionMetrics compute_metrics(const Network& net, const Partition& part,
                                 const NodeWeights& weights);

struct SplitFit {
  double amplitude = 0.0; // A in A * p^alpha (- A when offset_form)
  double exponent = 0.0;
  bool offset_form = false;
  double rel_residual = 0.0;
};

/// Least-squares power-law fit of split-link counts against p. Fits both
/// A*p^alpha and the zero-intercept form A*p^alpha - A and returns the one
/// with the smaller residual.
SplitFit fit_split_scaling(const std::vector<std::pair<int, double>>& samples);

double eval_split_fit(const SplitFit& fit, double p);

// --- file formats ---

/// `node_id domain_index` lines.
std::string serialize_partition(const Network& net, const Partition& part);
Partition load_partition(const Network& net, const std::string& text);
void save_partition_file(const Network& net, const Partition& part,
                         const std::string& path);
Partition load_partition_file(const Network& net, const std::string& path);

/// `node_id weight` lines.
std::string serialize_weights(const Network& net, const NodeWeights& w);
NodeWeights load_weights(const Network& net, const std::string& text);
void save_weights_file(const Network& net, const NodeWeights& w,
                       const std::string& path);
NodeWeights load_weights_file(const Network& net, const std::string& path);

} // namespace catsim
