#pragma once

#include "catsim/ids.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace catsim {

struct Node {
  NodeId id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct Link {
  LinkId id = 0;
  NodeId from_node = 0;
  NodeId to_node = 0;
  double length_m = 0.0;
  int lane_count = 1;
  int v_max = kMaxVmax; // cells per step
  int cell_count = 1;   // round(length_m / 7.5), at least 1
};

enum class TurnControl : std::uint8_t { Uncontrolled, Stop, Signal };

struct Turn {
  NodeId node = 0;
  LinkId in_link = 0;
  LinkId out_link = 0;
  TurnControl control = TurnControl::Uncontrolled;
  // Signal phases in seconds; the cycle starts red at t = 0.
  int red_s = 0;
  int green_s = 0;
};

enum class TurnDir { Left, Straight, Right };

/// Immutable road network: nodes at planar coordinates, directed links
/// discretized into 7.5 m cells, per-(in,out) turn records at nodes.
/// Construct via the builder calls, then finalize(); all read accessors
/// are safe for concurrent use afterwards.
class Network {
public:
  void add_node(NodeId id, double x, double y);
  void add_link(LinkId id, NodeId from, NodeId to, double length_m, int lanes,
                int v_max);
  void add_turn(const Turn& t);

  /// Validates referential integrity and derived fields. Throws UserError
  /// with a description of the first violation found.
  void finalize();

  bool finalized() const { return finalized_; }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }

  std::size_t node_index(NodeId id) const;
  std::size_t link_index(LinkId id) const;
  bool has_node(NodeId id) const { return node_by_id_.count(id) != 0; }
  bool has_link(LinkId id) const { return link_by_id_.count(id) != 0; }

  const Node& node(NodeId id) const { return nodes_[node_index(id)]; }
  const Link& link(LinkId id) const { return links_[link_index(id)]; }

  /// Incident links by node index, sorted by link id.
  const std::vector<LinkId>& out_links(std::size_t node_idx) const {
    return out_links_[node_idx];
  }
  const std::vector<LinkId>& in_links(std::size_t node_idx) const {
    return in_links_[node_idx];
  }

  /// Turn lookup. A node with no turn records allows every (in,out) pair
  /// uncontrolled; a node with records allows exactly the listed pairs.
  bool turn_allowed(LinkId in, LinkId out) const;
  const Turn* turn(LinkId in, LinkId out) const;

  /// Whether the node at `node_idx` carries explicit turn records.
  bool node_has_turns(std::size_t node_idx) const;

  /// Geometric classification of the movement in -> out at their shared
  /// node (left of / right of / continuing the inbound heading).
  TurnDir classify_turn(LinkId in, LinkId out) const;

  double total_length_m() const;

private:
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Turn> turns_;
  std::unordered_map<NodeId, std::size_t> node_by_id_;
  std::unordered_map<LinkId, std::size_t> link_by_id_;
  std::unordered_map<std::uint64_t, std::size_t> turn_by_pair_;
  std::vector<std::vector<LinkId>> out_links_;
  std::vector<std::vector<LinkId>> in_links_;
  std::vector<bool> node_has_turns_;
  bool finalized_ = false;
};

/// Number of 7.5 m cells for a link of the given length: nearest integer,
/// clamped to at least one cell.
int cells_for_length(double length_m);

/// Parses the line-oriented network format (sections NODES / LINKS / TURNS,
/// `#` comments). Throws UserError with a line number on malformed input.
Network load_network(const std::string& text);
Network load_network_file(const std::string& path);

/// Serializes a network back to the file format; load_network of the result
/// reproduces an equal network.
std::string serialize_network(const Network& net);
void save_network_file(const Network& net, const std::string& path);

/// rows x cols lattice with bidirectional links between 4-neighbours.
/// Node ids are row*cols+col; coordinates sit on a link_length_m lattice.
Network generate_grid(int rows, int cols, double link_length_m, int lanes);

/// Closed loop totalling cell_count cells per lane, chained from several
/// links so it can be partitioned. cell_count >= 10.
Network generate_ring(int cell_count, int lanes);

bool networks_equal(const Network& a, const Network& b);

} // namespace catsim
