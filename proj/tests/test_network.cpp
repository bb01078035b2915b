#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "catsim/errors.hpp"
#include "catsim/network.hpp"
#include "catsim/plans.hpp"

#include <queue>
#include <set>

using namespace catsim;

TEST_CASE("cell discretization") {
  CHECK(cells_for_length(75.0) == 10);
  CHECK(cells_for_length(7.5) == 1);
  CHECK(cells_for_length(1.0) == 1);   // minimum one cell
  CHECK(cells_for_length(11.0) == 1);  // rounds to nearest
  CHECK(cells_for_length(11.3) == 2);
  // discretized length never deviates by a full cell
  for (double len : {1.0, 7.4, 7.6, 74.0, 76.0, 99.9, 1000.3}) {
    const double diff = std::abs(cells_for_length(len) * 7.5 - len);
    CHECK(diff < 7.5);
  }
}

TEST_CASE("network file parsing") {
  const std::string text =
      "# test network\n"
      "NODES\n"
      "0 0 0\n"
      "1 75 0\n"
      "LINKS\n"
      "0 0 1 75.0 1 5\n"
      "1 1 0 7.5 2 3\n";
  const Network net = load_network(text);
  CHECK(net.nodes().size() == 2);
  CHECK(net.links().size() == 2);
  CHECK(net.link(0).cell_count == 10);
  CHECK(net.link(1).cell_count == 1);
  CHECK(net.link(1).lane_count == 2);
  CHECK(net.turn_allowed(0, 1)); // no TURNS section: everything allowed
}

TEST_CASE("network parse errors carry line numbers") {
  CHECK_THROWS_WITH_AS(load_network("NODES\n0 0 0\nLINKS\n0 0 9 75 1 5\n"),
                       doctest::Contains("dangling node reference"), UserError);
  CHECK_THROWS_WITH_AS(load_network("NODES\n0 0 0\n1 0 0\nLINKS\n0 0 1 -5 1 5\n"),
                       doctest::Contains("length"), UserError);
  CHECK_THROWS_WITH_AS(load_network("NODES\n0 0 zzz\n"),
                       doctest::Contains("line 2"), UserError);
  CHECK_THROWS_AS(load_network_file("/nonexistent/net.txt"), UserError);
}

TEST_CASE("network serialization round-trips") {
  Network net = generate_grid(3, 4, 75.0, 2);
  const std::string text = serialize_network(net);
  const Network again = load_network(text);
  CHECK(networks_equal(net, again));
  CHECK(serialize_network(again) == text);

  // with turns
  Network t;
  t.add_node(0, 0, 0);
  t.add_node(1, 75, 0);
  t.add_node(2, 150, 0);
  t.add_link(0, 0, 1, 75, 1, 5);
  t.add_link(1, 1, 2, 75, 1, 5);
  t.add_turn({1, 0, 1, TurnControl::Signal, 30, 30});
  t.finalize();
  const Network t2 = load_network(serialize_network(t));
  CHECK(networks_equal(t, t2));
  CHECK(t2.turn(0, 1)->red_s == 30);
}

TEST_CASE("grid generator counts") {
  const Network g22 = generate_grid(2, 2, 75.0, 1);
  CHECK(g22.nodes().size() == 4);
  CHECK(g22.links().size() == 8);

  const Network g33 = generate_grid(3, 3, 75.0, 1);
  CHECK(g33.nodes().size() == 9);
  CHECK(g33.links().size() == 24);

  const Network g = generate_grid(10, 10, 75.0, 2);
  CHECK(g.nodes().size() == 100);
  CHECK(g.links().size() == 360);
  // oracle: explicit edge enumeration
  int expected = 0;
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      if (c + 1 < 10) expected += 2;
      if (r + 1 < 10) expected += 2;
    }
  CHECK(static_cast<int>(g.links().size()) == expected);
}

TEST_CASE("grid is strongly connected") {
  const Network g = generate_grid(4, 5, 75.0, 1);
  // BFS over directed links from node 0 must reach everything
  std::set<NodeId> seen{0};
  std::queue<NodeId> q;
  q.push(0);
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    for (LinkId lid : g.out_links(g.node_index(u))) {
      const NodeId v = g.link(lid).to_node;
      if (seen.insert(v).second) q.push(v);
    }
  }
  CHECK(seen.size() == g.nodes().size());
}

TEST_CASE("ring generator") {
  const Network r1 = generate_ring(1000, 1);
  int cells = 0;
  for (const Link& l : r1.links()) {
    cells += l.cell_count;
    CHECK(l.lane_count == 1);
  }
  CHECK(cells == 1000);

  const Network r3 = generate_ring(1000, 3);
  for (const Link& l : r3.links()) CHECK(l.lane_count == 3);

  const Network tiny = generate_ring(10, 1);
  cells = 0;
  for (const Link& l : tiny.links()) cells += l.cell_count;
  CHECK(cells == 10);

  CHECK_THROWS_AS(generate_ring(9, 1), UserError);
}

TEST_CASE("plans round trip and validation") {
  const Network g = generate_grid(3, 3, 75.0, 1);
  std::vector<Plan> plans = generate_random_plans(g, 20, 100, 42);
  validate_plans(plans, g);
  const std::string text = serialize_plans(plans);
  const std::vector<Plan> again = load_plans(text);
  REQUIRE(again.size() == plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) {
    CHECK(again[i].vehicle_id == plans[i].vehicle_id);
    CHECK(again[i].departure_s == plans[i].departure_s);
    CHECK(again[i].route == plans[i].route);
  }

  Plan bad;
  bad.vehicle_id = 999;
  bad.departure_s = 0;
  bad.entry_cell = 0;
  bad.route = {0, 5}; // links 0 and 5 do not connect on this grid
  if (g.link(0).to_node != g.link(5).from_node)
    CHECK_THROWS_AS(validate_plans({bad}, g), UserError);
}

TEST_CASE("turn classification by geometry") {
  Network t;
  t.add_node(0, -75, 0);
  t.add_node(1, 0, 0);
  t.add_node(2, 75, 0);   // straight ahead
  t.add_node(3, 0, 75);   // left
  t.add_node(4, 0, -75);  // right
  t.add_link(0, 0, 1, 75, 1, 5);
  t.add_link(1, 1, 2, 75, 1, 5);
  t.add_link(2, 1, 3, 75, 1, 5);
  t.add_link(3, 1, 4, 75, 1, 5);
  t.finalize();
  CHECK(t.classify_turn(0, 1) == TurnDir::Straight);
  CHECK(t.classify_turn(0, 2) == TurnDir::Left);
  CHECK(t.classify_turn(0, 3) == TurnDir::Right);
}
