#include "catsim/plans.hpp"

#include "catsim/errors.hpp"
#include "catsim/rng.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace catsim {

std::vector<Plan> load_plans(const std::string& text) {
  std::vector<Plan> plans;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) {
      if (t[0] == '#') break;
      tok.push_back(t);
    }
    if (tok.empty()) continue;
    if (tok.size() < 4)
      throw UserError("plans line " + std::to_string(line_no) +
                      ": expected `vehicle_id departure_s entry_cell link...`");
    try {
      Plan p;
      p.vehicle_id = std::stoi(tok[0]);
      p.departure_s = std::stoi(tok[1]);
      p.entry_cell = std::stoi(tok[2]);
      for (std::size_t i = 3; i < tok.size(); ++i)
        p.route.push_back(std::stoi(tok[i]));
      plans.push_back(std::move(p));
    } catch (const std::exception&) {
      throw UserError("plans line " + std::to_string(line_no) +
                      ": malformed number");
    }
  }
  return plans;
}

std::vector<Plan> load_plans_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("cannot open plans file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_plans(ss.str());
}

std::string serialize_plans(const std::vector<Plan>& plans) {
  std::ostringstream os;
  for (const Plan& p : plans) {
    os << p.vehicle_id << ' ' << p.departure_s << ' ' << p.entry_cell;
    for (LinkId l : p.route) os << ' ' << l;
    os << '\n';
  }
  return os.str();
}

void save_plans_file(const std::vector<Plan>& plans, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UserError("cannot write plans file: " + path);
  f << serialize_plans(plans);
}

void validate_plans(const std::vector<Plan>& plans, const Network& net) {
  std::unordered_set<VehicleId> seen;
  for (const Plan& p : plans) {
    if (!seen.insert(p.vehicle_id).second)
      throw UserError("duplicate vehicle id " + std::to_string(p.vehicle_id));
    if (p.departure_s < 0)
      throw UserError("vehicle " + std::to_string(p.vehicle_id) +
                      ": negative departure time");
    if (p.route.empty())
      throw UserError("vehicle " + std::to_string(p.vehicle_id) + ": empty route");
    for (std::size_t i = 0; i < p.route.size(); ++i) {
      if (!net.has_link(p.route[i]))
        throw UserError("vehicle " + std::to_string(p.vehicle_id) +
                        ": unknown link " + std::to_string(p.route[i]));
      if (i > 0 &&
          net.link(p.route[i - 1]).to_node != net.link(p.route[i]).from_node)
        throw UserError("vehicle " + std::to_string(p.vehicle_id) +
                        ": route links " + std::to_string(p.route[i - 1]) +
                        " and " + std::to_string(p.route[i]) +
                        " do not share a node");
    }
    if (p.circular && net.link(p.route.back()).to_node !=
                          net.link(p.route.front()).from_node)
      throw UserError("vehicle " + std::to_string(p.vehicle_id) +
                      ": circular route does not close");
    const Link& first = net.link(p.route.front());
    if (p.entry_cell < 0 || p.entry_cell >= first.cell_count)
      throw UserError("vehicle " + std::to_string(p.vehicle_id) +
                      ": entry cell out of range");
  }
}

namespace {

// BFS shortest path in links; ties broken by link id order.
std::vector<LinkId> shortest_route(const Network& net, NodeId from, NodeId to) {
  const std::size_t n = net.nodes().size();
  std::vector<LinkId> via_link(n, -1);
  std::vector<int> dist(n, -1);
  std::deque<std::size_t> queue;
  const std::size_t start = net.node_index(from);
  const std::size_t goal = net.node_index(to);
  dist[start] = 0;
  queue.push_back(start);
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    if (u == goal) break;
    for (LinkId lid : net.out_links(u)) {
      const std::size_t v = net.node_index(net.link(lid).to_node);
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        via_link[v] = lid;
        queue.push_back(v);
      }
    }
  }
  if (dist[goal] < 0) return {};
  std::vector<LinkId> route;
  std::size_t cur = goal;
  while (cur != start) {
    const LinkId lid = via_link[cur];
    route.push_back(lid);
    cur = net.node_index(net.link(lid).from_node);
  }
  std::reverse(route.begin(), route.end());
  return route;
}

} // namespace

std::vector<Plan> generate_random_plans(const Network& net, int count,
                                        int depart_window_s,
                                        std::uint64_t seed) {
  if (count < 0) throw UserError("plan count must be >= 0");
  const std::size_t n = net.nodes().size();
  if (n < 2) throw UserError("network too small for trips");
  std::vector<Plan> plans;
  plans.reserve(count);
  for (int i = 0; i < count; ++i) {
    // Deterministic draws keyed by (seed, plan index, attempt).
    std::vector<LinkId> route;
    for (std::uint64_t attempt = 0; route.empty() && attempt < 64; ++attempt) {
      const auto a = rng::below(n, seed, i, attempt, 101);
      auto b = rng::below(n - 1, seed, i, attempt, 202);
      if (b >= a) ++b;
      route = shortest_route(net, net.nodes()[a].id, net.nodes()[b].id);
    }
    if (route.empty())
      throw UserError("could not find a route; network may be disconnected");
    Plan p;
    p.vehicle_id = i;
    p.departure_s = depart_window_s > 0
                        ? static_cast<int>(rng::below(depart_window_s, seed, i, 0, 303))
                        : 0;
    p.entry_cell = 0;
    p.route = std::move(route);
    plans.push_back(std::move(p));
  }
  return plans;
}

} // namespace catsim
