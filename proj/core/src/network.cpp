#include "catsim/network.hpp"

#include "catsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace catsim {

namespace {

std::uint64_t pair_key(LinkId in, LinkId out) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(in)) << 32) |
         static_cast<std::uint32_t>(out);
}

} // namespace

int cells_for_length(double length_m) {
  const int n = static_cast<int>(std::lround(length_m / kCellLengthM));
  return std::max(1, n);
}

void Network::add_node(NodeId id, double x, double y) {
  if (finalized_) throw InternalError("add_node after finalize");
  nodes_.push_back(Node{id, x, y});
}

void Network::add_link(LinkId id, NodeId from, NodeId to, double length_m,
                       int lanes, int v_max) {
  if (finalized_) throw InternalError("add_link after finalize");
  Link l;
  l.id = id;
  l.from_node = from;
  l.to_node = to;
  l.length_m = length_m;
  l.lane_count = lanes;
  l.v_max = v_max;
  l.cell_count = cells_for_length(length_m);
  links_.push_back(l);
}

void Network::add_turn(const Turn& t) {
  if (finalized_) throw InternalError("add_turn after finalize");
  turns_.push_back(t);
}

void Network::finalize() {
  node_by_id_.clear();
  link_by_id_.clear();
  turn_by_pair_.clear();

  std::sort(nodes_.begin(), nodes_.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  std::sort(links_.begin(), links_.end(),
            [](const Link& a, const Link& b) { return a.id < b.id; });

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!std::isfinite(n.x) || !std::isfinite(n.y))
      throw UserError("node " + std::to_string(n.id) +
                      ": coordinates must be finite");
    if (!node_by_id_.emplace(n.id, i).second)
      throw UserError("duplicate node id " + std::to_string(n.id));
  }

  out_links_.assign(nodes_.size(), {});
  in_links_.assign(nodes_.size(), {});
  node_has_turns_.assign(nodes_.size(), false);

  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    if (!link_by_id_.emplace(l.id, i).second)
      throw UserError("duplicate link id " + std::to_string(l.id));
    if (l.length_m <= 0.0)
      throw UserError("link " + std::to_string(l.id) +
                      ": length must be positive");
    if (l.lane_count < 1)
      throw UserError("link " + std::to_string(l.id) + ": lane_count < 1");
    if (l.v_max < 1 || l.v_max > kMaxVmax)
      throw UserError("link " + std::to_string(l.id) + ": v_max must be in [1, " +
                      std::to_string(kMaxVmax) + "]");
    if (l.from_node == l.to_node)
      throw UserError("link " + std::to_string(l.id) + ": from_node == to_node");
    auto from_it = node_by_id_.find(l.from_node);
    auto to_it = node_by_id_.find(l.to_node);
    if (from_it == node_by_id_.end())
      throw UserError("link " + std::to_string(l.id) + ": dangling node reference " +
                      std::to_string(l.from_node));
    if (to_it == node_by_id_.end())
      throw UserError("link " + std::to_string(l.id) + ": dangling node reference " +
                      std::to_string(l.to_node));
    out_links_[from_it->second].push_back(l.id);
    in_links_[to_it->second].push_back(l.id);
  }
  for (auto& v : out_links_) std::sort(v.begin(), v.end());
  for (auto& v : in_links_) std::sort(v.begin(), v.end());

  for (std::size_t i = 0; i < turns_.size(); ++i) {
    const Turn& t = turns_[i];
    auto node_it = node_by_id_.find(t.node);
    if (node_it == node_by_id_.end())
      throw UserError("turn: dangling node reference " + std::to_string(t.node));
    auto in_it = link_by_id_.find(t.in_link);
    auto out_it = link_by_id_.find(t.out_link);
    if (in_it == link_by_id_.end() || out_it == link_by_id_.end())
      throw UserError("turn at node " + std::to_string(t.node) +
                      ": dangling link reference");
    if (links_[in_it->second].to_node != t.node ||
        links_[out_it->second].from_node != t.node)
      throw UserError("turn at node " + std::to_string(t.node) +
                      ": links not incident to the node");
    if (t.control == TurnControl::Signal && t.red_s + t.green_s <= 0)
      throw UserError("turn at node " + std::to_string(t.node) +
                      ": signal cycle must be positive");
    if (!turn_by_pair_.emplace(pair_key(t.in_link, t.out_link), i).second)
      throw UserError("duplicate turn record for links " +
                      std::to_string(t.in_link) + " -> " +
                      std::to_string(t.out_link));
    node_has_turns_[node_it->second] = true;
  }

  finalized_ = true;
}

std::size_t Network::node_index(NodeId id) const {
  auto it = node_by_id_.find(id);
  if (it == node_by_id_.end())
    throw UserError("unknown node id " + std::to_string(id));
  return it->second;
}

std::size_t Network::link_index(LinkId id) const {
  auto it = link_by_id_.find(id);
  if (it == link_by_id_.end())
    throw UserError("unknown link id " + std::to_string(id));
  return it->second;
}

bool Network::node_has_turns(std::size_t node_idx) const {
  return node_has_turns_[node_idx];
}

bool Network::turn_allowed(LinkId in, LinkId out) const {
  const Link& l = link(in);
  if (link(out).from_node != l.to_node) return false;
  if (!node_has_turns_[node_index(l.to_node)]) return true;
  return turn_by_pair_.count(pair_key(in, out)) != 0;
}

const Turn* Network::turn(LinkId in, LinkId out) const {
  auto it = turn_by_pair_.find(pair_key(in, out));
  return it == turn_by_pair_.end() ? nullptr : &turns_[it->second];
}

TurnDir Network::classify_turn(LinkId in, LinkId out) const {
  const Link& a = link(in);
  const Link& b = link(out);
  const Node& a0 = node(a.from_node);
  const Node& a1 = node(a.to_node);
  const Node& b0 = node(b.from_node);
  const Node& b1 = node(b.to_node);
  const double ix = a1.x - a0.x, iy = a1.y - a0.y;
  const double ox = b1.x - b0.x, oy = b1.y - b0.y;
  const double cross = ix * oy - iy * ox;
  const double dot = ix * ox + iy * oy;
  const double angle = std::atan2(cross, dot);
  constexpr double kThreshold = std::numbers::pi / 6.0; // 30 degrees
  if (angle > kThreshold) return TurnDir::Left;
  if (angle < -kThreshold) return TurnDir::Right;
  return TurnDir::Straight;
}

double Network::total_length_m() const {
  double sum = 0.0;
  for (const Link& l : links_) sum += l.length_m;
  return sum;
}

namespace {

enum class Section { None, Nodes, Links, Turns };

[[noreturn]] void parse_fail(int line_no, const std::string& msg) {
  throw UserError("network line " + std::to_string(line_no) + ": " + msg);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    if (tok[0] == '#') break;
    out.push_back(tok);
  }
  return out;
}

} // namespace

Network load_network(const std::string& text) {
  Network net;
  Section section = Section::None;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) continue;
    if (tok[0] == "NODES") { section = Section::Nodes; continue; }
    if (tok[0] == "LINKS") { section = Section::Links; continue; }
    if (tok[0] == "TURNS") { section = Section::Turns; continue; }
    try {
      switch (section) {
        case Section::None:
          parse_fail(line_no, "record before any section header");
        case Section::Nodes: {
          if (tok.size() != 3) parse_fail(line_no, "expected `id x y`");
          net.add_node(std::stoi(tok[0]), std::stod(tok[1]), std::stod(tok[2]));
          break;
        }
        case Section::Links: {
          if (tok.size() != 6)
            parse_fail(line_no, "expected `id from to length lanes vmax`");
          net.add_link(std::stoi(tok[0]), std::stoi(tok[1]), std::stoi(tok[2]),
                       std::stod(tok[3]), std::stoi(tok[4]), std::stoi(tok[5]));
          break;
        }
        case Section::Turns: {
          if (tok.size() != 4 && tok.size() != 6)
            parse_fail(line_no,
                       "expected `node in_link out_link control [red_s green_s]`");
          Turn t;
          t.node = std::stoi(tok[0]);
          t.in_link = std::stoi(tok[1]);
          t.out_link = std::stoi(tok[2]);
          if (tok[3] == "uncontrolled") t.control = TurnControl::Uncontrolled;
          else if (tok[3] == "stop") t.control = TurnControl::Stop;
          else if (tok[3] == "signal") t.control = TurnControl::Signal;
          else parse_fail(line_no, "unknown control `" + tok[3] + "`");
          if (t.control == TurnControl::Signal) {
            if (tok.size() != 6)
              parse_fail(line_no, "signal turn needs red_s and green_s");
            t.red_s = std::stoi(tok[4]);
            t.green_s = std::stoi(tok[5]);
          }
          net.add_turn(t);
          break;
        }
      }
    } catch (const std::invalid_argument&) {
      parse_fail(line_no, "malformed number");
    } catch (const std::out_of_range&) {
      parse_fail(line_no, "number out of range");
    }
  }
  net.finalize();
  return net;
}

Network load_network_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("cannot open network file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_network(ss.str());
}

std::string serialize_network(const Network& net) {
  std::ostringstream os;
  os.precision(17);
  os << "NODES\n";
  for (const Node& n : net.nodes())
    os << n.id << ' ' << n.x << ' ' << n.y << '\n';
  os << "LINKS\n";
  for (const Link& l : net.links())
    os << l.id << ' ' << l.from_node << ' ' << l.to_node << ' ' << l.length_m
       << ' ' << l.lane_count << ' ' << l.v_max << '\n';
  bool any_turns = false;
  for (std::size_t i = 0; i < net.nodes().size(); ++i)
    any_turns = any_turns || net.node_has_turns(i);
  if (any_turns) {
    os << "TURNS\n";
    for (const Link& in : net.links()) {
      for (LinkId out : net.out_links(net.node_index(in.to_node))) {
        const Turn* t = net.turn(in.id, out);
        if (!t) continue;
        os << t->node << ' ' << t->in_link << ' ' << t->out_link << ' ';
        switch (t->control) {
          case TurnControl::Uncontrolled: os << "uncontrolled"; break;
          case TurnControl::Stop: os << "stop"; break;
          case TurnControl::Signal:
            os << "signal " << t->red_s << ' ' << t->green_s;
            break;
        }
        os << '\n';
      }
    }
  }
  return os.str();
}

void save_network_file(const Network& net, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UserError("cannot write network file: " + path);
  f << serialize_network(net);
}

Network generate_grid(int rows, int cols, double link_length_m, int lanes) {
  if (rows < 2 || cols < 2) throw UserError("grid: rows and cols must be >= 2");
  if (link_length_m <= 0) throw UserError("grid: link length must be positive");
  if (lanes < 1) throw UserError("grid: lanes must be >= 1");
  Network net;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      net.add_node(r * cols + c, c * link_length_m, r * link_length_m);
  LinkId next = 0;
  auto both = [&](NodeId a, NodeId b) {
    net.add_link(next++, a, b, link_length_m, lanes, kMaxVmax);
    net.add_link(next++, b, a, link_length_m, lanes, kMaxVmax);
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) both(r * cols + c, r * cols + c + 1);
      if (r + 1 < rows) both(r * cols + c, (r + 1) * cols + c);
    }
  net.finalize();
  return net;
}

Network generate_ring(int cell_count, int lanes) {
  if (cell_count < 10) throw UserError("ring: cell_count must be >= 10");
  if (lanes < 1) throw UserError("ring: lanes must be >= 1");
  // Prefer segments of ~25 cells, and keep every segment splittable
  // (>= 10 cells) whenever the ring is long enough for that.
  int segments = std::max(2, cell_count / 25);
  while (segments > 2 && cell_count / segments < kMinSplitCells) --segments;
  Network net;
  const double circumference = cell_count * kCellLengthM;
  const double radius = circumference / (2.0 * std::numbers::pi);
  std::vector<int> seg_cells(segments, cell_count / segments);
  for (int i = 0; i < cell_count % segments; ++i) ++seg_cells[i];
  int cell_cursor = 0;
  for (int i = 0; i < segments; ++i) {
    const double theta = 2.0 * std::numbers::pi * cell_cursor / cell_count;
    net.add_node(i, radius * std::cos(theta), radius * std::sin(theta));
    cell_cursor += seg_cells[i];
  }
  for (int i = 0; i < segments; ++i)
    net.add_link(i, i, (i + 1) % segments, seg_cells[i] * kCellLengthM, lanes,
                 kMaxVmax);
  net.finalize();
  return net;
}

bool networks_equal(const Network& a, const Network& b) {
  if (a.nodes().size() != b.nodes().size()) return false;
  if (a.links().size() != b.links().size()) return false;
  for (std::size_t i = 0; i < a.nodes().size(); ++i) {
    const Node &x = a.nodes()[i], &y = b.nodes()[i];
    if (x.id != y.id || x.x != y.x || x.y != y.y) return false;
  }
  for (std::size_t i = 0; i < a.links().size(); ++i) {
    const Link &x = a.links()[i], &y = b.links()[i];
    if (x.id != y.id || x.from_node != y.from_node || x.to_node != y.to_node ||
        x.length_m != y.length_m || x.lane_count != y.lane_count ||
        x.v_max != y.v_max || x.cell_count != y.cell_count)
      return false;
  }
  for (const Link& in : a.links()) {
    const auto& outs_a = a.out_links(a.node_index(in.to_node));
    for (LinkId out : outs_a) {
      if (a.turn_allowed(in.id, out) != b.turn_allowed(in.id, out)) return false;
      const Turn* ta = a.turn(in.id, out);
      const Turn* tb = b.turn(in.id, out);
      if ((ta == nullptr) != (tb == nullptr)) return false;
      if (ta && (ta->control != tb->control || ta->red_s != tb->red_s ||
                 ta->green_s != tb->green_s))
        return false;
    }
  }
  return true;
}

} // namespace catsim
