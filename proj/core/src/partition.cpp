#include "catsim/partition.hpp"

#include "catsim/errors.hpp"
#include "catsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace catsim {

std::vector<LinkId> derive_split_links(const Network& net,
                                       const std::vector<DomainId>& domain_of) {
  std::vector<LinkId> out;
  for (const Link& l : net.links()) {
    const DomainId a = domain_of[net.node_index(l.from_node)];
    const DomainId b = domain_of[net.node_index(l.to_node)];
    if (a != b) out.push_back(l.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void check_inputs(const Network& net, const NodeWeights& weights, int p) {
  if (p < 1) throw UserError("partition: p must be >= 1");
  if (p > static_cast<int>(net.nodes().size()))
    throw UserError("partition: p exceeds node count");
  if (weights.size() != net.nodes().size())
    throw UserError("partition: weights must cover all nodes");
  for (double w : weights)
    if (w < 0.0 || !std::isfinite(w))
      throw UserError("partition: weights must be finite and nonnegative");
}

// ---------------------------------------------------------------- ORB ----

struct OrbPiece {
  std::vector<std::size_t> nodes;
  int dom_lo, dom_hi; // produces domains [dom_lo, dom_hi)
  bool vertical;      // next cut direction
  double load;
};

// Splits `piece` by an axis-aligned line so that, as closely as the node
// granularity allows, fraction k_hi/k of the load sits on the low side.
// Equal coordinates stay on one side; tie on balance goes to the smallest
// cut coordinate. Falls back to an id-ordered split when the geometry is
// degenerate (all coordinates equal).
void orb_cut(const Network& net, const NodeWeights& w, const OrbPiece& piece,
             OrbPiece& lo_out, OrbPiece& hi_out) {
  const int k = piece.dom_hi - piece.dom_lo;
  const int k_lo = (k + 1) / 2;
  const int k_hi = k - k_lo;
  const double target = piece.load * static_cast<double>(k_lo) / k;

  std::vector<std::size_t> order = piece.nodes;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Node &na = net.nodes()[a], &nb = net.nodes()[b];
    const double ca = piece.vertical ? na.x : na.y;
    const double cb = piece.vertical ? nb.x : nb.y;
    if (ca != cb) return ca < cb;
    return a < b;
  });

  // group boundaries at distinct coordinates
  std::vector<std::size_t> group_end; // exclusive index into `order`
  for (std::size_t i = 1; i <= order.size(); ++i) {
    if (i == order.size()) {
      group_end.push_back(i);
      break;
    }
    const Node &a = net.nodes()[order[i - 1]], &b = net.nodes()[order[i]];
    const double ca = piece.vertical ? a.x : a.y;
    const double cb = piece.vertical ? b.x : b.y;
    if (ca != cb) group_end.push_back(i);
  }

  std::size_t best_end = 0;
  double best_err = std::numeric_limits<double>::infinity();
  double prefix = 0.0;
  std::size_t gi = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    prefix += w[order[i]];
    if (gi < group_end.size() && i + 1 == group_end[gi]) {
      ++gi;
      const std::size_t n_lo = i + 1;
      const std::size_t n_hi = order.size() - n_lo;
      if (n_lo < static_cast<std::size_t>(k_lo) ||
          n_hi < static_cast<std::size_t>(k_hi))
        continue; // both sides must be able to host their domains
      const double err = std::abs(prefix - target);
      if (err < best_err) {
        best_err = err;
        best_end = n_lo;
      }
    }
  }

  if (best_end == 0) {
    // Degenerate geometry: split by node id at proportional counts.
    std::vector<std::size_t> by_id = piece.nodes;
    std::sort(by_id.begin(), by_id.end());
    const std::size_t n_lo =
        std::max<std::size_t>(k_lo, by_id.size() * k_lo / k);
    lo_out.nodes.assign(by_id.begin(), by_id.begin() + n_lo);
    hi_out.nodes.assign(by_id.begin() + n_lo, by_id.end());
  } else {
    lo_out.nodes.assign(order.begin(), order.begin() + best_end);
    hi_out.nodes.assign(order.begin() + best_end, order.end());
  }
  lo_out.dom_lo = piece.dom_lo;
  lo_out.dom_hi = piece.dom_lo + k_lo;
  hi_out.dom_lo = piece.dom_lo + k_lo;
  hi_out.dom_hi = piece.dom_hi;
  lo_out.vertical = hi_out.vertical = !piece.vertical;
  lo_out.load = std::accumulate(lo_out.nodes.begin(), lo_out.nodes.end(), 0.0,
                                [&](double acc, std::size_t n) { return acc + w[n]; });
  hi_out.load = piece.load - lo_out.load;
}

// ---------------------------------------------------------- multilevel ----

struct MlGraph {
  std::vector<double> node_w;
  std::vector<std::vector<std::pair<int, double>>> adj; // (neighbor, weight)
  std::size_t size() const { return node_w.size(); }
};

// Coarsening step: random matching (no two selected edges share a vertex),
// matched pairs collapse into one coarse node.
bool coarsen(const MlGraph& g, std::uint64_t seed, int level, MlGraph& coarse,
             std::vector<int>& fine_to_coarse) {
  const int n = static_cast<int>(g.size());
  std::vector<int> visit(n);
  std::iota(visit.begin(), visit.end(), 0);
  std::sort(visit.begin(), visit.end(), [&](int a, int b) {
    const auto ha = rng::hash3(seed, level, a, 11);
    const auto hb = rng::hash3(seed, level, b, 11);
    if (ha != hb) return ha < hb;
    return a < b;
  });

  std::vector<int> mate(n, -1);
  for (int u : visit) {
    if (mate[u] >= 0) continue;
    int chosen = -1;
    std::uint64_t chosen_key = 0;
    for (const auto& [v, ew] : g.adj[u]) {
      (void)ew;
      if (mate[v] >= 0 || v == u) continue;
      const std::uint64_t key = rng::hash3(seed, level, u * 1315423911 + v, 13);
      if (chosen < 0 || key < chosen_key) {
        chosen = v;
        chosen_key = key;
      }
    }
    if (chosen >= 0) {
      mate[u] = chosen;
      mate[chosen] = u;
    }
  }

  fine_to_coarse.assign(n, -1);
  int next = 0;
  for (int u = 0; u < n; ++u) {
    if (fine_to_coarse[u] >= 0) continue;
    fine_to_coarse[u] = next;
    if (mate[u] >= 0) fine_to_coarse[mate[u]] = next;
    ++next;
  }
  if (next == n) return false; // nothing matched

  coarse.node_w.assign(next, 0.0);
  coarse.adj.assign(next, {});
  std::vector<std::map<int, double>> acc(next);
  for (int u = 0; u < n; ++u) {
    coarse.node_w[fine_to_coarse[u]] += g.node_w[u];
    for (const auto& [v, ew] : g.adj[u]) {
      const int cu = fine_to_coarse[u], cv = fine_to_coarse[v];
      if (cu != cv) acc[cu][cv] += ew;
    }
  }
  for (int u = 0; u < next; ++u)
    for (const auto& [v, ew] : acc[u]) coarse.adj[u].push_back({v, ew});
  return true;
}

double cut_weight(const MlGraph& g, const std::vector<char>& side) {
  double cut = 0.0;
  for (std::size_t u = 0; u < g.size(); ++u)
    for (const auto& [v, ew] : g.adj[u])
      if (side[u] != side[v]) cut += ew;
  return cut / 2.0;
}

double side0_weight(const MlGraph& g, const std::vector<char>& side) {
  double w = 0.0;
  for (std::size_t u = 0; u < g.size(); ++u)
    if (side[u] == 0) w += g.node_w[u];
  return w;
}

// Boundary refinement: move passes that never worsen (cut, imbalance)
// lexicographically; stops at the first pass without an improving move.
void fm_refine(const MlGraph& g, std::vector<char>& side, double target0,
               double tol) {
  const int n = static_cast<int>(g.size());
  double w0 = side0_weight(g, side);
  bool improved = true;
  int pass = 0;
  while (improved && pass < 40) {
    improved = false;
    ++pass;
    std::vector<std::pair<double, int>> cand; // (-gain, node)
    for (int u = 0; u < n; ++u) {
      double same = 0.0, other = 0.0;
      for (const auto& [v, ew] : g.adj[u])
        (side[v] == side[u] ? same : other) += ew;
      if (other > 0.0 || same == 0.0) cand.push_back({-(other - same), u});
    }
    std::sort(cand.begin(), cand.end());
    for (const auto& [neg_gain, u] : cand) {
      const double gain = -neg_gain;
      if (gain < 0.0) break;
      const double nw = g.node_w[u];
      const double w0_new = side[u] == 0 ? w0 - nw : w0 + nw;
      const double err_old = std::abs(w0 - target0);
      const double err_new = std::abs(w0_new - target0);
      if (err_new > tol) continue;
      if (gain == 0.0 && err_new >= err_old) continue;
      // recompute gain against current sides (earlier moves may have changed it)
      double same = 0.0, other = 0.0;
      for (const auto& [v, ew] : g.adj[u])
        (side[v] == side[u] ? same : other) += ew;
      const double g_now = other - same;
      if (g_now < 0.0 || (g_now == 0.0 && err_new >= err_old)) continue;
      side[u] = side[u] == 0 ? 1 : 0;
      w0 = w0_new;
      improved = true;
    }
  }
}

// Greedy graph growing from a seeded start node until side 0 holds the
// target weight.
std::vector<char> grow_initial(const MlGraph& g, double target0,
                               std::uint64_t seed, int attempt) {
  const int n = static_cast<int>(g.size());
  std::vector<char> side(n, 1);
  std::vector<double> attach(n, 0.0);
  std::vector<char> in_frontier(n, 0);
  std::set<std::pair<double, int>> frontier; // (-attach, node)
  double w0 = 0.0;
  int u = static_cast<int>(rng::below(n, seed, attempt, 17, 19));
  while (true) {
    side[u] = 0;
    w0 += g.node_w[u];
    if (w0 >= target0) break;
    for (const auto& [v, ew] : g.adj[u]) {
      if (side[v] == 0) continue;
      if (in_frontier[v]) frontier.erase({-attach[v], v});
      attach[v] += ew;
      frontier.insert({-attach[v], v});
      in_frontier[v] = 1;
    }
    if (frontier.empty()) {
      // disconnected remainder: restart growth from an unassigned node
      int next = -1;
      for (int i = 0; i < n; ++i)
        if (side[i] == 1) {
          next = i;
          break;
        }
      if (next < 0) break;
      u = next;
      continue;
    }
    u = frontier.begin()->second;
    frontier.erase(frontier.begin());
    in_frontier[u] = 0;
  }
  return side;
}

// Multilevel two-way split of g aiming fraction = target0/total on side 0.
std::vector<char> ml_bisect(const MlGraph& g0, double target0, double tol,
                            std::uint64_t seed) {
  std::vector<MlGraph> graphs{g0};
  std::vector<std::vector<int>> maps;
  constexpr std::size_t kCoarseLimit = 24;
  int level = 0;
  while (graphs.back().size() > kCoarseLimit) {
    MlGraph coarse;
    std::vector<int> f2c;
    if (!coarsen(graphs.back(), seed, level, coarse, f2c)) break;
    if (coarse.size() > graphs.back().size() * 95 / 100) break;
    graphs.push_back(std::move(coarse));
    maps.push_back(std::move(f2c));
    ++level;
  }

  const MlGraph& gc = graphs.back();
  std::vector<char> best;
  double best_cut = std::numeric_limits<double>::infinity();
  double best_err = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<char> side = grow_initial(gc, target0, seed, attempt);
    fm_refine(gc, side, target0, tol);
    const double cut = cut_weight(gc, side);
    const double err = std::abs(side0_weight(gc, side) - target0);
    if (cut < best_cut || (cut == best_cut && err < best_err)) {
      best_cut = cut;
      best_err = err;
      best = std::move(side);
    }
  }

  // uncoarsen with refinement at every level
  std::vector<char> side = std::move(best);
  for (int lvl = static_cast<int>(maps.size()) - 1; lvl >= 0; --lvl) {
    const std::vector<int>& f2c = maps[lvl];
    std::vector<char> fine(f2c.size());
    for (std::size_t u = 0; u < f2c.size(); ++u) fine[u] = side[f2c[u]];
    side = std::move(fine);
    fm_refine(graphs[lvl], side, target0, tol);
  }
  return side;
}

MlGraph build_subgraph(const Network& net, const NodeWeights& w,
                       const std::vector<std::size_t>& nodes,
                       std::vector<std::size_t>& local_to_global) {
  std::vector<int> global_to_local(net.nodes().size(), -1);
  local_to_global = nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    global_to_local[nodes[i]] = static_cast<int>(i);
  MlGraph g;
  g.node_w.resize(nodes.size());
  g.adj.assign(nodes.size(), {});
  std::vector<std::map<int, double>> acc(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) g.node_w[i] = w[nodes[i]];
  for (const Link& l : net.links()) {
    const int a = global_to_local[net.node_index(l.from_node)];
    const int b = global_to_local[net.node_index(l.to_node)];
    if (a < 0 || b < 0 || a == b) continue;
    acc[a][b] += 1.0;
    acc[b][a] += 1.0;
  }
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (const auto& [v, ew] : acc[i]) g.adj[i].push_back({v, ew});
  return g;
}

void ml_recurse(const Network& net, const NodeWeights& w,
                const std::vector<std::size_t>& nodes, int dom_lo, int k,
                std::uint64_t seed, std::vector<DomainId>& domain_of) {
  if (k == 1) {
    for (std::size_t n : nodes) domain_of[n] = dom_lo;
    return;
  }
  const int k_lo = (k + 1) / 2;
  std::vector<std::size_t> l2g;
  MlGraph g = build_subgraph(net, w, nodes, l2g);
  double total = std::accumulate(g.node_w.begin(), g.node_w.end(), 0.0);
  double max_nw = 0.0;
  for (double nw : g.node_w) max_nw = std::max(max_nw, nw);
  const double target0 = total * static_cast<double>(k_lo) / k;
  const double tol = std::max(0.03 * total * std::min(target0, total - target0) /
                                  std::max(total, 1e-300),
                              max_nw);

  std::vector<char> side = ml_bisect(g, target0, tol, seed ^ rng::mix64(dom_lo + 1));

  // each side must be able to host its domain count
  auto count0 = [&side]() {
    return std::count(side.begin(), side.end(), static_cast<char>(0));
  };
  const int need0 = k_lo, need1 = k - k_lo;
  while (count0() < need0)
    for (std::size_t u = 0; u < side.size(); ++u)
      if (side[u] == 1) {
        side[u] = 0;
        break;
      }
  while (static_cast<int>(side.size()) - count0() < need1)
    for (std::size_t u = 0; u < side.size(); ++u)
      if (side[u] == 0) {
        side[u] = 1;
        break;
      }

  std::vector<std::size_t> n0, n1;
  for (std::size_t i = 0; i < side.size(); ++i)
    (side[i] == 0 ? n0 : n1).push_back(l2g[i]);
  ml_recurse(net, w, n0, dom_lo, k_lo, seed, domain_of);
  ml_recurse(net, w, n1, dom_lo + k_lo, k - k_lo, seed, domain_of);
}

} // namespace

Partition orthogonal_bisection(const Network& net, const NodeWeights& weights,
                               int p) {
  check_inputs(net, weights, p);
  Partition part;
  part.p = p;
  part.domain_of.assign(net.nodes().size(), 0);

  OrbPiece root;
  root.nodes.resize(net.nodes().size());
  std::iota(root.nodes.begin(), root.nodes.end(), 0);
  root.dom_lo = 0;
  root.dom_hi = p;
  root.vertical = true;
  root.load = std::accumulate(weights.begin(), weights.end(), 0.0);

  std::vector<OrbPiece> pieces{std::move(root)};
  while (true) {
    // the heaviest piece still owing more than one domain is cut next
    int pick = -1;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (pieces[i].dom_hi - pieces[i].dom_lo < 2) continue;
      if (pick < 0 || pieces[i].load > pieces[pick].load) pick = static_cast<int>(i);
    }
    if (pick < 0) break;
    OrbPiece piece = std::move(pieces[pick]);
    pieces.erase(pieces.begin() + pick);
    OrbPiece lo, hi;
    orb_cut(net, weights, piece, lo, hi);
    pieces.push_back(std::move(lo));
    pieces.push_back(std::move(hi));
  }
  for (const OrbPiece& piece : pieces)
    for (std::size_t n : piece.nodes) part.domain_of[n] = piece.dom_lo;

  part.split_links = derive_split_links(net, part.domain_of);
  return part;
}

Partition multilevel_partition(const Network& net, const NodeWeights& weights,
                               int p, std::uint64_t seed) {
  check_inputs(net, weights, p);
  Partition part;
  part.p = p;
  part.domain_of.assign(net.nodes().size(), 0);
  std::vector<std::size_t> all(net.nodes().size());
  std::iota(all.begin(), all.end(), 0);
  ml_recurse(net, weights, all, 0, p, seed, part.domain_of);
  part.split_links = derive_split_links(net, part.domain_of);
  return part;
}

PartitionMetrics compute_metrics(const Network& net, const Partition& part,
                                 const NodeWeights& weights) {
  if (part.domain_of.size() != net.nodes().size())
    throw UserError("metrics: partition does not cover the network");
  PartitionMetrics m;
  m.domain_load.assign(part.p, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const DomainId d = part.domain_of[i];
    if (d < 0 || d >= part.p) throw UserError("metrics: domain index out of range");
    m.domain_load[d] += weights[i];
  }
  const double total = std::accumulate(m.domain_load.begin(), m.domain_load.end(), 0.0);
  m.max_load = *std::max_element(m.domain_load.begin(), m.domain_load.end());
  m.e_dmn = m.max_load > 0.0 ? (total / part.p) / m.max_load : 1.0;
  m.n_spl = static_cast<int>(part.split_links.size());

  std::vector<std::set<DomainId>> nb(part.p);
  for (LinkId lid : part.split_links) {
    const Link& l = net.link(lid);
    const DomainId a = part.domain_of[net.node_index(l.from_node)];
    const DomainId b = part.domain_of[net.node_index(l.to_node)];
    nb[a].insert(b);
    nb[b].insert(a);
  }
  m.neighbor_count.resize(part.p);
  double sum = 0.0;
  for (int d = 0; d < part.p; ++d) {
    m.neighbor_count[d] = static_cast<int>(nb[d].size());
    sum += m.neighbor_count[d];
  }
  m.mean_neighbors = part.p > 0 ? sum / part.p : 0.0;
  return m;
}

namespace {

double offset_fit_sse(const std::vector<std::pair<int, double>>& s, double alpha,
                      double* amplitude) {
  double num = 0.0, den = 0.0;
  for (const auto& [p, y] : s) {
    const double g = std::pow(static_cast<double>(p), alpha) - 1.0;
    num += y * g;
    den += g * g;
  }
  const double a = den > 0.0 ? num / den : 0.0;
  if (amplitude) *amplitude = a;
  double sse = 0.0;
  for (const auto& [p, y] : s) {
    const double g = std::pow(static_cast<double>(p), alpha) - 1.0;
    const double r = y - a * g;
    sse += r * r;
  }
  return sse;
}

} // namespace

SplitFit fit_split_scaling(const std::vector<std::pair<int, double>>& samples) {
  if (samples.size() < 3)
    throw UserError("fit_split_scaling: need at least 3 samples");
  {
    std::set<int> ps;
    for (const auto& [p, y] : samples) {
      (void)y;
      if (p < 1) throw UserError("fit_split_scaling: p must be >= 1");
      ps.insert(p);
    }
    if (ps.size() < 3)
      throw UserError("fit_split_scaling: degenerate samples (p values repeat)");
  }

  // plain power law via log-log least squares (positive samples only)
  bool have_plain = false;
  SplitFit plain;
  double plain_sse = std::numeric_limits<double>::infinity();
  {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [p, y] : samples)
      if (y > 0.0) pts.push_back({std::log(static_cast<double>(p)), std::log(y)});
    if (pts.size() >= 2) {
      double mx = 0.0, my = 0.0;
      for (auto& [x, y] : pts) {
        mx += x;
        my += y;
      }
      mx /= pts.size();
      my /= pts.size();
      double cov = 0.0, var = 0.0;
      for (auto& [x, y] : pts) {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
      }
      if (var > 0.0) {
        plain.exponent = cov / var;
        plain.amplitude = std::exp(my - plain.exponent * mx);
        plain.offset_form = false;
        have_plain = true;
        plain_sse = 0.0;
        for (const auto& [p, y] : samples) {
          const double r = y - plain.amplitude * std::pow(double(p), plain.exponent);
          plain_sse += r * r;
        }
      }
    }
  }

  // zero-intercept form A * p^alpha - A: 1-D search over alpha
  SplitFit offset;
  offset.offset_form = true;
  double best_alpha = 0.5;
  double best_sse = std::numeric_limits<double>::infinity();
  for (double a = 0.02; a <= 2.0 + 1e-12; a += 0.005) {
    const double sse = offset_fit_sse(samples, a, nullptr);
    if (sse < best_sse) {
      best_sse = sse;
      best_alpha = a;
    }
  }
  // golden-section refine around the grid optimum
  double lo = std::max(0.005, best_alpha - 0.01), hi = best_alpha + 0.01;
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo + (hi - lo) * 0.382;
    const double m2 = lo + (hi - lo) * 0.618;
    if (offset_fit_sse(samples, m1, nullptr) < offset_fit_sse(samples, m2, nullptr))
      hi = m2;
    else
      lo = m1;
  }
  best_alpha = (lo + hi) / 2.0;
  best_sse = offset_fit_sse(samples, best_alpha, &offset.amplitude);
  offset.exponent = best_alpha;

  double y2 = 0.0;
  for (const auto& [p, y] : samples) {
    (void)p;
    y2 += y * y;
  }
  const double denom = y2 > 0.0 ? y2 : 1.0;

  SplitFit out;
  if (!have_plain || best_sse <= plain_sse) {
    out = offset;
    out.rel_residual = std::sqrt(best_sse / denom);
  } else {
    out = plain;
    out.rel_residual = std::sqrt(plain_sse / denom);
  }
  return out;
}

double eval_split_fit(const SplitFit& fit, double p) {
  const double v = fit.amplitude * std::pow(p, fit.exponent);
  return fit.offset_form ? v - fit.amplitude : v;
}

std::string serialize_partition(const Network& net, const Partition& part) {
  std::ostringstream os;
  for (std::size_t i = 0; i < net.nodes().size(); ++i)
    os << net.nodes()[i].id << ' ' << part.domain_of[i] << '\n';
  return os.str();
}

Partition load_partition(const Network& net, const std::string& text) {
  Partition part;
  part.domain_of.assign(net.nodes().size(), -1);
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  int max_dom = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    NodeId id;
    DomainId dom;
    if (!(ls >> id)) continue;
    if (!(ls >> dom))
      throw UserError("partition line " + std::to_string(line_no) +
                      ": expected `node_id domain`");
    part.domain_of[net.node_index(id)] = dom;
    max_dom = std::max(max_dom, dom);
  }
  for (std::size_t i = 0; i < part.domain_of.size(); ++i)
    if (part.domain_of[i] < 0)
      throw UserError("partition: node " + std::to_string(net.nodes()[i].id) +
                      " has no domain");
  part.p = max_dom + 1;
  part.split_links = derive_split_links(net, part.domain_of);
  return part;
}

void save_partition_file(const Network& net, const Partition& part,
                         const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UserError("cannot write partition file: " + path);
  f << serialize_partition(net, part);
}

Partition load_partition_file(const Network& net, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("cannot open partition file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_partition(net, ss.str());
}

std::string serialize_weights(const Network& net, const NodeWeights& w) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < net.nodes().size(); ++i)
    os << net.nodes()[i].id << ' ' << w[i] << '\n';
  return os.str();
}

NodeWeights load_weights(const Network& net, const std::string& text) {
  NodeWeights w(net.nodes().size(), -1.0);
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    NodeId id;
    double weight;
    if (!(ls >> id)) continue;
    if (!(ls >> weight))
      throw UserError("weights line " + std::to_string(line_no) +
                      ": expected `node_id weight`");
    w[net.node_index(id)] = weight;
  }
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] < 0.0)
      throw UserError("weights: node " + std::to_string(net.nodes()[i].id) +
                      " missing or negative");
  return w;
}

void save_weights_file(const Network& net, const NodeWeights& w,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UserError("cannot write weights file: " + path);
  f << serialize_weights(net, w);
}

NodeWeights load_weights_file(const Network& net, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("cannot open weights file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_weights(net, ss.str());
}

} // namespace catsim
