#include "catsim/loadbal.hpp"

#include "catsim/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace catsim {

double LoadProfile::total() const {
  return std::accumulate(link_work.begin(), link_work.end(), 0.0) +
         std::accumulate(node_work.begin(), node_work.end(), 0.0);
}

LoadProfile collect(const Network& net, const std::string& load_file_text) {
  LoadProfile p;
  p.link_work.assign(net.links().size(), 0.0);
  p.node_work.assign(net.nodes().size(), 0.0);
  std::istringstream is(load_file_text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind[0] == '#') continue;
    long long id;
    double work;
    if ((kind != "L" && kind != "N") || !(ls >> id >> work))
      throw UserError("load file line " + std::to_string(line_no) +
                      ": expected `L|N id work_units`");
    if (work < 0.0)
      throw UserError("load file line " + std::to_string(line_no) +
                      ": negative work");
    if (kind == "L")
      p.link_work[net.link_index(static_cast<LinkId>(id))] += work;
    else
      p.node_work[net.node_index(static_cast<NodeId>(id))] += work;
  }
  return p;
}

LoadProfile collect_file(const Network& net, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("cannot open load file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return collect(net, ss.str());
}

void accumulate(LoadProfile& a, const LoadProfile& b) {
  if (a.link_work.size() != b.link_work.size() ||
      a.node_work.size() != b.node_work.size())
    throw UserError("load profiles cover different networks");
  for (std::size_t i = 0; i < a.link_work.size(); ++i)
    a.link_work[i] += b.link_work[i];
  for (std::size_t i = 0; i < a.node_work.size(); ++i)
    a.node_work[i] += b.node_work[i];
}

WeightConversion to_weights(const LoadProfile& profile, const Network& net) {
  if (profile.link_work.size() != net.links().size() ||
      profile.node_work.size() != net.nodes().size())
    throw UserError("to_weights: profile does not cover the network");

  double min_positive = std::numeric_limits<double>::infinity();
  for (double w : profile.link_work)
    if (w > 0.0) min_positive = std::min(min_positive, w);
  for (double w : profile.node_work)
    if (w > 0.0) min_positive = std::min(min_positive, w);
  const double impute = std::isfinite(min_positive) ? min_positive : 0.0;

  WeightConversion out;
  out.weights.assign(net.nodes().size(), 0.0);
  auto element = [&](double w) {
    if (w > 0.0) return w;
    out.imputed_work += impute;
    return impute;
  };
  for (std::size_t i = 0; i < net.nodes().size(); ++i)
    out.weights[i] = element(profile.node_work[i]);
  for (std::size_t i = 0; i < net.links().size(); ++i) {
    const Link& l = net.links()[i];
    const double half = element(profile.link_work[i]) / 2.0;
    out.weights[net.node_index(l.from_node)] += half;
    out.weights[net.node_index(l.to_node)] += half;
  }
  for (double& w : out.weights)
    if (w < 1.0) {
      out.floor_added += 1.0 - w;
      w = 1.0;
    }
  return out;
}

NodeWeights length_weights(const Network& net) {
  NodeWeights w(net.nodes().size(), 0.0);
  for (const Link& l : net.links()) {
    w[net.node_index(l.from_node)] += l.length_m / 2.0;
    w[net.node_index(l.to_node)] += l.length_m / 2.0;
  }
  return w;
}

} // namespace catsim
