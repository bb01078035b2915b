#include "catsim/parengine.hpp"

#include "catsim/errors.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace catsim {

Decomposition decompose_network(const Network& net, const Partition& part) {
  if (part.domain_of.size() != net.nodes().size())
    throw UserError("decompose: partition does not cover the network");
  Decomposition d;
  d.net = &net;
  d.p = part.p;
  d.node_domain = part.domain_of;
  for (DomainId dom : d.node_domain)
    if (dom < 0 || dom >= part.p)
      throw UserError("decompose: node without a valid domain");
  d.cuts.resize(net.links().size());
  for (std::size_t i = 0; i < net.links().size(); ++i) {
    const Link& l = net.links()[i];
    LinkCut c;
    c.up_domain = d.node_domain[net.node_index(l.from_node)];
    c.dn_domain = d.node_domain[net.node_index(l.to_node)];
    c.cut = 0;
    if (c.up_domain != c.dn_domain && l.cell_count >= kMinSplitCells)
      c.cut = l.cell_count / 2; // upstream keeps the first floor(n/2) cells
    d.cuts[i] = c;
  }
  return d;
}

namespace {

void add_view(SimState& s, std::size_t link_idx, const Link& l, int own_begin,
              int own_end, int view_begin, int view_end) {
  LinkView lv;
  lv.link_idx = link_idx;
  lv.lanes = l.lane_count;
  lv.cell_count = l.cell_count;
  lv.own_begin = own_begin;
  lv.own_end = own_end;
  lv.view_begin = view_begin;
  lv.view_end = view_end;
  lv.cells.assign(static_cast<std::size_t>(l.lane_count) * l.cell_count, Cell{});
  s.view_of_link[link_idx] = static_cast<int>(s.views.size());
  s.views.push_back(std::move(lv));
}

} // namespace

std::vector<DomainWorker> decompose(const Network& net, const Partition& part,
                                    const std::vector<Plan>& plans,
                                    const SimConfig& cfg) {
  const Decomposition dec = decompose_network(net, part);
  std::vector<DomainWorker> ws(dec.p);
  for (int d = 0; d < dec.p; ++d) {
    ws[d].domain = d;
    SimState& s = ws[d].state;
    s.net = &net;
    s.cfg = cfg;
    s.domain = d;
    s.view_of_link.assign(net.links().size(), -1);
    s.link_work.assign(net.links().size(), 0);
    s.node_work.assign(net.nodes().size(), 0);
  }

  std::vector<std::set<DomainId>> nb_sets(dec.p);
  for (std::size_t i = 0; i < net.links().size(); ++i) {
    const Link& l = net.links()[i];
    const LinkCut& c = dec.cuts[i];
    const int n = l.cell_count;
    if (!c.is_split()) {
      add_view(ws[c.dn_domain].state, i, l, 0, n, 0, n);
      continue;
    }
    nb_sets[c.up_domain].insert(c.dn_domain);
    nb_sets[c.dn_domain].insert(c.up_domain);
    if (c.cut > 0) {
      const int lo = std::max(0, c.cut - kInteractionRange);
      const int hi = std::min(n, c.cut + kInteractionRange);
      add_view(ws[c.up_domain].state, i, l, 0, c.cut, 0, hi);
      add_view(ws[c.dn_domain].state, i, l, c.cut, n, lo, n);
      ws[c.up_domain].send_strips[c.dn_domain].push_back({i, lo, c.cut - lo});
      ws[c.dn_domain].send_strips[c.up_domain].push_back({i, c.cut, hi - c.cut});
    } else {
      // short link: downstream owns it whole, upstream mirrors the head to
      // compute entries at the from-node
      const int hi = std::min(n, kInteractionRange);
      add_view(ws[c.dn_domain].state, i, l, 0, n, 0, n);
      add_view(ws[c.up_domain].state, i, l, 0, 0, 0, hi);
      ws[c.dn_domain].send_strips[c.up_domain].push_back({i, 0, hi});
    }
  }

  for (int d = 0; d < dec.p; ++d) {
    ws[d].neighbors.assign(nb_sets[d].begin(), nb_sets[d].end());
    for (DomainId nb : ws[d].neighbors)
      ws[d].send_strips.try_emplace(nb); // empty payloads still get sent
  }

  // plans go to the owner of their entry cell
  for (const Plan& p : plans) {
    const std::size_t first = net.link_index(p.route.front());
    const DomainId owner = dec.owner_of_cell(first, p.entry_cell);
    SimState& s = ws[owner].state;
    s.plans.push_back(p);
  }
  for (int d = 0; d < dec.p; ++d) {
    SimState& s = ws[d].state;
    s.pending.resize(s.plans.size());
    std::iota(s.pending.begin(), s.pending.end(), 0);
    std::sort(s.pending.begin(), s.pending.end(), [&s](int a, int b) {
      const Plan &pa = s.plans[a], &pb = s.plans[b];
      if (pa.departure_s != pb.departure_s) return pa.departure_s < pb.departure_s;
      return pa.vehicle_id < pb.vehicle_id;
    });
  }
  return ws;
}

// ----------------------------------------------------------------- engine

struct Engine::Impl {
  Engine* eng = nullptr;
  std::unique_ptr<Transport> transport;
  std::vector<std::thread> threads;
  std::barrier<> start_b;
  std::barrier<> done_b;
  std::atomic<bool> quit{false};
  std::atomic<std::uint64_t> strip_records{0};
  std::vector<std::vector<StepTraceRow>> traces;
  std::mutex err_mu;
  std::vector<std::exception_ptr> errors;

  Impl(Engine* e, int p)
      : eng(e), start_b(p + 1), done_b(p + 1), traces(p) {}

  void record_error(std::exception_ptr ep) {
    std::lock_guard<std::mutex> lock(err_mu);
    errors.push_back(ep);
  }

  void check_errors() {
    std::lock_guard<std::mutex> lock(err_mu);
    if (!errors.empty()) std::rethrow_exception(errors.front());
  }

  void do_exchange(DomainWorker& w, std::uint8_t which) {
    SimState& s = w.state;
    std::map<DomainId, std::vector<std::uint8_t>> out;
    for (auto& [nb, specs] : w.send_strips) {
      BoundaryMessage m;
      m.sender = w.domain;
      m.receiver = nb;
      m.step = static_cast<std::uint32_t>(s.clock.time);
      m.exchange = which;
      for (const StripSpec& sp : specs) {
        const LinkView& lv = *s.view(sp.link_idx);
        BoundaryMessage::LinkStrip strip;
        strip.link = s.net->links()[sp.link_idx].id;
        strip.lane_count = static_cast<std::uint8_t>(lv.lanes);
        strip.strip_len = static_cast<std::uint8_t>(sp.len);
        strip.first_cell = sp.first_cell;
        strip.cells.reserve(static_cast<std::size_t>(lv.lanes) * sp.len);
        for (int lane = 0; lane < lv.lanes; ++lane)
          for (int k = 0; k < sp.len; ++k)
            strip.cells.push_back(lv.at(lane, sp.first_cell + k));
        m.strips.push_back(std::move(strip));
      }
      if (which == 2) {
        for (const Migrant& mg : s.outbox)
          if (eng->decomp_.owner_of_cell(mg.veh.link_idx, mg.veh.cell) == nb)
            m.migrants.push_back(mg);
        std::sort(m.migrants.begin(), m.migrants.end(),
                  [](const Migrant& a, const Migrant& b) {
                    return a.veh.id < b.veh.id;
                  });
      }
      strip_records += m.strips.size();
      out[nb] = encode_message(m);
    }

    const auto in = transport->exchange(w.domain, out);

    for (const auto& [sender, bytes] : in) {
      const BoundaryMessage m = decode_message(bytes.data(), bytes.size());
      if (m.sender != sender || m.receiver != w.domain)
        throw InternalError("boundary exchange: misrouted message");
      if (static_cast<int>(m.step) != s.clock.time || m.exchange != which)
        throw InternalError("boundary exchange: clock divergence between domains");
      for (const auto& strip : m.strips) {
        LinkView& lv = *s.view(s.net->link_index(strip.link));
        const int len = strip.strip_len;
        for (int lane = 0; lane < strip.lane_count; ++lane)
          for (int k = 0; k < len; ++k) {
            const int cell = strip.first_cell + k;
            if (lv.owns(cell))
              throw InternalError("boundary exchange: strip overlaps owned cells");
            lv.at(lane, cell) = strip.cells[static_cast<std::size_t>(lane) * len + k];
          }
      }
      if (which == 2)
        for (const Migrant& mg : m.migrants) {
          LinkView* lv = s.view(mg.veh.link_idx);
          if (lv == nullptr || !lv->owns(mg.veh.cell))
            throw InternalError("migrant landed outside the receiving domain");
          Cell& c = lv->at(mg.veh.lane, mg.veh.cell);
          if (c.vid != kNoVehicle)
            throw InternalError("migrant collision at the boundary");
          VehicleState v = mg.veh;
          s.plans.push_back(mg.plan);
          v.plan_idx = static_cast<int>(s.plans.size()) - 1;
          c = Cell{v.id, static_cast<std::int8_t>(v.velocity)};
          s.vehicles.emplace(v.id, v);
        }
    }

    if (which == 2) {
      // keep our own handed-off vehicles visible in the mirror; the owner's
      // next strip includes them
      for (const Migrant& mg : s.outbox) {
        LinkView& lv = *s.view(mg.veh.link_idx);
        lv.at(mg.veh.lane, mg.veh.cell) =
            Cell{mg.veh.id, static_cast<std::int8_t>(mg.veh.velocity)};
      }
      s.outbox.clear();
    }
  }

  void step_domain(DomainWorker& w, bool collect_trace) {
    const auto t0 = std::chrono::steady_clock::now();
    SimState& s = w.state;
    const int step_no = s.clock.time;
    s.step_work = 0;
    lane_change_substep(s);
    inject_pending(s);
    do_exchange(w, 1);
    move_substep(s);
    do_exchange(w, 2);
    s.clock.time += 1;
    s.clock.sub_step = SubStep::LaneChange;
    if (collect_trace) {
      const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      traces[w.domain].push_back({step_no, w.domain, us, s.step_work});
    }
  }

  void worker_loop(DomainWorker& w, bool collect_trace) {
    while (true) {
      start_b.arrive_and_wait();
      if (quit.load()) return;
      try {
        step_domain(w, collect_trace);
      } catch (...) {
        record_error(std::current_exception());
        // Unblock peers waiting inside the transport, then leave both
        // engine barriers for good. Peers will fail on our missing data
        // and cascade out the same way.
        w.state.outbox.clear();
        transport->abandon(w.domain);
        start_b.arrive_and_drop();
        done_b.arrive_and_drop();
        return;
      }
      done_b.arrive_and_wait();
    }
  }
};

Engine::Engine(const Network& net, const Partition& part,
               std::vector<Plan> plans, const EngineConfig& cfg)
    : cfg_(cfg) {
  validate_plans(plans, net);
  decomp_ = decompose_network(net, part);
  workers_ = decompose(net, part, plans, cfg.sim);
  impl_ = std::make_unique<Impl>(this, decomp_.p);
  std::vector<std::vector<DomainId>> nbs(decomp_.p);
  for (int d = 0; d < decomp_.p; ++d) nbs[d] = workers_[d].neighbors;
  impl_->transport = make_transport(cfg.transport, decomp_.p, nbs);
  for (int d = 0; d < decomp_.p; ++d)
    impl_->threads.emplace_back([this, d] {
      impl_->worker_loop(workers_[d], cfg_.collect_trace);
    });
}

Engine::~Engine() {
  impl_->quit.store(true);
  impl_->start_b.arrive_and_wait();
  for (auto& t : impl_->threads)
    if (t.joinable()) t.join();
}

void Engine::step() {
  impl_->check_errors();
  const auto t0 = std::chrono::steady_clock::now();
  impl_->start_b.arrive_and_wait();
  impl_->done_b.arrive_and_wait();
  impl_->check_errors();
  wall_seconds_ += std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  if (cfg_.snapshot_interval > 0 && time() % cfg_.snapshot_interval == 0)
    take_snapshots();
  if (observer_) observer_(*this);
}

void Engine::run(int steps) {
  if (steps < 1) throw UserError("run: duration must be >= 1 step");
  for (int i = 0; i < steps; ++i) step();
}

int Engine::time() const { return workers_.front().state.clock.time; }

std::vector<VehicleRow> Engine::global_rows() const {
  std::vector<VehicleRow> rows;
  for (const DomainWorker& w : workers_) {
    const auto r = collect_rows(w.state);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  std::sort(rows.begin(), rows.end(),
            [](const VehicleRow& a, const VehicleRow& b) { return a.id < b.id; });
  return rows;
}

std::uint64_t Engine::global_digest() const {
  const auto rows = global_rows();
  return digest_rows(rows, time());
}

void Engine::take_snapshots() {
  for (const VehicleRow& r : global_rows())
    snapshots_.push_back({time(), r.id, r.link, r.lane, r.cell, r.velocity});
}

void Engine::verify_boundary_coherence() const {
  const Network& net = *decomp_.net;
  for (std::size_t i = 0; i < net.links().size(); ++i) {
    const LinkCut& c = decomp_.cuts[i];
    if (!c.is_split()) continue;
    const LinkView* up = workers_[c.up_domain].state.view(i);
    const LinkView* dn = workers_[c.dn_domain].state.view(i);
    if (up == nullptr || dn == nullptr)
      throw InternalError("split link missing a view");
    const int n = net.links()[i].cell_count;
    const int lanes = net.links()[i].lane_count;
    const int lo = std::max(0, c.cut - kInteractionRange);
    const int hi = std::min(n, c.cut + kInteractionRange);
    for (int lane = 0; lane < lanes; ++lane) {
      for (int cell = c.cut; cell < hi; ++cell)
        if (!(up->at(lane, cell) == dn->at(lane, cell)))
          throw InternalError("upstream mirror diverged from owner");
      for (int cell = lo; cell < c.cut; ++cell)
        if (!(dn->at(lane, cell) == up->at(lane, cell)))
          throw InternalError("downstream mirror diverged from owner");
    }
  }
}

RunSummary Engine::summary() const {
  RunSummary r;
  r.steps = time();
  r.p = decomp_.p;
  r.seed = cfg_.sim.seed;
  r.link_work.assign(decomp_.net->links().size(), 0);
  r.node_work.assign(decomp_.net->nodes().size(), 0);
  r.domain_work.assign(decomp_.p, 0);
  for (const DomainWorker& w : workers_) {
    const SimState& s = w.state;
    r.injected += s.injected;
    r.exited += s.exited;
    r.driving += static_cast<std::int64_t>(s.vehicles.size());
    r.pending += static_cast<std::int64_t>(s.pending.size());
    std::uint64_t dw = 0;
    for (std::size_t i = 0; i < s.link_work.size(); ++i) {
      r.link_work[i] += s.link_work[i];
      dw += s.link_work[i];
    }
    for (std::size_t i = 0; i < s.node_work.size(); ++i) {
      r.node_work[i] += s.node_work[i];
      dw += s.node_work[i];
    }
    r.domain_work[w.domain] = dw;
    r.total_work += dw;
  }
  r.wall_seconds = wall_seconds_;
  r.messages = impl_->transport->messages();
  r.message_bytes = impl_->transport->bytes();
  r.strip_records = impl_->strip_records.load();
  r.mean_bytes_per_strip =
      r.strip_records > 0
          ? static_cast<double>(r.message_bytes) / r.strip_records
          : 0.0;
  for (const auto& t : impl_->traces)
    r.trace.insert(r.trace.end(), t.begin(), t.end());
  std::sort(r.trace.begin(), r.trace.end(),
            [](const StepTraceRow& a, const StepTraceRow& b) {
              if (a.step != b.step) return a.step < b.step;
              return a.domain < b.domain;
            });
  return r;
}

RunSummary run_simulation(const Network& net, const Partition& part,
                          std::vector<Plan> plans, int duration_s,
                          const EngineConfig& cfg) {
  Engine eng(net, part, std::move(plans), cfg);
  eng.run(duration_s);
  return eng.summary();
}

std::string trace_csv(const std::vector<StepTraceRow>& rows) {
  std::ostringstream os;
  os << "step,domain,elapsed_us,work_units\n";
  for (const auto& r : rows)
    os << r.step << ',' << r.domain << ',' << r.elapsed_us << ',' << r.work_units
       << '\n';
  return os.str();
}

std::string load_file_text(const Network& net,
                           const std::vector<std::uint64_t>& link_work,
                           const std::vector<std::uint64_t>& node_work) {
  std::ostringstream os;
  for (std::size_t i = 0; i < net.links().size(); ++i)
    os << "L " << net.links()[i].id << ' ' << link_work[i] << '\n';
  for (std::size_t i = 0; i < net.nodes().size(); ++i)
    os << "N " << net.nodes()[i].id << ' ' << node_work[i] << '\n';
  return os.str();
}

std::string snapshot_csv(const std::vector<SnapshotRow>& rows) {
  std::ostringstream os;
  os << "time,vehicle_id,link_id,lane,cell,velocity\n";
  for (const auto& r : rows)
    os << r.time << ',' << r.vehicle << ',' << r.link << ',' << r.lane << ','
       << r.cell << ',' << r.velocity << '\n';
  return os.str();
}

} // namespace catsim
