#pragma once

#include "catsim/ca.hpp"
#include "catsim/ids.hpp"
#include "catsim/network.hpp"
#include "catsim/partition.hpp"
#include "catsim/plans.hpp"
#include "catsim/wire.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace catsim {

/// How a link's cells are divided between the domains of its endpoints.
/// Normal split links are halved at `cut` (upstream keeps [0, cut)); links
/// shorter than kMinSplitCells keep cut = 0, meaning the downstream domain
/// owns every cell and the upstream domain only mirrors the head.
struct LinkCut {
  DomainId up_domain = 0;
  DomainId dn_domain = 0;
  int cut = 0;
  bool is_split() const { return up_domain != dn_domain; }
};

struct Decomposition {
  const Network* net = nullptr;
  int p = 1;
  std::vector<DomainId> node_domain; // by node index
  std::vector<LinkCut> cuts;         // by link index
  /// Domain owning a particular cell of a link.
  DomainId owner_of_cell(std::size_t link_idx, int cell) const {
    const LinkCut& c = cuts[link_idx];
    return cell < c.cut ? c.up_domain : c.dn_domain;
  }
};

Decomposition decompose_network(const Network& net, const Partition& part);

/// What one domain sends to one neighbour each exchange: the cut-adjacent
/// cells of every owned split-link half.
struct StripSpec {
  std::size_t link_idx = 0;
  int first_cell = 0;
  int len = 0;
};

struct DomainWorker {
  DomainId domain = 0;
  SimState state;
  std::vector<DomainId> neighbors; // sorted, domains sharing a split link
  std::map<DomainId, std::vector<StripSpec>> send_strips;
};

/// Builds per-domain workers: owned link views with mirror strips, plans
/// assigned to the owner of their entry cell.
std::vector<DomainWorker> decompose(const Network& net, const Partition& part,
                                    const std::vector<Plan>& plans,
                                    const SimConfig& cfg);

// ------------------------------------------------------------ transport ---

/// Blocking neighbour exchange for one round. Implementations must deliver
/// every payload exactly once and return the payloads addressed to `self`,
/// regardless of thread scheduling.
class Transport {
public:
  virtual ~Transport() = default;

  virtual std::map<DomainId, std::vector<std::uint8_t>> exchange(
      DomainId self, const std::map<DomainId, std::vector<std::uint8_t>>& out) = 0;

  /// Withdraws a failed worker so peers blocked in exchange() unblock (and
  /// then fail on the missing data instead of hanging).
  virtual void abandon(DomainId self) = 0;

  std::uint64_t messages() const { return messages_.load(); }
  std::uint64_t bytes() const { return bytes_.load(); }

protected:
  void count(std::uint64_t msgs, std::uint64_t bytes) {
    messages_ += msgs;
    bytes_ += bytes;
  }

private:
  std::atomic<std::uint64_t> messages_{0};
  std::atomic<std::uint64_t> bytes_{0};
};

enum class TransportKind { InProcess, TcpLoopback };

/// neighbor lists indexed by domain; required by both realizations.
std::unique_ptr<Transport> make_transport(TransportKind kind, int p,
                                          const std::vector<std::vector<DomainId>>& neighbors);

// --------------------------------------------------------------- engine ---

struct StepTraceRow {
  int step = 0;
  DomainId domain = 0;
  std::int64_t elapsed_us = 0;
  std::uint64_t work_units = 0;
};

struct SnapshotRow {
  int time = 0;
  VehicleId vehicle = 0;
  LinkId link = 0;
  int lane = 0, cell = 0, velocity = 0;
};

struct RunSummary {
  int steps = 0;
  int p = 1;
  std::uint64_t seed = 0;
  std::int64_t injected = 0;
  std::int64_t exited = 0;
  std::int64_t driving = 0;
  std::int64_t pending = 0;
  std::uint64_t total_work = 0;
  std::vector<std::uint64_t> domain_work;
  std::vector<std::uint64_t> link_work; // by link index, merged over domains
  std::vector<std::uint64_t> node_work; // by node index
  double wall_seconds = 0.0;
  std::uint64_t messages = 0;
  std::uint64_t message_bytes = 0;
  std::uint64_t strip_records = 0;
  /// Measured S_bnd: mean payload bytes per split link per exchange.
  double mean_bytes_per_strip = 0.0;
  std::vector<StepTraceRow> trace;
};

struct EngineConfig {
  SimConfig sim;
  TransportKind transport = TransportKind::InProcess;
  bool collect_trace = false;
  int snapshot_interval = 0; // 0 = no snapshots
};

/// Master/worker execution of the simulation across p concurrently running
/// domain workers. The master only sets up, coordinates the per-step
/// barriers and gathers results; workers exchange boundary strips twice per
/// step and migrate vehicles in the second exchange.
class Engine {
public:
  Engine(const Network& net, const Partition& part, std::vector<Plan> plans,
         const EngineConfig& cfg);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void step();
  void run(int steps);

  int time() const;
  int p() const { return static_cast<int>(workers_.size()); }
  const SimState& domain_state(DomainId d) const { return workers_[d].state; }
  const DomainWorker& worker(DomainId d) const { return workers_[d]; }
  const Decomposition& decomposition() const { return decomp_; }

  /// All vehicles across domains, sorted by id.
  std::vector<VehicleRow> global_rows() const;
  std::uint64_t global_digest() const;

  /// Checks every mirror strip against the owner's cells; throws
  /// InternalError on divergence. Test hook.
  void verify_boundary_coherence() const;

  RunSummary summary() const;
  const std::vector<SnapshotRow>& snapshots() const { return snapshots_; }

  /// Called by the master after every step while workers are parked.
  void set_step_observer(std::function<void(Engine&)> obs) {
    observer_ = std::move(obs);
  }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Decomposition decomp_;
  std::vector<DomainWorker> workers_;
  EngineConfig cfg_;
  std::vector<SnapshotRow> snapshots_;
  std::function<void(Engine&)> observer_;
  double wall_seconds_ = 0.0;
  friend struct Impl;

  void take_snapshots();
};

/// One-call wrapper: decompose, run `duration_s` steps, gather the summary.
RunSummary run_simulation(const Network& net, const Partition& part,
                          std::vector<Plan> plans, int duration_s,
                          const EngineConfig& cfg);

// ------------------------------------------------------------- file IO ---

/// Trace CSV: `step,domain,elapsed_us,work_units`.
std::string trace_csv(const std::vector<StepTraceRow>& rows);

/// Per-element load file: `L link_id work_units` / `N node_id work_units`.
std::string load_file_text(const Network& net,
                           const std::vector<std::uint64_t>& link_work,
                           const std::vector<std::uint64_t>& node_work);

/// Snapshot CSV: `time,vehicle_id,link_id,lane,cell,velocity`.
std::string snapshot_csv(const std::vector<SnapshotRow>& rows);

} // namespace catsim
