// catsim command-line front end: simulate, partition, balance, predict,
// validate, gen. All randomized commands take --seed and record it in their
// outputs; repeated invocations with the same inputs produce byte-identical
// simulation artifacts (trace timing columns excepted).

#include "catsim/ca.hpp"
#include "catsim/errors.hpp"
#include "catsim/loadbal.hpp"
#include "catsim/network.hpp"
#include "catsim/parengine.hpp"
#include "catsim/partition.hpp"
#include "catsim/perfmodel.hpp"
#include "catsim/plans.hpp"
#include "catsim/validate.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace catsim;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw UserError("cannot write file: " + path.string());
  f << content;
}

std::vector<int> parse_p_list(const std::string& spec) {
  std::vector<int> out;
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(spec.substr(0, dots));
    const int hi = std::stoi(spec.substr(dots + 2));
    if (lo < 1 || hi < lo) throw UserError("bad p range: " + spec);
    // powers of two within [lo, hi], plus the endpoints
    for (int p = lo; p <= hi; ++p)
      if (p == lo || p == hi || (p & (p - 1)) == 0) out.push_back(p);
    return out;
  }
  std::istringstream is(spec);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw UserError("bad p list: " + spec);
  return out;
}

NodeWeights resolve_weights(const Network& net, const std::string& spec) {
  if (spec.empty() || spec == "length") return length_weights(net);
  return load_weights_file(net, spec);
}

Partition make_partition(const Network& net, const std::string& method,
                         const NodeWeights& w, int p, std::uint64_t seed) {
  if (method == "orb") return orthogonal_bisection(net, w, p);
  if (method == "multilevel") return multilevel_partition(net, w, p, seed);
  throw UserError("unknown partitioner: " + method);
}

int cmd_simulate(const std::string& net_path, const std::string& plans_path,
                 int p, int duration, const std::string& partitioner,
                 const std::string& weights_spec, const std::string& transport,
                 double p_brake, std::uint64_t seed, const fs::path& out_dir,
                 bool trace, int snapshot_interval) {
  const Network net = load_network_file(net_path);
  std::vector<Plan> plans = load_plans_file(plans_path);
  validate_plans(plans, net);
  const NodeWeights w = resolve_weights(net, weights_spec);
  const Partition part = make_partition(net, partitioner, w, p, seed);

  EngineConfig ec;
  ec.sim.p_brake = p_brake;
  ec.sim.seed = seed;
  ec.collect_trace = trace;
  ec.snapshot_interval = snapshot_interval;
  if (transport == "inprocess") ec.transport = TransportKind::InProcess;
  else if (transport == "socket") ec.transport = TransportKind::TcpLoopback;
  else throw UserError("unknown transport: " + transport);

  Engine eng(net, part, std::move(plans), ec);
  eng.run(duration);
  const RunSummary sum = eng.summary();

  fs::create_directories(out_dir);
  std::ostringstream os;
  os << "steps=" << sum.steps << '\n'
     << "p=" << sum.p << '\n'
     << "seed=" << sum.seed << '\n'
     << "partitioner=" << partitioner << '\n'
     << "transport=" << transport << '\n'
     << "injected=" << sum.injected << '\n'
     << "trips_completed=" << sum.exited << '\n'
     << "driving=" << sum.driving << '\n'
     << "pending=" << sum.pending << '\n'
     << "total_work_units=" << sum.total_work << '\n'
     << "messages=" << sum.messages << '\n'
     << "state_digest=" << eng.global_digest() << '\n';
  write_file(out_dir / "summary.txt", os.str());
  write_file(out_dir / "loads.txt",
             load_file_text(net, sum.link_work, sum.node_work));
  if (trace) write_file(out_dir / "trace.csv", trace_csv(sum.trace));
  if (snapshot_interval > 0)
    write_file(out_dir / "snapshots.csv", snapshot_csv(eng.snapshots()));

  std::cout << "simulated " << sum.steps << " s on p=" << sum.p
            << " domains: " << sum.exited << " trips completed, "
            << sum.driving << " still driving (wall " << sum.wall_seconds
            << " s)\n"
            << "outputs in " << out_dir.string() << '\n';
  return 0;
}

int cmd_partition(const std::string& net_path, const std::string& p_spec,
                  const std::string& method, const std::string& weights_spec,
                  bool fit, std::uint64_t seed, const fs::path& out_dir) {
  const Network net = load_network_file(net_path);
  const NodeWeights w = resolve_weights(net, weights_spec);
  const std::vector<int> ps = parse_p_list(p_spec);
  fs::create_directories(out_dir);

  std::vector<std::string> methods;
  if (method == "both") methods = {"orb", "multilevel"};
  else methods = {method};

  for (const std::string& m : methods) {
    std::ostringstream csv;
    csv.precision(9);
    csv << "p,N_spl,e_dmn,max_load,mean_neighbors\n";
    std::vector<std::pair<int, double>> samples;
    for (int p : ps) {
      const Partition part = make_partition(net, m, w, p, seed);
      const PartitionMetrics metrics = compute_metrics(net, part, w);
      csv << p << ',' << metrics.n_spl << ',' << metrics.e_dmn << ','
          << metrics.max_load << ',' << metrics.mean_neighbors << '\n';
      samples.push_back({p, static_cast<double>(metrics.n_spl)});
      save_partition_file(net, part,
                          (out_dir / ("partition_" + m + "_p" +
                                      std::to_string(p) + ".txt"))
                              .string());
    }
    write_file(out_dir / ("metrics_" + m + ".csv"), csv.str());
    if (fit && samples.size() >= 3) {
      const SplitFit f = fit_split_scaling(samples);
      std::ostringstream fs_;
      fs_.precision(9);
      fs_ << "method,A,alpha,offset_form,rel_residual\n"
          << m << ',' << f.amplitude << ',' << f.exponent << ','
          << (f.offset_form ? 1 : 0) << ',' << f.rel_residual << '\n';
      write_file(out_dir / ("fit_" + m + ".csv"), fs_.str());
      std::cout << m << ": N_spl fit A=" << f.amplitude
                << " alpha=" << f.exponent
                << (f.offset_form ? " (offset form)" : "") << '\n';
    }
  }
  std::cout << "metrics written to " << out_dir.string() << " (seed " << seed
            << ")\n";
  return 0;
}

int cmd_balance(const std::string& net_path, const std::string& loads_path,
                const std::string& out_path) {
  const Network net = load_network_file(net_path);
  const LoadProfile profile = collect_file(net, loads_path);
  const WeightConversion conv = to_weights(profile, net);
  save_weights_file(net, conv.weights, out_path);
  std::cout << "profile total work " << profile.total() << ", imputed "
            << conv.imputed_work << ", floor added " << conv.floor_added
            << "; weights written to " << out_path << '\n';
  return 0;
}

HardwareProfile resolve_profile(const std::string& spec) {
  for (const std::string& name : hardware_preset_names())
    if (name == spec) return hardware_preset(name);
  return load_hardware_profile_file(spec);
}

int cmd_predict(const std::string& profile_spec, const std::string& scenario_path,
                const std::string& p_spec, const std::string& calibrate_rtr,
                const std::string& compare_spec, const fs::path& out_dir) {
  HardwareProfile hw = resolve_profile(profile_spec);
  ScenarioProfile sc;
  if (!scenario_path.empty()) sc = load_scenario_profile_file(scenario_path);

  if (!calibrate_rtr.empty()) {
    const auto colon = calibrate_rtr.find(':');
    if (colon == std::string::npos)
      throw UserError("--calibrate-rtr expects p:rtr, e.g. 16:40");
    const int p_ref = std::stoi(calibrate_rtr.substr(0, colon));
    const double rtr_ref = std::stod(calibrate_rtr.substr(colon + 1));
    hw.t1_s = back_solve_t1(hw, sc, p_ref, rtr_ref);
    std::cout << "calibrated T_1 = " << hw.t1_s << " s from rtr(" << p_ref
              << ") = " << rtr_ref << '\n';
  }

  std::vector<int> ps = parse_p_list(p_spec);
  if (std::find(ps.begin(), ps.end(), 1) == ps.end())
    ps.insert(ps.begin(), 1);
  std::sort(ps.begin(), ps.end());

  fs::create_directories(out_dir);
  const PredictionCurve curve = predict_curve(hw, sc, ps);
  write_file(out_dir / "prediction.csv", prediction_csv(curve.rows));
  std::cout << hw.label << ": saturation rtr " << curve.saturation_rtr
            << (curve.rtr_non_monotone ? ", non-monotone in p" : "")
            << (curve.regime == AsymptoticRegime::LatencyPlateau
                    ? " (latency plateau)"
                    : " (shared-medium growth)")
            << '\n';

  if (!compare_spec.empty()) {
    HardwareProfile hw2 = resolve_profile(compare_spec);
    hw2.t1_s = hw.t1_s; // same scenario and compute load, different network
    const PredictionCurve c2 = predict_curve(hw2, sc, ps);
    write_file(out_dir / "prediction_compare.csv", prediction_csv(c2.rows));
    std::cout << hw2.label << ": saturation rtr " << c2.saturation_rtr << '\n';
  }
  return 0;
}

int cmd_validate(const std::string& experiment, int steps, int p,
                 double p_brake, std::uint64_t seed, const fs::path& out_dir) {
  ValidateConfig cfg;
  cfg.p_brake = p_brake;
  cfg.seed = seed;
  cfg.p = p;
  fs::create_directories(out_dir);
  std::vector<std::string> files;

  const bool all = experiment == "all";
  if (all || experiment == "ring1") {
    const std::vector<double> dens = {0.02, 0.05, 0.08, 0.1, 0.125, 1.0 / 6,
                                      0.2,  0.3,  0.4,  0.5, 0.7,   0.9};
    const auto rows = ring_diagram(1, dens, steps, cfg);
    write_file(out_dir / "ring1.csv", ring_diagram_csv(rows));
    files.push_back("ring1.csv");
  }
  if (all || experiment == "ring3") {
    const std::vector<double> dens = {0.02, 0.05, 0.08, 0.1, 0.125, 1.0 / 6,
                                      0.2,  0.3,  0.4,  0.5, 0.7,   0.9};
    const auto rows = ring_diagram(3, dens, steps, cfg);
    write_file(out_dir / "ring3.csv", ring_diagram_csv(rows));
    files.push_back("ring3.csv");
  }
  if (all || experiment == "merge") {
    const std::vector<double> levels = {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.0};
    const auto rows = merge_capacity(levels, steps, cfg);
    write_file(out_dir / "merge.csv", merge_csv(rows));
    files.push_back("merge.csv");
  }
  if (all || experiment == "signal") {
    const SignalResult r = signal_throughput(30, 30, steps, cfg);
    write_file(out_dir / "signal.csv", signal_csv(r));
    files.push_back("signal.csv");
  }
  if (all || experiment == "lanes") {
    const LaneUsage u = lane_usage(3, 0.1, steps, cfg);
    write_file(out_dir / "lanes.csv", lane_usage_csv(u));
    files.push_back("lanes.csv");
  }
  if (files.empty())
    throw UserError("unknown experiment: " + experiment +
                    " (ring1|ring3|merge|signal|lanes|all)");
  write_file(out_dir / "manifest.txt", manifest_text(files, seed));
  std::cout << "wrote " << files.size() << " experiment file(s) to "
            << out_dir.string() << '\n';
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"catsim: parallel cellular-automata traffic microsimulation kit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file (flags override it)");

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  app.add_option("--seed", seed, "random seed (recorded in outputs)")
      ->capture_default_str();
  app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  // --- gen ---
  auto* gen = app.add_subcommand("gen", "generate synthetic networks and plans");
  gen->require_subcommand(1);
  int g_rows = 10, g_cols = 10, g_lanes = 1, g_cells = 1000, g_count = 1000,
      g_window = 900;
  double g_len = 75.0;
  std::string g_out = "net.txt", g_net;
  auto* gen_grid = gen->add_subcommand("grid", "bidirectional lattice network");
  gen_grid->add_option("--rows", g_rows)->capture_default_str();
  gen_grid->add_option("--cols", g_cols)->capture_default_str();
  gen_grid->add_option("--link-length", g_len)->capture_default_str();
  gen_grid->add_option("--lanes", g_lanes)->capture_default_str();
  gen_grid->add_option("--out", g_out)->capture_default_str();
  auto* gen_ring = gen->add_subcommand("ring", "closed-loop network");
  gen_ring->add_option("--cells", g_cells)->capture_default_str();
  gen_ring->add_option("--lanes", g_lanes)->capture_default_str();
  gen_ring->add_option("--out", g_out)->capture_default_str();
  auto* gen_plans = gen->add_subcommand("plans", "random shortest-path trips");
  gen_plans->add_option("--net", g_net)->required();
  gen_plans->add_option("--count", g_count)->capture_default_str();
  gen_plans->add_option("--window", g_window, "departure window in seconds")
      ->capture_default_str();
  gen_plans->add_option("--out", g_out)->capture_default_str();

  // --- simulate ---
  auto* sim = app.add_subcommand("simulate", "run the traffic microsimulation");
  std::string s_net, s_plans, s_partitioner = "orb", s_weights = "length",
              s_transport = "inprocess";
  int s_p = 1, s_duration = 3600, s_snap = 0;
  double s_pbrake = 0.2;
  bool s_trace = false;
  sim->add_option("--net", s_net, "network file")->required();
  sim->add_option("--plans", s_plans, "plans file")->required();
  sim->add_option("--p", s_p, "domain count")->capture_default_str();
  sim->add_option("--duration", s_duration, "simulated seconds")
      ->capture_default_str();
  sim->add_option("--partitioner", s_partitioner, "orb|multilevel")
      ->capture_default_str();
  sim->add_option("--weights", s_weights, "length or a weights file")
      ->capture_default_str();
  sim->add_option("--transport", s_transport, "inprocess|socket")
      ->capture_default_str();
  sim->add_option("--p-brake", s_pbrake, "random slowdown probability")
      ->capture_default_str();
  sim->add_flag("--trace", s_trace, "collect the per-step execution trace");
  sim->add_option("--snapshot-interval", s_snap,
                  "emit vehicle snapshots every N steps (0 = off)")
      ->capture_default_str();

  // --- partition ---
  auto* par = app.add_subcommand("partition", "partition a network, emit metrics");
  std::string p_net, p_spec = "1..64", p_method = "both", p_weights = "length";
  bool p_fit = false;
  par->add_option("--net", p_net, "network file")->required();
  par->add_option("--p", p_spec, "p list: `1..64` or `2,4,8`")
      ->capture_default_str();
  par->add_option("--method", p_method, "orb|multilevel|both")
      ->capture_default_str();
  par->add_option("--weights", p_weights, "length or a weights file")
      ->capture_default_str();
  par->add_flag("--fit", p_fit, "fit N_spl = A*p^alpha (- A)");

  // --- balance ---
  auto* bal = app.add_subcommand(
      "balance", "turn a run's load file into partitioning weights");
  std::string b_net, b_loads, b_out = "weights.w";
  bal->add_option("--net", b_net, "network file")->required();
  bal->add_option("--loads", b_loads, "per-element load file from simulate")
      ->required();
  bal->add_option("--out", b_out, "weights file to write")->capture_default_str();

  // --- predict ---
  auto* pre = app.add_subcommand("predict", "analytic performance prediction");
  std::string pr_profile = "100mbit-switched", pr_scenario, pr_p = "1..1024",
              pr_cal, pr_compare;
  pre->add_option("--profile", pr_profile,
                  "hardware preset name or profile file")
      ->capture_default_str();
  pre->add_option("--scenario", pr_scenario, "scenario profile file");
  pre->add_option("--p", pr_p, "p list or range")->capture_default_str();
  pre->add_option("--calibrate-rtr", pr_cal,
                  "back-solve T_1 from `p:rtr` (e.g. 16:40)");
  pre->add_option("--compare", pr_compare, "second profile to predict");

  // --- validate ---
  auto* val = app.add_subcommand("validate",
                                 "emergent-flow validation experiments");
  std::string v_exp = "all";
  int v_steps = 2000, v_p = 1;
  double v_pbrake = 0.2;
  val->add_option("--experiment", v_exp, "ring1|ring3|merge|signal|lanes|all")
      ->capture_default_str();
  val->add_option("--steps", v_steps, "measurement window in steps")
      ->capture_default_str();
  val->add_option("--p", v_p, "domain count")->capture_default_str();
  val->add_option("--p-brake", v_pbrake)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_grid->parsed()) {
      save_network_file(generate_grid(g_rows, g_cols, g_len, g_lanes), g_out);
      std::cout << "wrote " << g_out << '\n';
      return 0;
    }
    if (gen_ring->parsed()) {
      save_network_file(generate_ring(g_cells, g_lanes), g_out);
      std::cout << "wrote " << g_out << '\n';
      return 0;
    }
    if (gen_plans->parsed()) {
      const Network net = load_network_file(g_net);
      save_plans_file(generate_random_plans(net, g_count, g_window, seed), g_out);
      std::cout << "wrote " << g_out << " (seed " << seed << ")\n";
      return 0;
    }
    if (sim->parsed())
      return cmd_simulate(s_net, s_plans, s_p, s_duration, s_partitioner,
                          s_weights, s_transport, s_pbrake, seed, out_dir,
                          s_trace, s_snap);
    if (par->parsed())
      return cmd_partition(p_net, p_spec, p_method, p_weights, p_fit, seed,
                           out_dir);
    if (bal->parsed()) return cmd_balance(b_net, b_loads, b_out);
    if (pre->parsed())
      return cmd_predict(pr_profile, pr_scenario, pr_p, pr_cal, pr_compare,
                         out_dir);
    if (val->parsed())
      return cmd_validate(v_exp, v_steps, v_p, v_pbrake, seed, out_dir);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
