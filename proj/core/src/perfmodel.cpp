#include "catsim/perfmodel.hpp"

#include "catsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace catsim {

double ScenarioProfile::nspl(int p) const {
  if (p <= 1) return nspl_table.empty() ? std::max(0.0, eval_split_fit(nspl_fit, 1.0)) : 0.0;
  if (!nspl_table.empty()) {
    for (const auto& [tp, v] : nspl_table)
      if (tp == p) return v;
    // linear interpolation in log p between bracketing entries
    const auto* lo = &nspl_table.front();
    const auto* hi = &nspl_table.back();
    for (const auto& e : nspl_table) {
      if (e.first < p && e.first > lo->first) lo = &e;
      if (e.first > p && e.first < hi->first) hi = &e;
    }
    if (lo->first < p && hi->first > p) {
      const double t = (std::log(static_cast<double>(p)) - std::log(lo->first)) /
                       (std::log(static_cast<double>(hi->first)) - std::log(lo->first));
      return lo->second + t * (hi->second - lo->second);
    }
    return lo->first > p ? lo->second : hi->second;
  }
  return std::max(0.0, eval_split_fit(nspl_fit, static_cast<double>(p)));
}

double ScenarioProfile::f_dmn(int p) const {
  for (const auto& [tp, e] : f_dmn_table)
    if (tp == p && e > 0.0) return 1.0 / e - 1.0;
  return 0.0;
}

double n_nb(int p) {
  if (p < 1) throw UserError("n_nb: p must be >= 1");
  const double sq = std::sqrt(static_cast<double>(p));
  return 2.0 * (3.0 * sq - 1.0) * (sq - 1.0) / p;
}

PredictionRow predict_step_time(const HardwareProfile& hw,
                                const ScenarioProfile& sc, int p) {
  if (p < 1) throw UserError("predict_step_time: p must be >= 1");
  PredictionRow r;
  r.p = p;
  const double nspl = sc.nspl(p);
  r.t_cmp = hw.t1_s / p * (1.0 + sc.f_ovr + sc.f_dmn(p));
  r.t_lat = sc.n_sub * n_nb(p) * hw.t_lt_s;
  r.t_bnd_node = sc.n_sub * (nspl / p) * sc.s_bnd_bytes * 8.0 / hw.b_nd_bits;
  r.t_bnd_net = hw.b_net_bits
                    ? sc.n_sub * nspl * sc.s_bnd_bytes * 8.0 / *hw.b_net_bits
                    : 0.0;
  r.t_total = r.t_cmp + r.t_lat + r.t_bnd_node + r.t_bnd_net;
  r.rtr = 1.0 / r.t_total;
  return r;
}

PredictionCurve predict_curve(const HardwareProfile& hw,
                              const ScenarioProfile& sc,
                              const std::vector<int>& p_list) {
  if (p_list.empty()) throw UserError("predict_curve: empty p list");
  PredictionCurve c;
  c.rows.reserve(p_list.size());
  for (int p : p_list) c.rows.push_back(predict_step_time(hw, sc, p));
  speedup_efficiency(c.rows);

  c.regime = hw.b_net_bits ? AsymptoticRegime::BandwidthGrowth
                           : AsymptoticRegime::LatencyPlateau;

  // non-monotone: some row falls below an earlier row's rtr
  double run_max = 0.0;
  for (const PredictionRow& r : c.rows) {
    if (r.rtr + 1e-12 < run_max) c.rtr_non_monotone = true;
    run_max = std::max(run_max, r.rtr);
  }

  // saturation: sweep far beyond the requested range
  double sat = run_max;
  for (int p = 1; p <= (1 << 20); p *= 2)
    sat = std::max(sat, predict_step_time(hw, sc, p).rtr);
  c.saturation_rtr = sat;
  return c;
}

void speedup_efficiency(std::vector<PredictionRow>& rows) {
  const PredictionRow* base = nullptr;
  for (const PredictionRow& r : rows)
    if (r.p == 1) base = &r;
  if (base == nullptr)
    throw UserError("speedup_efficiency: table has no p=1 row");
  const double t1 = base->t_total;
  for (PredictionRow& r : rows) {
    r.speedup = t1 / r.t_total;
    r.efficiency = r.speedup / r.p;
  }
}

CalibrationResult calibrate(const std::vector<std::pair<int, double>>& measured,
                            const HardwareProfile& hw, const ScenarioProfile& sc,
                            const CalibrationUnknowns& unknowns) {
  // T(p) = T_1 * a(p) + T_lt * b(p) + S_bnd * c(p) with known coefficients.
  struct Term {
    bool active;
    double value; // current value when not active
  };
  const int n_unknown = (unknowns.t1 ? 1 : 0) + (unknowns.t_lt ? 1 : 0) +
                        (unknowns.s_bnd ? 1 : 0);
  if (n_unknown == 0) throw UserError("calibrate: no unknowns requested");
  if (static_cast<int>(measured.size()) < n_unknown)
    throw UserError("calibrate: underdetermined (fewer samples than unknowns)");
  {
    std::map<int, int> distinct;
    for (const auto& [p, t] : measured) {
      (void)t;
      distinct[p] = 1;
    }
    if (static_cast<int>(distinct.size()) < n_unknown)
      throw UserError("calibrate: underdetermined (p values repeat)");
  }

  auto coeff = [&](int p, double& a, double& b, double& c) {
    a = (1.0 + sc.f_ovr + sc.f_dmn(p)) / p;
    b = sc.n_sub * n_nb(p);
    const double nspl = sc.nspl(p);
    c = sc.n_sub * (nspl / p) * 8.0 / hw.b_nd_bits;
    if (hw.b_net_bits) c += sc.n_sub * nspl * 8.0 / *hw.b_net_bits;
  };

  // assemble the active-column least-squares system
  std::vector<std::array<double, 3>> rows;
  std::vector<double> rhs;
  for (const auto& [p, t] : measured) {
    double a, b, c;
    coeff(p, a, b, c);
    double y = t;
    std::array<double, 3> full{a, b, c};
    std::array<double, 3> row{0, 0, 0};
    int k = 0;
    if (unknowns.t1) row[k++] = full[0];
    else y -= hw.t1_s * full[0];
    if (unknowns.t_lt) row[k++] = full[1];
    else y -= hw.t_lt_s * full[1];
    if (unknowns.s_bnd) row[k++] = full[2];
    else y -= sc.s_bnd_bytes * full[2];
    rows.push_back(row);
    rhs.push_back(y);
  }

  // normal equations (at most 3x3)
  double ata[3][3] = {};
  double atb[3] = {};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int r = 0; r < n_unknown; ++r) {
      atb[r] += rows[i][r] * rhs[i];
      for (int c = 0; c < n_unknown; ++c) ata[r][c] += rows[i][r] * rows[i][c];
    }
  // gaussian elimination with partial pivoting
  int idx[3] = {0, 1, 2};
  for (int col = 0; col < n_unknown; ++col) {
    int piv = col;
    for (int r = col + 1; r < n_unknown; ++r)
      if (std::abs(ata[r][col]) > std::abs(ata[piv][col])) piv = r;
    std::swap(ata[col], ata[piv]);
    std::swap(atb[col], atb[piv]);
    std::swap(idx[col], idx[piv]);
    if (std::abs(ata[col][col]) < 1e-300)
      throw UserError("calibrate: singular system (samples do not separate the unknowns)");
    for (int r = col + 1; r < n_unknown; ++r) {
      const double f = ata[r][col] / ata[col][col];
      for (int c = col; c < n_unknown; ++c) ata[r][c] -= f * ata[col][c];
      atb[r] -= f * atb[col];
    }
  }
  double sol[3] = {};
  for (int r = n_unknown - 1; r >= 0; --r) {
    double v = atb[r];
    for (int c = r + 1; c < n_unknown; ++c) v -= ata[r][c] * sol[c];
    sol[r] = v / ata[r][r];
  }

  CalibrationResult out{hw, sc, 0.0};
  int k = 0;
  if (unknowns.t1) out.hw.t1_s = sol[k++];
  if (unknowns.t_lt) out.hw.t_lt_s = sol[k++];
  if (unknowns.s_bnd) out.sc.s_bnd_bytes = sol[k++];

  double sse = 0.0;
  for (const auto& [p, t] : measured) {
    const double r = t - predict_step_time(out.hw, out.sc, p).t_total;
    sse += r * r;
  }
  out.rms_residual_s = std::sqrt(sse / measured.size());
  return out;
}

double back_solve_t1(const HardwareProfile& hw, const ScenarioProfile& sc,
                     int p_ref, double rtr_ref) {
  if (rtr_ref <= 0.0) throw UserError("back_solve_t1: rtr must be positive");
  HardwareProfile h = hw;
  h.t1_s = 0.0;
  const double t_comm = predict_step_time(h, sc, p_ref).t_total;
  const double t_target = 1.0 / rtr_ref;
  const double f = 1.0 + sc.f_ovr + sc.f_dmn(p_ref);
  const double t1 = (t_target - t_comm) * p_ref / f;
  if (t1 <= 0.0)
    throw UserError("back_solve_t1: target rtr unreachable (communication alone is slower)");
  return t1;
}

HardwareProfile hardware_preset(const std::string& name) {
  // Node bandwidth is roughly half the wire rate, as measured for the
  // 100 Mbit case; shared topologies carry the wire rate as b_net.
  if (name == "10mbit-shared")
    return {"10mbit-shared", 0.8e-3, 5e6, 10e6, 1.0};
  if (name == "10mbit-switched")
    return {"10mbit-switched", 0.8e-3, 5e6, std::nullopt, 1.0};
  if (name == "100mbit-switched")
    return {"100mbit-switched", 0.8e-3, 50e6, std::nullopt, 1.0};
  if (name == "gbit-shared")
    return {"gbit-shared", 0.8e-3, 500e6, 1000e6, 1.0};
  if (name == "gbit-switched")
    return {"gbit-switched", 0.8e-3, 500e6, std::nullopt, 1.0};
  if (name == "supercomputer")
    // our reading of "more than a factor of ten lower latency"
    return {"supercomputer", 0.08e-3, 500e6, std::nullopt, 1.0};
  throw UserError("unknown hardware preset: " + name);
}

std::vector<std::string> hardware_preset_names() {
  return {"10mbit-shared",  "10mbit-switched", "100mbit-switched",
          "gbit-shared",    "gbit-switched",   "supercomputer"};
}

namespace {

std::map<std::string, std::string> parse_kv(const std::string& text,
                                            const char* what) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = true;
      for (char ch : line) blank = blank && std::isspace(static_cast<unsigned char>(ch));
      if (blank) continue;
      throw UserError(std::string(what) + " line " + std::to_string(line_no) +
                      ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

double to_double(const std::map<std::string, std::string>& kv,
                 const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw UserError("profile: malformed number for " + key);
  }
}

} // namespace

HardwareProfile load_hardware_profile(const std::string& text) {
  const auto kv = parse_kv(text, "hardware profile");
  HardwareProfile hw;
  if (auto it = kv.find("label"); it != kv.end()) hw.label = it->second;
  hw.t_lt_s = to_double(kv, "t_lt_ms", hw.t_lt_s * 1e3) * 1e-3;
  hw.b_nd_bits = to_double(kv, "b_nd_mbit", hw.b_nd_bits / 1e6) * 1e6;
  if (auto it = kv.find("b_net_mbit"); it != kv.end()) {
    if (it->second == "inf")
      hw.b_net_bits.reset();
    else
      hw.b_net_bits = to_double(kv, "b_net_mbit", 0.0) * 1e6;
  }
  hw.t1_s = to_double(kv, "t1_s", hw.t1_s);
  if (hw.t_lt_s <= 0 || hw.b_nd_bits <= 0 || hw.t1_s <= 0 ||
      (hw.b_net_bits && *hw.b_net_bits <= 0))
    throw UserError("hardware profile: parameters must be positive");
  if (hw.b_net_bits && *hw.b_net_bits < hw.b_nd_bits)
    throw UserError("hardware profile: b_net must be >= b_nd (or inf)");
  return hw;
}

HardwareProfile load_hardware_profile_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("cannot open hardware profile: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_hardware_profile(ss.str());
}

std::string serialize_hardware_profile(const HardwareProfile& hw) {
  std::ostringstream os;
  os.precision(17);
  os << "label=" << hw.label << '\n';
  os << "t_lt_ms=" << hw.t_lt_s * 1e3 << '\n';
  os << "b_nd_mbit=" << hw.b_nd_bits / 1e6 << '\n';
  if (hw.b_net_bits)
    os << "b_net_mbit=" << *hw.b_net_bits / 1e6 << '\n';
  else
    os << "b_net_mbit=inf\n";
  os << "t1_s=" << hw.t1_s << '\n';
  return os.str();
}

ScenarioProfile load_scenario_profile(const std::string& text) {
  const auto kv = parse_kv(text, "scenario profile");
  ScenarioProfile sc;
  if (auto it = kv.find("label"); it != kv.end()) sc.label = it->second;
  sc.n_sub = static_cast<int>(to_double(kv, "n_sub", sc.n_sub));
  sc.s_bnd_bytes = to_double(kv, "s_bnd_bytes", sc.s_bnd_bytes);
  sc.nspl_fit.amplitude = to_double(kv, "nspl_a", sc.nspl_fit.amplitude);
  sc.nspl_fit.exponent = to_double(kv, "nspl_alpha", sc.nspl_fit.exponent);
  sc.nspl_fit.offset_form = to_double(kv, "nspl_offset", 1.0) != 0.0;
  sc.f_ovr = to_double(kv, "f_ovr", 0.0);
  if (sc.n_sub < 1 || sc.s_bnd_bytes <= 0)
    throw UserError("scenario profile: n_sub >= 1 and s_bnd_bytes > 0 required");
  return sc;
}

ScenarioProfile load_scenario_profile_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UserError("cannot open scenario profile: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_scenario_profile(ss.str());
}

std::string serialize_scenario_profile(const ScenarioProfile& sc) {
  std::ostringstream os;
  os.precision(17);
  os << "label=" << sc.label << '\n';
  os << "n_sub=" << sc.n_sub << '\n';
  os << "s_bnd_bytes=" << sc.s_bnd_bytes << '\n';
  os << "nspl_a=" << sc.nspl_fit.amplitude << '\n';
  os << "nspl_alpha=" << sc.nspl_fit.exponent << '\n';
  os << "nspl_offset=" << (sc.nspl_fit.offset_form ? 1 : 0) << '\n';
  os << "f_ovr=" << sc.f_ovr << '\n';
  return os.str();
}

std::string prediction_csv(const std::vector<PredictionRow>& rows) {
  std::ostringstream os;
  os.precision(9);
  os << "p,T_cmp,T_lat,T_bnd_node,T_bnd_net,T_total,rtr,speedup,efficiency\n";
  for (const PredictionRow& r : rows)
    os << r.p << ',' << r.t_cmp << ',' << r.t_lat << ',' << r.t_bnd_node << ','
       << r.t_bnd_net << ',' << r.t_total << ',' << r.rtr << ',' << r.speedup
       << ',' << r.efficiency << '\n';
  return os.str();
}

} // namespace catsim
