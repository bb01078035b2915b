#include "catsim/wire.hpp"

#include "catsim/errors.hpp"

#include <cstring>

namespace catsim {

bool BoundaryMessage::operator==(const BoundaryMessage& other) const {
  auto plan_eq = [](const Plan& a, const Plan& b) {
    return a.vehicle_id == b.vehicle_id && a.departure_s == b.departure_s &&
           a.entry_cell == b.entry_cell && a.route == b.route &&
           a.circular == b.circular;
  };
  if (sender != other.sender || receiver != other.receiver ||
      step != other.step || exchange != other.exchange ||
      strips.size() != other.strips.size() ||
      migrants.size() != other.migrants.size())
    return false;
  for (std::size_t i = 0; i < strips.size(); ++i) {
    const LinkStrip &a = strips[i], &b = other.strips[i];
    if (a.link != b.link || a.lane_count != b.lane_count ||
        a.strip_len != b.strip_len || a.first_cell != b.first_cell ||
        a.cells != b.cells)
      return false;
  }
  for (std::size_t i = 0; i < migrants.size(); ++i) {
    const Migrant &a = migrants[i], &b = other.migrants[i];
    if (a.veh.id != b.veh.id || a.veh.velocity != b.veh.velocity ||
        a.veh.link_idx != b.veh.link_idx || a.veh.lane != b.veh.lane ||
        a.veh.cell != b.veh.cell || a.veh.route_pos != b.veh.route_pos ||
        !plan_eq(a.plan, b.plan))
      return false;
  }
  return true;
}

namespace {

class Writer {
public:
  std::vector<std::uint8_t> buf;

  void u8(std::uint8_t v) { buf.push_back(v); }
  void i8(std::int8_t v) { buf.push_back(static_cast<std::uint8_t>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xff);
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
};

class Reader {
public:
  Reader(const std::uint8_t* d, std::size_t n) : data_(d), size_(n) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  bool done() const { return pos_ == size_; }

private:
  void need(std::size_t n) {
    if (pos_ + n > size_) throw InternalError("boundary message truncated");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> encode_message(const BoundaryMessage& m) {
  Writer w;
  w.u8(kWireVersion);
  w.i32(m.sender);
  w.i32(m.receiver);
  w.u32(m.step);
  w.u8(m.exchange);
  w.u32(static_cast<std::uint32_t>(m.strips.size()));
  for (const auto& s : m.strips) {
    w.i32(s.link);
    w.u8(s.lane_count);
    w.u8(s.strip_len);
    w.i32(s.first_cell);
    for (const Cell& c : s.cells) {
      w.i32(c.vid);
      w.i8(c.velocity);
    }
  }
  w.u32(static_cast<std::uint32_t>(m.migrants.size()));
  for (const Migrant& mg : m.migrants) {
    w.i32(mg.veh.id);
    w.i8(static_cast<std::int8_t>(mg.veh.velocity));
    w.i32(static_cast<std::int32_t>(mg.veh.link_idx));
    w.u8(static_cast<std::uint8_t>(mg.veh.lane));
    w.i32(mg.veh.cell);
    w.i32(mg.veh.route_pos);
    w.u8(mg.plan.circular ? 1 : 0);
    w.i32(mg.plan.departure_s);
    w.i32(mg.plan.entry_cell);
    w.u32(static_cast<std::uint32_t>(mg.plan.route.size()));
    for (LinkId l : mg.plan.route) w.i32(l);
  }
  return std::move(w.buf);
}

BoundaryMessage decode_message(const std::uint8_t* data, std::size_t size) {
  Reader r(data, size);
  const std::uint8_t version = r.u8();
  if (version != kWireVersion)
    throw InternalError("boundary message: unsupported wire version " +
                        std::to_string(version));
  BoundaryMessage m;
  m.sender = r.i32();
  m.receiver = r.i32();
  m.step = r.u32();
  m.exchange = r.u8();
  const std::uint32_t n_strips = r.u32();
  m.strips.resize(n_strips);
  for (auto& s : m.strips) {
    s.link = r.i32();
    s.lane_count = r.u8();
    s.strip_len = r.u8();
    s.first_cell = r.i32();
    s.cells.resize(static_cast<std::size_t>(s.lane_count) * s.strip_len);
    for (Cell& c : s.cells) {
      c.vid = r.i32();
      c.velocity = r.i8();
    }
  }
  const std::uint32_t n_migrants = r.u32();
  m.migrants.resize(n_migrants);
  for (Migrant& mg : m.migrants) {
    mg.veh.id = r.i32();
    mg.veh.velocity = r.i8();
    mg.veh.link_idx = static_cast<std::size_t>(r.i32());
    mg.veh.lane = r.u8();
    mg.veh.cell = r.i32();
    mg.veh.route_pos = r.i32();
    mg.plan.circular = r.u8() != 0;
    mg.plan.departure_s = r.i32();
    mg.plan.entry_cell = r.i32();
    const std::uint32_t route_len = r.u32();
    mg.plan.route.resize(route_len);
    for (LinkId& l : mg.plan.route) l = r.i32();
    mg.plan.vehicle_id = mg.veh.id;
  }
  if (!r.done()) throw InternalError("boundary message: trailing bytes");
  return m;
}

} // namespace catsim
