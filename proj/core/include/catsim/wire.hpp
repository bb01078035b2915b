#pragma once

#include "catsim/ca.hpp"
#include "catsim/ids.hpp"

#include <cstdint>
#include <vector>

namespace catsim {

/// One boundary-exchange payload between an ordered pair of neighbouring
/// domains: the cut-adjacent cell strips of every shared split link, plus
/// (second exchange) the vehicles that moved into the receiver's cells.
struct BoundaryMessage {
  DomainId sender = 0;
  DomainId receiver = 0;
  std::uint32_t step = 0;
  std::uint8_t exchange = 1; // 1 after lane changes, 2 after movement

  struct LinkStrip {
    LinkId link = 0;
    std::uint8_t lane_count = 1;
    std::uint8_t strip_len = 0; // cells per lane
    std::int32_t first_cell = 0;
    std::vector<Cell> cells; // lane-major, lane_count * strip_len
  };
  std::vector<LinkStrip> strips;   // sorted by link id
  std::vector<Migrant> migrants;   // sorted by vehicle id

  bool operator==(const BoundaryMessage& other) const;
};

inline constexpr std::uint8_t kWireVersion = 1;

/// Binary wire format: version byte first, then all fields in declaration
/// order, integers little-endian. Length prefixes are added by transports.
std::vector<std::uint8_t> encode_message(const BoundaryMessage& m);
BoundaryMessage decode_message(const std::uint8_t* data, std::size_t size);

} // namespace catsim
