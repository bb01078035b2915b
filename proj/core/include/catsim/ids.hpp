#pragma once

#include <cstdint>

namespace catsim {

using NodeId = std::int32_t;
using LinkId = std::int32_t;
using VehicleId = std::int32_t;
using DomainId = std::int32_t;

inline constexpr double kCellLengthM = 7.5;

// Interaction range of all driving rules, in cells. Gap scans, lane-change
// windows and boundary mirrors are all bounded by this; the split-link
// protocol is only correct because nothing looks further.
inline constexpr int kInteractionRange = 5;

// Hard cap on per-link maximum speed (cells/step); equals the interaction
// range, so a vehicle can never out-drive what its domain can see.
inline constexpr int kMaxVmax = 5;

// Cross-domain links shorter than this are not halved; the downstream
// domain owns the whole link and the upstream side keeps a head mirror.
inline constexpr int kMinSplitCells = 2 * kInteractionRange;

inline constexpr VehicleId kNoVehicle = -1;

} // namespace catsim
