#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowhawk/record_io.hpp"

namespace flowhawk {

struct BacktrackResult {
  std::string rule;                 // Wireshark display filter
  std::vector<uint64_t> ordinals;   // 1-based frame numbers within the capture
  std::string capture;
};

/// Renders the display-filter rule for one registry entry:
///   ip.addr==A && ip.addr==B && tcp.port==p && tcp.port==q
///     && frame.time >= "YYYY-MM-DD hh:mm:ss.ffffff" && frame.time <= "..."
/// Port clauses use the transport name (tcp/udp); portless protocols carry the
/// protocol token instead. Time bounds are inclusive UTC microseconds.
std::string filter_rule(const RegistryEntry& entry);

/// Looks one record up in the registry; unknown indices are lookup errors.
BacktrackResult backtrack(int64_t record_index, const std::vector<RegistryEntry>& registry);

std::string format_frame_time(int64_t epoch_us);

}  // namespace flowhawk
