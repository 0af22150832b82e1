#pragma once

#include <string>
#include <vector>

#include "flowhawk/packet.hpp"

namespace flowhawk {

struct CaptureResult {
  std::vector<RawPacket> packets;  // sorted by (timestamp, ordinal)
  uint64_t frames_total = 0;
  uint64_t non_ip_skipped = 0;
  uint64_t malformed_skipped = 0;  // truncated frames, non-initial fragments
};

/// Reads a pcap (0xA1B2C3D4 family) or pcapng (0x0A0D0D0A) capture and decodes
/// every IP frame; non-IP frames are counted and skipped. Supported link
/// layers: Ethernet (with 802.1Q tags), raw IP and null/loopback.
CaptureResult ingest_capture(const std::string& path);

}  // namespace flowhawk
