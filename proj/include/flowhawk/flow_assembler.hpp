#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowhawk/flow_record.hpp"
#include "flowhawk/packet.hpp"
#include "flowhawk/record_io.hpp"

namespace flowhawk {

struct FlowConfig {
  int64_t idle_timeout_us = 60'000'000;  // flows close after this much silence
};

struct AssemblyResult {
  std::vector<FlowRecord> records;       // record_index assigned in etime order
  std::vector<RegistryEntry> registry;   // parallel to records
};

/// Folds timestamp-ordered packets into bidirectional flows keyed by the
/// canonical 5-tuple and fills features 1-35. TCP flows close on FIN from both
/// sides or on RST (pure control packets after the close are still absorbed);
/// every flow also closes after the idle timeout. Window features 36-47 stay
/// unset here.
AssemblyResult assemble_flows(const std::vector<RawPacket>& packets, const FlowConfig& cfg,
                              const std::string& capture_path);

/// Destination-port service lookup used before any application-layer
/// refinement; returns "-" for unknown ports.
std::string port_service(uint16_t port);

}  // namespace flowhawk
