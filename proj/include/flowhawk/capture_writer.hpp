#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowhawk {

/// Description of one IPv4 frame for the classic-pcap writer. Used to build
/// deterministic capture fixtures.
struct PacketSpec {
  int64_t ts_us = 0;
  std::string src_ip = "10.0.0.1";
  std::string dst_ip = "10.0.0.2";
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  uint8_t protocol = 6;  // 6 tcp, 17 udp, anything else raw over IP
  uint8_t tcp_flags = 0;
  uint32_t tcp_seq = 0;
  uint32_t tcp_ack = 0;
  uint16_t tcp_window = 8192;
  uint8_t ttl = 64;
  std::vector<uint8_t> payload;
};

/// Writes Ethernet/IPv4 frames to a microsecond classic pcap file.
void write_pcap(const std::string& path, const std::vector<PacketSpec>& packets);

/// Writes a valid capture header with zero frames.
void write_empty_pcap(const std::string& path);

std::vector<uint8_t> ascii_payload(const std::string& text);

}  // namespace flowhawk
