#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace flowhawk {

namespace tcpflag {
inline constexpr uint8_t kFin = 0x01;
inline constexpr uint8_t kSyn = 0x02;
inline constexpr uint8_t kRst = 0x04;
inline constexpr uint8_t kPsh = 0x08;
inline constexpr uint8_t kAck = 0x10;
inline constexpr uint8_t kUrg = 0x20;
}  // namespace tcpflag

/// One decoded IP packet. Timestamps are epoch microseconds; `ordinal` is the
/// 1-based frame number within its capture file (the packet-analyzer
/// numbering), which the backtracking registry preserves.
struct RawPacket {
  int64_t ts_us = 0;
  std::string src_ip;
  std::string dst_ip;
  uint16_t src_port = 0;
  uint16_t dst_port = 0;
  uint8_t ip_protocol = 0;
  bool has_ports = false;  // true iff TCP or UDP
  std::optional<uint8_t> tcp_flags;
  std::optional<uint32_t> tcp_seq;
  uint16_t tcp_window = 0;
  uint8_t ttl = 0;
  std::vector<uint8_t> payload;
  uint32_t wire_len = 0;
  uint64_t ordinal = 0;

  double ts_seconds() const { return static_cast<double>(ts_us) / 1e6; }
};

/// Canonical bidirectional flow key: direction is fixed by whichever endpoint
/// sent the first packet, and mirrored 5-tuples compare equal.
struct FlowKey {
  std::string src_ip;
  uint16_t src_port = 0;
  std::string dst_ip;
  uint16_t dst_port = 0;
  uint8_t protocol = 0;

  bool operator==(const FlowKey&) const = default;
};

/// Order-independent map key for the two directions of one flow.
struct BidirKey {
  std::string ip_a, ip_b;
  uint16_t port_a = 0, port_b = 0;
  uint8_t protocol = 0;

  static BidirKey of(const RawPacket& p) {
    BidirKey k;
    k.protocol = p.ip_protocol;
    if (std::tie(p.src_ip, p.src_port) <= std::tie(p.dst_ip, p.dst_port)) {
      k.ip_a = p.src_ip;
      k.port_a = p.src_port;
      k.ip_b = p.dst_ip;
      k.port_b = p.dst_port;
    } else {
      k.ip_a = p.dst_ip;
      k.port_a = p.dst_port;
      k.ip_b = p.src_ip;
      k.port_b = p.src_port;
    }
    return k;
  }

  bool operator==(const BidirKey&) const = default;
  bool operator<(const BidirKey& o) const {
    return std::tie(ip_a, port_a, ip_b, port_b, protocol) <
           std::tie(o.ip_a, o.port_a, o.ip_b, o.port_b, o.protocol);
  }
};

/// Lowercase protocol-suite name for the CSV ("tcp", "udp", ...).
std::string protocol_name(uint8_t ip_protocol);

}  // namespace flowhawk
