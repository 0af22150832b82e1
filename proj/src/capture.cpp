#include "flowhawk/capture.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

#include "flowhawk/errors.hpp"

namespace flowhawk {

namespace {

constexpr uint32_t kPcapMagicUs = 0xA1B2C3D4;
constexpr uint32_t kPcapMagicUsSwapped = 0xD4C3B2A1;
constexpr uint32_t kPcapMagicNs = 0xA1B23C4D;
constexpr uint32_t kPcapMagicNsSwapped = 0x4D3CB2A1;
constexpr uint32_t kPcapngMagic = 0x0A0D0D0A;

constexpr uint16_t kLinkNull = 0;
constexpr uint16_t kLinkEthernet = 1;
constexpr uint16_t kLinkRaw = 101;

struct Cursor {
  const uint8_t* data;
  size_t size;
  size_t at = 0;
  bool swap = false;

  bool has(size_t n) const { return at + n <= size; }
  uint8_t u8() { return data[at++]; }
  uint16_t u16() {
    uint16_t v;
    std::memcpy(&v, data + at, 2);
    at += 2;
    return swap ? static_cast<uint16_t>(__builtin_bswap16(v)) : v;
  }
  uint32_t u32() {
    uint32_t v;
    std::memcpy(&v, data + at, 4);
    at += 4;
    return swap ? __builtin_bswap32(v) : v;
  }
  void skip(size_t n) { at += n; }
};

uint16_t be16(const uint8_t* p) { return static_cast<uint16_t>(p[0] << 8 | p[1]); }
uint32_t be32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) << 24 | static_cast<uint32_t>(p[1]) << 16 |
         static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
}

std::string ipv4_to_string(const uint8_t* p) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", p[0], p[1], p[2], p[3]);
  return buf;
}

// Full uncompressed lowercase form; deterministic and filter-compatible.
std::string ipv6_to_string(const uint8_t* p) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%x:%x:%x:%x:%x:%x:%x:%x", be16(p), be16(p + 2), be16(p + 4),
                be16(p + 6), be16(p + 8), be16(p + 10), be16(p + 12), be16(p + 14));
  return buf;
}

// Decodes the IP layer (and transport headers) of one frame; returns false
// when the frame is not IP.
bool decode_ip(const uint8_t* data, size_t len, RawPacket& out, bool& malformed) {
  if (len < 1) {
    malformed = true;
    return false;
  }
  const uint8_t version = data[0] >> 4;
  size_t transport_at = 0;
  uint8_t proto = 0;
  if (version == 4) {
    if (len < 20) {
      malformed = true;
      return false;
    }
    const size_t ihl = static_cast<size_t>(data[0] & 0x0F) * 4;
    if (ihl < 20 || len < ihl) {
      malformed = true;
      return false;
    }
    const uint16_t frag = be16(data + 6);
    if ((frag & 0x1FFF) != 0) {  // non-initial fragment: no transport header
      malformed = true;
      return false;
    }
    out.ttl = data[8];
    proto = data[9];
    out.src_ip = ipv4_to_string(data + 12);
    out.dst_ip = ipv4_to_string(data + 16);
    const size_t total = be16(data + 2);
    if (total >= ihl && total <= len) len = total;  // drop link-layer padding
    transport_at = ihl;
  } else if (version == 6) {
    if (len < 40) {
      malformed = true;
      return false;
    }
    proto = data[6];  // next header; extension chains are out of scope
    out.ttl = data[7];
    out.src_ip = ipv6_to_string(data + 8);
    out.dst_ip = ipv6_to_string(data + 24);
    transport_at = 40;
  } else {
    return false;
  }

  out.ip_protocol = proto;
  const uint8_t* tp = data + transport_at;
  const size_t tlen = len - transport_at;
  if (proto == 6 && tlen >= 20) {  // TCP
    out.src_port = be16(tp);
    out.dst_port = be16(tp + 2);
    out.has_ports = true;
    out.tcp_seq = be32(tp + 4);
    out.tcp_flags = tp[13];
    out.tcp_window = be16(tp + 14);
    const size_t doff = static_cast<size_t>(tp[12] >> 4) * 4;
    if (doff >= 20 && tlen >= doff)
      out.payload.assign(tp + doff, tp + tlen);
  } else if (proto == 17 && tlen >= 8) {  // UDP
    out.src_port = be16(tp);
    out.dst_port = be16(tp + 2);
    out.has_ports = true;
    out.payload.assign(tp + 8, tp + tlen);
  } else {
    out.payload.assign(tp, tp + tlen);
  }
  return true;
}

// Peels the link layer down to the IP header.
bool decode_frame(uint16_t linktype, const uint8_t* data, size_t len, RawPacket& out,
                  bool& malformed) {
  switch (linktype) {
    case kLinkEthernet: {
      if (len < 14) {
        malformed = true;
        return false;
      }
      size_t at = 12;
      uint16_t ethertype = be16(data + at);
      at += 2;
      while (ethertype == 0x8100 || ethertype == 0x88A8) {  // VLAN tags
        if (len < at + 4) {
          malformed = true;
          return false;
        }
        ethertype = be16(data + at + 2);
        at += 4;
      }
      if (ethertype != 0x0800 && ethertype != 0x86DD) return false;
      return decode_ip(data + at, len - at, out, malformed);
    }
    case kLinkRaw:
      return decode_ip(data, len, out, malformed);
    case kLinkNull: {
      if (len < 4) {
        malformed = true;
        return false;
      }
      return decode_ip(data + 4, len - 4, out, malformed);
    }
    default:
      throw FormatError("unsupported link-layer type " + std::to_string(linktype));
  }
}

void read_classic_pcap(Cursor& cur, CaptureResult& res) {
  const uint32_t magic = cur.u32();
  cur.swap = (magic == kPcapMagicUsSwapped || magic == kPcapMagicNsSwapped);
  const bool nanos = (magic == kPcapMagicNs || magic == kPcapMagicNsSwapped);
  cur.skip(2 + 2 + 4 + 4 + 4);  // version, thiszone, sigfigs, snaplen
  const uint16_t linktype = static_cast<uint16_t>(cur.u32() & 0xFFFF);

  uint64_t ordinal = 0;
  while (cur.has(16)) {
    const uint32_t ts_sec = cur.u32();
    const uint32_t ts_frac = cur.u32();
    const uint32_t incl = cur.u32();
    const uint32_t orig = cur.u32();
    ++ordinal;
    ++res.frames_total;
    if (!cur.has(incl)) {
      ++res.malformed_skipped;
      break;
    }
    RawPacket pkt;
    pkt.ts_us = static_cast<int64_t>(ts_sec) * 1000000 +
                (nanos ? ts_frac / 1000 : ts_frac);
    pkt.wire_len = orig;
    pkt.ordinal = ordinal;
    bool malformed = false;
    if (decode_frame(linktype, cur.data + cur.at, incl, pkt, malformed)) {
      res.packets.push_back(std::move(pkt));
    } else if (malformed) {
      ++res.malformed_skipped;
    } else {
      ++res.non_ip_skipped;
    }
    cur.skip(incl);
  }
}

void read_pcapng(Cursor& cur, CaptureResult& res) {
  struct Interface {
    uint16_t linktype = kLinkEthernet;
    uint64_t ticks_per_second = 1000000;
  };
  std::vector<Interface> interfaces;
  uint64_t ordinal = 0;

  while (cur.has(12)) {
    const size_t block_start = cur.at;
    const uint32_t type = cur.u32();
    uint32_t total_len = cur.u32();
    if (type == kPcapngMagic) {  // section header resets endianness
      const uint32_t bom = cur.u32();
      if (bom == 0x4D3C2B1A) {
        cur.swap = !cur.swap;
        total_len = __builtin_bswap32(total_len);
      } else if (bom != 0x1A2B3C4D) {
        throw FormatError("pcapng: bad byte-order magic");
      }
      interfaces.clear();
    } else if (type == 0x00000001) {  // interface description
      Interface iface;
      iface.linktype = cur.u16();
      cur.skip(2 + 4);  // reserved, snaplen
      size_t remaining = total_len - 20;
      while (remaining >= 4 && cur.has(4)) {
        const uint16_t code = cur.u16();
        const uint16_t olen = cur.u16();
        const size_t padded = (olen + 3u) & ~3u;
        if (code == 0 || !cur.has(padded)) break;
        if (code == 9 && olen >= 1) {  // if_tsresol
          const uint8_t r = cur.data[cur.at];
          iface.ticks_per_second = (r & 0x80) ? (1ull << (r & 0x7F)) : [](int p) {
            uint64_t v = 1;
            while (p-- > 0) v *= 10;
            return v;
          }(r);
        }
        cur.skip(padded);
        remaining -= 4 + padded;
      }
      interfaces.push_back(iface);
    } else if (type == 0x00000006) {  // enhanced packet block
      const uint32_t iface_id = cur.u32();
      const uint32_t ts_high = cur.u32();
      const uint32_t ts_low = cur.u32();
      const uint32_t captured = cur.u32();
      const uint32_t original = cur.u32();
      ++ordinal;
      ++res.frames_total;
      const Interface iface =
          iface_id < interfaces.size() ? interfaces[iface_id] : Interface{};
      if (!cur.has(captured)) {
        ++res.malformed_skipped;
        break;
      }
      RawPacket pkt;
      const uint64_t ticks = (static_cast<uint64_t>(ts_high) << 32) | ts_low;
      pkt.ts_us = static_cast<int64_t>(
          static_cast<double>(ticks) * 1e6 / static_cast<double>(iface.ticks_per_second));
      pkt.wire_len = original;
      pkt.ordinal = ordinal;
      bool malformed = false;
      if (decode_frame(iface.linktype, cur.data + cur.at, captured, pkt, malformed))
        res.packets.push_back(std::move(pkt));
      else if (malformed)
        ++res.malformed_skipped;
      else
        ++res.non_ip_skipped;
    }
    // blocks are self-sized; anything unrecognized is skipped wholesale
    if (total_len < 12 || block_start + total_len > cur.size)
      throw FormatError("pcapng: bad block length");
    cur.at = block_start + total_len;
  }
}

}  // namespace

std::string protocol_name(uint8_t p) {
  switch (p) {
    case 1: return "icmp";
    case 2: return "igmp";
    case 6: return "tcp";
    case 17: return "udp";
    case 47: return "gre";
    case 50: return "esp";
    case 58: return "icmpv6";
    case 89: return "ospf";
    case 132: return "sctp";
    default: return "proto_" + std::to_string(p);
  }
}

CaptureResult ingest_capture(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open capture file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  CaptureResult res;
  if (bytes.empty()) return res;
  if (bytes.size() < 4) throw FormatError("capture too short for a magic number: " + path);

  Cursor cur{bytes.data(), bytes.size()};
  uint32_t magic;
  std::memcpy(&magic, bytes.data(), 4);
  if (magic == kPcapMagicUs || magic == kPcapMagicUsSwapped || magic == kPcapMagicNs ||
      magic == kPcapMagicNsSwapped) {
    read_classic_pcap(cur, res);
  } else if (magic == kPcapngMagic) {
    read_pcapng(cur, res);
  } else {
    throw FormatError("not a pcap or pcapng capture: " + path);
  }

  std::stable_sort(res.packets.begin(), res.packets.end(),
                   [](const RawPacket& a, const RawPacket& b) {
                     return std::tie(a.ts_us, a.ordinal) < std::tie(b.ts_us, b.ordinal);
                   });
  return res;
}

}  // namespace flowhawk
