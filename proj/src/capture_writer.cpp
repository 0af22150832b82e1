#include "flowhawk/capture_writer.hpp"

#include <cstring>
#include <fstream>

#include "flowhawk/errors.hpp"

namespace flowhawk {

namespace {

void put_u16be(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xFF));
}

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
  put_u16be(out, static_cast<uint16_t>(v >> 16));
  put_u16be(out, static_cast<uint16_t>(v & 0xFFFF));
}

uint32_t parse_ipv4(const std::string& s) {
  unsigned a, b, c, d;
  if (std::sscanf(s.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4 || a > 255 || b > 255 ||
      c > 255 || d > 255)
    throw ConfigError("pcap writer: bad IPv4 address " + s);
  return (a << 24) | (b << 16) | (c << 8) | d;
}

uint16_t checksum16(const uint8_t* data, size_t len) {
  uint32_t sum = 0;
  for (size_t i = 0; i + 1 < len; i += 2) sum += static_cast<uint32_t>(data[i] << 8 | data[i + 1]);
  if (len % 2) sum += static_cast<uint32_t>(data[len - 1] << 8);
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return static_cast<uint16_t>(~sum);
}

std::vector<uint8_t> build_frame(const PacketSpec& p) {
  std::vector<uint8_t> f;
  // ethernet
  const uint8_t dst_mac[6] = {0x02, 0, 0, 0, 0, 0x02};
  const uint8_t src_mac[6] = {0x02, 0, 0, 0, 0, 0x01};
  f.insert(f.end(), dst_mac, dst_mac + 6);
  f.insert(f.end(), src_mac, src_mac + 6);
  put_u16be(f, 0x0800);

  // transport
  std::vector<uint8_t> transport;
  if (p.protocol == 6) {
    put_u16be(transport, p.src_port);
    put_u16be(transport, p.dst_port);
    put_u32be(transport, p.tcp_seq);
    put_u32be(transport, p.tcp_ack);
    transport.push_back(5 << 4);  // data offset 20
    transport.push_back(p.tcp_flags);
    put_u16be(transport, p.tcp_window);
    put_u16be(transport, 0);  // checksum left zero
    put_u16be(transport, 0);  // urgent
    transport.insert(transport.end(), p.payload.begin(), p.payload.end());
  } else if (p.protocol == 17) {
    put_u16be(transport, p.src_port);
    put_u16be(transport, p.dst_port);
    put_u16be(transport, static_cast<uint16_t>(8 + p.payload.size()));
    put_u16be(transport, 0);
    transport.insert(transport.end(), p.payload.begin(), p.payload.end());
  } else {
    transport = p.payload;
  }

  // ipv4
  std::vector<uint8_t> ip;
  ip.push_back(0x45);
  ip.push_back(0);
  put_u16be(ip, static_cast<uint16_t>(20 + transport.size()));
  put_u16be(ip, 0);       // id
  put_u16be(ip, 0x4000);  // don't fragment
  ip.push_back(p.ttl);
  ip.push_back(p.protocol);
  put_u16be(ip, 0);  // checksum placeholder
  put_u32be(ip, parse_ipv4(p.src_ip));
  put_u32be(ip, parse_ipv4(p.dst_ip));
  const uint16_t csum = checksum16(ip.data(), ip.size());
  ip[10] = static_cast<uint8_t>(csum >> 8);
  ip[11] = static_cast<uint8_t>(csum & 0xFF);

  f.insert(f.end(), ip.begin(), ip.end());
  f.insert(f.end(), transport.begin(), transport.end());
  return f;
}

template <typename T>
void put_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_header(std::ofstream& out) {
  put_le<uint32_t>(out, 0xA1B2C3D4);
  put_le<uint16_t>(out, 2);
  put_le<uint16_t>(out, 4);
  put_le<int32_t>(out, 0);
  put_le<uint32_t>(out, 0);
  put_le<uint32_t>(out, 65535);
  put_le<uint32_t>(out, 1);  // ethernet
}

}  // namespace

void write_pcap(const std::string& path, const std::vector<PacketSpec>& packets) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write capture file: " + path);
  write_header(out);
  for (const auto& p : packets) {
    const std::vector<uint8_t> frame = build_frame(p);
    put_le<uint32_t>(out, static_cast<uint32_t>(p.ts_us / 1000000));
    put_le<uint32_t>(out, static_cast<uint32_t>(p.ts_us % 1000000));
    put_le<uint32_t>(out, static_cast<uint32_t>(frame.size()));
    put_le<uint32_t>(out, static_cast<uint32_t>(frame.size()));
    out.write(reinterpret_cast<const char*>(frame.data()),
              static_cast<std::streamsize>(frame.size()));
  }
}

void write_empty_pcap(const std::string& path) { write_pcap(path, {}); }

std::vector<uint8_t> ascii_payload(const std::string& text) {
  return std::vector<uint8_t>(text.begin(), text.end());
}

}  // namespace flowhawk
