#pragma once

#include <random>
#include <string>
#include <vector>

#include "flowhawk/capture_writer.hpp"
#include "flowhawk/packet.hpp"
#include "flowhawk/record_io.hpp"

namespace testsupport {

// Synthetic labeled traffic: HTTP/DNS background on ports 80/53, SYN bursts
// to port 8080 ("DoS") and heavy uploads to port 4444 ("Exploits"). Ground
// truth is recoverable from the destination port.
inline std::vector<flowhawk::PacketSpec> synthetic_traffic(int flows, uint64_t seed,
                                                           int64_t t0_us = 1'500'000'000'000'000) {
  using namespace flowhawk;
  using namespace flowhawk::tcpflag;
  std::mt19937_64 rng(seed);
  std::vector<PacketSpec> pkts;
  int64_t t = t0_us;

  auto tcp = [&](int64_t ts, const std::string& s, uint16_t sp, const std::string& d, uint16_t dp,
                 uint8_t flags, uint32_t seq, const std::string& payload = "") {
    PacketSpec p;
    p.ts_us = ts;
    p.src_ip = s;
    p.src_port = sp;
    p.dst_ip = d;
    p.dst_port = dp;
    p.protocol = 6;
    p.tcp_flags = flags;
    p.tcp_seq = seq;
    p.ttl = 64;
    p.payload = ascii_payload(payload);
    return p;
  };

  for (int f = 0; f < flows; ++f) {
    t += 2000 + static_cast<int64_t>(rng() % 3000);
    const std::string client = "10.0." + std::to_string(rng() % 4) + "." +
                               std::to_string(1 + rng() % 200);
    const uint16_t sport = static_cast<uint16_t>(20000 + rng() % 20000);
    const int kind = f % 5;  // 0,1,2 normal; 3 dos; 4 exploit
    if (kind <= 1) {         // http exchange
      const std::string server = "10.9.0." + std::to_string(1 + rng() % 3);
      int64_t ft = t;
      uint32_t seq = static_cast<uint32_t>(rng());
      pkts.push_back(tcp(ft, client, sport, server, 80, kSyn, seq));
      pkts.push_back(tcp(ft += 300, server, 80, client, sport, kSyn | kAck, 1));
      pkts.push_back(tcp(ft += 200, client, sport, server, 80, kAck, seq + 1));
      pkts.push_back(tcp(ft += 400, client, sport, server, 80, kAck | kPsh, seq + 1,
                         "GET /a HTTP/1.1\r\nHost: s\r\n\r\n"));
      pkts.push_back(tcp(ft += 900, server, 80, client, sport, kAck | kPsh, 2,
                         "HTTP/1.1 200 OK\r\nContent-Length: 64\r\n\r\n" +
                             std::string(64, 'x')));
      pkts.push_back(tcp(ft += 500, client, sport, server, 80, kFin | kAck, seq + 30));
      pkts.push_back(tcp(ft += 300, server, 80, client, sport, kFin | kAck, 110));
      pkts.push_back(tcp(ft += 200, client, sport, server, 80, kAck, seq + 31));
    } else if (kind == 2) {  // dns query/answer
      const std::string server = "10.9.0.53";
      PacketSpec q;
      q.ts_us = t;
      q.src_ip = client;
      q.src_port = sport;
      q.dst_ip = server;
      q.dst_port = 53;
      q.protocol = 17;
      q.payload = ascii_payload("query" + std::to_string(f));
      pkts.push_back(q);
      PacketSpec a = q;
      a.ts_us = t + 700;
      std::swap(a.src_ip, a.dst_ip);
      a.src_port = 53;
      a.dst_port = sport;
      a.payload = ascii_payload("answer-to-" + std::to_string(f) + std::string(40, 'r'));
      pkts.push_back(a);
    } else if (kind == 3) {  // syn burst at the flood target
      const std::string target = "10.9.0.200";
      int64_t ft = t;
      for (int burst = 0; burst < 3; ++burst)
        pkts.push_back(tcp(ft += 60, client, sport, target, 8080, kSyn,
                           static_cast<uint32_t>(rng()), ""));
    } else {  // heavy upload to a suspicious port
      const std::string target = "10.9.0.66";
      int64_t ft = t;
      uint32_t seq = static_cast<uint32_t>(rng());
      pkts.push_back(tcp(ft, client, sport, target, 4444, kSyn, seq));
      pkts.push_back(tcp(ft += 250, target, 4444, client, sport, kSyn | kAck, 7));
      pkts.push_back(tcp(ft += 180, client, sport, target, 4444, kAck, seq + 1));
      for (int chunk = 0; chunk < 4; ++chunk)
        pkts.push_back(tcp(ft += 400, client, sport, target, 4444, kAck | kPsh,
                           seq + 1 + static_cast<uint32_t>(chunk) * 900,
                           std::string(900, static_cast<char>('!' + chunk))));
      pkts.push_back(tcp(ft += 300, client, sport, target, 4444, kRst, seq + 4000));
    }
  }
  return pkts;
}

// Ground-truth labeling by construction: the destination port encodes the
// class the generator used.
inline void label_fixture_records(std::vector<flowhawk::FlowRecord>& records) {
  for (auto& r : records) {
    if (r.dport == 8080) {
      r.attack_cat = "DoS";
      r.label = 1;
    } else if (r.dport == 4444) {
      r.attack_cat = "Exploits";
      r.label = 1;
    } else {
      r.attack_cat = "";
      r.label = 0;
    }
  }
}

}  // namespace testsupport
