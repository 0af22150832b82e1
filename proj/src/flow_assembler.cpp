#include "flowhawk/flow_assembler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "flowhawk/errors.hpp"

namespace flowhawk {

namespace {

struct ActiveFlow {
  std::string src_ip, dst_ip;
  uint16_t src_port = 0, dst_port = 0;
  uint8_t protocol = 0;
  std::vector<size_t> packet_idx;  // into the ingest vector, time order
  int64_t last_ts_us = 0;
  bool fin_src = false, fin_dst = false, rst = false;
  bool syn_src = false, synack_dst = false, ack_src = false;
  bool closing = false;

  bool from_source(const RawPacket& p) const {
    return p.src_ip == src_ip && p.src_port == src_port;
  }
};

bool is_http_method_line(const std::string& line) {
  static const char* kMethods[] = {"GET ",     "POST ",  "HEAD ",    "PUT ",  "DELETE ",
                                   "OPTIONS ", "TRACE ", "CONNECT ", "PATCH "};
  for (const char* m : kMethods)
    if (line.rfind(m, 0) == 0) return line.find(" HTTP/") != std::string::npos;
  return false;
}

std::vector<std::string> payload_lines(const std::vector<uint8_t>& payload) {
  std::vector<std::string> lines;
  std::string cur;
  for (uint8_t b : payload) {
    if (b == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(b));
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));
  return lines;
}

bool is_ftp_command_line(const std::string& line) {
  size_t n = 0;
  while (n < line.size() && line[n] != ' ' && line[n] != '\r') ++n;
  if (n < 3 || n > 4) return false;
  for (size_t i = 0; i < n; ++i)
    if (!std::isupper(static_cast<unsigned char>(line[i]))) return false;
  return true;
}

struct DirStats {
  int64_t pkts = 0, bytes = 0, loss = 0;
  int64_t ttl = 0, win = 0, base_seq = 0;
  double mean_size = 0.0, jitter_ms = 0.0, ipkt_ms = 0.0;
};

DirStats direction_stats(const std::vector<RawPacket>& packets,
                         const std::vector<size_t>& idx, const ActiveFlow& flow,
                         bool source_side) {
  DirStats s;
  std::set<uint32_t> seen_seq;
  std::vector<int64_t> times;
  bool first = true;
  for (size_t i : idx) {
    const RawPacket& p = packets[i];
    if (flow.from_source(p) != source_side) continue;
    ++s.pkts;
    s.bytes += p.wire_len;
    s.mean_size += p.wire_len;
    times.push_back(p.ts_us);
    if (first) {
      s.ttl = p.ttl;
      if (p.ip_protocol == 6) {
        s.win = p.tcp_window;
        if (p.tcp_seq) s.base_seq = *p.tcp_seq;
      }
      first = false;
    }
    if (p.ip_protocol == 6 && p.tcp_seq) {
      const bool consumes = !p.payload.empty() ||
                            (p.tcp_flags && (*p.tcp_flags & (tcpflag::kSyn | tcpflag::kFin)));
      if (consumes && !seen_seq.insert(*p.tcp_seq).second) ++s.loss;
    }
  }
  if (s.pkts > 0) s.mean_size = std::llround(s.mean_size / static_cast<double>(s.pkts));
  if (times.size() >= 2) {
    std::vector<double> gaps;
    for (size_t i = 1; i < times.size(); ++i)
      gaps.push_back(static_cast<double>(times[i] - times[i - 1]) / 1000.0);
    double sum = 0.0;
    for (double g : gaps) sum += g;
    s.ipkt_ms = sum / static_cast<double>(gaps.size());
    if (gaps.size() >= 2) {
      double jsum = 0.0;
      for (size_t i = 1; i < gaps.size(); ++i) jsum += std::abs(gaps[i] - gaps[i - 1]);
      s.jitter_ms = jsum / static_cast<double>(gaps.size() - 1);
    }
  }
  return s;
}

std::string flow_state(const ActiveFlow& f, bool bidirectional) {
  if (f.protocol == 6) {
    if (f.rst) return "RST";
    if (f.fin_src && f.fin_dst) return "FIN";
    if (f.fin_src || f.fin_dst) return "CLO";
    if (f.syn_src && f.synack_dst) return "CON";
    if (f.syn_src) return "REQ";
    return "INT";
  }
  return bidirectional ? "CON" : "INT";
}

struct AppStats {
  bool http = false, ftp = false;
  int64_t http_mth = 0, http_len = 0, http_dpt = 0;
  int64_t ftp_cmd = 0, ftp_login = 0;
};

AppStats parse_application(const std::vector<RawPacket>& packets,
                           const std::vector<size_t>& idx, const ActiveFlow& flow) {
  AppStats s;
  int64_t outstanding = 0;
  bool ftp_greeting = false, user_sent = false;
  for (size_t i : idx) {
    const RawPacket& p = packets[i];
    if (p.payload.empty()) continue;
    const bool from_src = flow.from_source(p);
    const auto lines = payload_lines(p.payload);
    bool packet_has_ftp_cmd = false;
    for (size_t li = 0; li < lines.size(); ++li) {
      const std::string& line = lines[li];
      if (from_src && is_http_method_line(line)) {
        s.http = true;
        ++s.http_mth;
        ++outstanding;
        s.http_dpt = std::max(s.http_dpt, outstanding);
      } else if (!from_src && line.rfind("HTTP/", 0) == 0) {
        s.http = true;
        if (outstanding > 0) --outstanding;
      } else if (!from_src && s.http && line.rfind("Content-Length:", 0) == 0) {
        try {
          s.http_len += std::stoll(line.substr(15));
        } catch (const std::exception&) {
        }
      }
      if (!from_src && line.rfind("220", 0) == 0 && (line.size() == 3 || line[3] == ' ' || line[3] == '-'))
        ftp_greeting = true;
      if (from_src && is_ftp_command_line(line)) {
        packet_has_ftp_cmd = true;
        if (line.rfind("USER", 0) == 0) user_sent = true;
        if (line.rfind("PASS", 0) == 0 && user_sent) s.ftp_login = 1;
      }
    }
    if (packet_has_ftp_cmd) ++s.ftp_cmd;
  }
  s.ftp = ftp_greeting && s.ftp_cmd > 0;
  if (!s.ftp) {
    s.ftp_cmd = 0;
    s.ftp_login = 0;
  }
  if (!s.http) {
    s.http_mth = 0;
    s.http_len = 0;
    s.http_dpt = 0;
  }
  return s;
}

struct ClosedFlow {
  FlowRecord record;
  RegistryEntry registry;
  int64_t stime_us = 0, etime_us = 0;
  uint64_t first_ordinal = 0;
};

ClosedFlow finalize_flow(const std::vector<RawPacket>& packets, const ActiveFlow& flow,
                         const std::string& capture_path) {
  ClosedFlow out;
  FlowRecord& r = out.record;
  const std::vector<size_t>& idx = flow.packet_idx;

  r.sip = flow.src_ip;
  r.sport = flow.src_port;
  r.dip = flow.dst_ip;
  r.dport = flow.dst_port;
  r.protocol = protocol_name(flow.protocol);

  const DirStats src = direction_stats(packets, idx, flow, true);
  const DirStats dst = direction_stats(packets, idx, flow, false);
  r.spkts = src.pkts;
  r.dpkts = dst.pkts;
  r.sbytes = src.bytes;
  r.dbytes = dst.bytes;
  r.sttl = src.ttl;
  r.dttl = dst.ttl;
  r.sloss = src.loss;
  r.dloss = dst.loss;
  r.swin = src.win;
  r.dwin = dst.win;
  r.tcp_sbs = src.base_seq;
  r.tcp_dbs = dst.base_seq;
  r.smean = static_cast<int64_t>(src.mean_size);
  r.dmean = static_cast<int64_t>(dst.mean_size);
  r.sjitter = src.jitter_ms;
  r.djitter = dst.jitter_ms;
  r.sipkt_tm = src.ipkt_ms;
  r.dipkt_tm = dst.ipkt_ms;

  out.stime_us = packets[idx.front()].ts_us;
  out.etime_us = packets[idx.back()].ts_us;
  out.first_ordinal = packets[idx.front()].ordinal;
  r.stime = out.stime_us / 1000000;
  r.etime = out.etime_us / 1000000;
  r.duration = static_cast<double>(out.etime_us - out.stime_us) / 1e6;
  if (r.duration > 0.0) {
    r.sload = 8.0 * static_cast<double>(r.sbytes) / r.duration;
    r.dload = 8.0 * static_cast<double>(r.dbytes) / r.duration;
  }

  // TCP handshake timing: SYN -> SYN/ACK -> first pure ACK back
  if (flow.protocol == 6) {
    int64_t t_syn = -1, t_synack = -1, t_ack = -1;
    for (size_t i : idx) {
      const RawPacket& p = packets[i];
      if (!p.tcp_flags) continue;
      const uint8_t fl = *p.tcp_flags;
      if (t_syn < 0 && flow.from_source(p) && (fl & tcpflag::kSyn) && !(fl & tcpflag::kAck))
        t_syn = p.ts_us;
      else if (t_syn >= 0 && t_synack < 0 && !flow.from_source(p) && (fl & tcpflag::kSyn) &&
               (fl & tcpflag::kAck))
        t_synack = p.ts_us;
      else if (t_synack >= 0 && t_ack < 0 && flow.from_source(p) && (fl & tcpflag::kAck) &&
               !(fl & tcpflag::kSyn))
        t_ack = p.ts_us;
    }
    if (t_syn >= 0 && t_synack >= 0) r.syn_ack = static_cast<double>(t_synack - t_syn) / 1e6;
    if (t_synack >= 0 && t_ack >= 0) r.ack_ack = static_cast<double>(t_ack - t_synack) / 1e6;
    r.tcp_rtt = r.syn_ack + r.ack_ack;
  }

  r.state = flow_state(flow, dst.pkts > 0);

  const AppStats app = parse_application(packets, idx, flow);
  r.http_dpt = app.http_dpt;
  r.http_len = app.http_len;
  r.http_mth = app.http_mth;
  r.ftp_cmd = app.ftp_cmd;
  r.ftp_login = app.ftp_login;
  if (app.http)
    r.service = "http";
  else if (app.ftp)
    r.service = "ftp";
  else {
    r.service = port_service(flow.dst_port);
    if (r.service == "-") r.service = port_service(flow.src_port);
  }

  for (double* v : {&r.duration, &r.sload, &r.dload, &r.sjitter, &r.djitter, &r.sipkt_tm,
                    &r.dipkt_tm, &r.tcp_rtt, &r.syn_ack, &r.ack_ack})
    *v = quantize6(*v);

  RegistryEntry& reg = out.registry;
  reg.capture = capture_path;
  reg.sip = r.sip;
  reg.sport = r.sport;
  reg.dip = r.dip;
  reg.dport = r.dport;
  reg.protocol = r.protocol;
  reg.service = r.service;
  reg.stime_us = out.stime_us;
  reg.etime_us = out.etime_us;
  for (size_t i : idx) reg.ordinals.push_back(packets[i].ordinal);
  return out;
}

}  // namespace

std::string port_service(uint16_t port) {
  switch (port) {
    case 20: return "ftp-data";
    case 21: return "ftp";
    case 22: return "ssh";
    case 23: return "telnet";
    case 25: return "smtp";
    case 53: return "dns";
    case 67: return "dhcp";
    case 68: return "dhcp";
    case 80: return "http";
    case 110: return "pop3";
    case 123: return "ntp";
    case 143: return "imap";
    case 161: return "snmp";
    case 443: return "ssl";
    case 1812: return "radius";
    case 6667: return "irc";
    default: return "-";
  }
}

AssemblyResult assemble_flows(const std::vector<RawPacket>& packets, const FlowConfig& cfg,
                              const std::string& capture_path) {
  for (size_t i = 1; i < packets.size(); ++i)
    if (packets[i].ts_us < packets[i - 1].ts_us)
      throw DataError("assemble_flows: packets not sorted by timestamp");

  std::map<BidirKey, ActiveFlow> active;
  std::vector<ClosedFlow> closed;

  auto close_flow = [&](ActiveFlow& f) { closed.push_back(finalize_flow(packets, f, capture_path)); };

  for (size_t i = 0; i < packets.size(); ++i) {
    const RawPacket& p = packets[i];
    const BidirKey key = BidirKey::of(p);
    auto it = active.find(key);
    if (it != active.end()) {
      ActiveFlow& f = it->second;
      const bool timed_out = p.ts_us - f.last_ts_us > cfg.idle_timeout_us;
      bool reopens = false;
      if (!timed_out && f.closing) {
        // after FIN-FIN or RST only bare control segments still belong here
        const bool pure_control =
            p.ip_protocol == 6 && p.payload.empty() && p.tcp_flags &&
            !(*p.tcp_flags & tcpflag::kSyn);
        reopens = !pure_control;
      }
      if (timed_out || reopens) {
        close_flow(f);
        active.erase(it);
        it = active.end();
      }
    }
    if (it == active.end()) {
      ActiveFlow f;
      f.src_ip = p.src_ip;
      f.src_port = p.src_port;
      f.dst_ip = p.dst_ip;
      f.dst_port = p.dst_port;
      f.protocol = p.ip_protocol;
      it = active.emplace(key, std::move(f)).first;
    }
    ActiveFlow& f = it->second;
    f.packet_idx.push_back(i);
    f.last_ts_us = p.ts_us;
    if (p.ip_protocol == 6 && p.tcp_flags) {
      const uint8_t fl = *p.tcp_flags;
      const bool from_src = f.from_source(p);
      if (fl & tcpflag::kRst) f.rst = true;
      if (fl & tcpflag::kFin) (from_src ? f.fin_src : f.fin_dst) = true;
      if (from_src && (fl & tcpflag::kSyn) && !(fl & tcpflag::kAck)) f.syn_src = true;
      if (!from_src && (fl & tcpflag::kSyn) && (fl & tcpflag::kAck)) f.synack_dst = true;
      if (f.rst || (f.fin_src && f.fin_dst)) f.closing = true;
    }
  }
  for (auto& [key, f] : active) close_flow(f);

  std::sort(closed.begin(), closed.end(), [](const ClosedFlow& a, const ClosedFlow& b) {
    return std::tie(a.etime_us, a.stime_us, a.first_ordinal) <
           std::tie(b.etime_us, b.stime_us, b.first_ordinal);
  });

  AssemblyResult res;
  res.records.reserve(closed.size());
  res.registry.reserve(closed.size());
  for (size_t i = 0; i < closed.size(); ++i) {
    closed[i].record.record_index = static_cast<int64_t>(i);
    closed[i].registry.record_index = static_cast<int64_t>(i);
    res.records.push_back(std::move(closed[i].record));
    res.registry.push_back(std::move(closed[i].registry));
  }
  return res;
}

}  // namespace flowhawk
