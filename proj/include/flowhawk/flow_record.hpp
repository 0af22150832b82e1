#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowhawk {

/// One assembled bidirectional stream. Field numbering and semantics follow
/// the 47-column record schema; `stime`/`etime` are epoch seconds in the CSV
/// while the microsecond bounds live in the backtracking registry.
struct FlowRecord {
  int64_t record_index = -1;

  // flow identifiers (1-5)
  std::string sip;
  int64_t sport = 0;
  std::string dip;
  int64_t dport = 0;
  std::string protocol;

  // basic attributes (6-18)
  std::string state;
  double duration = 0.0;
  int64_t sbytes = 0;
  int64_t dbytes = 0;
  int64_t sttl = 0;
  int64_t dttl = 0;
  int64_t sloss = 0;
  int64_t dloss = 0;
  std::string service = "-";
  double sload = 0.0;
  double dload = 0.0;
  int64_t spkts = 0;
  int64_t dpkts = 0;

  // content attributes (19-26)
  int64_t swin = 0;
  int64_t dwin = 0;
  int64_t tcp_sbs = 0;
  int64_t tcp_dbs = 0;
  int64_t smean = 0;
  int64_t dmean = 0;
  int64_t http_dpt = 0;
  int64_t http_len = 0;

  // time attributes (27-35); jitter and inter-packet times in milliseconds,
  // handshake gaps in seconds
  double sjitter = 0.0;
  double djitter = 0.0;
  int64_t stime = 0;
  int64_t etime = 0;
  double sipkt_tm = 0.0;
  double dipkt_tm = 0.0;
  double tcp_rtt = 0.0;
  double syn_ack = 0.0;
  double ack_ack = 0.0;

  // attack-oriented attributes (36-47)
  int64_t eips_pts = 0;
  int64_t state_ttl = 0;
  int64_t http_mth = 0;
  int64_t ftp_login = 0;
  int64_t ftp_cmd = 0;
  int64_t esip_srv = 0;
  int64_t edip_srv = 0;
  int64_t edip = 0;
  int64_t esip = 0;
  int64_t esip_dpt = 0;
  int64_t edip_spt = 0;
  int64_t esip_dip = 0;

  // labels; absent when unset
  std::string attack_cat;
  std::optional<int> label;

  bool operator==(const FlowRecord&) const = default;
};

/// Float features are stored at the CSV precision (six decimals) so that
/// export followed by import reproduces records exactly.
inline double quantize6(double v) { return static_cast<double>(std::llround(v * 1e6)) / 1e6; }

enum class FieldKind { kNominal, kInteger, kFloat, kTimestamp, kBinary };

struct FieldDef {
  const char* name;
  FieldKind kind;
  std::string (*get)(const FlowRecord&);
  void (*set)(FlowRecord&, const std::string&);
};

/// The 47 feature columns in schema order (without record_index and labels).
const std::vector<FieldDef>& feature_fields();

/// All 50 CSV column names: record_index, the 47 features, attack_cat, label.
const std::vector<std::string>& csv_columns();

}  // namespace flowhawk
