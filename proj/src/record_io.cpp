#include "flowhawk/record_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowhawk/errors.hpp"

namespace flowhawk {

namespace {

std::string fmt_int(int64_t v) { return std::to_string(v); }

std::string fmt_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

int64_t parse_int(const std::string& s, const char* column) {
  int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw FormatError(std::string("bad integer in column '") + column + "': '" + s + "'");
  return v;
}

double parse_float(const std::string& s, const char* column) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("bad number in column '") + column + "': '" + s + "'");
  }
}

// X-macro style field table: name, kind, member, formatter
#define FH_INT_FIELD(NAME, KIND, MEMBER)                                              \
  FieldDef {                                                                          \
    #NAME, KIND, [](const FlowRecord& r) { return fmt_int(r.MEMBER); },               \
        [](FlowRecord& r, const std::string& s) { r.MEMBER = parse_int(s, #NAME); }   \
  }
#define FH_FLOAT_FIELD(NAME, MEMBER)                                                  \
  FieldDef {                                                                          \
    #NAME, FieldKind::kFloat, [](const FlowRecord& r) { return fmt_float(r.MEMBER); },\
        [](FlowRecord& r, const std::string& s) { r.MEMBER = parse_float(s, #NAME); } \
  }
#define FH_TEXT_FIELD(NAME, MEMBER)                                                   \
  FieldDef {                                                                          \
    #NAME, FieldKind::kNominal, [](const FlowRecord& r) { return r.MEMBER; },         \
        [](FlowRecord& r, const std::string& s) { r.MEMBER = s; }                     \
  }

}  // namespace

const std::vector<FieldDef>& feature_fields() {
  static const std::vector<FieldDef> fields = {
      FH_TEXT_FIELD(sip, sip),
      FH_INT_FIELD(sport, FieldKind::kInteger, sport),
      FH_TEXT_FIELD(dip, dip),
      FH_INT_FIELD(dport, FieldKind::kInteger, dport),
      FH_TEXT_FIELD(protocol, protocol),
      FH_TEXT_FIELD(state, state),
      FH_FLOAT_FIELD(duration, duration),
      FH_INT_FIELD(sbytes, FieldKind::kInteger, sbytes),
      FH_INT_FIELD(dbytes, FieldKind::kInteger, dbytes),
      FH_INT_FIELD(sttl, FieldKind::kInteger, sttl),
      FH_INT_FIELD(dttl, FieldKind::kInteger, dttl),
      FH_INT_FIELD(sloss, FieldKind::kInteger, sloss),
      FH_INT_FIELD(dloss, FieldKind::kInteger, dloss),
      FH_TEXT_FIELD(service, service),
      FH_FLOAT_FIELD(sload, sload),
      FH_FLOAT_FIELD(dload, dload),
      FH_INT_FIELD(spkts, FieldKind::kInteger, spkts),
      FH_INT_FIELD(dpkts, FieldKind::kInteger, dpkts),
      FH_INT_FIELD(swin, FieldKind::kInteger, swin),
      FH_INT_FIELD(dwin, FieldKind::kInteger, dwin),
      FH_INT_FIELD(tcp_sbs, FieldKind::kInteger, tcp_sbs),
      FH_INT_FIELD(tcp_dbs, FieldKind::kInteger, tcp_dbs),
      FH_INT_FIELD(smean, FieldKind::kInteger, smean),
      FH_INT_FIELD(dmean, FieldKind::kInteger, dmean),
      FH_INT_FIELD(http_dpt, FieldKind::kInteger, http_dpt),
      FH_INT_FIELD(http_len, FieldKind::kInteger, http_len),
      FH_FLOAT_FIELD(sjitter, sjitter),
      FH_FLOAT_FIELD(djitter, djitter),
      FH_INT_FIELD(stime, FieldKind::kTimestamp, stime),
      FH_INT_FIELD(etime, FieldKind::kTimestamp, etime),
      FH_FLOAT_FIELD(sipkt_tm, sipkt_tm),
      FH_FLOAT_FIELD(dipkt_tm, dipkt_tm),
      FH_FLOAT_FIELD(tcp_rtt, tcp_rtt),
      FH_FLOAT_FIELD(syn_ack, syn_ack),
      FH_FLOAT_FIELD(ack_ack, ack_ack),
      FH_INT_FIELD(eips_pts, FieldKind::kBinary, eips_pts),
      FH_INT_FIELD(state_ttl, FieldKind::kInteger, state_ttl),
      FH_INT_FIELD(http_mth, FieldKind::kInteger, http_mth),
      FH_INT_FIELD(ftp_login, FieldKind::kBinary, ftp_login),
      FH_INT_FIELD(ftp_cmd, FieldKind::kInteger, ftp_cmd),
      FH_INT_FIELD(esip_srv, FieldKind::kInteger, esip_srv),
      FH_INT_FIELD(edip_srv, FieldKind::kInteger, edip_srv),
      FH_INT_FIELD(edip, FieldKind::kInteger, edip),
      FH_INT_FIELD(esip, FieldKind::kInteger, esip),
      FH_INT_FIELD(esip_dpt, FieldKind::kInteger, esip_dpt),
      FH_INT_FIELD(edip_spt, FieldKind::kInteger, edip_spt),
      FH_INT_FIELD(esip_dip, FieldKind::kInteger, esip_dip),
  };
  return fields;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c;
    c.emplace_back("record_index");
    for (const auto& f : feature_fields()) c.emplace_back(f.name);
    c.emplace_back("attack_cat");
    c.emplace_back("label");
    return c;
  }();
  return cols;
}

int64_t export_records(const std::vector<FlowRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write record file: " + path);
  const auto& cols = csv_columns();
  for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : records) {
    out << r.record_index;
    for (const auto& f : feature_fields()) out << ',' << f.get(r);
    out << ',' << r.attack_cat;
    out << ',' << (r.label ? std::to_string(*r.label) : "");
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
  return static_cast<int64_t>(records.size());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

}  // namespace

RecordTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open record file: " + path);
  RecordTable table;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty record file: " + path);
  table.columns = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != table.columns.size())
      throw FormatError("row " + std::to_string(table.rows.size() + 2) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(table.columns.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::vector<FlowRecord> import_records(const std::string& path) {
  RecordTable table = read_table(path);
  const auto& cols = csv_columns();
  for (size_t i = 0; i < std::min(cols.size(), table.columns.size()); ++i)
    if (table.columns[i] != cols[i])
      throw FormatError("unexpected column '" + table.columns[i] + "' at position " +
                        std::to_string(i) + ", expected '" + cols[i] + "'");
  if (table.columns.size() != cols.size())
    throw FormatError(table.columns.size() < cols.size()
                          ? "missing column '" + cols[table.columns.size()] + "'"
                          : "unexpected column '" + table.columns[cols.size()] + "'");

  std::vector<FlowRecord> records;
  records.reserve(table.rows.size());
  const auto& fields = feature_fields();
  for (const auto& row : table.rows) {
    FlowRecord r;
    r.record_index = parse_int(row[0], "record_index");
    for (size_t f = 0; f < fields.size(); ++f) fields[f].set(r, row[f + 1]);
    r.attack_cat = row[fields.size() + 1];
    const std::string& label = row[fields.size() + 2];
    if (!label.empty()) r.label = static_cast<int>(parse_int(label, "label"));
    records.push_back(std::move(r));
  }
  return records;
}

void write_registry(const std::vector<RegistryEntry>& entries, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write registry file: " + path);
  out << "#flowhawk-registry v1\n";
  for (const auto& e : entries) {
    out << e.record_index << '\t' << e.capture << '\t' << e.sip << '\t' << e.sport << '\t'
        << e.dip << '\t' << e.dport << '\t' << e.protocol << '\t' << e.service << '\t'
        << e.stime_us << '\t' << e.etime_us << '\t';
    for (size_t i = 0; i < e.ordinals.size(); ++i) out << (i ? "," : "") << e.ordinals[i];
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

std::vector<RegistryEntry> read_registry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open registry file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("#flowhawk-registry", 0) != 0)
    throw FormatError("not a registry file: " + path);
  std::vector<RegistryEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
      if (ch == '\t') {
        cells.push_back(std::move(cur));
        cur.clear();
      } else if (ch != '\r') {
        cur.push_back(ch);
      }
    }
    cells.push_back(std::move(cur));
    if (cells.size() != 11) throw FormatError("bad registry line: " + line);
    RegistryEntry e;
    e.record_index = parse_int(cells[0], "record_index");
    e.capture = cells[1];
    e.sip = cells[2];
    e.sport = parse_int(cells[3], "sport");
    e.dip = cells[4];
    e.dport = parse_int(cells[5], "dport");
    e.protocol = cells[6];
    e.service = cells[7];
    e.stime_us = parse_int(cells[8], "stime_us");
    e.etime_us = parse_int(cells[9], "etime_us");
    if (!cells[10].empty()) {
      std::stringstream ss(cells[10]);
      std::string tok;
      while (std::getline(ss, tok, ','))
        e.ordinals.push_back(static_cast<uint64_t>(parse_int(tok, "ordinals")));
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace flowhawk
